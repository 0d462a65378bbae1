// Copyright 2026 The geotile Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geotile {

double mae(std::span<const double> preds, std::span<const double> labels);
double mse(std::span<const double> preds, std::span<const double> labels);

std::vector<double> clamp_predictions(std::span<const double> preds, double lo, double hi);

/// Exact median; the mean of the middle pair for even sizes.
double dummy_median(std::span<const double> train_labels);

/// n / sum(1 / x). All values must be positive.
double harmonic_mean(std::span<const double> values);

struct ModelRow {
  std::string name;
  std::vector<double> mae;  // one per task
};

struct ScoreBoard {
  std::vector<std::string> tasks;
  std::vector<ModelRow> models;
  std::vector<double> best;                 // per task, minimum over models
  std::vector<std::vector<double>> ratios;  // [model][task] = best / mae
  std::vector<double> scores;               // harmonic mean of each model's ratios

  double score_of(std::string_view model) const;
};

ScoreBoard score_models(std::vector<std::string> tasks, std::vector<ModelRow> models);

/// CSV with header `model,<task>,...` and one row of MAEs per model.
ScoreBoard read_scoreboard_csv(std::istream& in);
std::string scoreboard_csv(const ScoreBoard& board);
/// Fixed-width text table: model, per-task MAE, score.
std::string format_scoreboard(const ScoreBoard& board);

enum class Metric : std::uint8_t { l2, cosine };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

double distance(std::span<const float> a, std::span<const float> b, Metric m);

struct Neighbor {
  std::string id;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// The k nearest corpus vectors, ordered by (distance, id). The corpus entry
/// whose id equals `query_id` is skipped.
std::vector<Neighbor> knn(std::span<const float> query, std::span<const std::string> ids,
                          std::span<const std::vector<float>> corpus, std::size_t k = 8, Metric metric = Metric::l2,
                          std::string_view query_id = {}, unsigned jobs = 1);

struct CollapseMetrics {
  std::vector<double> std_per_dim;  // population std over valid rows
  double mean_cosine = 0.0;         // over all pairs, or a seeded sample of max_pairs
  std::size_t pairs = 0;
};

CollapseMetrics collapse_metrics(std::span<const float> tokens, std::span<const std::uint8_t> valid, std::size_t dim,
                                 std::uint64_t seed = 0, std::size_t max_pairs = 10000);

}  // namespace geotile
