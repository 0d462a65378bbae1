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

#include "geotile/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

#include <fmt/format.h>

#include "geotile/geo_core.hpp"
#include "geotile/parallel.hpp"
#include "geotile/random.hpp"

namespace geotile {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || a.size() != b.size())
    throw Error(fmt::format("predictions ({}) and labels ({}) must be equal, non-zero lengths", a.size(), b.size()));
}

}  // namespace

double mae(std::span<const double> preds, std::span<const double> labels) {
  check_pair(preds, labels);
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(labels[i] - preds[i]);
  return s / static_cast<double>(preds.size());
}

double mse(std::span<const double> preds, std::span<const double> labels) {
  check_pair(preds, labels);
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += (labels[i] - preds[i]) * (labels[i] - preds[i]);
  return s / static_cast<double>(preds.size());
}

std::vector<double> clamp_predictions(std::span<const double> preds, double lo, double hi) {
  std::vector<double> out;
  out.reserve(preds.size());
  for (double p : preds) out.push_back(std::clamp(p, lo, hi));
  return out;
}

double dummy_median(std::span<const double> train_labels) {
  if (train_labels.empty()) throw Error("median of an empty label set");
  std::vector<double> v(train_labels.begin(), train_labels.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) throw Error("harmonic mean of no values");
  double s = 0.0;
  for (double x : values) {
    if (!(x > 0.0)) throw Error("harmonic mean needs positive values");
    s += 1.0 / x;
  }
  return static_cast<double>(values.size()) / s;
}

double ScoreBoard::score_of(std::string_view model) const {
  for (std::size_t m = 0; m < models.size(); ++m)
    if (models[m].name == model) return scores[m];
  throw Error(fmt::format("no model '{}' on the scoreboard", model));
}

ScoreBoard score_models(std::vector<std::string> tasks, std::vector<ModelRow> models) {
  if (tasks.empty() || models.empty()) throw Error("scoreboard needs at least one task and one model");
  ScoreBoard b;
  b.tasks = std::move(tasks);
  b.models = std::move(models);
  const std::size_t nt = b.tasks.size();
  b.best.assign(nt, INFINITY);
  for (const auto& m : b.models) {
    if (m.mae.size() != nt) throw Error(fmt::format("model '{}' has {} MAEs for {} tasks", m.name, m.mae.size(), nt));
    for (std::size_t t = 0; t < nt; ++t) {
      if (!(m.mae[t] >= 0.0)) throw Error(fmt::format("model '{}' has a negative MAE", m.name));
      b.best[t] = std::min(b.best[t], m.mae[t]);
    }
  }
  for (const auto& m : b.models) {
    std::vector<double> r(nt);
    for (std::size_t t = 0; t < nt; ++t) r[t] = m.mae[t] == 0.0 ? 1.0 : std::min(1.0, b.best[t] / m.mae[t]);
    // A zero ratio (best MAE of 0 against a non-zero MAE) scores the model 0.
    const bool zero = std::any_of(r.begin(), r.end(), [](double x) { return x == 0.0; });
    b.scores.push_back(zero ? 0.0 : harmonic_mean(r));
    b.ratios.push_back(std::move(r));
  }
  return b;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

ScoreBoard read_scoreboard_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("scoreboard CSV is empty");
  auto header = split_csv(line);
  if (header.size() < 2) throw Error("scoreboard CSV header needs `model` and at least one task");
  // A trailing score column, as written by scoreboard_csv, is recomputed.
  const bool has_score = header.size() > 2 && header.back() == "score";
  const std::size_t ncols = header.size() - (has_score ? 1 : 0);
  std::vector<std::string> tasks(header.begin() + 1, header.begin() + static_cast<std::ptrdiff_t>(ncols));
  std::vector<ModelRow> models;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw Error(fmt::format("scoreboard CSV line {}: expected {} cells, got {}", line_no, header.size(), cells.size()));
    ModelRow row{cells[0], {}};
    for (std::size_t i = 1; i < ncols; ++i) {
      double v;
      auto [p, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
      if (ec != std::errc{} || p != cells[i].data() + cells[i].size())
        throw Error(fmt::format("scoreboard CSV line {}: bad number '{}'", line_no, cells[i]));
      row.mae.push_back(v);
    }
    models.push_back(std::move(row));
  }
  return score_models(std::move(tasks), std::move(models));
}

std::string scoreboard_csv(const ScoreBoard& board) {
  std::string out = "model";
  for (const auto& t : board.tasks) out += "," + t;
  out += ",score\n";
  for (std::size_t m = 0; m < board.models.size(); ++m) {
    out += board.models[m].name;
    for (double v : board.models[m].mae) out += fmt::format(",{}", v);
    out += fmt::format(",{:.4f}\n", board.scores[m]);
  }
  return out;
}

std::string format_scoreboard(const ScoreBoard& board) {
  std::size_t name_w = 5;
  for (const auto& m : board.models) name_w = std::max(name_w, m.name.size());
  std::vector<std::size_t> w;
  for (const auto& t : board.tasks) w.push_back(std::max<std::size_t>(8, t.size()));
  std::string out = fmt::format("{:<{}}", "Model", name_w);
  for (std::size_t t = 0; t < board.tasks.size(); ++t) out += fmt::format("  {:>{}}", board.tasks[t], w[t]);
  out += "   Score\n";
  for (std::size_t m = 0; m < board.models.size(); ++m) {
    out += fmt::format("{:<{}}", board.models[m].name, name_w);
    for (std::size_t t = 0; t < board.tasks.size(); ++t) {
      const bool best = board.models[m].mae[t] == board.best[t];
      out += fmt::format("  {:>{}}", fmt::format("{}{}", board.models[m].mae[t], best ? "*" : ""), w[t]);
    }
    out += fmt::format("  {:6.2f}\n", board.scores[m]);
  }
  return out;
}

std::string_view to_string(Metric m) { return m == Metric::cosine ? "cosine" : "l2"; }

Metric parse_metric(std::string_view s) {
  if (s == "l2") return Metric::l2;
  if (s == "cosine") return Metric::cosine;
  throw Error(fmt::format("unknown metric '{}' (expected l2 or cosine)", s));
}

double distance(std::span<const float> a, std::span<const float> b, Metric m) {
  if (a.size() != b.size()) throw Error("distance: dimension mismatch");
  if (m == Metric::l2) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (double{a[i]} - b[i]) * (double{a[i]} - b[i]);
    return std::sqrt(s);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double{a[i]} * b[i];
    na += double{a[i]} * a[i];
    nb += double{b[i]} * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> knn(std::span<const float> query, std::span<const std::string> ids,
                          std::span<const std::vector<float>> corpus, std::size_t k, Metric metric,
                          std::string_view query_id, unsigned jobs) {
  if (ids.size() != corpus.size()) throw Error("knn: ids and corpus differ in length");
  auto before = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  };
  // Each chunk keeps its own k best; merging the sorted chunk results is
  // independent of how work was scheduled.
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(jobs, corpus.size()));
  std::vector<std::vector<Neighbor>> partial(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t lo = corpus.size() * c / chunks, hi = corpus.size() * (c + 1) / chunks;
    auto& best = partial[c];
    for (std::size_t i = lo; i < hi; ++i) {
      if (!query_id.empty() && ids[i] == query_id) continue;
      best.push_back({ids[i], distance(query, corpus[i], metric)});
      std::push_heap(best.begin(), best.end(), before);
      if (best.size() > k) {
        std::pop_heap(best.begin(), best.end(), before);
        best.pop_back();
      }
    }
  });
  std::vector<Neighbor> all;
  for (auto& p : partial) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end(), before);
  if (all.size() > k) all.resize(k);
  return all;
}

CollapseMetrics collapse_metrics(std::span<const float> tokens, std::span<const std::uint8_t> valid, std::size_t dim,
                                 std::uint64_t seed, std::size_t max_pairs) {
  if (dim == 0 || tokens.size() != valid.size() * dim) throw Error("collapse_metrics: shape mismatch");
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < valid.size(); ++r)
    if (valid[r]) rows.push_back(r);
  if (rows.empty()) throw Error("collapse_metrics: no valid tokens");
  const std::size_t n = rows.size();

  CollapseMetrics out;
  out.std_per_dim.assign(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (auto r : rows) mean += tokens[r * dim + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (auto r : rows) var += (tokens[r * dim + j] - mean) * (tokens[r * dim + j] - mean);
    out.std_per_dim[j] = std::sqrt(var / static_cast<double>(n));
  }

  auto row = [&](std::size_t k) { return tokens.subspan(rows[k] * dim, dim); };
  auto cosine = [&](std::size_t a, std::size_t b) { return 1.0 - distance(row(a), row(b), Metric::cosine); };
  const std::uint64_t all_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  double sum = 0.0;
  if (all_pairs <= max_pairs) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) sum += cosine(a, b);
    out.pairs = all_pairs;
  } else {
    Rng rng(derive_seed(seed, "collapse"));
    for (std::size_t p = 0; p < max_pairs; ++p) {
      const std::size_t a = rng.below(n);
      std::size_t b = rng.below(n - 1);
      if (b >= a) ++b;
      sum += cosine(a, b);
    }
    out.pairs = max_pairs;
  }
  out.mean_cosine = out.pairs ? sum / static_cast<double>(out.pairs) : 1.0;
  return out;
}

}  // namespace geotile
