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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace geotile {

// Token tensors are row-major [rows x dim] float arrays with a one-byte valid
// flag per row. Rows flagged 0 (padding) never influence a result.

struct LossConfig {
  double smooth_l1_beta = 2.0;
  double vicreg_beta = 0.05;
  double gamma = 1.0;
  double eps = 1e-4;

  void validate() const;
};

enum class LossNorm : std::uint8_t {
  tokens_times_dim,  // sum / (valid tokens * dim)
  tokens,            // sum / valid tokens
};

/// Smooth L1 over valid rows. Zero valid rows give 0 and increment
/// `*empty_batches` when provided.
double huber_masked(std::span<const float> pred, std::span<const float> target, std::span<const std::uint8_t> valid,
                    std::size_t dim, double beta, LossNorm norm = LossNorm::tokens_times_dim,
                    std::size_t* empty_batches = nullptr);

struct VarCov {
  double variance = 0.0;
  double covariance = 0.0;
};

/// VICReg variance and covariance terms over all valid rows stacked together.
/// Needs at least two valid rows.
VarCov vicreg_var_cov(std::span<const float> tokens, std::span<const std::uint8_t> valid, std::size_t dim,
                      double gamma = 1.0, double eps = 1e-4);

double total_loss(double huber, double variance, double covariance, double vicreg_beta);

/// target <- m * target + (1 - m) * online.
void ema_update(std::span<float> target, std::span<const float> online, double m);

enum class WdShape : std::uint8_t { cosine, linear };

struct ScheduleConfig {
  std::uint64_t total_steps = 1000;
  double lr_warmup_frac = 0.1;
  double lr_base = 1e-3;
  double lr_end = 1e-6;
  double wd_init = 0.04;
  double wd_end = 0.4;
  double momentum_init = 0.997;
  double momentum_end = 1.0;
  WdShape wd_shape = WdShape::cosine;

  void validate() const;
};

/// Linear from momentum_init at step 0 to momentum_end at total_steps.
double momentum_at(std::uint64_t step, const ScheduleConfig& cfg);
/// Linear warmup from 0, then cosine decay to lr_end at total_steps.
double lr_at(std::uint64_t step, const ScheduleConfig& cfg);
/// Cosine (or linear) interpolation from wd_init to wd_end.
double wd_at(std::uint64_t step, const ScheduleConfig& cfg);

struct Preset {
  std::string name;
  ScheduleConfig schedule;
  LossConfig loss;
  std::size_t batch_size = 96;
  std::size_t group_size = 8;
};

/// Pretraining presets: "geojepa-t", "geojepa-ti", "geojepa-gti", "geojepa-gt".
Preset preset(std::string_view name, std::uint64_t total_steps);
std::vector<std::string> preset_names();

/// CSV `step,lr,wd,momentum` for steps 0..total_steps.
std::string schedule_csv(const ScheduleConfig& cfg);

struct Rebinned {
  std::vector<std::vector<std::size_t>> batches;                  // sample indices
  std::vector<std::pair<std::size_t, std::size_t>> accumulation;  // [first, last) batch ranges
};

/// Reads samples in windows of group_size * batch_size, sorts each window by
/// length (ties broken by a seeded hash of the index), and cuts it into
/// batches. A window that does not fill whole batches gets one short batch,
/// placed where it pads least. One accumulation group spans each window.
Rebinned length_sorted_rebin(std::span<const std::uint32_t> lengths, std::size_t batch_size, std::size_t group_size,
                             std::uint64_t seed);

/// sum over batches of |batch| * max length in batch.
std::uint64_t padded_cells(const std::vector<std::vector<std::size_t>>& batches, std::span<const std::uint32_t> lengths);

}  // namespace geotile
