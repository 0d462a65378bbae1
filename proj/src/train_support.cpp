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

#include "geotile/train_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "geotile/geo_core.hpp"
#include "geotile/random.hpp"

namespace geotile {

void LossConfig::validate() const {
  if (!(smooth_l1_beta > 0.0)) throw Error("smooth_l1_beta must be positive");
  if (!(vicreg_beta >= 0.0)) throw Error("vicreg_beta must be non-negative");
}

namespace {

void check_shape(std::size_t values, std::span<const std::uint8_t> valid, std::size_t dim, const char* what) {
  if (dim == 0 || values != valid.size() * dim)
    throw Error(fmt::format("{}: {} values do not form {} rows of dimension {}", what, values, valid.size(), dim));
}

}  // namespace

double huber_masked(std::span<const float> pred, std::span<const float> target, std::span<const std::uint8_t> valid,
                    std::size_t dim, double beta, LossNorm norm, std::size_t* empty_batches) {
  if (pred.size() != target.size()) throw Error("huber_masked: pred and target differ in shape");
  check_shape(pred.size(), valid, dim, "huber_masked");
  if (!(beta > 0.0)) throw Error("huber_masked: beta must be positive");
  double sum = 0.0;
  std::size_t rows = 0;
  for (std::size_t r = 0; r < valid.size(); ++r) {
    if (!valid[r]) continue;
    ++rows;
    for (std::size_t j = r * dim; j < (r + 1) * dim; ++j) {
      const double d = std::abs(double{pred[j]} - double{target[j]});
      sum += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
    }
  }
  if (rows == 0) {
    if (empty_batches) ++*empty_batches;
    return 0.0;
  }
  const double denom = norm == LossNorm::tokens_times_dim ? static_cast<double>(rows * dim) : static_cast<double>(rows);
  return sum / denom;
}

VarCov vicreg_var_cov(std::span<const float> tokens, std::span<const std::uint8_t> valid, std::size_t dim, double gamma,
                      double eps) {
  check_shape(tokens.size(), valid, dim, "vicreg_var_cov");
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < valid.size(); ++r)
    if (valid[r]) rows.push_back(r);
  const std::size_t n = rows.size();
  if (n < 2) throw Error(fmt::format("vicreg_var_cov needs at least 2 valid tokens, got {}", n));

  std::vector<double> mean(dim, 0.0);
  for (auto r : rows)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += tokens[r * dim + j];
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<double> centred(n * dim);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < dim; ++j) centred[k * dim + j] = tokens[rows[k] * dim + j] - mean[j];

  std::vector<double> cov(dim * dim, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double* z = centred.data() + k * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      const double zi = z[i];
      double* row = cov.data() + i * dim;
      for (std::size_t j = i; j < dim; ++j) row[j] += zi * z[j];
    }
  }
  const double denom = static_cast<double>(n - 1);
  VarCov out;
  for (std::size_t i = 0; i < dim; ++i) {
    const double var = cov[i * dim + i] / denom;
    out.variance += std::max(0.0, gamma - std::sqrt(var + eps));
    for (std::size_t j = i + 1; j < dim; ++j) {
      const double c = cov[i * dim + j] / denom;
      out.covariance += 2.0 * c * c;
    }
  }
  out.variance /= static_cast<double>(dim);
  out.covariance /= static_cast<double>(dim);
  return out;
}

double total_loss(double huber, double variance, double covariance, double vicreg_beta) {
  return huber + vicreg_beta * (variance + covariance);
}

void ema_update(std::span<float> target, std::span<const float> online, double m) {
  if (target.size() != online.size()) throw Error("ema_update: parameter vectors differ in size");
  if (!(m >= 0.0 && m <= 1.0)) throw Error("ema_update: momentum must lie in [0, 1]");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = static_cast<float>(m * target[i] + (1.0 - m) * online[i]);
}

void ScheduleConfig::validate() const {
  if (total_steps == 0) throw Error("total_steps must be positive");
  if (!(lr_warmup_frac > 0.0 && lr_warmup_frac < 1.0)) throw Error("lr_warmup_frac must lie in (0, 1)");
  if (!(lr_end <= lr_base)) throw Error("lr_end must not exceed lr_base");
}

namespace {

double progress(std::uint64_t step, std::uint64_t total) {
  return static_cast<double>(std::min(step, total)) / static_cast<double>(total);
}

}  // namespace

double momentum_at(std::uint64_t step, const ScheduleConfig& cfg) {
  return cfg.momentum_init + (cfg.momentum_end - cfg.momentum_init) * progress(step, cfg.total_steps);
}

double lr_at(std::uint64_t step, const ScheduleConfig& cfg) {
  const double warm = cfg.lr_warmup_frac * static_cast<double>(cfg.total_steps);
  const double s = static_cast<double>(std::min(step, cfg.total_steps));
  if (s < warm) return cfg.lr_base * s / warm;
  const double span = static_cast<double>(cfg.total_steps) - warm;
  const double t = span > 0.0 ? (s - warm) / span : 1.0;
  return cfg.lr_end + 0.5 * (cfg.lr_base - cfg.lr_end) * (1.0 + std::cos(kPi * t));
}

double wd_at(std::uint64_t step, const ScheduleConfig& cfg) {
  const double t = progress(step, cfg.total_steps);
  const double w = cfg.wd_shape == WdShape::cosine ? 0.5 * (1.0 - std::cos(kPi * t)) : t;
  return cfg.wd_init + (cfg.wd_end - cfg.wd_init) * w;
}

std::vector<std::string> preset_names() { return {"geojepa-t", "geojepa-ti", "geojepa-gti", "geojepa-gt"}; }

Preset preset(std::string_view name, std::uint64_t total_steps) {
  Preset p;
  p.name = std::string(name);
  auto& s = p.schedule;
  s.total_steps = total_steps;
  s.lr_warmup_frac = 0.1;
  s.lr_end = 1e-6;
  if (name == "geojepa-t") {
    p.batch_size = 96;
    p.group_size = 8;
    s.momentum_init = 0.997;
    s.momentum_end = 1.0;
    s.lr_base = 1e-3;
    s.wd_init = 0.04;
    s.wd_end = 0.4;
    p.loss.vicreg_beta = 0.05;
    p.loss.smooth_l1_beta = 2.0;
  } else if (name == "geojepa-ti") {
    p.batch_size = 96;
    p.group_size = 6;
    s.momentum_init = 0.99;
    s.momentum_end = 0.99999;
    s.lr_base = 8e-4;
    s.wd_init = 0.05;
    s.wd_end = 0.1;
    p.loss.vicreg_beta = 0.01;
    p.loss.smooth_l1_beta = 1.0;
  } else if (name == "geojepa-gti") {
    p.batch_size = 48;
    p.group_size = 9;
    s.momentum_init = 0.99;
    s.momentum_end = 0.99999;
    s.lr_base = 1e-3;
    s.wd_init = 0.05;
    s.wd_end = 0.1;
    p.loss.vicreg_beta = 0.01;
    p.loss.smooth_l1_beta = 1.0;
  } else if (name == "geojepa-gt") {
    p.batch_size = 96;
    p.group_size = 4;
    s.momentum_init = 0.997;
    s.momentum_end = 0.99999;
    s.lr_base = 1e-3;
    s.wd_init = 0.04;
    s.wd_end = 0.4;
    p.loss.vicreg_beta = 0.02;
    p.loss.smooth_l1_beta = 2.0;
  } else {
    throw Error(fmt::format("unknown preset '{}'", name));
  }
  s.validate();
  return p;
}

std::string schedule_csv(const ScheduleConfig& cfg) {
  std::string out = "step,lr,wd,momentum\n";
  for (std::uint64_t step = 0; step <= cfg.total_steps; ++step)
    out += fmt::format("{},{},{},{}\n", step, lr_at(step, cfg), wd_at(step, cfg), momentum_at(step, cfg));
  return out;
}

Rebinned length_sorted_rebin(std::span<const std::uint32_t> lengths, std::size_t batch_size, std::size_t group_size,
                             std::uint64_t seed) {
  if (batch_size == 0 || group_size == 0) throw Error("batch_size and group_size must be >= 1");
  const std::uint64_t tie_seed = derive_seed(seed, "rebin");
  const std::size_t window = batch_size * group_size;
  Rebinned out;
  for (std::size_t lo = 0; lo < lengths.size(); lo += window) {
    const std::size_t hi = std::min(lengths.size(), lo + window);
    std::vector<std::size_t> idx(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (lengths[a] != lengths[b]) return lengths[a] < lengths[b];
      const auto ha = derive_seed(tie_seed, static_cast<std::uint64_t>(a));
      const auto hb = derive_seed(tie_seed, static_cast<std::uint64_t>(b));
      return ha != hb ? ha < hb : a < b;
    });
    // A short batch sits wherever it pads least; every other batch is full.
    const std::size_t full = idx.size() / batch_size;
    const std::size_t rem = idx.size() % batch_size;
    std::size_t short_at = full;
    if (rem != 0) {
      std::uint64_t best = 0;
      for (std::size_t j = 0; j <= full; ++j) {
        const std::size_t end_short = j * batch_size + rem;
        std::uint64_t cost = static_cast<std::uint64_t>(rem) * lengths[idx[end_short - 1]];
        for (std::size_t f = 0; f < full; ++f) {
          const std::size_t end = (f + 1) * batch_size + (f >= j ? rem : 0);
          cost += static_cast<std::uint64_t>(batch_size) * lengths[idx[end - 1]];
        }
        if (j == 0 || cost < best) {
          best = cost;
          short_at = j;
        }
      }
    }
    const std::size_t first = out.batches.size();
    for (std::size_t k = 0, b = 0; k < idx.size(); ++b) {
      const std::size_t take = rem != 0 && b == short_at ? rem : batch_size;
      out.batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(k),
                               idx.begin() + static_cast<std::ptrdiff_t>(k + take));
      k += take;
    }
    out.accumulation.emplace_back(first, out.batches.size());
  }
  return out;
}

std::uint64_t padded_cells(const std::vector<std::vector<std::size_t>>& batches, std::span<const std::uint32_t> lengths) {
  std::uint64_t total = 0;
  for (const auto& b : batches) {
    std::uint32_t mx = 0;
    for (auto i : b) mx = std::max(mx, lengths[i]);
    total += static_cast<std::uint64_t>(b.size()) * mx;
  }
  return total;
}

}  // namespace geotile
