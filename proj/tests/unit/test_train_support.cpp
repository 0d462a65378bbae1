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


#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "geotile/geo_core.hpp"
#include "geotile/random.hpp"
#include "geotile/train_support.hpp"

namespace geotile {
namespace {

std::vector<float> random_tokens(Rng& rng, std::size_t rows, std::size_t dim, double scale = 1.0) {
  std::vector<float> v(rows * dim);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-scale, scale));
  return v;
}

TEST(Huber, ClosedForm) {
  const std::vector<float> pred{0.5f}, target{0.0f};
  const std::vector<std::uint8_t> valid{1};
  EXPECT_DOUBLE_EQ(huber_masked(pred, target, valid, 1, 2.0), 0.0625);
  EXPECT_DOUBLE_EQ(huber_masked(std::vector<float>{3.0f}, target, valid, 1, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(huber_masked(pred, pred, valid, 1, 2.0), 0.0);
}

TEST(Huber, EmptyBatchIsZeroWithDiagnostic) {
  const std::vector<float> v{1.0f, 2.0f};
  const std::vector<std::uint8_t> valid{0, 0};
  std::size_t empty = 0;
  EXPECT_EQ(huber_masked(v, v, valid, 1, 1.0, LossNorm::tokens_times_dim, &empty), 0.0);
  EXPECT_EQ(empty, 1u);
}

TEST(Huber, NormalizationSwitch) {
  Rng rng(1);
  const auto p = random_tokens(rng, 6, 4), t = random_tokens(rng, 6, 4);
  const std::vector<std::uint8_t> valid{1, 1, 0, 1, 1, 0};
  EXPECT_NEAR(huber_masked(p, t, valid, 4, 1.0, LossNorm::tokens),
              4.0 * huber_masked(p, t, valid, 4, 1.0, LossNorm::tokens_times_dim), 1e-12);
}

TEST(Huber, LimitsMatchMaeAndMse) {
  Rng rng(2);
  const auto p = random_tokens(rng, 50, 3), t = random_tokens(rng, 50, 3);
  const std::vector<std::uint8_t> valid(50, 1);
  double abs_sum = 0, sq_sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - t[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(p.size());
  EXPECT_NEAR(huber_masked(p, t, valid, 3, 1e-9), abs_sum / n, 1e-6);
  // All |d| < 2 < beta = 10, so loss = mse / (2 beta).
  EXPECT_NEAR(huber_masked(p, t, valid, 3, 10.0), sq_sum / n / 20.0, 1e-12);
}

TEST(VicReg, CollapsedTokens) {
  const std::vector<float> z(32 * 8, 0.7f);
  const std::vector<std::uint8_t> valid(32, 1);
  const auto vc = vicreg_var_cov(z, valid, 8);
  EXPECT_NEAR(vc.variance, 1.0 - std::sqrt(1e-4), 1e-12);
  EXPECT_EQ(vc.covariance, 0.0);
}

TEST(VicReg, WideDiagonalIsFree) {
  // Rows +-2 e_j: per-dimension std above 1 and zero off-diagonal covariance.
  const std::size_t d = 4;
  std::vector<float> z;
  for (std::size_t j = 0; j < d; ++j)
    for (float s : {2.0f, -2.0f}) {
      std::vector<float> row(d, 0.0f);
      row[j] = s;
      z.insert(z.end(), row.begin(), row.end());
    }
  // Off-diagonal covariance of this set is -(mean products) = 0 since means are 0
  // and no row has two non-zero entries.
  const std::vector<std::uint8_t> valid(2 * d, 1);
  const auto vc = vicreg_var_cov(z, valid, d);
  EXPECT_EQ(vc.variance, 0.0);
  EXPECT_EQ(vc.covariance, 0.0);
}

TEST(VicReg, MatchesScalarOracle) {
  Rng rng(3);
  const std::size_t n = 64, d = 16;
  const auto z = random_tokens(rng, n, d, 2.0);
  const std::vector<std::uint8_t> valid(n, 1);
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += z[i * d + j] / static_cast<double>(n);
  double var_loss = 0, cov_loss = 0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double c = 0;
      for (std::size_t i = 0; i < n; ++i) c += (z[i * d + a] - mean[a]) * (z[i * d + b] - mean[b]);
      c /= static_cast<double>(n - 1);
      if (a == b) var_loss += std::max(0.0, 1.0 - std::sqrt(c + 1e-4)) / d;
      else cov_loss += c * c / d;
    }
  const auto vc = vicreg_var_cov(z, valid, d);
  EXPECT_NEAR(vc.variance, var_loss, 1e-6);
  EXPECT_NEAR(vc.covariance, cov_loss, 1e-6);
}

TEST(VicReg, NeedsTwoRows) {
  const std::vector<float> z{1, 2, 3, 4};
  EXPECT_THROW(vicreg_var_cov(z, std::vector<std::uint8_t>{1, 0}, 2), Error);
}

TEST(Padding, AppendingPadRowsChangesNothing) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 2 + rng.below(30), dim = 1 + rng.below(12);
    auto p = random_tokens(rng, rows, dim), t = random_tokens(rng, rows, dim);
    std::vector<std::uint8_t> valid(rows, 1);
    valid[rng.below(rows)] = 0;
    if (std::count(valid.begin(), valid.end(), 1) < 2) valid.assign(rows, 1);
    const double h = huber_masked(p, t, valid, dim, 2.0);
    const auto vc = vicreg_var_cov(p, valid, dim);
    const std::size_t pad = 1 + rng.below(50);
    for (std::size_t k = 0; k < pad * dim; ++k) {
      p.push_back(static_cast<float>(rng.uniform(-9, 9)));
      t.push_back(static_cast<float>(rng.uniform(-9, 9)));
    }
    valid.resize(rows + pad, 0);
    EXPECT_EQ(huber_masked(p, t, valid, dim, 2.0), h);
    const auto vc2 = vicreg_var_cov(p, valid, dim);
    EXPECT_EQ(vc2.variance, vc.variance);
    EXPECT_EQ(vc2.covariance, vc.covariance);
  }
}

TEST(TotalLoss, Arithmetic) {
  EXPECT_DOUBLE_EQ(total_loss(1.0, 0.5, 0.5, 0.05), 1.05);
  EXPECT_DOUBLE_EQ(total_loss(0.3, 7.0, 9.0, 0.0), 0.3);
}

TEST(Ema, Updates) {
  std::vector<float> target{1.0f, 2.0f};
  const std::vector<float> online{3.0f, -2.0f};
  auto frozen = target;
  ema_update(frozen, online, 1.0);
  EXPECT_EQ(frozen, target);
  auto copy = target;
  ema_update(copy, online, 0.0);
  EXPECT_EQ(copy, online);
  ema_update(target, online, 0.997);
  EXPECT_FLOAT_EQ(target[0], static_cast<float>(0.997 * 1.0 + 0.003 * 3.0));
  EXPECT_FLOAT_EQ(target[1], static_cast<float>(0.997 * 2.0 - 0.003 * 2.0));
}

TEST(Ema, Contraction) {
  Rng rng(5);
  auto target = random_tokens(rng, 10, 1), online = random_tokens(rng, 10, 1);
  double before = 0, after = 0;
  for (std::size_t i = 0; i < 10; ++i) before += std::abs(target[i] - online[i]);
  ema_update(target, online, 0.9);
  for (std::size_t i = 0; i < 10; ++i) after += std::abs(target[i] - online[i]);
  EXPECT_LT(after, before);
}

TEST(Schedule, Knots) {
  ScheduleConfig c;
  c.total_steps = 1000;
  EXPECT_EQ(lr_at(0, c), 0.0);
  EXPECT_NEAR(lr_at(100, c), 1e-3, 1e-15);
  EXPECT_NEAR(lr_at(1000, c), 1e-6, 1e-15);
  EXPECT_NEAR(momentum_at(0, c), 0.997, 1e-15);
  EXPECT_NEAR(momentum_at(1000, c), 1.0, 1e-15);
  EXPECT_NEAR(wd_at(0, c), 0.04, 1e-15);
  EXPECT_NEAR(wd_at(1000, c), 0.4, 1e-15);
  for (std::uint64_t s = 101; s <= 1000; ++s) EXPECT_LE(lr_at(s, c), lr_at(s - 1, c) + 1e-18);
  c.wd_shape = WdShape::linear;
  EXPECT_NEAR(wd_at(500, c), 0.22, 1e-12);
}

TEST(Schedule, Validation) {
  ScheduleConfig c;
  c.lr_warmup_frac = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.lr_end = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Schedule, CsvHasEveryStep) {
  ScheduleConfig c;
  c.total_steps = 20;
  const auto csv = schedule_csv(c);
  EXPECT_EQ(csv.rfind("step,lr,wd,momentum\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 22);
}

TEST(Presets, AllNamesResolve) {
  for (const auto& name : preset_names()) {
    const auto p = preset(name, 100);
    EXPECT_NO_THROW(p.schedule.validate());
    EXPECT_NO_THROW(p.loss.validate());
  }
  EXPECT_THROW(preset("nope", 10), Error);
}

std::uint64_t pairing_cells(const std::vector<std::uint32_t>& order) {
  std::uint64_t cells = 0;
  for (std::size_t i = 0; i < order.size(); i += 2) cells += 2 * std::max(order[i], order[i + 1]);
  return cells;
}

TEST(Rebin, ToyCase) {
  const std::vector<std::uint32_t> lengths{5, 2, 8, 1, 7, 3, 6, 4};
  const auto r = length_sorted_rebin(lengths, 2, 4, 0);
  ASSERT_EQ(r.batches.size(), 4u);
  EXPECT_EQ(padded_cells(r.batches, lengths), 40u);
  EXPECT_EQ(r.accumulation, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 4}}));
  std::vector<std::uint32_t> sorted{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_EQ(pairing_cells({1, 8, 2, 7, 3, 6, 4, 5}), 52u);
  EXPECT_EQ(pairing_cells({8, 7, 6, 5, 4, 3, 2, 1}), 40u);
  // Enumerate every perfect pairing of {1..8}.
  std::vector<std::uint64_t> all;
  std::function<void(std::vector<std::uint32_t>, std::vector<std::uint32_t>)> rec =
      [&](std::vector<std::uint32_t> left, std::vector<std::uint32_t> acc) {
        if (left.empty()) {
          all.push_back(pairing_cells(acc));
          return;
        }
        for (std::size_t j = 1; j < left.size(); ++j) {
          auto rest = left;
          auto next = acc;
          next.push_back(left[0]);
          next.push_back(left[j]);
          rest.erase(rest.begin() + j);
          rest.erase(rest.begin());
          rec(rest, next);
        }
      };
  rec(sorted, {});
  EXPECT_EQ(all.size(), 105u);
  EXPECT_EQ(*std::min_element(all.begin(), all.end()), 40u);
}

TEST(Rebin, PlainBatchingWhenGroupIsOne) {
  const std::vector<std::uint32_t> lengths{5, 2, 8, 1, 7};
  const auto r = length_sorted_rebin(lengths, 2, 1, 0);
  ASSERT_EQ(r.batches.size(), 3u);
  EXPECT_EQ(r.batches[0], (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(r.batches[1], (std::vector<std::size_t>{3, 2}));
  EXPECT_EQ(r.batches[2], (std::vector<std::size_t>{4}));
  EXPECT_EQ(r.accumulation.size(), 3u);
}

TEST(Rebin, RandomWindowsPreserveMultisetAndReducePadding) {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t B = 1 + rng.below(6), G = 1 + rng.below(5), n = rng.below(B * G * 3 + 5);
    std::vector<std::uint32_t> lengths(n);
    for (auto& l : lengths) l = static_cast<std::uint32_t>(1 + rng.below(300));
    const auto r = length_sorted_rebin(lengths, B, G, trial);
    std::vector<std::size_t> idx;
    for (const auto& b : r.batches) idx.insert(idx.end(), b.begin(), b.end());
    std::sort(idx.begin(), idx.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    ASSERT_EQ(idx, expect);
    // Plain batching of the same stream, for comparison.
    std::vector<std::vector<std::size_t>> plain;
    for (std::size_t i = 0; i < n; i += B) {
      plain.emplace_back();
      for (std::size_t k = i; k < std::min(n, i + B); ++k) plain.back().push_back(k);
    }
    EXPECT_LE(padded_cells(r.batches, lengths), padded_cells(plain, lengths));
    for (const auto& [first, last] : r.accumulation) {
      EXPECT_LE(last - first, G);
      for (std::size_t b = first + 1; b < last; ++b) {
        std::uint32_t prev = 0, cur = 0;
        for (auto i : r.batches[b - 1]) prev = std::max(prev, lengths[i]);
        for (auto i : r.batches[b]) cur = std::max(cur, lengths[i]);
        EXPECT_LE(prev, cur);
      }
    }
  }
}

}  // namespace
}  // namespace geotile
