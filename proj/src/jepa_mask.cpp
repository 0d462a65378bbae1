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

#include "geotile/jepa_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "geotile/geo_core.hpp"
#include "geotile/random.hpp"

namespace geotile {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::area: return "area";
    case Strategy::modality: return "modality";
  }
  return "?";
}

void MaskConfig::validate() const {
  const double sum = weights[0] + weights[1] + weights[2];
  if (std::abs(sum - 1.0) > 1e-9 || *std::min_element(weights.begin(), weights.end()) < 0.0)
    throw Error("mask strategy weights must be non-negative and sum to 1");
  for (double r : {random_ratio, area_ratio})
    if (!(r > 0.0 && r < 1.0)) throw Error("mask ratios must lie in (0, 1)");
  for (double m : {random_min_ctx, area_min_ctx, modality_min_ctx})
    if (!(m >= 0.0 && m <= 1.0)) throw Error("min_ctx must lie in [0, 1]");
  if (random_targets < 1 || area_targets < 1) throw Error("num_targets must be >= 1");
  if (!(aspect_lo > 0.0 && aspect_lo <= aspect_hi)) throw Error("aspect range must satisfy 0 < lo <= hi");
}

std::vector<std::uint64_t> sample_seeds(std::span<const std::string> tile_ids, std::uint64_t seed) {
  std::vector<std::uint64_t> out;
  for (const auto& id : tile_ids) out.push_back(derive_seed(seed, hash_string(id)));
  return out;
}

std::vector<std::uint64_t> sample_seeds(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  return out;
}

std::uint32_t target_size(std::uint32_t valid_len, double ratio, int num_targets) {
  auto m = static_cast<std::uint32_t>(std::floor(ratio * valid_len + 0.5));
  m = std::min(m, valid_len);
  if (m == 0 && valid_len >= static_cast<std::uint32_t>(num_targets) + 1) m = 1;
  return m;
}

namespace {

std::vector<std::uint32_t> complement(std::uint32_t n, const std::vector<std::vector<std::uint32_t>>& targets) {
  std::vector<char> used(n, 0);
  for (const auto& t : targets)
    for (auto i : t) used[i] = 1;
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < n; ++i)
    if (!used[i]) out.push_back(i);
  return out;
}

}  // namespace

SampleMask random_mask(std::uint32_t valid_len, double ratio, int num_targets, std::uint64_t seed) {
  Rng rng(seed);
  SampleMask out;
  const std::uint32_t m = target_size(valid_len, ratio, num_targets);
  std::vector<std::uint32_t> perm(valid_len);
  std::iota(perm.begin(), perm.end(), 0u);
  for (int t = 0; t < num_targets; ++t) {
    for (std::uint32_t i = 0; i < m; ++i) std::swap(perm[i], perm[i + rng.below(valid_len - i)]);
    std::vector<std::uint32_t> target(perm.begin(), perm.begin() + m);
    std::sort(target.begin(), target.end());
    out.targets.push_back(std::move(target));
  }
  out.context = complement(valid_len, out.targets);
  return out;
}

bool centre_in_box(const NormPoint& c, double x0, double y0, double w, double h) {
  return c.x > x0 && c.x < x0 + w && c.y > y0 && c.y < y0 + h;
}

SampleMask area_mask(std::span<const NormPoint> centres, double ratio, int num_targets, double aspect_lo,
                     double aspect_hi, std::uint64_t seed) {
  Rng rng(seed);
  SampleMask out;
  const double log_lo = std::log(aspect_lo), log_hi = std::log(aspect_hi);
  for (int t = 0; t < num_targets; ++t) {
    const double a = std::exp(rng.uniform(log_lo, log_hi));
    const double w = std::min(1.0, std::sqrt(ratio * a));
    const double h = std::min(1.0, std::sqrt(ratio / a));
    const double x0 = rng.uniform() * (1.0 - w);
    const double y0 = rng.uniform() * (1.0 - h);
    std::vector<std::uint32_t> target;
    for (std::uint32_t i = 0; i < centres.size(); ++i)
      if (centre_in_box(centres[i], x0, y0, w, h)) target.push_back(i);
    out.targets.push_back(std::move(target));
  }
  out.context = complement(static_cast<std::uint32_t>(centres.size()), out.targets);
  return out;
}

bool modality_mask(std::span<const Modality> modalities, std::uint64_t seed, SampleMask& out) {
  std::vector<std::uint32_t> entity, image;
  for (std::uint32_t i = 0; i < modalities.size(); ++i) {
    if (modalities[i] == Modality::entity) entity.push_back(i);
    if (modalities[i] == Modality::image) image.push_back(i);
  }
  if (entity.empty() || image.empty()) return false;
  Rng rng(seed);
  const bool image_context = rng.below(2) == 1;
  out.context = image_context ? image : entity;
  out.targets = {image_context ? entity : image};
  return true;
}

void enforce_min_context(SampleMask& mask, std::uint32_t valid_len, double min_ctx, std::uint64_t seed) {
  const auto need = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(min_ctx * valid_len - 1e-9)));
  if (mask.context.size() >= need) return;
  Rng rng(seed);
  std::vector<char> mark(valid_len, 0);
  while (mask.context.size() < need) {
    // Candidates: tokens of targets that can spare one, else of any target.
    std::vector<std::uint32_t> pool;
    for (int pass = 0; pass < 2 && pool.empty(); ++pass) {
      for (const auto& t : mask.targets) {
        if (pass == 0 && t.size() < 2) continue;
        for (auto i : t)
          if (!mark[i]) {
            mark[i] = 1;
            pool.push_back(i);
          }
      }
    }
    for (auto i : pool) mark[i] = 0;
    // Moving the only remaining target token would leave no target at all.
    std::size_t target_tokens = 0;
    for (const auto& t : mask.targets)
      for (auto i : t)
        if (!mark[i]) {
          mark[i] = 1;
          ++target_tokens;
        }
    for (const auto& t : mask.targets)
      for (auto i : t) mark[i] = 0;
    if (target_tokens < 2) break;
    std::sort(pool.begin(), pool.end());
    const std::uint32_t u = pool[rng.below(pool.size())];
    for (auto& t : mask.targets) {
      auto it = std::lower_bound(t.begin(), t.end(), u);
      if (it != t.end() && *it == u) t.erase(it);
    }
    mask.context.insert(std::lower_bound(mask.context.begin(), mask.context.end(), u), u);
  }
}

Strategy select_strategy(const MaskConfig& cfg, std::uint64_t batch_index, std::uint64_t seed) {
  Rng rng(derive_seed(derive_seed(seed, "strategy"), batch_index));
  const double u = rng.uniform();
  if (u < cfg.weights[0]) return Strategy::random;
  if (u < cfg.weights[0] + cfg.weights[1] || cfg.weights[2] == 0.0) return Strategy::area;
  return Strategy::modality;
}

std::vector<NormPoint> token_centres(const TokenBatch& batch, std::size_t b) {
  std::vector<NormPoint> out;
  for (std::size_t i = 0; i < batch.valid_len[b]; ++i) {
    const float* box = batch.box(b, i);
    out.push_back({(double{box[0]} + box[2] + box[4] + box[6]) / 4.0, (double{box[1]} + box[3] + box[5] + box[7]) / 4.0});
  }
  return out;
}

MaskPlan plan_batch(const TokenBatch& batch, Strategy strategy, const MaskConfig& cfg,
                    std::span<const std::uint64_t> seeds) {
  if (seeds.size() != batch.batch) throw Error("plan_batch: one seed per sample required");
  MaskPlan plan;
  plan.strategy = strategy;
  plan.samples.resize(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const std::uint32_t n = batch.valid_len[b];
    if (n == 0) continue;
    const std::uint64_t s = derive_seed(seeds[b], to_string(strategy));
    SampleMask& m = plan.samples[b];
    double min_ctx = cfg.random_min_ctx;
    switch (strategy) {
      case Strategy::random:
        m = random_mask(n, cfg.random_ratio, cfg.random_targets, s);
        break;
      case Strategy::area:
        m = area_mask(token_centres(batch, b), cfg.area_ratio, cfg.area_targets, cfg.aspect_lo, cfg.aspect_hi, s);
        min_ctx = cfg.area_min_ctx;
        break;
      case Strategy::modality: {
        std::span<const Modality> mods(batch.modality.data() + batch.row(b, 0), n);
        if (modality_mask(mods, s, m)) {
          min_ctx = cfg.modality_min_ctx;
        } else {
          ++plan.fallbacks;
          m = random_mask(n, cfg.random_ratio, cfg.random_targets, derive_seed(s, "fallback"));
        }
        break;
      }
    }
    enforce_min_context(m, n, min_ctx, derive_seed(seeds[b], "min_ctx"));
  }
  return plan;
}

TokenBatch gather(const TokenBatch& batch, const std::vector<std::vector<std::uint32_t>>& index) {
  if (index.size() != batch.batch) throw Error("gather: one index list per sample required");
  std::size_t max_len = 0;
  for (const auto& ix : index) max_len = std::max(max_len, ix.size());
  TokenBatch out(batch.batch, max_len, batch.dim);
  out.tile_ids = batch.tile_ids;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t i = 0; i < index[b].size(); ++i) {
      const std::uint32_t src = index[b][i];
      if (src >= batch.valid_len[b]) throw Error(fmt::format("gather: index {} is padding", src));
      out.modality[out.row(b, i)] = batch.modality[batch.row(b, src)];
      std::copy_n(batch.box(b, src), 8, out.box(b, i));
      std::copy_n(batch.vec(b, src), batch.dim, out.vec(b, i));
    }
    out.valid_len[b] = static_cast<std::uint32_t>(index[b].size());
  }
  return out;
}

void scatter(const TokenBatch& compact, const std::vector<std::vector<std::uint32_t>>& index, TokenBatch& into) {
  for (std::size_t b = 0; b < compact.batch; ++b) {
    for (std::size_t i = 0; i < index[b].size(); ++i) {
      const std::uint32_t dst = index[b][i];
      into.modality[into.row(b, dst)] = compact.modality[compact.row(b, i)];
      std::copy_n(compact.box(b, i), 8, into.box(b, dst));
      std::copy_n(compact.vec(b, i), compact.dim, into.vec(b, dst));
    }
  }
}

CompactBatch compact(const TokenBatch& batch, const MaskPlan& plan) {
  if (plan.samples.size() != batch.batch) throw Error("compact: plan does not match batch");
  CompactBatch out;
  std::size_t num_targets = 0;
  for (const auto& s : plan.samples) {
    out.context_index.push_back(s.context);
    num_targets = std::max(num_targets, s.targets.size());
  }
  out.context = gather(batch, out.context_index);
  for (std::size_t t = 0; t < num_targets; ++t) {
    std::vector<std::vector<std::uint32_t>> index;
    for (const auto& s : plan.samples) index.push_back(t < s.targets.size() ? s.targets[t] : std::vector<std::uint32_t>{});
    out.targets.push_back(gather(batch, index));
    out.target_index.push_back(std::move(index));
  }
  return out;
}

ContextStats context_stats(const MaskPlan& plan, std::span<const std::uint32_t> valid_lens) {
  ContextStats st;
  double sum = 0.0;
  for (std::size_t b = 0; b < plan.samples.size(); ++b) {
    if (valid_lens[b] == 0) continue;
    const double f = static_cast<double>(plan.samples[b].context.size()) / valid_lens[b];
    sum += f;
    ++st.samples;
    ++st.histogram[std::min<std::size_t>(9, static_cast<std::size_t>(f * 10.0))];
  }
  if (st.samples) st.mean_fraction = sum / static_cast<double>(st.samples);
  return st;
}

std::string plan_json_line(const MaskPlan& plan, std::size_t sample, const std::string& tile) {
  const auto& s = plan.samples.at(sample);
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["tile"] = tile;
  j["strategy"] = to_string(plan.strategy);
  j["context"] = s.context;
  j["targets"] = s.targets;
  return j.dump();
}

}  // namespace geotile
