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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geotile/tokenize.hpp"
#include "geotile/types.hpp"

namespace geotile {

enum class Strategy : std::uint8_t { random, area, modality };

std::string_view to_string(Strategy s);

struct MaskConfig {
  std::array<double, 3> weights{0.20, 0.60, 0.20};  // random, area, modality
  double random_ratio = 0.45;
  double random_min_ctx = 0.10;
  int random_targets = 4;
  double area_ratio = 0.40;
  double area_min_ctx = 0.15;
  int area_targets = 4;
  double modality_min_ctx = 0.15;
  double aspect_lo = 0.5;
  double aspect_hi = 2.0;

  void validate() const;
};

/// Token indices of one sample. All lists are sorted; the context is disjoint
/// from every target, targets may overlap each other.
struct SampleMask {
  std::vector<std::uint32_t> context;
  std::vector<std::vector<std::uint32_t>> targets;

  friend bool operator==(const SampleMask&, const SampleMask&) = default;
};

struct MaskPlan {
  Strategy strategy = Strategy::random;
  std::vector<SampleMask> samples;
  std::size_t fallbacks = 0;  // unimodal samples handled by random masking

  friend bool operator==(const MaskPlan&, const MaskPlan&) = default;
};

/// Per-sample seeds derived from tile ids, so a sample's plan does not depend
/// on which batch it lands in.
std::vector<std::uint64_t> sample_seeds(std::span<const std::string> tile_ids, std::uint64_t seed);
/// Per-sample seeds derived from positions, for anonymous samples.
std::vector<std::uint64_t> sample_seeds(std::size_t n, std::uint64_t seed);

/// round-half-up(ratio * n), lifted from 0 to 1 when n >= num_targets + 1.
std::uint32_t target_size(std::uint32_t valid_len, double ratio, int num_targets);

SampleMask random_mask(std::uint32_t valid_len, double ratio, int num_targets, std::uint64_t seed);

/// Strictly-inside test used by area masking.
bool centre_in_box(const NormPoint& c, double x0, double y0, double w, double h);

/// Each target is the set of tokens whose centre lies strictly inside a box of
/// area `ratio` (aspect ratio log-uniform in [aspect_lo, aspect_hi]) placed
/// uniformly inside the tile.
SampleMask area_mask(std::span<const NormPoint> centres, double ratio, int num_targets, double aspect_lo,
                     double aspect_hi, std::uint64_t seed);

/// One modality forms the context, the other the single target. Returns
/// false (mask untouched) when the sample holds fewer than two modalities.
bool modality_mask(std::span<const Modality> modalities, std::uint64_t seed, SampleMask& out);

/// Moves random target tokens into the context until it holds
/// ceil(min_ctx * valid_len) tokens (and at least one). Tokens are taken from
/// targets with at least two tokens first; the last remaining target token is
/// never taken.
void enforce_min_context(SampleMask& mask, std::uint32_t valid_len, double min_ctx, std::uint64_t seed);

/// One strategy per batch, drawn by the config weights.
Strategy select_strategy(const MaskConfig& cfg, std::uint64_t batch_index, std::uint64_t seed);

/// Masks every sample of a batch with `strategy`, then enforces the strategy's
/// minimum context. `seeds` has one entry per sample.
MaskPlan plan_batch(const TokenBatch& batch, Strategy strategy, const MaskConfig& cfg,
                    std::span<const std::uint64_t> seeds);

/// Token centres of one sample (mean of its box corners).
std::vector<NormPoint> token_centres(const TokenBatch& batch, std::size_t b);

/// Gathers the listed tokens of each sample to the front of a new batch.
/// `index[b]` lists original positions in output order.
TokenBatch gather(const TokenBatch& batch, const std::vector<std::vector<std::uint32_t>>& index);

/// Inverse of gather: writes the tokens of `compact` back to their original
/// positions in `into`.
void scatter(const TokenBatch& compact, const std::vector<std::vector<std::uint32_t>>& index, TokenBatch& into);

struct CompactBatch {
  TokenBatch context;
  std::vector<TokenBatch> targets;
  std::vector<std::vector<std::uint32_t>> context_index;
  std::vector<std::vector<std::vector<std::uint32_t>>> target_index;  // [target][sample]
};

/// Context and target batches with minimal padding. Samples with fewer
/// targets than the batch maximum get empty rows in the missing targets.
CompactBatch compact(const TokenBatch& batch, const MaskPlan& plan);

struct ContextStats {
  std::size_t samples = 0;
  double mean_fraction = 0.0;
  std::array<std::size_t, 10> histogram{};  // context fraction in tenths
};

ContextStats context_stats(const MaskPlan& plan, std::span<const std::uint32_t> valid_lens);

/// One JSON object per sample: {"tile":...,"strategy":...,"context":[...],"targets":[[...],...]}.
std::string plan_json_line(const MaskPlan& plan, std::size_t sample, const std::string& tile);

}  // namespace geotile
