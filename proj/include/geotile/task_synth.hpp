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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotile/tokenize.hpp"
#include "geotile/types.hpp"

namespace geotile {

/// key=value where either side may be the wildcard "*".
struct TagPattern {
  std::string key = "*";
  std::string value = "*";

  /// Parses "key=value"; throws Error when both sides are wildcards.
  static TagPattern parse(std::string_view s);
  std::string str() const { return key + "=" + value; }
  bool matches(const TagKV& tag) const {
    return (key == "*" || key == tag.key) && (value == "*" || value == tag.value);
  }

  friend bool operator==(const TagPattern&, const TagPattern&) = default;
};

bool matches_any(const TagKV& tag, std::span<const TagPattern> patterns);
bool matches_any(const Tags& tags, std::span<const TagPattern> patterns);

enum class LabelKind : std::uint8_t { count, binary, max_value, max_value_with_sentinel };

std::string_view to_string(LabelKind k);

inline constexpr double kNoRoadSentinel = -100.0;

struct MaskRules {
  bool remove_counted = true;
  std::vector<TagPattern> remove_tags;
  std::vector<TagPattern> remove_features_if;
  std::vector<TagPattern> remove_point_features;
};

struct Rebalance {
  double label = 0.0;  // samples with exactly this label are thinned
  double keep_probability = 1.0;
};

struct TaskSpec {
  std::string name;
  /// An entity matches when it carries a tag matching any `counted` pattern
  /// and, if `require` is non-empty, also one matching any `require` pattern.
  std::vector<TagPattern> counted;
  std::vector<TagPattern> require;
  LabelKind label_kind = LabelKind::count;
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;
  MaskRules mask;
  std::optional<Rebalance> rebalance;
  /// For max-value tasks: the entities that make a tile "have roads".
  std::vector<TagPattern> road = {{"highway", "*"}};

  void validate() const;
  bool entity_matches(const Entity& e) const;
};

TaskSpec parse_task_spec(std::string_view json_text);
TaskSpec load_task_spec(const std::filesystem::path& path);
std::string task_spec_json(const TaskSpec& spec);

/// Parses an OSM speed value to km/h: plain numbers are km/h, "N mph" uses a
/// factor of 1.6. Several values separated by ';' yield their maximum.
std::optional<double> parse_speed(std::string_view s);

struct LabelDiagnostics {
  std::size_t unparseable_values = 0;
};

/// The task label of a tile, or nullopt when the tile is to be pruned (a
/// max-value task whose tile has roads but no usable value).
std::optional<double> compute_label(const Tile& t, const TaskSpec& spec, LabelDiagnostics* diag = nullptr);

struct TaskSample {
  TileId tile;
  double label = 0.0;

  friend bool operator==(const TaskSample&, const TaskSample&) = default;
};

/// Labels every tile, dropping pruned ones.
std::vector<TaskSample> label_tiles(std::span<const Tile> tiles, const TaskSpec& spec, LabelDiagnostics* diag = nullptr);

/// Max-value tasks: drops tiles that have roads and no parseable value.
std::vector<Tile> prune_tiles(std::span<const Tile> tiles, const TaskSpec& spec);

/// Keeps each sample whose label equals the rebalance label with probability
/// keep_probability. The decision per sample depends only on (seed, tile id).
std::vector<TaskSample> rebalance(std::span<const TaskSample> samples, const TaskSpec& spec, std::uint64_t seed);

/// The masked variant of a tile: feature removals, then tag removals; an
/// entity left without tags is dropped.
Tile apply_mask(const Tile& t, const TaskSpec& spec);

/// Upper-triangular sparse counts over vocab indices (i < j).
using PairCounts = std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t>;

struct Cooccurrence {
  PairCounts intra;  // both tags on one entity
  PairCounts inter;  // tags on two distinct entities of a tile, once per tile

  std::uint64_t intra_at(std::uint32_t a, std::uint32_t b) const;
  std::uint64_t inter_at(std::uint32_t a, std::uint32_t b) const;
};

Cooccurrence cooccurrence(std::span<const Tile> tiles, const TagVocab& vocab, unsigned jobs = 1);

}  // namespace geotile
