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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "geotile/geometry_ops.hpp"
#include "geotile/osm_ingest.hpp"
#include "geotile/task_synth.hpp"
#include "geotile/types.hpp"

namespace geotile {

// End-to-end stages. Each stage reads its input fully, works group by group
// on up to `jobs` threads, and writes its output atomically.

struct IngestOptions {
  int zoom = kDefaultZoom;
  unsigned jobs = 1;
};

struct IngestReport {
  std::size_t elements = 0;
  AssemblyStats assembly;
  std::size_t entities = 0;
  TilingStats tiling;
  std::size_t groups = 0;

  /// Per-stage counts, one "stage: count" row per line.
  std::string table() const;
};

/// Tiles raw elements in memory.
std::vector<TileGroup> ingest_elements(std::span<const RawElement> elements, const IngestOptions& opts,
                                       IngestReport* report = nullptr);

IngestReport run_ingest(const std::filesystem::path& pbf, const std::filesystem::path& store,
                        const IngestOptions& opts = {});

struct ProcessOptions {
  double eps_m = kDefaultSimplifyEpsM;
  OutlierBounds bounds;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct ProcessReport {
  std::size_t tiles_in = 0;
  std::size_t tiles_out = 0;
  std::size_t dropped_sparse = 0;  // fewer than min_entities
  std::size_t dropped_dense = 0;   // more than max_entities
  std::size_t entities = 0;
  std::size_t points_before = 0;
  std::size_t points_after = 0;
  std::size_t visgraphs = 0;

  std::string table() const;
};

/// Simplification, min-boxes and visibility graphs for one tile. Entity order
/// is kept; min-box seeds derive from (seed, tile id, entity index).
Tile process_tile(const Tile& t, const ProcessOptions& opts);

/// process_tile plus outlier filtering; groups left empty are dropped.
std::vector<TileGroup> process_groups(std::vector<TileGroup> groups, const ProcessOptions& opts,
                                      ProcessReport* report = nullptr);

ProcessReport run_process(const std::filesystem::path& in_store, const std::filesystem::path& out_store,
                          const ProcessOptions& opts = {});

struct SynthOptions {
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  unsigned jobs = 1;
};

struct SynthReport {
  std::string task;
  std::size_t tiles_in = 0;
  std::size_t pruned = 0;
  std::size_t rebalanced_away = 0;
  std::size_t samples = 0;
  std::array<std::size_t, 3> split_samples{};
  std::size_t unparseable_values = 0;
  std::map<std::string, std::size_t> tag_counts;  // counted pattern -> matching tags
  double label_mean = 0.0;
  std::size_t zero_labels = 0;
  std::size_t sentinel_labels = 0;

  std::string table() const;
};

struct SynthResult {
  SynthReport report;
  std::vector<TaskSample> samples;        // sorted by tile id string
  std::vector<Split> split_of;            // parallel to samples
  std::vector<TileGroup> masked_groups;   // masked tiles of retained samples
};

/// Labels, prunes, rebalances, splits and masks a corpus in memory.
SynthResult synthesize_task(std::span<const TileGroup> groups, const TaskSpec& spec, const SynthOptions& opts);

/// Writes <out>/<task>/{train,val,test}.csv and the masked store
/// <out>/<task>.masked.
SynthReport run_synth_task(const std::filesystem::path& store, const TaskSpec& spec, const std::filesystem::path& out,
                           const SynthOptions& opts = {});

}  // namespace geotile
