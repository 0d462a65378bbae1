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
#include <vector>

#include "geotile/pbf.hpp"
#include "geotile/types.hpp"

namespace geotile {

// Seeded OSM-like corpora for tests, benchmarks and demos. Each tile receives
// a random mix of buildings (some with courtyards), roads with and without
// speed limits, bridges, traffic signals and points of interest.

struct SyntheticOptions {
  std::size_t tiles = 16;
  std::uint64_t seed = 1;
  /// Tiles fill a square block of the grid starting at this id.
  TileId origin{16, 34304, 22912};
};

std::vector<RawElement> synthetic_osm(const SyntheticOptions& opts);

/// synthetic_osm run through assembly, tiling and per-tile processing.
std::vector<Tile> synthetic_tiles(const SyntheticOptions& opts);

}  // namespace geotile
