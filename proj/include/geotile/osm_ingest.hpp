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
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geotile/geo_core.hpp"
#include "geotile/pbf.hpp"
#include "geotile/types.hpp"

namespace geotile {

struct AssemblyStats {
  std::size_t nodes = 0;
  std::size_t ways = 0;
  std::size_t relations = 0;
  std::size_t unresolved_ways = 0;       // referenced a missing node; dropped
  std::size_t unresolved_relations = 0;  // no resolvable member; dropped
  std::size_t multipolygons = 0;
  std::size_t untagged_ways_dropped = 0;
};

/// Second pass over parsed elements: resolves node references into
/// coordinates and builds geographic entities.
///
/// Tagged nodes become points. Ways become polygons when closed and not a
/// linear feature, otherwise polylines. A relation whose member ways all join
/// into closed rings becomes a multipolygon (inner-role rings assigned as holes
/// of the outer ring containing them); any other relation hands its tags to its
/// member ways, which are emitted as separate entities. On key collisions the
/// member's own tag wins.
std::vector<GeoEntity> assemble_entities(std::span<const RawElement> elements,
                                         AssemblyStats* stats = nullptr);

/// True when a closed way should be read as an area.
bool closed_way_is_area(const Tags& tags);

struct ClipStats {
  std::size_t degenerate = 0;  // pieces dropped with zero length or area
};

/// Clips an entity against one tile. The output is in the tile's normalized
/// frame with every coordinate in [0,1]. Polylines come back as one entity
/// per in-tile run; polygons are clipped ring by ring and re-closed.
std::vector<Entity> clip_to_tile(const GeoEntity& e, const TileId& id, ClipStats* stats = nullptr);

/// Same operation on geometry already expressed in the tile's normalized
/// frame (possibly outside [0,1]).
std::vector<Geometry> clip_geometry(const Geometry& g, ClipStats* stats = nullptr);

/// Tiles whose index range overlaps the entity's bounding box.
std::vector<TileId> candidate_tiles(const GeoEntity& e, int zoom);

struct TilingStats {
  std::size_t entities_in = 0;
  std::size_t pieces_out = 0;
  std::size_t degenerate = 0;
  std::size_t tiles = 0;
};

/// Assigns every entity to each tile it overlaps and clips it there. Tiles
/// without entities are not produced. Output is sorted by tile id; entity
/// order within a tile follows input order.
std::vector<Tile> tile_entities(std::span<const GeoEntity> entities, int zoom, unsigned jobs = 1,
                                TilingStats* stats = nullptr);

struct OutlierBounds {
  std::size_t min_entities = 5;
  std::size_t max_entities = 1250;
};

/// Keep iff min_entities <= |entities| <= max_entities.
bool filter_outliers(const Tile& t, const OutlierBounds& bounds = {});

/// Group key: (zoom, x / 4, y / 4).
struct GroupKey {
  int zoom = kDefaultZoom;
  std::uint32_t gx = 0;
  std::uint32_t gy = 0;

  friend bool operator==(const GroupKey&, const GroupKey&) = default;
  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

GroupKey group_key(const TileId& id);
std::string to_string(const GroupKey& key);

struct TileGroup {
  GroupKey key;
  std::vector<Tile> tiles;  // 1..16, sorted by id
};

/// Groups tiles into 4x4 index blocks, sorted by key.
std::vector<TileGroup> group_tiles(std::vector<Tile> tiles);

/// Exact set intersection.
std::set<TileId> correlate(const std::set<TileId>& osm_ids, const std::set<TileId>& image_ids);

enum class Split : std::uint8_t { train, val, test };
std::string_view to_string(Split s);

using SplitAssignment = std::map<GroupKey, Split>;

/// Seeded file-level split. Split sizes come from largest-remainder rounding
/// of ratio * n (ties to the earlier split); groups are ordered by key,
/// shuffled with the seed, and dealt out train, val, test in that order.
SplitAssignment split_groups(std::span<const GroupKey> groups, const std::array<double, 3>& ratios,
                             std::uint64_t seed);

/// The per-split counts split_groups would produce for n groups.
std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios);

}  // namespace geotile
