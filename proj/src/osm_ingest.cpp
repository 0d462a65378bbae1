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
#include <numeric>

#include <fmt/format.h>

#include "geotile/osm_ingest.hpp"
#include "geotile/parallel.hpp"
#include "geotile/random.hpp"

namespace geotile {

std::vector<Tile> tile_entities(std::span<const GeoEntity> entities, int zoom, unsigned jobs,
                                TilingStats* stats) {
  std::map<GroupKey, std::map<TileId, std::vector<std::size_t>>> by_group;
  for (std::size_t i = 0; i < entities.size(); ++i)
    for (const TileId& id : candidate_tiles(entities[i], zoom)) by_group[group_key(id)][id].push_back(i);

  std::vector<const std::map<TileId, std::vector<std::size_t>>*> groups;
  for (const auto& [key, tiles] : by_group) groups.push_back(&tiles);

  std::vector<std::vector<Tile>> per_group(groups.size());
  std::vector<ClipStats> clip_stats(groups.size());
  std::vector<std::size_t> pieces(groups.size(), 0);
  parallel_for(groups.size(), jobs, [&](std::size_t g) {
    for (const auto& [id, members] : *groups[g]) {
      const TileFrame frame = tile_frame(id);
      Tile tile{id, frame.origin, frame.extent_m, {}};
      for (std::size_t idx : members) {
        for (auto& piece : clip_to_tile(entities[idx], id, &clip_stats[g])) tile.entities.push_back(std::move(piece));
      }
      pieces[g] += tile.entities.size();
      if (!tile.entities.empty()) per_group[g].push_back(std::move(tile));
    }
  });

  std::vector<Tile> out;
  for (auto& tiles : per_group)
    for (auto& t : tiles) out.push_back(std::move(t));
  std::sort(out.begin(), out.end(), [](const Tile& a, const Tile& b) { return a.id < b.id; });

  if (stats) {
    stats->entities_in += entities.size();
    stats->tiles += out.size();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      stats->pieces_out += pieces[g];
      stats->degenerate += clip_stats[g].degenerate;
    }
  }
  return out;
}

bool filter_outliers(const Tile& t, const OutlierBounds& bounds) {
  return t.entities.size() >= bounds.min_entities && t.entities.size() <= bounds.max_entities;
}

GroupKey group_key(const TileId& id) { return {id.zoom, id.x / 4, id.y / 4}; }

std::string to_string(const GroupKey& key) { return fmt::format("{}_{}_{}", key.zoom, key.gx, key.gy); }

std::vector<TileGroup> group_tiles(std::vector<Tile> tiles) {
  std::sort(tiles.begin(), tiles.end(), [](const Tile& a, const Tile& b) {
    const auto ka = group_key(a.id), kb = group_key(b.id);
    return ka != kb ? ka < kb : a.id < b.id;
  });
  std::vector<TileGroup> out;
  for (auto& t : tiles) {
    const GroupKey key = group_key(t.id);
    if (out.empty() || out.back().key != key) out.push_back({key, {}});
    out.back().tiles.push_back(std::move(t));
  }
  return out;
}

std::set<TileId> correlate(const std::set<TileId>& osm_ids, const std::set<TileId>& image_ids) {
  std::set<TileId> out;
  std::set_intersection(osm_ids.begin(), osm_ids.end(), image_ids.begin(), image_ids.end(),
                        std::inserter(out, out.end()));
  return out;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9 || std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; }))
    throw Error(fmt::format("split ratios must be non-negative and sum to 1 (got {})", sum));

  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

SplitAssignment split_groups(std::span<const GroupKey> groups, const std::array<double, 3>& ratios,
                             std::uint64_t seed) {
  std::vector<GroupKey> keys(groups.begin(), groups.end());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  const auto counts = split_counts(keys.size(), ratios);

  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = keys.size(); i > 1; --i) std::swap(keys[i - 1], keys[rng.below(i)]);

  SplitAssignment out;
  std::size_t k = 0;
  for (int s = 0; s < 3; ++s)
    for (std::size_t c = 0; c < counts[s]; ++c) out[keys[k++]] = static_cast<Split>(s);
  return out;
}

}  // namespace geotile
