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

#include "geotile/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "geotile/geo_core.hpp"
#include "geotile/osm_ingest.hpp"
#include "geotile/pipeline.hpp"
#include "geotile/random.hpp"

namespace geotile {

namespace {

struct IdCounter {
  std::int64_t node = 1;
  std::int64_t way = 1;
  std::int64_t relation = 1;
};

class Builder {
 public:
  Builder(const TileId& id, Rng& rng, IdCounter& ids) : bounds_(tile_bounds(id)), rng_(rng), ids_(ids) {}

  std::vector<RawElement> elements;

  std::int64_t node(double fx, double fy, Tags tags = {}) {
    RawElement e;
    e.id = ids_.node++;
    e.kind = EntityKind::node;
    e.tags = std::move(tags);
    e.location = {bounds_.min.lon + fx * (bounds_.max.lon - bounds_.min.lon),
                  bounds_.min.lat + fy * (bounds_.max.lat - bounds_.min.lat)};
    elements.push_back(std::move(e));
    return elements.back().id;
  }

  std::int64_t way(std::vector<std::int64_t> refs, Tags tags) {
    RawElement e;
    e.id = ids_.way++;
    e.kind = EntityKind::way;
    e.refs = std::move(refs);
    e.tags = std::move(tags);
    elements.push_back(std::move(e));
    return elements.back().id;
  }

  void relation(std::vector<RawMember> members, Tags tags) {
    RawElement e;
    e.id = ids_.relation++;
    e.kind = EntityKind::relation;
    e.members = std::move(members);
    e.tags = std::move(tags);
    elements.push_back(std::move(e));
  }

  /// Closed rectangle of half-sizes (hw, hh) rotated by `angle` about (cx, cy).
  std::int64_t rect(double cx, double cy, double hw, double hh, double angle, Tags tags) {
    const double c = std::cos(angle), s = std::sin(angle);
    std::vector<std::int64_t> refs;
    for (auto [u, v] : {std::pair{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}})
      refs.push_back(node(cx + u * c - v * s, cy + u * s + v * c));
    refs.push_back(refs.front());
    return way(std::move(refs), std::move(tags));
  }

  /// Random walk of `n` points from (x, y).
  std::int64_t walk(double x, double y, int n, double step, Tags tags) {
    std::vector<std::int64_t> refs{node(x, y)};
    double heading = rng_.uniform(0.0, 2.0 * kPi);
    for (int i = 1; i < n; ++i) {
      heading += rng_.uniform(-0.5, 0.5);
      x += step * std::cos(heading);
      y += step * std::sin(heading);
      refs.push_back(node(x, y));
    }
    return way(std::move(refs), std::move(tags));
  }

 private:
  GeoRect bounds_;
  Rng& rng_;
  IdCounter& ids_;
};

template <class T>
const T& pick(Rng& rng, std::initializer_list<T> options) {
  return *(options.begin() + rng.below(options.size()));
}

void fill_tile(Builder& b, Rng& rng) {
  auto pos = [&] { return rng.uniform(0.08, 0.92); };

  const int pois = 5 + static_cast<int>(rng.below(4));
  for (int i = 0; i < pois; ++i) {
    const char* amenity = pick(rng, {"cafe", "bench", "school", "restaurant", "post_box"});
    b.node(pos(), pos(), {{"amenity", amenity}});
  }

  if (!rng.bernoulli(0.35)) {
    const int buildings = 3 + static_cast<int>(rng.below(28));
    for (int i = 0; i < buildings; ++i) {
      Tags tags{{"building", pick(rng, {"yes", "yes", "house", "apartments"})}};
      if (rng.bernoulli(0.3)) tags.push_back({"addr:street", "Main"});
      b.rect(pos(), pos(), rng.uniform(0.01, 0.03), rng.uniform(0.01, 0.03), rng.uniform(0.0, kPi), std::move(tags));
    }
  }

  if (!rng.bernoulli(0.25)) {
    const int roads = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < roads; ++i) {
      Tags tags{{"highway", pick(rng, {"residential", "primary", "secondary", "service"})}};
      if (rng.bernoulli(0.5)) tags.push_back({"maxspeed", pick(rng, {"30", "50", "40 mph", "25 mph", "signals"})});
      b.walk(pos(), pos(), 3 + static_cast<int>(rng.below(4)), rng.uniform(0.05, 0.15), std::move(tags));
    }
  }

  if (rng.bernoulli(0.2))
    b.walk(pos(), pos(), 2, 0.06, {{"highway", "primary"}, {"bridge", "yes"}, {"layer", "1"}});
  if (rng.bernoulli(0.08)) b.rect(pos(), pos(), 0.02, 0.01, 0.0, {{"man_made", "bridge"}});

  if (rng.bernoulli(0.4)) {
    const int signals = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < signals; ++i) b.node(pos(), pos(), {{"highway", "traffic_signals"}});
  }
  if (rng.bernoulli(0.15)) b.walk(pos(), pos(), 2, 0.03, {{"highway", "footway"}, {"crossing", "traffic_signals"}});
  if (rng.bernoulli(0.1)) b.node(pos(), pos(), {{"highway", "crossing"}, {"crossing:signals", "yes"}});

  if (rng.bernoulli(0.1)) {
    const double cx = rng.uniform(0.2, 0.8), cy = rng.uniform(0.2, 0.8);
    const auto outer = b.rect(cx, cy, 0.08, 0.08, 0.0, {});
    const auto inner = b.rect(cx, cy, 0.03, 0.03, 0.0, {});
    b.relation({{EntityKind::way, outer, "outer"}, {EntityKind::way, inner, "inner"}},
               {{"type", "multipolygon"}, {"building", "yes"}});
  }
}

}  // namespace

std::vector<RawElement> synthetic_osm(const SyntheticOptions& opts) {
  IdCounter ids;
  const auto side = static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(opts.tiles))));
  std::vector<RawElement> nodes, ways, relations;
  for (std::size_t i = 0; i < opts.tiles; ++i) {
    const TileId id{opts.origin.zoom, opts.origin.x + static_cast<std::uint32_t>(i % side),
                    opts.origin.y + static_cast<std::uint32_t>(i / side)};
    Rng rng(derive_seed(derive_seed(opts.seed, "synthetic"), static_cast<std::uint64_t>(i)));
    Builder b(id, rng, ids);
    fill_tile(b, rng);
    for (auto& e : b.elements) {
      auto& dst = e.kind == EntityKind::node ? nodes : e.kind == EntityKind::way ? ways : relations;
      dst.push_back(std::move(e));
    }
  }
  // OSM files list nodes, then ways, then relations.
  std::vector<RawElement> out = std::move(nodes);
  std::move(ways.begin(), ways.end(), std::back_inserter(out));
  std::move(relations.begin(), relations.end(), std::back_inserter(out));
  return out;
}

std::vector<Tile> synthetic_tiles(const SyntheticOptions& opts) {
  const auto elements = synthetic_osm(opts);
  const auto entities = assemble_entities(elements);
  auto tiles = tile_entities(entities, opts.origin.zoom);
  ProcessOptions popts;
  popts.seed = opts.seed;
  std::vector<Tile> out;
  for (const auto& t : tiles) {
    Tile p = process_tile(t, popts);
    if (filter_outliers(p, popts.bounds)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace geotile
