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
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "../common/generators.hpp"
#include "geotile/geometry_ops.hpp"
#include "geotile/osm_ingest.hpp"
#include "geotile/pbf.hpp"
#include "geotile/synthetic.hpp"

namespace geotile {
namespace {

using testing::fixture_path;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Pbf, EmptyFileYieldsNothing) { EXPECT_TRUE(read_pbf_file(fixture_path("empty.osm.pbf")).empty()); }

TEST(Pbf, SmallFixture) {
  const auto elements = read_pbf_file(fixture_path("small.osm.pbf"));
  std::size_t nodes = 0, ways = 0, relations = 0;
  for (const auto& e : elements) {
    nodes += e.kind == EntityKind::node;
    ways += e.kind == EntityKind::way;
    relations += e.kind == EntityKind::relation;
  }
  EXPECT_EQ(nodes, 5u);
  EXPECT_EQ(ways, 1u);
  EXPECT_EQ(relations, 1u);

  AssemblyStats stats;
  const auto entities = assemble_entities(elements, &stats);
  ASSERT_EQ(entities.size(), 3u);
  int polys = 0;
  for (const auto& e : entities) {
    if (const auto* p = std::get_if<BasicPolygon<GeoPoint>>(&e.geometry)) {
      ++polys;
      ASSERT_EQ(p->rings.size(), 1u);
      EXPECT_EQ(p->rings[0].size(), 5u);
      EXPECT_EQ(p->rings[0].front(), p->rings[0].back());
    }
  }
  EXPECT_EQ(polys, 1);
  EXPECT_EQ(stats.multipolygons, 1u);
}

TEST(Pbf, TruncatedFileFails) {
  const auto bytes = slurp(fixture_path("fixture.osm.pbf"));
  for (std::size_t cut : {std::size_t{3}, bytes.size() / 2, bytes.size() - 5}) {
    std::istringstream in(bytes.substr(0, cut));
    EXPECT_THROW(parse_pbf(in), PbfError) << cut;
  }
}

TEST(Pbf, WriterRoundTrip) {
  SyntheticOptions opts;
  opts.tiles = 9;
  const auto elements = synthetic_osm(opts);
  std::stringstream buf;
  {
    PbfWriter w(buf, 100);
    for (const auto& e : elements) w.add(e);
  }
  const auto back = parse_pbf(buf);
  ASSERT_EQ(back.size(), elements.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, elements[i].id);
    EXPECT_EQ(back[i].kind, elements[i].kind);
    EXPECT_EQ(back[i].tags, elements[i].tags);
    EXPECT_EQ(back[i].refs, elements[i].refs);
    // PBF stores coordinates at 1e-7 degree resolution.
    EXPECT_NEAR(back[i].location.lon, elements[i].location.lon, 1e-7);
    EXPECT_NEAR(back[i].location.lat, elements[i].location.lat, 1e-7);
  }
}

TEST(Ingest, FixtureLandsInExpectedTiles) {
  std::set<std::string> expected;
  std::ifstream in(fixture_path("fixture_tiles.txt"));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) expected.insert(line);

  const auto entities = assemble_entities(read_pbf_file(fixture_path("fixture.osm.pbf")));
  std::set<std::string> got;
  for (const auto& t : tile_entities(entities, 16)) got.insert(to_string(t.id));
  EXPECT_EQ(got, expected);
}

TEST(Assemble, ClosedWayAreaRules) {
  EXPECT_TRUE(closed_way_is_area({{"building", "yes"}}));
  EXPECT_FALSE(closed_way_is_area({{"highway", "residential"}}));
  EXPECT_TRUE(closed_way_is_area({{"highway", "pedestrian"}, {"area", "yes"}}));
  EXPECT_FALSE(closed_way_is_area({{"building", "yes"}, {"area", "no"}}));
}

TEST(Clip, InsideEntityUnchanged) {
  const Geometry g = Polygon{{{{0.1, 0.1}, {0.5, 0.1}, {0.5, 0.5}, {0.1, 0.1}}}};
  const auto out = clip_geometry(g);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], g);
}

TEST(Clip, SquareStraddlingEastBorder) {
  const Geometry g = Polygon{{{{0.8, 0.4}, {1.2, 0.4}, {1.2, 0.6}, {0.8, 0.6}, {0.8, 0.4}}}};
  const auto out = clip_geometry(g);
  ASSERT_EQ(out.size(), 1u);
  const auto& ring = std::get<Polygon>(out[0]).rings.at(0);
  EXPECT_EQ(ring.front(), ring.back());
  double max_x = 0.0;
  for (const auto& p : ring) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LE(p.x, 1.0);
    max_x = std::max(max_x, p.x);
  }
  EXPECT_DOUBLE_EQ(max_x, 1.0);
  double area2 = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) area2 += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  EXPECT_NEAR(std::abs(area2) / 2.0, 0.2 * 0.2, 1e-12);
}

TEST(Clip, PolylineCrossingTwiceSplits) {
  const Geometry g = Polyline{{{-0.2, 0.3}, {0.5, 0.3}, {1.2, 0.3}, {1.2, 0.7}, {0.5, 0.7}, {-0.2, 0.7}}};
  const auto out = clip_geometry(g);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& piece : out) {
    for (const auto& p : std::get<Polyline>(piece).points) {
      EXPECT_GE(p.x, 0.0);
      EXPECT_LE(p.x, 1.0);
    }
  }
}

TEST(Clip, PointsKeptIffInside) {
  EXPECT_EQ(clip_geometry(Point{{0.5, 0.5}}).size(), 1u);
  EXPECT_TRUE(clip_geometry(Point{{1.5, 0.5}}).empty());
}

TEST(Clip, RandomPolygonsClosedIdempotentInUnitSquare) {
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    const NormPoint c{rng.uniform(-0.3, 1.3), rng.uniform(-0.3, 1.3)};
    Polygon p;
    p.rings.push_back(testing::star_ring(rng, c, 3 + static_cast<int>(rng.below(12)), 0.1, 0.6, false));
    const auto once = clip_geometry(p);
    for (const auto& g : once) {
      for (const auto& ring : std::get<Polygon>(g).rings) {
        ASSERT_GE(ring.size(), 4u);
        EXPECT_EQ(ring.front(), ring.back());
        for (const auto& q : ring) {
          EXPECT_TRUE(q.x >= 0.0 && q.x <= 1.0 && q.y >= 0.0 && q.y <= 1.0);
        }
      }
      const auto twice = clip_geometry(g);
      ASSERT_EQ(twice.size(), 1u);
      const auto& a = std::get<Polygon>(g).rings;
      const auto& b = std::get<Polygon>(twice[0]).rings;
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t r = 0; r < a.size(); ++r) {
        ASSERT_EQ(a[r].size(), b[r].size());
        for (std::size_t k = 0; k < a[r].size(); ++k) {
          EXPECT_NEAR(a[r][k].x, b[r][k].x, 1e-9);
          EXPECT_NEAR(a[r][k].y, b[r][k].y, 1e-9);
        }
      }
    }
  }
}

TEST(Clip, ConvexInputStaysSimple) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    // Hulls are convex, so clipping them cannot create crossings.
    std::vector<NormPoint> pts;
    for (int k = 0; k < 12; ++k) pts.push_back({rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)});
    const auto hull = convex_hull(pts);
    if (hull.size() < 3) continue;
    Ring ring = hull;
    ring.push_back(ring.front());
    for (const auto& g : clip_geometry(Polygon{{ring}})) {
      const auto& r = std::get<Polygon>(g).rings[0];
      for (std::size_t a = 0; a + 1 < r.size(); ++a)
        for (std::size_t b = a + 1; b + 1 < r.size(); ++b)
          EXPECT_FALSE(segments_properly_intersect(r[a], r[a + 1], r[b], r[b + 1]));
    }
  }
}

TEST(FilterOutliers, Bounds) {
  auto tile_with = [](std::size_t n) {
    Tile t;
    t.entities.resize(n);
    return t;
  };
  EXPECT_FALSE(filter_outliers(tile_with(4)));
  EXPECT_TRUE(filter_outliers(tile_with(5)));
  EXPECT_TRUE(filter_outliers(tile_with(1250)));
  EXPECT_FALSE(filter_outliers(tile_with(1251)));
}

std::vector<Tile> tiles_at(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> xy) {
  std::vector<Tile> out;
  for (auto [x, y] : xy) {
    Tile t;
    t.id = {16, x, y};
    out.push_back(t);
  }
  return out;
}

TEST(GroupTiles, Examples) {
  std::vector<Tile> block;
  for (std::uint32_t x = 0; x < 4; ++x)
    for (std::uint32_t y = 0; y < 4; ++y) block.push_back(tiles_at({{x, y}})[0]);
  const auto one = group_tiles(block);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].tiles.size(), 16u);
  EXPECT_EQ(group_tiles(tiles_at({{3, 3}, {4, 4}})).size(), 2u);
  EXPECT_TRUE(group_tiles({}).empty());
}

TEST(GroupTiles, FlattenIsPermutation) {
  Rng rng(2);
  std::set<TileId> ids;
  while (ids.size() < 300) ids.insert({16, static_cast<std::uint32_t>(rng.below(40)), static_cast<std::uint32_t>(rng.below(40))});
  std::vector<Tile> tiles;
  for (const auto& id : ids) tiles.push_back(Tile{id, {}, 300.0, {}});
  std::reverse(tiles.begin(), tiles.end());
  std::set<TileId> back;
  for (const auto& g : group_tiles(tiles)) {
    EXPECT_GE(g.tiles.size(), 1u);
    EXPECT_LE(g.tiles.size(), 16u);
    for (const auto& t : g.tiles) {
      EXPECT_EQ(group_key(t.id), g.key);
      back.insert(t.id);
    }
  }
  EXPECT_EQ(back, ids);
}

TEST(Correlate, SetIntersection) {
  const TileId a{16, 1, 1}, b{16, 2, 2}, c{16, 3, 3};
  EXPECT_TRUE(correlate({a}, {b}).empty());
  EXPECT_EQ(correlate({a, b}, {a, b}), (std::set<TileId>{a, b}));
  EXPECT_EQ(correlate({a, b}, {b, c}), (std::set<TileId>{b}));
}

std::vector<GroupKey> keys(std::size_t n) {
  std::vector<GroupKey> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back({16, i, i * 3});
  return out;
}

TEST(SplitGroups, CountsAndDeterminism) {
  const auto k = keys(10);
  const auto a = split_groups(k, {0.8, 0.1, 0.1}, 7);
  std::array<int, 3> counts{};
  for (const auto& [key, s] : a) ++counts[static_cast<int>(s)];
  EXPECT_EQ(counts, (std::array<int, 3>{8, 1, 1}));
  EXPECT_EQ(a, split_groups(k, {0.8, 0.1, 0.1}, 7));
  for (const auto& [key, s] : split_groups(k, {1.0, 0.0, 0.0}, 7)) EXPECT_EQ(s, Split::train);
  EXPECT_TRUE(split_groups({}, {0.8, 0.1, 0.1}, 7).empty());
}

TEST(SplitGroups, LargestRemainderOracle) {
  // Independent count: floor each share, then hand leftovers to the largest
  // fractional parts, earlier split first on ties.
  for (std::size_t n = 0; n < 60; ++n) {
    const std::array<double, 3> r{0.8, 0.1, 0.1};
    std::array<std::size_t, 3> expect{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
      const double share = r[i] * static_cast<double>(n);
      expect[i] = static_cast<std::size_t>(std::floor(share + 1e-9));
      frac[i] = share - static_cast<double>(expect[i]);
      used += expect[i];
    }
    for (std::size_t left = n - used; left > 0; --left) {
      int best = 0;
      for (int i = 1; i < 3; ++i)
        if (frac[i] > frac[best] + 1e-9) best = i;
      ++expect[best];
      frac[best] = -1.0;
    }
    EXPECT_EQ(split_counts(n, r), expect) << n;
  }
}

TEST(SplitGroups, IsPartition) {
  const auto k = keys(37);
  const auto a = split_groups(k, {0.6, 0.2, 0.2}, 99);
  EXPECT_EQ(a.size(), k.size());
  for (const auto& key : k) EXPECT_EQ(a.count(key), 1u);
}

}  // namespace
}  // namespace geotile
