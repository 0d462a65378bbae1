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
#include <set>

#include <gtest/gtest.h>

#include "../common/generators.hpp"
#include "geotile/random.hpp"
#include "geotile/synthetic.hpp"
#include "geotile/task_synth.hpp"
#include "geotile/tokenize.hpp"

namespace geotile {
namespace {

TaskSpec task(const std::string& name) {
  return load_task_spec(std::string(GEOTILE_CONFIG_DIR) + "/tasks/" + name + ".json");
}

const std::vector<std::string> kTasks{"buildings", "max_speed", "traffic_signals", "bridge", "car_bridge"};

Entity entity(Tags tags, Geometry g = Polyline{{{0.1, 0.1}, {0.2, 0.2}}}) {
  static std::int64_t next_id = 1;
  Entity e;
  e.id = next_id++;
  e.kind = std::holds_alternative<Point>(g) ? EntityKind::node : EntityKind::way;
  e.tags = std::move(tags);
  e.geometry = std::move(g);
  return e;
}

Tile tile_of(std::vector<Entity> es) {
  Tile t;
  t.id = {16, 1, 2};
  t.entities = std::move(es);
  return t;
}

TEST(TagPattern, ParseAndMatch) {
  const auto p = TagPattern::parse("*=bridge");
  EXPECT_TRUE(p.matches({"man_made", "bridge"}));
  EXPECT_FALSE(p.matches({"bridge", "yes"}));
  EXPECT_TRUE(TagPattern::parse("bridge=*").matches({"bridge", "yes"}));
  EXPECT_EQ(TagPattern::parse("highway=primary").str(), "highway=primary");
  EXPECT_THROW(TagPattern::parse("*=*"), Error);
  EXPECT_THROW(TagPattern::parse("nokey"), Error);
}

TEST(TaskSpec, ConfigsLoadAndRoundTrip) {
  for (const auto& name : kTasks) {
    const auto spec = task(name);
    EXPECT_EQ(spec.name, name);
    EXPECT_NO_THROW(spec.validate());
    EXPECT_EQ(parse_task_spec(task_spec_json(spec)).counted, spec.counted);
  }
  EXPECT_THROW(parse_task_spec(R"({"name":"x","label":"count","counted":["a=*"],"clamp":[1,1]})"), Error);
  EXPECT_THROW(parse_task_spec(R"({"name":"x","label":"sum","counted":["a=*"],"clamp":[0,1]})"), Error);
  EXPECT_THROW(parse_task_spec(
                   R"({"name":"x","label":"count","counted":["a=*"],"clamp":[0,1],"rebalance":{"label":0,"keep_probability":0}})"),
               Error);
}

TEST(Label, Examples) {
  EXPECT_EQ(compute_label(tile_of({entity({{"bridge", "yes"}})}), task("bridge")), 1.0);
  std::vector<Entity> houses;
  for (int i = 0; i < 24; ++i) houses.push_back(entity({{"building", "yes"}}));
  EXPECT_EQ(compute_label(tile_of(houses), task("buildings")), 24.0);
  const auto speed = task("max_speed");
  const auto roads = tile_of({entity({{"highway", "primary"}, {"maxspeed", "40 mph"}}),
                              entity({{"highway", "residential"}, {"maxspeed", "25 mph"}})});
  EXPECT_EQ(compute_label(roads, speed), 64.0);
}

TEST(Label, ParseSpeed) {
  EXPECT_EQ(parse_speed("50"), 50.0);
  EXPECT_EQ(parse_speed("65 mph"), 104.0);
  EXPECT_EQ(parse_speed("40 mph;25 mph"), 64.0);
  EXPECT_EQ(parse_speed(" 30 km/h "), 30.0);
  EXPECT_EQ(parse_speed("signals"), std::nullopt);
  EXPECT_EQ(parse_speed("none"), std::nullopt);
  EXPECT_EQ(parse_speed("-5"), std::nullopt);
}

TEST(Label, MaxSpeedPruneAndSentinel) {
  const auto spec = task("max_speed");
  EXPECT_EQ(compute_label(tile_of({entity({{"highway", "primary"}})}), spec), std::nullopt);
  EXPECT_EQ(compute_label(tile_of({entity({{"building", "yes"}})}), spec), kNoRoadSentinel);
  EXPECT_EQ(compute_label(tile_of({entity({{"highway", "primary"}, {"maxspeed", "80"}})}), spec), 80.0);
  LabelDiagnostics d;
  EXPECT_EQ(compute_label(tile_of({entity({{"highway", "primary"}, {"maxspeed", "walk"}})}), spec, &d), std::nullopt);
  EXPECT_EQ(d.unparseable_values, 1u);
  const std::vector<Tile> tiles{tile_of({entity({{"highway", "primary"}})}), tile_of({entity({{"shop", "bakery"}})})};
  const auto kept = prune_tiles(tiles, spec);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].entities[0].tags[0].key, "shop");
}

TEST(Label, CarBridgeNeedsBothOnOneEntity) {
  const auto spec = task("car_bridge");
  EXPECT_EQ(compute_label(tile_of({entity({{"bridge", "yes"}, {"highway", "primary"}})}), spec), 1.0);
  EXPECT_EQ(compute_label(tile_of({entity({{"bridge", "yes"}, {"railway", "rail"}})}), spec), 0.0);
  EXPECT_EQ(compute_label(tile_of({entity({{"bridge", "yes"}}), entity({{"highway", "primary"}})}), spec), 0.0);
}

TEST(Label, EntityOrderInvariant) {
  Rng rng(1);
  const auto tiles = synthetic_tiles({.tiles = 16, .seed = 9});
  for (const auto& name : kTasks) {
    const auto spec = task(name);
    for (auto t : tiles) {
      const auto before = compute_label(t, spec);
      for (std::size_t i = t.entities.size(); i > 1; --i) std::swap(t.entities[i - 1], t.entities[rng.below(i)]);
      EXPECT_EQ(compute_label(t, spec), before);
    }
  }
}

TEST(Mask, Examples) {
  const auto bridge = apply_mask(tile_of({entity({{"bridge", "yes"}, {"layer", "1"}, {"highway", "primary"}})}),
                                 task("bridge"));
  ASSERT_EQ(bridge.entities.size(), 1u);
  EXPECT_EQ(bridge.entities[0].tags, (Tags{{"highway", "primary"}}));

  const auto houses = apply_mask(
      tile_of({entity({{"building", "yes"}, {"addr:street", "Main"}}), entity({{"amenity", "cafe"}})}),
      task("buildings"));
  ASSERT_EQ(houses.entities.size(), 1u);
  EXPECT_EQ(houses.entities[0].tags, (Tags{{"amenity", "cafe"}}));

  const auto signals =
      apply_mask(tile_of({entity({{"highway", "traffic_signals"}}, Point{{0.5, 0.5}}),
                          entity({{"highway", "footway"}, {"crossing:signals", "yes"}})}),
                 task("traffic_signals"));
  ASSERT_EQ(signals.entities.size(), 1u);
  EXPECT_EQ(signals.entities[0].tags, (Tags{{"highway", "footway"}}));
  EXPECT_TRUE(std::holds_alternative<Polyline>(signals.entities[0].geometry));
}

TEST(Mask, RemovesLabelEvidenceCorpusWide) {
  const auto tiles = synthetic_tiles({.tiles = 64, .seed = 4});
  for (const auto& name : kTasks) {
    const auto spec = task(name);
    if (spec.label_kind != LabelKind::count && spec.label_kind != LabelKind::binary) continue;
    std::size_t positive = 0;
    for (const auto& t : tiles) {
      positive += compute_label(t, spec).value_or(0.0) > 0.0;
      const auto masked = apply_mask(t, spec);
      EXPECT_EQ(compute_label(masked, spec), 0.0) << name << " " << to_string(t.id);
      for (const auto& e : masked.entities) EXPECT_FALSE(e.tags.empty());
    }
    EXPECT_GT(positive, 0u) << name;
  }
}

TEST(Rebalance, Examples) {
  const auto spec = task("buildings");
  std::vector<TaskSample> zeros;
  for (std::uint32_t i = 0; i < 10000; ++i) zeros.push_back({{16, i, i}, 0.0});
  const auto kept = rebalance(zeros, spec, 3);
  EXPECT_GE(kept.size(), 850u);
  EXPECT_LE(kept.size(), 1150u);
  EXPECT_EQ(kept, rebalance(zeros, spec, 3));
  EXPECT_NE(kept, rebalance(zeros, spec, 4));

  auto identity = spec;
  identity.rebalance->keep_probability = 1.0;
  EXPECT_EQ(rebalance(zeros, identity, 3), zeros);

  std::vector<TaskSample> mixed{{{16, 1, 1}, 3.0}, {{16, 2, 2}, 0.0}, {{16, 3, 3}, 7.0}};
  const auto m = rebalance(mixed, spec, 11);
  EXPECT_TRUE(std::find(m.begin(), m.end(), mixed[0]) != m.end());
  EXPECT_TRUE(std::find(m.begin(), m.end(), mixed[2]) != m.end());
  EXPECT_EQ(rebalance(std::vector<TaskSample>{mixed[0], mixed[2]}, spec, 11).size(), 2u);
}

TEST(Cooccurrence, Examples) {
  const TagVocab vocab({"a=1", "b=2", "c=3"});
  const std::vector<Tile> one{tile_of({entity({{"a", "1"}, {"b", "2"}})})};
  const auto c1 = cooccurrence(one, vocab);
  EXPECT_EQ(c1.intra_at(0, 1), 1u);
  EXPECT_EQ(c1.intra_at(1, 0), 1u);
  EXPECT_TRUE(c1.inter.empty());
  const std::vector<Tile> two{tile_of({entity({{"a", "1"}}), entity({{"b", "2"}})})};
  const auto c2 = cooccurrence(two, vocab);
  EXPECT_EQ(c2.inter_at(0, 1), 1u);
  EXPECT_TRUE(c2.intra.empty());
}

TEST(Cooccurrence, MatchesDoubleLoopOracle) {
  const auto tiles = synthetic_tiles({.tiles = 25, .seed = 5});
  const auto vocab = prune_vocab(corpus_tag_counts(tiles), 1);
  PairCounts intra, inter;
  for (const auto& t : tiles) {
    std::vector<std::set<std::uint32_t>> ids;
    for (const auto& e : t.entities) {
      ids.emplace_back();
      for (const auto& tag : e.tags)
        if (auto i = vocab.find(tag)) ids.back().insert(*i);
    }
    for (const auto& s : ids)
      for (auto a : s)
        for (auto b : s)
          if (a < b) ++intra[{a, b}];
    std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < ids.size(); ++j)
        if (i != j)
          for (auto a : ids[i])
            for (auto b : ids[j])
              if (a < b) pairs.insert({a, b});
    for (const auto& p : pairs) ++inter[p];
  }
  for (unsigned jobs : {1u, 3u}) {
    const auto c = cooccurrence(tiles, vocab, jobs);
    EXPECT_EQ(c.intra, intra);
    EXPECT_EQ(c.inter, inter);
  }
}

}  // namespace
}  // namespace geotile
