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
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "geotile/osm_ingest.hpp"

namespace geotile {

namespace {

struct ResolvedWay {
  const RawElement* raw = nullptr;
  std::vector<GeoPoint> points;
};

struct MemberWay {
  const ResolvedWay* way = nullptr;
  bool inner = false;
};

struct RingPiece {
  std::vector<std::int64_t> ids;
  std::vector<GeoPoint> points;
  bool inner = false;
};

bool ring_contains(const std::vector<GeoPoint>& ring, const GeoPoint& p) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if ((a.lat > p.lat) != (b.lat > p.lat) &&
        p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon)
      inside = !inside;
  }
  return inside;
}

// Joins member ways end to end. Fails unless every way ends up in a closed
// ring of at least 4 stored points.
std::optional<std::vector<RingPiece>> join_rings(const std::vector<MemberWay>& members) {
  std::vector<bool> used(members.size(), false);
  std::vector<RingPiece> rings;
  for (std::size_t start = 0; start < members.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    RingPiece ring;
    ring.ids = members[start].way->raw->refs;
    ring.points = members[start].way->points;
    ring.inner = members[start].inner;
    while (ring.ids.front() != ring.ids.back()) {
      bool extended = false;
      for (std::size_t k = 0; k < members.size() && !extended; ++k) {
        if (used[k]) continue;
        const auto& ids = members[k].way->raw->refs;
        const auto& pts = members[k].way->points;
        if (ids.front() == ring.ids.back()) {
          ring.ids.insert(ring.ids.end(), ids.begin() + 1, ids.end());
          ring.points.insert(ring.points.end(), pts.begin() + 1, pts.end());
        } else if (ids.back() == ring.ids.back()) {
          ring.ids.insert(ring.ids.end(), ids.rbegin() + 1, ids.rend());
          ring.points.insert(ring.points.end(), pts.rbegin() + 1, pts.rend());
        } else {
          continue;
        }
        used[k] = true;
        extended = true;
      }
      if (!extended) return std::nullopt;
    }
    if (ring.points.size() < 4) return std::nullopt;
    rings.push_back(std::move(ring));
  }
  return rings;
}

GeoGeometry way_geometry(const ResolvedWay& w, const Tags& tags) {
  const auto& refs = w.raw->refs;
  if (refs.size() >= 4 && refs.front() == refs.back() && closed_way_is_area(tags))
    return BasicPolygon<GeoPoint>{{w.points}};
  return BasicPolyline<GeoPoint>{w.points};
}

Tags merge_tags(const Tags& relation, const Tags& member) {
  Tags out = member;
  for (const auto& t : relation) {
    const bool shadowed =
        std::any_of(member.begin(), member.end(), [&](const TagKV& m) { return m.key == t.key; });
    if (!shadowed) out.push_back(t);
  }
  return out;
}

struct RelationOutcome {
  std::optional<GeoEntity> multipolygon;
  std::vector<const ResolvedWay*> members;  // when not closable
};

}  // namespace

bool closed_way_is_area(const Tags& tags) {
  static const std::unordered_set<std::string> linear_keys = {
      "highway", "barrier", "railway", "waterway", "power", "aerialway", "route", "cycleway", "footway"};
  bool linear = false;
  for (const auto& t : tags) {
    if (t.key == "area") return t.value != "no";
    if (linear_keys.count(t.key) && !(t.key == "waterway" && t.value == "riverbank")) linear = true;
    if (t.key == "natural" && (t.value == "coastline" || t.value == "tree_row" || t.value == "cliff"))
      linear = true;
  }
  return !linear;
}

std::vector<GeoEntity> assemble_entities(std::span<const RawElement> elements, AssemblyStats* stats) {
  AssemblyStats local;
  AssemblyStats& st = stats ? *stats : local;

  std::unordered_map<std::int64_t, GeoPoint> node_at;
  std::unordered_map<std::int64_t, ResolvedWay> ways;
  for (const auto& e : elements) {
    if (e.kind == EntityKind::node) {
      node_at[e.id] = e.location;
      ++st.nodes;
    }
  }
  for (const auto& e : elements) {
    if (e.kind != EntityKind::way) continue;
    ++st.ways;
    ResolvedWay w{&e, {}};
    bool ok = e.refs.size() >= 2;
    for (auto ref : e.refs) {
      auto it = node_at.find(ref);
      if (it == node_at.end()) {
        ok = false;
        break;
      }
      w.points.push_back(it->second);
    }
    if (!ok) {
      ++st.unresolved_ways;
      spdlog::debug("way {} dropped: unresolved node reference", e.id);
      continue;
    }
    ways.emplace(e.id, std::move(w));
  }

  std::unordered_map<std::int64_t, RelationOutcome> relations;
  std::unordered_set<std::int64_t> consumed_ways;
  for (const auto& e : elements) {
    if (e.kind != EntityKind::relation) continue;
    ++st.relations;
    std::vector<MemberWay> members;
    for (const auto& m : e.members) {
      if (m.type != EntityKind::way) continue;
      auto it = ways.find(m.ref);
      if (it != ways.end()) members.push_back({&it->second, m.role == "inner"});
    }
    if (members.empty()) {
      ++st.unresolved_relations;
      continue;
    }
    RelationOutcome outcome;
    if (auto rings = join_rings(members)) {
      std::vector<BasicPolygon<GeoPoint>> polygons;
      std::vector<const RingPiece*> holes;
      for (const auto& r : *rings) {
        if (r.inner)
          holes.push_back(&r);
        else
          polygons.push_back({{r.points}});
      }
      for (const RingPiece* h : holes) {
        auto owner = std::find_if(polygons.begin(), polygons.end(), [&](const auto& p) {
          return ring_contains(p.rings.front(), h->points.front());
        });
        if (owner != polygons.end())
          owner->rings.push_back(h->points);
        else
          polygons.push_back({{h->points}});  // orphan inner ring
      }
      outcome.multipolygon = GeoEntity{e.id, EntityKind::relation, e.tags,
                                       BasicMultiPolygon<GeoPoint>{std::move(polygons)}};
      ++st.multipolygons;
    } else {
      for (const auto& m : members) {
        outcome.members.push_back(m.way);
        consumed_ways.insert(m.way->raw->id);
      }
    }
    relations.emplace(e.id, std::move(outcome));
  }

  std::vector<GeoEntity> out;
  for (const auto& e : elements) {
    switch (e.kind) {
      case EntityKind::node:
        if (!e.tags.empty()) out.push_back({e.id, EntityKind::node, e.tags, BasicPoint<GeoPoint>{e.location}});
        break;
      case EntityKind::way: {
        auto it = ways.find(e.id);
        if (it == ways.end() || consumed_ways.count(e.id)) break;
        if (e.tags.empty()) {
          ++st.untagged_ways_dropped;
          break;
        }
        out.push_back({e.id, EntityKind::way, e.tags, way_geometry(it->second, e.tags)});
        break;
      }
      case EntityKind::relation: {
        auto it = relations.find(e.id);
        if (it == relations.end()) break;
        if (it->second.multipolygon) {
          out.push_back(*it->second.multipolygon);
        } else {
          for (const ResolvedWay* w : it->second.members) {
            Tags tags = merge_tags(e.tags, w->raw->tags);
            GeoGeometry g = way_geometry(*w, tags);
            out.push_back({w->raw->id, EntityKind::way, std::move(tags), std::move(g)});
          }
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace geotile
