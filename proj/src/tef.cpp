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

#include "geotile/tef.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace geotile {

using json = nlohmann::ordered_json;

TefError::TefError(std::size_t line, const std::string& path, const std::string& what)
    : Error(fmt::format("TEF line {}: {}: {}", line, path.empty() ? "<root>" : path, what)),
      line_(line),
      path_(path) {}

std::string_view to_string(EdgeKind kind) { return kind == EdgeKind::visibility ? "vis" : "bnd"; }

namespace {

json point_json(const NormPoint& p) { return json::array({p.x, p.y}); }

json points_json(const std::vector<NormPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(point_json(p));
  return a;
}

json polygon_json(const Polygon& poly) {
  json a = json::array();
  for (const auto& r : poly.rings) a.push_back(points_json(r));
  return a;
}

json geometry_json(const Geometry& g) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        json out = json::object();
        if constexpr (std::is_same_v<T, Point>) {
          out["type"] = "point";
          out["coords"] = point_json(v.at);
        } else if constexpr (std::is_same_v<T, Polyline>) {
          out["type"] = "polyline";
          out["coords"] = points_json(v.points);
        } else if constexpr (std::is_same_v<T, Polygon>) {
          out["type"] = "polygon";
          out["coords"] = polygon_json(v);
        } else {
          json polys = json::array();
          for (const auto& p : v.polygons) polys.push_back(polygon_json(p));
          out["type"] = "multipolygon";
          out["coords"] = std::move(polys);
        }
        return out;
      },
      g);
}

json entity_json(const Entity& e) {
  json out = json::object();
  out["id"] = e.id;
  out["kind"] = to_string(e.kind);
  json tags = json::array();
  for (const auto& t : e.tags) tags.push_back(json::array({t.key, t.value}));
  out["tags"] = std::move(tags);
  out["geometry"] = geometry_json(e.geometry);
  json box = json::array();
  for (const auto& c : e.minbox.corners) {
    box.push_back(c.x);
    box.push_back(c.y);
  }
  out["minbox"] = std::move(box);
  if (e.visgraph) {
    json edges = json::array();
    for (const auto& edge : *e.visgraph) edges.push_back(json::array({edge.u, edge.v, to_string(edge.kind)}));
    out["visgraph"] = json::object({{"edges", std::move(edges)}});
  }
  return out;
}

// Walks a parsed document while tracking the field path for error messages.
class Cursor {
 public:
  Cursor(const json& node, std::size_t line, std::string path = {})
      : node_(node), line_(line), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const { throw TefError(line_, path_, what); }

  Cursor field(const char* name) const {
    if (!node_.is_object()) fail("expected object");
    auto it = node_.find(name);
    std::string sub = path_.empty() ? name : path_ + "." + name;
    if (it == node_.end()) throw TefError(line_, sub, "missing field");
    return Cursor(*it, line_, std::move(sub));
  }

  bool has(const char* name) const { return node_.is_object() && node_.contains(name); }

  Cursor at(std::size_t i) const { return Cursor(node_.at(i), line_, fmt::format("{}[{}]", path_, i)); }

  std::size_t array_size() const {
    if (!node_.is_array()) fail("expected array");
    return node_.size();
  }

  double number() const {
    if (!node_.is_number()) fail("expected number");
    const double v = node_.get<double>();
    if (!std::isfinite(v)) fail("non-finite number");
    return v;
  }

  std::int64_t integer() const {
    if (!node_.is_number_integer()) fail("expected integer");
    return node_.get<std::int64_t>();
  }

  std::string string() const {
    if (!node_.is_string()) fail("expected string");
    return node_.get<std::string>();
  }

  const json& node() const { return node_; }

 private:
  const json& node_;
  std::size_t line_;
  std::string path_;
};

NormPoint parse_point(const Cursor& c) {
  if (c.array_size() != 2) c.fail("expected [x,y]");
  return {c.at(0).number(), c.at(1).number()};
}

std::vector<NormPoint> parse_points(const Cursor& c) {
  std::vector<NormPoint> out;
  const std::size_t n = c.array_size();
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(parse_point(c.at(i)));
  return out;
}

Polygon parse_polygon(const Cursor& c) {
  Polygon out;
  const std::size_t n = c.array_size();
  if (n == 0) c.fail("polygon needs an outer ring");
  for (std::size_t i = 0; i < n; ++i) {
    Cursor rc = c.at(i);
    Ring r = parse_points(rc);
    if (r.size() < 4) rc.fail("ring needs at least 4 points");
    if (!(r.front() == r.back())) rc.fail("ring is not closed");
    out.rings.push_back(std::move(r));
  }
  return out;
}

Geometry parse_geometry(const Cursor& c) {
  const std::string type = c.field("type").string();
  const Cursor coords = c.field("coords");
  if (type == "point") return Point{parse_point(coords)};
  if (type == "polyline") {
    Polyline l{parse_points(coords)};
    if (l.points.size() < 2) coords.fail("polyline needs at least 2 points");
    return l;
  }
  if (type == "polygon") return parse_polygon(coords);
  if (type == "multipolygon") {
    MultiPolygon mp;
    const std::size_t n = coords.array_size();
    if (n == 0) coords.fail("multipolygon needs at least one polygon");
    for (std::size_t i = 0; i < n; ++i) mp.polygons.push_back(parse_polygon(coords.at(i)));
    return mp;
  }
  c.field("type").fail(fmt::format("unknown geometry type '{}'", type));
}

Entity parse_entity(const Cursor& c) {
  Entity e;
  e.id = c.field("id").integer();
  const Cursor kind = c.field("kind");
  const auto k = parse_entity_kind(kind.string());
  if (!k) kind.fail("kind must be node, way, or relation");
  e.kind = *k;

  const Cursor tags = c.field("tags");
  for (std::size_t i = 0, n = tags.array_size(); i < n; ++i) {
    Cursor t = tags.at(i);
    if (t.array_size() != 2) t.fail("tag must be [key, value]");
    TagKV kv{t.at(0).string(), t.at(1).string()};
    if (kv.key.empty()) t.at(0).fail("empty tag key");
    e.tags.push_back(std::move(kv));
  }

  e.geometry = parse_geometry(c.field("geometry"));

  const Cursor box = c.field("minbox");
  if (box.array_size() != 8) box.fail("minbox must have 8 numbers");
  for (std::size_t i = 0; i < 4; ++i) e.minbox.corners[i] = {box.at(2 * i).number(), box.at(2 * i + 1).number()};

  if (c.has("visgraph")) {
    const Cursor edges = c.field("visgraph").field("edges");
    std::vector<GraphEdge> out;
    for (std::size_t i = 0, n = edges.array_size(); i < n; ++i) {
      Cursor ec = edges.at(i);
      if (ec.array_size() != 3) ec.fail("edge must be [i, j, kind]");
      const auto u = ec.at(0).integer(), v = ec.at(1).integer();
      if (u < 0 || v < 0 || u > UINT32_MAX || v > UINT32_MAX) ec.fail("vertex index out of range");
      const std::string kind_s = ec.at(2).string();
      if (kind_s != "vis" && kind_s != "bnd") ec.at(2).fail("edge kind must be vis or bnd");
      out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v),
                     kind_s == "vis" ? EdgeKind::visibility : EdgeKind::boundary});
    }
    e.visgraph = std::move(out);
  }
  return e;
}

}  // namespace

std::string write_tef_line(const Tile& tile) {
  json out = json::object();
  out["id"] = to_string(tile.id);
  out["extent_m"] = tile.extent_m;
  out["origin"] = json::array({tile.origin.lon, tile.origin.lat});
  json entities = json::array();
  for (const auto& e : tile.entities) entities.push_back(entity_json(e));
  out["entities"] = std::move(entities);
  return out.dump();
}

void write_tef(std::ostream& out, std::span<const Tile> tiles) {
  for (const auto& t : tiles) out << write_tef_line(t) << '\n';
}

Tile parse_tef_line(std::string_view line, std::size_t line_no) {
  json doc;
  try {
    doc = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& err) {
    throw TefError(line_no, "", fmt::format("invalid JSON ({})", err.what()));
  }
  const Cursor root(doc, line_no);
  if (!doc.is_object()) root.fail("expected object");

  Tile t;
  const Cursor id = root.field("id");
  try {
    t.id = parse_tile_id(id.string());
  } catch (const TefError&) {
    throw;
  } catch (const Error& err) {
    id.fail(err.what());
  }
  const Cursor extent = root.field("extent_m");
  t.extent_m = extent.number();
  if (!(t.extent_m > 0.0)) extent.fail("extent_m must be positive");
  const Cursor origin = root.field("origin");
  if (origin.array_size() != 2) origin.fail("expected [lon, lat]");
  t.origin = {origin.at(0).number(), origin.at(1).number()};

  const Cursor entities = root.field("entities");
  for (std::size_t i = 0, n = entities.array_size(); i < n; ++i) t.entities.push_back(parse_entity(entities.at(i)));
  return t;
}

std::vector<Tile> parse_tef(std::istream& in) {
  std::vector<Tile> out;
  std::set<TileId> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Tile t = parse_tef_line(line, line_no);
    if (!seen.insert(t.id).second) throw TefError(line_no, "id", fmt::format("duplicate tile id {}", to_string(t.id)));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace geotile
