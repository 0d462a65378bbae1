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
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace geotile {

/// WGS84 degrees.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Meters east/north of a tile origin.
struct LocalPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const LocalPoint&, const LocalPoint&) = default;
};

/// Tile-local fraction; [0,1] once clipped.
struct NormPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const NormPoint&, const NormPoint&) = default;
};

struct TagKV {
  std::string key;
  std::string value;

  friend bool operator==(const TagKV&, const TagKV&) = default;
  friend auto operator<=>(const TagKV&, const TagKV&) = default;
};

using Tags = std::vector<TagKV>;

// Geometry variants are parameterized on the point type so raw OSM geometry
// (GeoPoint) and processed tile geometry (NormPoint) share one shape.
template <class P>
using BasicRing = std::vector<P>;

template <class P>
struct BasicPoint {
  P at;
  friend bool operator==(const BasicPoint&, const BasicPoint&) = default;
};

template <class P>
struct BasicPolyline {
  std::vector<P> points;
  friend bool operator==(const BasicPolyline&, const BasicPolyline&) = default;
};

/// rings[0] is the outer ring, the rest are holes. Rings are closed.
template <class P>
struct BasicPolygon {
  std::vector<BasicRing<P>> rings;
  friend bool operator==(const BasicPolygon&, const BasicPolygon&) = default;
};

template <class P>
struct BasicMultiPolygon {
  std::vector<BasicPolygon<P>> polygons;
  friend bool operator==(const BasicMultiPolygon&, const BasicMultiPolygon&) = default;
};

template <class P>
using BasicGeometry =
    std::variant<BasicPoint<P>, BasicPolyline<P>, BasicPolygon<P>, BasicMultiPolygon<P>>;

using Ring = BasicRing<NormPoint>;
using Point = BasicPoint<NormPoint>;
using Polyline = BasicPolyline<NormPoint>;
using Polygon = BasicPolygon<NormPoint>;
using MultiPolygon = BasicMultiPolygon<NormPoint>;
using Geometry = BasicGeometry<NormPoint>;

using GeoGeometry = BasicGeometry<GeoPoint>;

enum class EntityKind : std::uint8_t { node, way, relation };

/// Oriented rectangle, four corners in consistent winding order.
struct MinBox {
  std::array<NormPoint, 4> corners{};
  friend bool operator==(const MinBox&, const MinBox&) = default;
};

enum class EdgeKind : std::uint8_t { boundary, visibility };

struct GraphEdge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  EdgeKind kind = EdgeKind::boundary;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
  friend auto operator<=>(const GraphEdge&, const GraphEdge&) = default;
};

struct Entity {
  std::int64_t id = 0;
  EntityKind kind = EntityKind::node;
  Tags tags;
  Geometry geometry;
  MinBox minbox;
  // Only the edge list is stored; vertices are implied by the geometry.
  std::optional<std::vector<GraphEdge>> visgraph;

  friend bool operator==(const Entity&, const Entity&) = default;
};

/// An entity still in WGS84 coordinates, before tiling.
struct GeoEntity {
  std::int64_t id = 0;
  EntityKind kind = EntityKind::node;
  Tags tags;
  GeoGeometry geometry;
};

struct TileId {
  int zoom = 16;
  std::uint32_t x = 0;
  std::uint32_t y = 0;

  friend bool operator==(const TileId&, const TileId&) = default;
  friend auto operator<=>(const TileId&, const TileId&) = default;
};

struct Tile {
  TileId id;
  GeoPoint origin;  // southwest corner
  double extent_m = 300.0;
  std::vector<Entity> entities;

  friend bool operator==(const Tile&, const Tile&) = default;
};

struct GeoRect {
  GeoPoint min;
  GeoPoint max;
};

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view s);

}  // namespace geotile
