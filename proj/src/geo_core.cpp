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

#include "geotile/geo_core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace geotile {

namespace {

constexpr double kDegToRad = kPi / 180.0;

double tile_x_to_lon(double x, int zoom) {
  return x / std::ldexp(1.0, zoom) * 360.0 - 180.0;
}

double tile_y_to_lat(double y, int zoom) {
  const double n = kPi * (1.0 - 2.0 * y / std::ldexp(1.0, zoom));
  return std::atan(std::sinh(n)) / kDegToRad;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::node:
      return "node";
    case EntityKind::way:
      return "way";
    case EntityKind::relation:
      return "relation";
  }
  return "node";
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  if (s == "node") return EntityKind::node;
  if (s == "way") return EntityKind::way;
  if (s == "relation") return EntityKind::relation;
  return std::nullopt;
}

bool is_valid(const TileId& id) {
  if (id.zoom < 0 || id.zoom > 30) return false;
  const std::uint64_t n = std::uint64_t{1} << id.zoom;
  return id.x < n && id.y < n;
}

GeoRect tile_bounds(const TileId& id) {
  GeoRect r;
  r.min.lon = tile_x_to_lon(id.x, id.zoom);
  r.max.lon = tile_x_to_lon(id.x + 1.0, id.zoom);
  r.max.lat = tile_y_to_lat(id.y, id.zoom);
  r.min.lat = tile_y_to_lat(id.y + 1.0, id.zoom);
  return r;
}

TileId tile_at(const GeoPoint& p, int zoom) {
  const double n = std::ldexp(1.0, zoom);
  const double lat = std::clamp(p.lat, -85.0511287798066, 85.0511287798066) * kDegToRad;
  double fx = std::floor((p.lon + 180.0) / 360.0 * n);
  double fy = std::floor((1.0 - std::asinh(std::tan(lat)) / kPi) / 2.0 * n);
  fx = std::clamp(fx, 0.0, n - 1.0);
  fy = std::clamp(fy, 0.0, n - 1.0);
  return TileId{zoom, static_cast<std::uint32_t>(fx), static_cast<std::uint32_t>(fy)};
}

LocalPoint project_local(const GeoPoint& p, const GeoPoint& origin) {
  const double meters_per_deg = kDegToRad * kEarthRadiusM;
  return LocalPoint{(p.lon - origin.lon) * std::cos(origin.lat * kDegToRad) * meters_per_deg,
                    (p.lat - origin.lat) * meters_per_deg};
}

NormPoint normalize(const LocalPoint& p, double extent_m) {
  return NormPoint{p.x / extent_m, p.y / extent_m};
}

double tile_extent_m(const TileId& id) {
  const GeoRect b = tile_bounds(id);
  return (b.max.lat - b.min.lat) * kDegToRad * kEarthRadiusM;
}

TileFrame tile_frame(const TileId& id) {
  return TileFrame{tile_bounds(id).min, tile_extent_m(id)};
}

std::string to_string(const TileId& id) {
  return fmt::format("{}_{}_{}", id.zoom, id.x, id.y);
}

TileId parse_tile_id(std::string_view s) {
  const auto a = s.find('_');
  const auto b = a == std::string_view::npos ? a : s.find('_', a + 1);
  TileId id;
  if (b == std::string_view::npos || !parse_number(s.substr(0, a), id.zoom) ||
      !parse_number(s.substr(a + 1, b - a - 1), id.x) || !parse_number(s.substr(b + 1), id.y) ||
      !is_valid(id)) {
    throw Error(fmt::format("invalid tile id '{}'", s));
  }
  return id;
}

}  // namespace geotile
