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

#include <stdexcept>
#include <string>
#include <string_view>

#include "geotile/types.hpp"

namespace geotile {

inline constexpr double kEarthRadiusM = 6378137.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr int kDefaultZoom = 16;

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Slippy-map (Web-Mercator XYZ) bounds of a tile. `min` is the southwest
/// corner, `max` the northeast corner.
GeoRect tile_bounds(const TileId& id);

/// Tile containing `p` at `zoom`. Points on the antimeridian or polar cap are
/// clamped into the grid.
TileId tile_at(const GeoPoint& p, int zoom = kDefaultZoom);

/// Equirectangular projection about `origin`.
LocalPoint project_local(const GeoPoint& p, const GeoPoint& origin);

/// Componentwise division by `extent_m`; out-of-range values pass through.
NormPoint normalize(const LocalPoint& p, double extent_m);

/// North-south ground size of a tile in meters.
double tile_extent_m(const TileId& id);

/// The projection frame of one tile: southwest origin plus extent.
struct TileFrame {
  GeoPoint origin;
  double extent_m = 300.0;

  NormPoint to_norm(const GeoPoint& p) const {
    return normalize(project_local(p, origin), extent_m);
  }
};

TileFrame tile_frame(const TileId& id);

/// Canonical "zoom_x_y" form.
std::string to_string(const TileId& id);

/// Parses "zoom_x_y"; throws Error on malformed input or out-of-grid indices.
TileId parse_tile_id(std::string_view s);

bool is_valid(const TileId& id);

}  // namespace geotile
