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

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotile/geo_core.hpp"
#include "geotile/types.hpp"

namespace geotile {

// Tile Exchange Format: JSON lines, one tile per line.
//
//   {"id":"16_x_y","extent_m":<float>,"origin":[lon,lat],
//    "entities":[{"id":int,"kind":"node|way|relation","tags":[["k","v"],...],
//                 "geometry":{"type":"point|polyline|polygon|multipolygon","coords":...},
//                 "minbox":[8 floats],
//                 "visgraph":{"edges":[[i,j,"vis"|"bnd"],...]}}]}   <- visgraph optional
//
// Coordinates nest like GeoJSON: point [x,y]; polyline [[x,y],...]; polygon
// [ring,...] with the outer ring first; multipolygon [polygon,...]. Floats are
// written in shortest round-trip form, so parse(write(t)) == t bit for bit.

class TefError : public Error {
 public:
  TefError(std::size_t line, const std::string& path, const std::string& what);
  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }

 private:
  std::size_t line_;
  std::string path_;
};

std::string write_tef_line(const Tile& tile);
void write_tef(std::ostream& out, std::span<const Tile> tiles);

/// `line_no` is only used for error messages.
Tile parse_tef_line(std::string_view line, std::size_t line_no = 1);

/// Parses a whole stream. Blank lines are skipped; a repeated tile id is an
/// error.
std::vector<Tile> parse_tef(std::istream& in);

std::string_view to_string(EdgeKind kind);

}  // namespace geotile
