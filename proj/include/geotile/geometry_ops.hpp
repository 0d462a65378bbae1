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

#include <cstdint>
#include <span>
#include <vector>

#include "geotile/geo_core.hpp"
#include "geotile/types.hpp"

namespace geotile {

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Default simplification tolerance in meters.
inline constexpr double kDefaultSimplifyEpsM = 0.5;
/// Minimum min-box side in meters.
inline constexpr double kMinBoxSideM = 1.5;

double point_segment_distance(const NormPoint& p, const NormPoint& a, const NormPoint& b);

/// Douglas-Peucker. Endpoints are kept; a point survives only if its distance
/// to the current chord exceeds `eps`. The output is a subsequence of the
/// input.
std::vector<NormPoint> douglas_peucker(std::span<const NormPoint> line, double eps);
Polyline douglas_peucker(const Polyline& line, double eps);

/// Simplifies a closed ring as the chain p0..pn (pn == p0). Returns the input
/// unchanged if simplification would leave fewer than 3 distinct points.
Ring simplify_ring(const Ring& ring, double eps);

/// Simplifies every polyline and ring of `g`; points pass through.
Geometry simplify(const Geometry& g, double eps);

/// Counter-clockwise hull without collinear points (Andrew's monotone chain).
/// All-identical input yields one point; collinear input yields its two
/// extremes.
std::vector<NormPoint> convex_hull(std::span<const NormPoint> points);

/// Every coordinate of a geometry; closing ring duplicates are included.
std::vector<NormPoint> geometry_points(const Geometry& g);

/// Approximate minimum-area oriented box: the hull is rotated in 10 degree
/// steps over [0, 180) and the smallest axis-aligned box is kept. Each side is
/// grown symmetrically to at least `min_side`. Points get a `min_side` square
/// with a rotation drawn from `seed`; collinear geometry gets a box aligned
/// with its principal segment.
MinBox min_area_bbox(const Geometry& g, std::uint64_t seed, double min_side = 0.005);

/// Same, starting from a point set.
MinBox min_area_bbox(std::span<const NormPoint> points, std::uint64_t seed, double min_side = 0.005);

double box_area(const MinBox& b);
/// Length of side i (corner i to corner i+1).
double box_side(const MinBox& b, int i);
NormPoint box_centre(const MinBox& b);

struct VisVertex {
  NormPoint p;
  std::uint32_t polygon = 0;
  std::uint32_t ring = 0;   // 0 = outer ring of its polygon
  std::uint32_t index = 0;  // position within the ring
};

struct VisibilityGraph {
  std::vector<VisVertex> vertices;
  std::vector<GraphEdge> edges;  // u < v, sorted

  /// Visibility edges joining two different rings; the rest join
  /// non-adjacent vertices of the same ring.
  bool is_cross_ring(const GraphEdge& e) const;
  std::size_t count(EdgeKind kind) const;
};

/// Vertex layout shared by both graph builders: rings in polygon order, outer
/// ring first, closing duplicates dropped. Throws GeometryError on unclosed or
/// undersized rings.
std::vector<VisVertex> visibility_vertices(const MultiPolygon& mp);

/// True iff the open segments ab and cd cross at a single point interior to
/// both. Touching at an endpoint or overlapping collinearly is not proper.
bool segments_properly_intersect(const NormPoint& a, const NormPoint& b, const NormPoint& c, const NormPoint& d);

/// Boundary edges reproduce ring adjacency. (u, v) gets a visibility edge iff
/// the two vertices are not ring-adjacent, are not coincident, and the segment
/// between them properly intersects no boundary edge. Accelerated with a
/// uniform grid over boundary edges.
VisibilityGraph visibility_edges(const MultiPolygon& mp);

/// O(V^2 E) reference of visibility_edges.
VisibilityGraph visibility_edges_bruteforce(const MultiPolygon& mp);

}  // namespace geotile
