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

#include "geotile/geometry_ops.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "geotile/random.hpp"

namespace geotile {

namespace {

double cross(const NormPoint& o, const NormPoint& a, const NormPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double point_segment_distance(const NormPoint& p, const NormPoint& a, const NormPoint& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

std::vector<NormPoint> douglas_peucker(std::span<const NormPoint> line, double eps) {
  const std::size_t n = line.size();
  if (n <= 2) return {line.begin(), line.end()};
  std::vector<bool> keep(n, false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t at = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = point_segment_distance(line[i], line[lo], line[hi]);
      if (d > worst) {
        worst = d;
        at = i;
      }
    }
    if (at != lo && worst > eps) {
      keep[at] = true;
      stack.push_back({lo, at});
      stack.push_back({at, hi});
    }
  }
  std::vector<NormPoint> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(line[i]);
  return out;
}

Polyline douglas_peucker(const Polyline& line, double eps) { return {douglas_peucker(line.points, eps)}; }

Ring simplify_ring(const Ring& ring, double eps) {
  Ring out = douglas_peucker(ring, eps);
  if (out.size() < 4) return ring;
  return out;
}

Geometry simplify(const Geometry& g, double eps) {
  auto polygon = [eps](const Polygon& p) {
    Polygon out;
    for (const auto& r : p.rings) out.rings.push_back(simplify_ring(r, eps));
    return out;
  };
  return std::visit(
      [&](const auto& v) -> Geometry {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Point>) {
          return v;
        } else if constexpr (std::is_same_v<T, Polyline>) {
          return douglas_peucker(v, eps);
        } else if constexpr (std::is_same_v<T, Polygon>) {
          return polygon(v);
        } else {
          MultiPolygon out;
          for (const auto& p : v.polygons) out.polygons.push_back(polygon(p));
          return out;
        }
      },
      g);
}

std::vector<NormPoint> convex_hull(std::span<const NormPoint> points) {
  std::vector<NormPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const NormPoint& a, const NormPoint& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;

  std::vector<NormPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<NormPoint> geometry_points(const Geometry& g) {
  std::vector<NormPoint> out;
  auto polygon = [&](const Polygon& p) {
    for (const auto& r : p.rings) out.insert(out.end(), r.begin(), r.end());
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Point>) {
          out.push_back(v.at);
        } else if constexpr (std::is_same_v<T, Polyline>) {
          out = v.points;
        } else if constexpr (std::is_same_v<T, Polygon>) {
          polygon(v);
        } else {
          for (const auto& p : v.polygons) polygon(p);
        }
      },
      g);
  return out;
}

namespace {

// Box with the given half-extents around `centre` in a frame rotated by
// `angle`, grown to at least `min_side`, expressed in tile coordinates.
MinBox oriented_box(double angle, double min_u, double max_u, double min_v, double max_v, double min_side) {
  if (max_u - min_u < min_side) {
    const double c = 0.5 * (min_u + max_u);
    min_u = c - 0.5 * min_side;
    max_u = c + 0.5 * min_side;
  }
  if (max_v - min_v < min_side) {
    const double c = 0.5 * (min_v + max_v);
    min_v = c - 0.5 * min_side;
    max_v = c + 0.5 * min_side;
  }
  const double c = std::cos(angle), s = std::sin(angle);
  auto back = [&](double u, double v) { return NormPoint{u * c - v * s, u * s + v * c}; };
  return MinBox{{back(min_u, min_v), back(max_u, min_v), back(max_u, max_v), back(min_u, max_v)}};
}

}  // namespace

MinBox min_area_bbox(std::span<const NormPoint> points, std::uint64_t seed, double min_side) {
  if (points.empty()) throw GeometryError("min_area_bbox of an empty geometry");
  const std::vector<NormPoint> hull = convex_hull(points);

  if (hull.size() == 1) {
    Rng rng(seed);
    const double angle = rng.uniform() * kPi;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = hull[0].x * c + hull[0].y * s, v = -hull[0].x * s + hull[0].y * c;
    return oriented_box(angle, u, u, v, v, min_side);
  }

  auto extents = [&](double angle, double& min_u, double& max_u, double& min_v, double& max_v) {
    const double c = std::cos(angle), s = std::sin(angle);
    min_u = min_v = INFINITY;
    max_u = max_v = -INFINITY;
    for (const auto& p : hull) {
      const double u = p.x * c + p.y * s, v = -p.x * s + p.y * c;
      min_u = std::min(min_u, u);
      max_u = std::max(max_u, u);
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
    }
  };

  double best_angle = 0.0;
  if (hull.size() == 2) {
    best_angle = std::atan2(hull[1].y - hull[0].y, hull[1].x - hull[0].x);
  } else {
    double best_area = INFINITY;
    for (int step = 0; step < 18; ++step) {
      const double angle = step * 10.0 * kPi / 180.0;
      double min_u, max_u, min_v, max_v;
      extents(angle, min_u, max_u, min_v, max_v);
      const double area = (max_u - min_u) * (max_v - min_v);
      if (area < best_area) {
        best_area = area;
        best_angle = angle;
      }
    }
  }
  double min_u, max_u, min_v, max_v;
  extents(best_angle, min_u, max_u, min_v, max_v);
  return oriented_box(best_angle, min_u, max_u, min_v, max_v, min_side);
}

MinBox min_area_bbox(const Geometry& g, std::uint64_t seed, double min_side) {
  if (const auto* p = std::get_if<Point>(&g)) return min_area_bbox(std::span(&p->at, 1), seed, min_side);
  const auto pts = geometry_points(g);
  return min_area_bbox(pts, seed, min_side);
}

double box_side(const MinBox& b, int i) {
  const auto& p = b.corners[i % 4];
  const auto& q = b.corners[(i + 1) % 4];
  return std::hypot(q.x - p.x, q.y - p.y);
}

double box_area(const MinBox& b) { return box_side(b, 0) * box_side(b, 1); }

NormPoint box_centre(const MinBox& b) {
  NormPoint c;
  for (const auto& p : b.corners) {
    c.x += 0.25 * p.x;
    c.y += 0.25 * p.y;
  }
  return c;
}

}  // namespace geotile
