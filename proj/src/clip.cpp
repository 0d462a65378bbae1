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

#include "geotile/osm_ingest.hpp"

namespace geotile {

namespace {

constexpr double kMinArea = 1e-12;

bool inside_unit(const NormPoint& p) { return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0; }

NormPoint clamp_unit(NormPoint p) { return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)}; }

double ring_area(const Ring& r) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) a += r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
  return 0.5 * a;
}

// One Sutherland-Hodgman pass against the half-plane coord(axis) <= / >= bound.
std::vector<NormPoint> clip_half_plane(const std::vector<NormPoint>& in, int axis, double bound, bool keep_below) {
  std::vector<NormPoint> out;
  if (in.empty()) return out;
  auto coord = [axis](const NormPoint& p) { return axis == 0 ? p.x : p.y; };
  auto inside = [&](const NormPoint& p) { return keep_below ? coord(p) <= bound : coord(p) >= bound; };
  auto cross = [&](const NormPoint& a, const NormPoint& b) {
    const double t = (bound - coord(a)) / (coord(b) - coord(a));
    NormPoint p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    (axis == 0 ? p.x : p.y) = bound;
    return p;
  };
  NormPoint prev = in.back();
  bool prev_in = inside(prev);
  for (const NormPoint& cur : in) {
    const bool cur_in = inside(cur);
    if (cur_in) {
      if (!prev_in) out.push_back(cross(prev, cur));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(cross(prev, cur));
    }
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

// Returns the clipped, closed ring, or an empty ring when nothing with
// positive area remains.
Ring clip_ring(const Ring& ring) {
  std::vector<NormPoint> pts(ring.begin(), ring.end());
  if (pts.size() >= 2 && pts.front() == pts.back()) pts.pop_back();
  pts = clip_half_plane(pts, 0, 0.0, false);
  pts = clip_half_plane(pts, 0, 1.0, true);
  pts = clip_half_plane(pts, 1, 0.0, false);
  pts = clip_half_plane(pts, 1, 1.0, true);

  Ring out;
  for (const auto& p : pts) {
    const NormPoint q = clamp_unit(p);
    if (out.empty() || !(out.back() == q)) out.push_back(q);
  }
  while (out.size() >= 2 && out.front() == out.back()) out.pop_back();
  if (out.size() < 3) return {};
  out.push_back(out.front());
  if (std::abs(ring_area(out)) < kMinArea) return {};
  return out;
}

// Liang-Barsky parametric clip of segment a->b; false when fully outside.
bool clip_segment(const NormPoint& a, const NormPoint& b, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x, 1.0 - a.x, a.y, 1.0 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
  }
  return true;
}

double polyline_length(const std::vector<NormPoint>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  return len;
}

std::vector<Polyline> clip_polyline(const Polyline& line, ClipStats& stats) {
  std::vector<Polyline> out;
  std::vector<NormPoint> run;
  auto close_run = [&] {
    if (run.size() >= 2) {
      if (polyline_length(run) > 0.0)
        out.push_back({run});
      else
        ++stats.degenerate;
    }
    run.clear();
  };
  const auto& pts = line.points;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const NormPoint a = pts[i - 1], b = pts[i];
    double t0, t1;
    if (!clip_segment(a, b, t0, t1)) {
      close_run();
      continue;
    }
    const NormPoint p0 = t0 == 0.0 ? a : NormPoint{a.x + t0 * (b.x - a.x), a.y + t0 * (b.y - a.y)};
    const NormPoint p1 = t1 == 1.0 ? b : NormPoint{a.x + t1 * (b.x - a.x), a.y + t1 * (b.y - a.y)};
    if (t0 > 0.0) close_run();
    const NormPoint c0 = clamp_unit(p0), c1 = clamp_unit(p1);
    if (run.empty()) run.push_back(c0);
    if (!(run.back() == c1)) run.push_back(c1);
    if (t1 < 1.0) close_run();
  }
  close_run();
  return out;
}

std::optional<Polygon> clip_polygon(const Polygon& poly) {
  if (poly.rings.empty()) return std::nullopt;
  Ring outer = clip_ring(poly.rings.front());
  if (outer.empty()) return std::nullopt;
  Polygon out;
  out.rings.push_back(std::move(outer));
  for (std::size_t i = 1; i < poly.rings.size(); ++i) {
    Ring hole = clip_ring(poly.rings[i]);
    if (!hole.empty()) out.rings.push_back(std::move(hole));
  }
  return out;
}

struct GeometryClipper {
  ClipStats& stats;

  std::vector<Geometry> operator()(const Point& p) const {
    if (inside_unit(p.at)) return {p};
    return {};
  }

  std::vector<Geometry> operator()(const Polyline& l) const {
    std::vector<Geometry> out;
    for (auto& piece : clip_polyline(l, stats)) out.emplace_back(std::move(piece));
    return out;
  }

  std::vector<Geometry> operator()(const Polygon& p) const {
    if (auto clipped = clip_polygon(p)) return {std::move(*clipped)};
    ++stats.degenerate;
    return {};
  }

  std::vector<Geometry> operator()(const MultiPolygon& mp) const {
    MultiPolygon out;
    for (const auto& p : mp.polygons)
      if (auto clipped = clip_polygon(p)) out.polygons.push_back(std::move(*clipped));
    if (out.polygons.empty()) {
      ++stats.degenerate;
      return {};
    }
    return {std::move(out)};
  }
};

template <class From, class To, class F>
BasicGeometry<To> map_points(const BasicGeometry<From>& g, F&& f) {
  auto ring = [&](const std::vector<From>& r) {
    std::vector<To> out;
    out.reserve(r.size());
    for (const auto& p : r) out.push_back(f(p));
    return out;
  };
  auto polygon = [&](const BasicPolygon<From>& p) {
    BasicPolygon<To> out;
    for (const auto& r : p.rings) out.rings.push_back(ring(r));
    return out;
  };
  return std::visit(
      [&](const auto& v) -> BasicGeometry<To> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BasicPoint<From>>) {
          return BasicPoint<To>{f(v.at)};
        } else if constexpr (std::is_same_v<T, BasicPolyline<From>>) {
          return BasicPolyline<To>{ring(v.points)};
        } else if constexpr (std::is_same_v<T, BasicPolygon<From>>) {
          return polygon(v);
        } else {
          BasicMultiPolygon<To> out;
          for (const auto& p : v.polygons) out.polygons.push_back(polygon(p));
          return out;
        }
      },
      g);
}

}  // namespace

std::vector<Geometry> clip_geometry(const Geometry& g, ClipStats* stats) {
  ClipStats local;
  return std::visit(GeometryClipper{stats ? *stats : local}, g);
}

std::vector<Entity> clip_to_tile(const GeoEntity& e, const TileId& id, ClipStats* stats) {
  const TileFrame frame = tile_frame(id);
  const Geometry projected =
      map_points<GeoPoint, NormPoint>(e.geometry, [&](const GeoPoint& p) { return frame.to_norm(p); });
  std::vector<Entity> out;
  for (auto& g : clip_geometry(projected, stats)) {
    Entity piece;
    piece.id = e.id;
    piece.kind = e.kind;
    piece.tags = e.tags;
    piece.geometry = std::move(g);
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<TileId> candidate_tiles(const GeoEntity& e, int zoom) {
  GeoRect box{{180.0, 90.0}, {-180.0, -90.0}};
  auto extend = [&](const GeoPoint& p) {
    box.min.lon = std::min(box.min.lon, p.lon);
    box.min.lat = std::min(box.min.lat, p.lat);
    box.max.lon = std::max(box.max.lon, p.lon);
    box.max.lat = std::max(box.max.lat, p.lat);
  };
  map_points<GeoPoint, GeoPoint>(e.geometry, [&](const GeoPoint& p) {
    extend(p);
    return p;
  });
  // The normalized clip square differs from the Mercator cell by up to ~1%,
  // so neighbours within a small margin are candidates too.
  const double cell_deg = 360.0 / std::ldexp(1.0, zoom);
  const double margin = 0.03 * cell_deg;
  const TileId nw = tile_at({box.min.lon - margin, box.max.lat + margin}, zoom);
  const TileId se = tile_at({box.max.lon + margin, box.min.lat - margin}, zoom);
  std::vector<TileId> out;
  for (std::uint32_t y = nw.y; y <= se.y; ++y)
    for (std::uint32_t x = nw.x; x <= se.x; ++x) out.push_back({zoom, x, y});
  return out;
}

}  // namespace geotile
