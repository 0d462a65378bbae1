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

#include <fmt/format.h>

#include "geotile/geometry_ops.hpp"

namespace geotile {

namespace {

int orient(const NormPoint& a, const NormPoint& b, const NormPoint& c) {
  const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return (v > 0.0) - (v < 0.0);
}

struct Segment {
  std::uint32_t a, b;
};

struct Layout {
  std::vector<VisVertex> vertices;
  std::vector<Segment> boundary;
  // ring_start[k] / ring_size[k] for the ring holding each vertex
  std::vector<std::uint32_t> ring_start, ring_size;
};

Layout build_layout(const MultiPolygon& mp) {
  Layout out;
  out.vertices = visibility_vertices(mp);
  const auto& vs = out.vertices;
  out.ring_start.resize(vs.size());
  out.ring_size.resize(vs.size());
  for (std::size_t i = 0; i < vs.size();) {
    std::size_t j = i;
    while (j < vs.size() && vs[j].polygon == vs[i].polygon && vs[j].ring == vs[i].ring) ++j;
    const auto n = static_cast<std::uint32_t>(j - i);
    for (std::size_t k = i; k < j; ++k) {
      out.ring_start[k] = static_cast<std::uint32_t>(i);
      out.ring_size[k] = n;
      const auto next = static_cast<std::uint32_t>(i + (k - i + 1) % n);
      out.boundary.push_back({static_cast<std::uint32_t>(k), next});
    }
    i = j;
  }
  return out;
}

bool ring_adjacent(const Layout& l, std::uint32_t u, std::uint32_t v) {
  if (l.ring_start[u] != l.ring_start[v]) return false;
  const std::uint32_t n = l.ring_size[u];
  const std::uint32_t d = v > u ? v - u : u - v;
  return d == 1 || d == n - 1;
}

bool candidate(const Layout& l, std::uint32_t u, std::uint32_t v) {
  return !ring_adjacent(l, u, v) && !(l.vertices[u].p == l.vertices[v].p);
}

std::vector<GraphEdge> boundary_edges(const Layout& l) {
  std::vector<GraphEdge> out;
  for (const auto& s : l.boundary) out.push_back({std::min(s.a, s.b), std::max(s.a, s.b), EdgeKind::boundary});
  return out;
}

VisibilityGraph finish(Layout&& l, std::vector<GraphEdge>&& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return {std::move(l.vertices), std::move(edges)};
}

// Uniform grid over boundary segments. A segment is registered in every cell
// its bounding box touches, so any crossing point of a query lies in a cell
// holding the crossed segment.
class SegmentGrid {
 public:
  SegmentGrid(const Layout& l) : l_(l) {
    min_x_ = min_y_ = INFINITY;
    double max_x = -INFINITY, max_y = -INFINITY;
    for (const auto& v : l.vertices) {
      min_x_ = std::min(min_x_, v.p.x);
      min_y_ = std::min(min_y_, v.p.y);
      max_x = std::max(max_x, v.p.x);
      max_y = std::max(max_y, v.p.y);
    }
    n_ = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(l.boundary.size()))), 1, 64);
    cw_ = std::max((max_x - min_x_) / n_, 1e-12);
    ch_ = std::max((max_y - min_y_) / n_, 1e-12);
    cells_.resize(static_cast<std::size_t>(n_) * n_);
    for (std::uint32_t s = 0; s < l.boundary.size(); ++s) {
      const auto& a = l.vertices[l.boundary[s].a].p;
      const auto& b = l.vertices[l.boundary[s].b].p;
      const int c0 = col(std::min(a.x, b.x) - pad_x()), c1 = col(std::max(a.x, b.x) + pad_x());
      const int r0 = row(std::min(a.y, b.y) - pad_y()), r1 = row(std::max(a.y, b.y) + pad_y());
      for (int c = c0; c <= c1; ++c)
        for (int r = r0; r <= r1; ++r) cells_[static_cast<std::size_t>(r) * n_ + c].push_back(s);
    }
    stamp_.assign(l.boundary.size(), 0);
  }

  bool blocked(std::uint32_t u, std::uint32_t v) {
    ++epoch_;
    const NormPoint& p = l_.vertices[u].p;
    const NormPoint& q = l_.vertices[v].p;
    const double lo_x = std::min(p.x, q.x), hi_x = std::max(p.x, q.x);
    const int c0 = col(lo_x - pad_x()), c1 = col(hi_x + pad_x());
    for (int c = c0; c <= c1; ++c) {
      // y-range of the query segment within this column
      const double x0 = std::max(lo_x, min_x_ + c * cw_), x1 = std::min(hi_x, min_x_ + (c + 1) * cw_);
      double y0, y1;
      if (q.x == p.x) {
        y0 = std::min(p.y, q.y);
        y1 = std::max(p.y, q.y);
      } else {
        const double t0 = (x0 - p.x) / (q.x - p.x), t1 = (x1 - p.x) / (q.x - p.x);
        const double ya = p.y + t0 * (q.y - p.y), yb = p.y + t1 * (q.y - p.y);
        y0 = std::min(ya, yb);
        y1 = std::max(ya, yb);
      }
      const int r0 = row(y0 - pad_y()), r1 = row(y1 + pad_y());
      for (int r = r0; r <= r1; ++r) {
        for (std::uint32_t s : cells_[static_cast<std::size_t>(r) * n_ + c]) {
          if (stamp_[s] == epoch_) continue;
          stamp_[s] = epoch_;
          const auto& seg = l_.boundary[s];
          if (segments_properly_intersect(p, q, l_.vertices[seg.a].p, l_.vertices[seg.b].p)) return true;
        }
      }
    }
    return false;
  }

 private:
  double pad_x() const { return cw_ * 1e-6; }
  double pad_y() const { return ch_ * 1e-6; }
  int col(double x) const { return std::clamp(static_cast<int>(std::floor((x - min_x_) / cw_)), 0, n_ - 1); }
  int row(double y) const { return std::clamp(static_cast<int>(std::floor((y - min_y_) / ch_)), 0, n_ - 1); }

  const Layout& l_;
  double min_x_, min_y_, cw_, ch_;
  int n_;
  std::vector<std::vector<std::uint32_t>> cells_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

}  // namespace

bool segments_properly_intersect(const NormPoint& a, const NormPoint& b, const NormPoint& c, const NormPoint& d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

std::vector<VisVertex> visibility_vertices(const MultiPolygon& mp) {
  std::vector<VisVertex> out;
  for (std::uint32_t pi = 0; pi < mp.polygons.size(); ++pi) {
    const auto& rings = mp.polygons[pi].rings;
    for (std::uint32_t ri = 0; ri < rings.size(); ++ri) {
      const Ring& r = rings[ri];
      if (r.size() < 4) throw GeometryError(fmt::format("polygon {} ring {} has {} points, need 4", pi, ri, r.size()));
      if (!(r.front() == r.back())) throw GeometryError(fmt::format("polygon {} ring {} is not closed", pi, ri));
      for (std::uint32_t k = 0; k + 1 < r.size(); ++k) out.push_back({r[k], pi, ri, k});
    }
  }
  return out;
}

bool VisibilityGraph::is_cross_ring(const GraphEdge& e) const {
  const auto& a = vertices.at(e.u);
  const auto& b = vertices.at(e.v);
  return a.polygon != b.polygon || a.ring != b.ring;
}

std::size_t VisibilityGraph::count(EdgeKind kind) const {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [kind](const GraphEdge& e) { return e.kind == kind; }));
}

VisibilityGraph visibility_edges_bruteforce(const MultiPolygon& mp) {
  Layout l = build_layout(mp);
  std::vector<GraphEdge> edges = boundary_edges(l);
  const auto n = static_cast<std::uint32_t>(l.vertices.size());
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = u + 1; v < n; ++v) {
      if (!candidate(l, u, v)) continue;
      bool hit = false;
      for (const auto& s : l.boundary) {
        if (segments_properly_intersect(l.vertices[u].p, l.vertices[v].p, l.vertices[s.a].p, l.vertices[s.b].p)) {
          hit = true;
          break;
        }
      }
      if (!hit) edges.push_back({u, v, EdgeKind::visibility});
    }
  }
  return finish(std::move(l), std::move(edges));
}

VisibilityGraph visibility_edges(const MultiPolygon& mp) {
  Layout l = build_layout(mp);
  std::vector<GraphEdge> edges = boundary_edges(l);
  SegmentGrid grid(l);
  const auto n = static_cast<std::uint32_t>(l.vertices.size());
  for (std::uint32_t u = 0; u < n; ++u)
    for (std::uint32_t v = u + 1; v < n; ++v)
      if (candidate(l, u, v) && !grid.blocked(u, v)) edges.push_back({u, v, EdgeKind::visibility});
  return finish(std::move(l), std::move(edges));
}

}  // namespace geotile
