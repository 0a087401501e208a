#include "mtnd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtnd {

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point p) { return std::hypot(p.x, p.y); }
double distance(Point a, Point b) { return norm(a - b); }
double squared_distance(Point a, Point b) {
  const Point d = a - b;
  return d.x * d.x + d.y * d.y;
}

void BoundingBox::expand(Point p) {
  min_x = std::min(min_x, p.x);
  min_y = std::min(min_y, p.y);
  max_x = std::max(max_x, p.x);
  max_y = std::max(max_y, p.y);
}

BoundingBox BoundingBox::inflated(double frac) const {
  const double side = std::max(max_x - min_x, max_y - min_y);
  const double pad = std::max(frac * side, 1e-6);
  return {min_x - pad, min_y - pad, max_x + pad, max_y + pad};
}

Polygon BoundingBox::as_polygon() const {
  return {{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}};
}

BoundingBox bounding_box(const std::vector<Point>& points) {
  BoundingBox box{std::numeric_limits<double>::max(),
                  std::numeric_limits<double>::max(),
                  std::numeric_limits<double>::lowest(),
                  std::numeric_limits<double>::lowest()};
  for (const Point& p : points) box.expand(p);
  return box;
}

bool point_in_polygon(Point p, const Polygon& poly) {
  if (poly.size() < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double polygon_area(const Polygon& poly) {
  double acc = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    acc += cross(poly[j], poly[i]);
  return 0.5 * std::abs(acc);
}

namespace {

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return true;
  return false;
}

}  // namespace

double distance_to_boundary(Point p, const Polygon& poly) {
  double best = std::numeric_limits<double>::max();
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    best = std::min(best, point_segment_distance(p, poly[j], poly[i]));
  return best;
}

double convex_polygon_distance(const Polygon& a, const Polygon& b) {
  if (a.empty() || b.empty()) return 0.0;
  for (const Point& p : a)
    if (point_in_polygon(p, b)) return 0.0;
  for (const Point& p : b)
    if (point_in_polygon(p, a)) return 0.0;
  for (std::size_t i = 0, i2 = a.size() - 1; i < a.size(); i2 = i++)
    for (std::size_t j = 0, j2 = b.size() - 1; j < b.size(); j2 = j++)
      if (segments_intersect(a[i2], a[i], b[j2], b[j])) return 0.0;
  double best = std::numeric_limits<double>::max();
  for (std::size_t i = 0, i2 = a.size() - 1; i < a.size(); i2 = i++)
    for (std::size_t j = 0, j2 = b.size() - 1; j < b.size(); j2 = j++) {
      best = std::min(best, point_segment_distance(a[i], b[j2], b[j]));
      best = std::min(best, point_segment_distance(b[j], a[i2], a[i]));
    }
  return best;
}

std::optional<double> ray_exit_distance(Point p, Point d, const Polygon& poly) {
  const double dn = norm(d);
  if (dn <= 0.0 || poly.size() < 3) return std::nullopt;
  const Point dir = (1.0 / dn) * d;
  double best = std::numeric_limits<double>::max();
  bool hit = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[j];
    const Point e = poly[i] - a;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-15) continue;
    const Point ap = a - p;
    const double t = cross(ap, e) / denom;   // along the ray
    const double s = cross(ap, dir) / denom; // along the edge
    if (t >= -1e-12 && s >= -1e-9 && s <= 1.0 + 1e-9) {
      best = std::min(best, std::max(t, 0.0));
      hit = true;
    }
  }
  if (!hit) return std::nullopt;
  return best;
}

Polygon clip_half_plane(const Polygon& poly, Point n, double c) {
  Polygon out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[j];
    const Point b = poly[i];
    const double da = dot(a, n) - c;
    const double db = dot(b, n) - c;
    if (da <= 0.0 && db <= 0.0) {
      out.push_back(b);
    } else if (da <= 0.0 && db > 0.0) {
      out.push_back(a + (da / (da - db)) * (b - a));
    } else if (da > 0.0 && db <= 0.0) {
      out.push_back(a + (da / (da - db)) * (b - a));
      out.push_back(b);
    }
  }
  return out;
}

bool VoronoiDiagram::adjacent(int i, int j) const {
  const auto& nb = neighbors[static_cast<std::size_t>(i)];
  return std::find(nb.begin(), nb.end(), j) != nb.end();
}

VoronoiDiagram bounded_voronoi(const std::vector<Point>& sites,
                               const BoundingBox& box) {
  const std::size_t n = sites.size();
  std::vector<Point> pts = sites;
  // Coincident sites would yield empty cells; nudge deterministically.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (squared_distance(pts[i], pts[j]) < 1e-24) {
        pts[i].x += 1e-9 * static_cast<double>(i + 1);
        pts[i].y += 1e-9 * static_cast<double>(i + 1);
      }

  VoronoiDiagram vd;
  vd.cells.resize(n);
  vd.neighbors.resize(n);
  const Polygon base = box.as_polygon();
  for (std::size_t i = 0; i < n; ++i) {
    Polygon cell = base;
    for (std::size_t j = 0; j < n && !cell.empty(); ++j) {
      if (j == i) continue;
      // Half-plane closer to site i than to site j: dot(q, n) <= c.
      const Point nrm = pts[j] - pts[i];
      const double c = 0.5 * (dot(pts[j], pts[j]) - dot(pts[i], pts[i]));
      cell = clip_half_plane(cell, nrm, c);
    }
    vd.cells[i] = std::move(cell);
  }
  // Adjacency: cells sharing a positive-length stretch of the (i,j)
  // bisector.  Test by clipping cell i with the bisector shifted by eps and
  // checking area loss; cheaper and robust: look for an edge of cell i lying
  // on the bisector line.
  for (std::size_t i = 0; i < n; ++i) {
    const Polygon& ci = vd.cells[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point nrm = pts[j] - pts[i];
      const double nn = norm(nrm);
      if (nn <= 0.0) continue;
      const double c = 0.5 * (dot(pts[j], pts[j]) - dot(pts[i], pts[i]));
      double shared = 0.0;
      for (std::size_t a = 0, b = ci.size() - 1; a < ci.size(); b = a++) {
        const double da = std::abs(dot(ci[b], nrm) - c) / nn;
        const double db = std::abs(dot(ci[a], nrm) - c) / nn;
        if (da < 1e-7 && db < 1e-7) shared += distance(ci[b], ci[a]);
      }
      if (shared > 1e-9) {
        vd.neighbors[i].push_back(static_cast<int>(j));
        vd.neighbors[j].push_back(static_cast<int>(i));
      }
    }
  }
  return vd;
}

std::vector<int> traverse_cells(Point a, Point b, const VoronoiDiagram& vd,
                                const std::vector<Point>& sites) {
  std::vector<int> seq;
  if (sites.empty()) return seq;
  // Clip to the diagram's bounding box so segments entering from outside
  // still record the cell they enter through.
  {
    std::vector<Point> verts;
    for (const Polygon& cell : vd.cells)
      for (const Point& p : cell) verts.push_back(p);
    if (!verts.empty()) {
      const BoundingBox bb = bounding_box(verts);
      double t0 = 0.0, t1 = 1.0;
      const Point d = b - a;
      const auto clip = [&](double p, double q) {
        if (std::abs(p) < 1e-15) return q >= -1e-12;
        const double r = q / p;
        if (p < 0.0) {
          if (r > t1) return false;
          if (r > t0) t0 = r;
        } else {
          if (r < t0) return false;
          if (r < t1) t1 = r;
        }
        return true;
      };
      if (!clip(-d.x, a.x - bb.min_x) || !clip(d.x, bb.max_x - a.x) ||
          !clip(-d.y, a.y - bb.min_y) || !clip(d.y, bb.max_y - a.y))
        return seq;
      b = a + t1 * d;
      a = a + t0 * d;
    }
  }
  const auto nearest = [&](Point p) {
    int best = 0;
    double bd = squared_distance(p, sites[0]);
    for (std::size_t i = 1; i < sites.size(); ++i) {
      const double d = squared_distance(p, sites[i]);
      if (d < bd - 1e-15) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  const auto in_box = [&](Point p) {
    for (const Polygon& cell : vd.cells)
      if (!cell.empty() && point_in_polygon(p, cell)) return true;
    // On-edge points fail point_in_polygon; accept via boundary proximity.
    for (const Polygon& cell : vd.cells)
      if (!cell.empty() && distance_to_boundary(p, cell) < 1e-9) return true;
    return false;
  };

  double t = 0.0;
  int cur = nearest(a);
  if (in_box(a)) seq.push_back(cur);
  const Point dir = b - a;
  const int guard = static_cast<int>(sites.size()) * 4 + 8;
  for (int iter = 0; iter < guard && t < 1.0; ++iter) {
    // First t' > t where some other site becomes strictly closer.
    double tn = 1.0 + 1.0;
    int next = -1;
    const Point p0 = a;
    for (std::size_t j = 0; j < sites.size(); ++j) {
      if (static_cast<int>(j) == cur) continue;
      // |p(t)-s_cur|^2 = |p(t)-s_j|^2  is linear in t.
      const Point sc = sites[static_cast<std::size_t>(cur)];
      const Point sj = sites[j];
      const double coef = 2.0 * dot(dir, sj - sc);
      const double rhs = dot(sj, sj) - dot(sc, sc) - 2.0 * dot(p0, sj - sc);
      if (std::abs(coef) < 1e-15) continue;
      const double tj = rhs / coef;
      if (tj > t + 1e-12 && tj <= 1.0) {
        // crossing only if j side beyond tj
        const Point probe = a + std::min(1.0, tj + 1e-9) * dir;
        if (squared_distance(probe, sj) <
            squared_distance(probe, sites[static_cast<std::size_t>(cur)])) {
          if (tj < tn || (std::abs(tj - tn) < 1e-12 &&
                          static_cast<int>(j) < next)) {
            tn = tj;
            next = static_cast<int>(j);
          }
        }
      }
    }
    if (next < 0) break;
    t = tn;
    cur = nearest(a + std::min(1.0, t + 1e-9) * dir);
    const Point here = a + t * dir;
    if (in_box(here) && (seq.empty() || seq.back() != cur)) seq.push_back(cur);
  }
  return seq;
}

}  // namespace mtnd
