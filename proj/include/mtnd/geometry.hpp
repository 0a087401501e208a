#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace mtnd {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

double dot(Point a, Point b);
double cross(Point a, Point b);
double norm(Point p);
double distance(Point a, Point b);
double squared_distance(Point a, Point b);

// Simple polygon, vertices in order, implicitly closed.
using Polygon = std::vector<Point>;

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  void expand(Point p);
  // Inflate by `frac` of the larger side length on every side.
  BoundingBox inflated(double frac) const;
  Polygon as_polygon() const;
};

BoundingBox bounding_box(const std::vector<Point>& points);

bool point_in_polygon(Point p, const Polygon& poly);
double polygon_area(const Polygon& poly);

// Distance from p to the closed boundary of poly (0 if p lies on it).
double distance_to_boundary(Point p, const Polygon& poly);

// Minimum distance between two convex polygons; 0 if they touch or overlap.
double convex_polygon_distance(const Polygon& a, const Polygon& b);

// Distance from p to the polygon boundary along direction d (unit not
// required).  Returns nullopt if the ray never hits an edge (p outside).
std::optional<double> ray_exit_distance(Point p, Point d, const Polygon& poly);

// Clip a convex polygon to the half-plane {q : dot(q, n) <= c}.
Polygon clip_half_plane(const Polygon& poly, Point n, double c);

// Bounded Voronoi diagram: one convex cell per site, clipped to `box`.
// Cells of coincident sites are resolved by a tiny deterministic
// perturbation.  `neighbors[i]` lists sites whose bisector contributes a
// positive-length edge to cell i (Delaunay neighbors after clipping).
struct VoronoiDiagram {
  std::vector<Polygon> cells;
  std::vector<std::vector<int>> neighbors;

  bool adjacent(int i, int j) const;
};

VoronoiDiagram bounded_voronoi(const std::vector<Point>& sites,
                               const BoundingBox& box);

// Intersections of segment [a,b] with the cells of a Voronoi diagram,
// reported as the ordered sequence of cell indices the segment traverses
// (consecutive duplicates removed).  Points outside every cell are skipped.
std::vector<int> traverse_cells(Point a, Point b, const VoronoiDiagram& vd,
                                const std::vector<Point>& sites);

}  // namespace mtnd
