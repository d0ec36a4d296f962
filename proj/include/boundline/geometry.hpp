#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace boundline {

/// A planar point in world meters.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
  friend constexpr auto operator<=>(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(b - a); }

/// Ordered vertex list. Invariant for well-formed lines: >= 2 vertices and no
/// two consecutive vertices equal.
struct Polyline {
  std::vector<Point> points;
  std::int64_t id = -1;

  bool closed() const { return points.size() > 2 && points.front() == points.back(); }
  friend bool operator==(const Polyline&, const Polyline&) = default;
};

double polyline_length(std::span<const Point> points);
inline double polyline_length(const Polyline& line) { return polyline_length(line.points); }

/// Euclidean distance from p to the closed segment [a, b].
double point_segment_distance(Point p, Point a, Point b);

/// Distance from p to the nearest point of the polyline.
double point_polyline_distance(Point p, std::span<const Point> line);

/// Removes consecutive duplicates in place.
void dedupe_consecutive(std::vector<Point>& points);

struct SegmentIntersection {
  // Parameters along the first and second segment; for collinear overlaps the
  // two ends of the overlap are reported as two intersections.
  double t = 0.0;
  double u = 0.0;
  Point point;
};

/// All intersection points between closed segments [a0,a1] and [b0,b1]. Returns
/// 0, 1 or 2 entries (2 only for collinear overlap). eps is an absolute
/// tolerance in world units used for touching and collinearity tests.
std::vector<SegmentIntersection> intersect_segments(Point a0, Point a1, Point b0, Point b1,
                                                    double eps = 1e-9);

struct BBox {
  double min_x = INFINITY, min_y = INFINITY, max_x = -INFINITY, max_y = -INFINITY;

  void expand(Point p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  bool empty() const { return min_x > max_x; }
  bool intersects(const BBox& o, double pad = 0.0) const {
    return !(o.min_x > max_x + pad || o.max_x < min_x - pad || o.min_y > max_y + pad ||
             o.max_y < min_y - pad);
  }
};

BBox bounds(std::span<const Polyline> lines);

}  // namespace boundline
