#include "boundline/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace boundline {

double polyline_length(std::span<const Point> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

double point_polyline_distance(Point p, std::span<const Point> line) {
  if (line.empty()) return INFINITY;
  if (line.size() == 1) return distance(p, line[0]);
  double best = INFINITY;
  for (std::size_t i = 1; i < line.size(); ++i)
    best = std::min(best, point_segment_distance(p, line[i - 1], line[i]));
  return best;
}

void dedupe_consecutive(std::vector<Point>& points) {
  points.erase(std::unique(points.begin(), points.end()), points.end());
}

std::vector<SegmentIntersection> intersect_segments(Point a0, Point a1, Point b0, Point b1,
                                                    double eps) {
  std::vector<SegmentIntersection> out;
  const Point r = a1 - a0;
  const Point s = b1 - b0;
  const double rlen = norm(r);
  const double slen = norm(s);
  if (rlen == 0.0 || slen == 0.0) return out;

  const double denom = cross(r, s);
  const Point qp = b0 - a0;

  // Perpendicular offset of b's line from a's line, in world units.
  const bool parallel = std::abs(denom) <= 1e-12 * rlen * slen;
  if (parallel) {
    if (std::abs(cross(r, qp)) / rlen > eps) return out;
    // Collinear: project b's endpoints onto a.
    const double r2 = dot(r, r);
    double t0 = dot(b0 - a0, r) / r2;
    double t1 = dot(b1 - a0, r) / r2;
    const bool flipped = t0 > t1;
    if (flipped) std::swap(t0, t1);
    const double lo = std::max(0.0, t0);
    const double hi = std::min(1.0, t1);
    const double teps = eps / rlen;
    if (lo > hi + teps) return out;
    auto param_on_b = [&](Point p) { return std::clamp(dot(p - b0, s) / dot(s, s), 0.0, 1.0); };
    auto emit = [&](double t) {
      Point p;
      if (t <= 0.0) p = a0;
      else if (t >= 1.0) p = a1;
      else p = a0 + t * r;
      // Prefer exact endpoint coordinates of b when they coincide.
      if (distance(p, b0) <= eps) p = b0;
      else if (distance(p, b1) <= eps) p = b1;
      out.push_back({std::clamp(t, 0.0, 1.0), param_on_b(p), p});
    };
    emit(lo);
    if (hi - lo > teps) emit(hi);
    return out;
  }

  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  const double teps = eps / rlen;
  const double ueps = eps / slen;
  if (t < -teps || t > 1.0 + teps || u < -ueps || u > 1.0 + ueps) return out;

  // Snap to existing endpoints so shared vertices stay bit-identical.
  Point p = a0 + std::clamp(t, 0.0, 1.0) * r;
  for (Point e : {a0, a1, b0, b1}) {
    if (distance(p, e) <= eps) {
      p = e;
      break;
    }
  }
  out.push_back({std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0), p});
  return out;
}

BBox bounds(std::span<const Polyline> lines) {
  BBox box;
  for (const auto& line : lines)
    for (Point p : line.points) box.expand(p);
  return box;
}

}  // namespace boundline
