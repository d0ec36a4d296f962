#include "boundline/vectornet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "boundline/error.hpp"

namespace boundline {

namespace {

struct Segment {
  Point a;
  Point b;
};

/// Uniform-grid bucket index over segment bounding boxes.
class SegmentIndex {
 public:
  SegmentIndex(const std::vector<Segment>& segs, double cell_hint) : segs_(segs) {
    for (const auto& s : segs) {
      box_.expand(s.a);
      box_.expand(s.b);
    }
    if (segs.empty()) return;
    const double span = std::max(box_.max_x - box_.min_x, box_.max_y - box_.min_y);
    cell_ = std::max({cell_hint, span / 256.0, 1e-6});
    nx_ = std::max(1, static_cast<int>((box_.max_x - box_.min_x) / cell_) + 1);
    ny_ = std::max(1, static_cast<int>((box_.max_y - box_.min_y) / cell_) + 1);
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      BBox b;
      b.expand(segs[i].a);
      b.expand(segs[i].b);
      visit(b, 0.0, [&](std::vector<int>& cell) { cell.push_back(static_cast<int>(i)); });
    }
    stamp_.assign(segs.size(), 0);
  }

  /// Calls f(index) once for every segment whose cell range meets box+pad.
  template <class F>
  void query(const BBox& box, double pad, F&& f) {
    if (segs_.empty()) return;
    ++epoch_;
    visit(box, pad, [&](std::vector<int>& cell) {
      for (int i : cell) {
        if (stamp_[i] == epoch_) continue;
        stamp_[i] = epoch_;
        f(i);
      }
    });
  }

 private:
  template <class F>
  void visit(const BBox& b, double pad, F&& f) {
    const int x0 = clampx(static_cast<int>(std::floor((b.min_x - pad - box_.min_x) / cell_)));
    const int x1 = clampx(static_cast<int>(std::floor((b.max_x + pad - box_.min_x) / cell_)));
    const int y0 = clampy(static_cast<int>(std::floor((b.min_y - pad - box_.min_y) / cell_)));
    const int y1 = clampy(static_cast<int>(std::floor((b.max_y + pad - box_.min_y) / cell_)));
    if (b.min_x - pad > box_.max_x || b.max_x + pad < box_.min_x || b.min_y - pad > box_.max_y ||
        b.max_y + pad < box_.min_y)
      return;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) f(cells_[static_cast<std::size_t>(y) * nx_ + x]);
  }
  int clampx(int v) const { return std::clamp(v, 0, nx_ - 1); }
  int clampy(int v) const { return std::clamp(v, 0, ny_ - 1); }

  const std::vector<Segment>& segs_;
  BBox box_;
  double cell_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> cells_;
  std::vector<unsigned> stamp_;
  unsigned epoch_ = 0;
};

std::vector<Segment> explode(std::span<const Polyline> lines) {
  std::vector<Segment> segs;
  for (const auto& line : lines)
    for (std::size_t i = 1; i < line.points.size(); ++i)
      if (line.points[i - 1] != line.points[i]) segs.push_back({line.points[i - 1], line.points[i]});
  return segs;
}

BBox seg_box(const Segment& s) {
  BBox b;
  b.expand(s.a);
  b.expand(s.b);
  return b;
}

struct Interval {
  double lo;
  double hi;
};

// Parameter range t in [0,1] of p0 + t (p1 - p0) within distance r of [a, b].
// The capsule is convex, so the answer is a single interval.
std::optional<Interval> capsule_interval(Point p0, Point p1, Point a, Point b, double r) {
  const Point d = p1 - p0;
  double lo = INFINITY, hi = -INFINITY;
  auto add = [&](double l, double h) {
    if (l > h) return;
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  };
  auto disc = [&](Point c) {
    const Point f = p0 - c;
    const double qa = dot(d, d);
    const double qb = 2.0 * dot(d, f);
    const double qc = dot(f, f) - r * r;
    const double disc = qb * qb - 4 * qa * qc;
    if (disc < 0) return;
    const double sq = std::sqrt(disc);
    add((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa));
  };
  disc(a);
  disc(b);
  const Point ab = b - a;
  const double len = norm(ab);
  if (len > 0) {
    const Point u = (1.0 / len) * ab;
    const Point nrm{-u.y, u.x};
    double l = -INFINITY, h = INFINITY;
    // Constrain f0 + t f1 to [lo_v, hi_v].
    auto slab = [&](double f0, double f1, double lo_v, double hi_v) {
      if (f1 == 0.0) {
        if (f0 < lo_v || f0 > hi_v) {
          l = INFINITY;
          h = -INFINITY;
        }
        return;
      }
      double t0 = (lo_v - f0) / f1, t1 = (hi_v - f0) / f1;
      if (t0 > t1) std::swap(t0, t1);
      l = std::max(l, t0);
      h = std::min(h, t1);
    };
    slab(dot(p0 - a, u), dot(d, u), 0.0, len);
    slab(dot(p0 - a, nrm), dot(d, nrm), -r, r);
    add(l, h);
  }
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

Point lerp(Point a, Point b, double t) {
  if (t <= 0.0) return a;
  if (t >= 1.0) return b;
  return a + t * (b - a);
}

}  // namespace

BufferResult buffer_filter(std::span<const Polyline> lines, std::span<const Polyline> reference,
                           double radius) {
  if (!(radius >= 0.0)) throw Error(ErrorKind::Parameter, "buffer radius must be >= 0");
  BufferResult result;
  const auto ref = explode(reference);
  if (ref.empty()) {
    result.reference_empty = true;
    return result;
  }
  if (std::isinf(radius)) {
    result.lines.assign(lines.begin(), lines.end());
    return result;
  }
  constexpr double kEps = 1e-9;
  const double r = radius + kEps;
  SegmentIndex index(ref, std::max(radius, 1e-3));

  std::int64_t next_id = 0;
  for (const auto& line : lines) {
    Polyline current;
    auto flush = [&] {
      dedupe_consecutive(current.points);
      if (current.points.size() >= 2 && polyline_length(current) > kEps) {
        current.id = next_id++;
        result.lines.push_back(std::move(current));
      }
      current = Polyline{};
    };
    for (std::size_t k = 1; k < line.points.size(); ++k) {
      const Point p0 = line.points[k - 1], p1 = line.points[k];
      if (p0 == p1) continue;
      std::vector<Interval> kept;
      bool whole = false;
      index.query(seg_box({p0, p1}), r, [&](int i) {
        if (whole) return;
        const Segment& s = ref[i];
        if (point_segment_distance(p0, s.a, s.b) <= r && point_segment_distance(p1, s.a, s.b) <= r) {
          whole = true;
          return;
        }
        if (auto iv = capsule_interval(p0, p1, s.a, s.b, r)) kept.push_back(*iv);
      });
      if (whole) kept.assign(1, {0.0, 1.0});
      std::sort(kept.begin(), kept.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
      std::vector<Interval> merged;
      for (const auto& iv : kept) {
        if (!merged.empty() && iv.lo <= merged.back().hi + 1e-12) merged.back().hi = std::max(merged.back().hi, iv.hi);
        else merged.push_back(iv);
      }
      if (merged.empty()) {
        flush();
        continue;
      }
      for (const auto& iv : merged) {
        const bool continues = iv.lo <= 1e-12 && !current.points.empty() && current.points.back() == p0;
        if (!continues) {
          flush();
          current.points.push_back(lerp(p0, p1, iv.lo));
        }
        current.points.push_back(lerp(p0, p1, iv.hi));
        if (iv.hi < 1.0 - 1e-12) flush();
      }
    }
    flush();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Topology

namespace {

Point snap_point(Point p, double tol) {
  if (tol <= 0.0) return p;
  return {std::round(p.x / tol) * tol, std::round(p.y / tol) * tol};
}

Segment canonical(Segment s) {
  if (s.b < s.a) std::swap(s.a, s.b);
  return s;
}

bool seg_less(const Segment& x, const Segment& y) {
  return x.a != y.a ? x.a < y.a : x.b < y.b;
}

void dedupe_segments(std::vector<Segment>& segs) {
  for (auto& s : segs) s = canonical(s);
  std::sort(segs.begin(), segs.end(), seg_less);
  segs.erase(std::unique(segs.begin(), segs.end(),
                         [](const Segment& x, const Segment& y) { return x.a == y.a && x.b == y.b; }),
             segs.end());
}

// Splits every segment at its intersections with the others. Returns true if
// any segment was split.
bool node_segments(std::vector<Segment>& segs, double snap_tol) {
  SegmentIndex index(segs, 0.0);
  std::vector<std::vector<std::pair<double, Point>>> cuts(segs.size());
  bool split = false;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment& s = segs[i];
    index.query(seg_box(s), 1e-9, [&](int j) {
      if (static_cast<std::size_t>(j) <= i) return;
      const Segment& o = segs[j];
      for (const auto& hit : intersect_segments(s.a, s.b, o.a, o.b)) {
        const Point p = snap_point(hit.point, snap_tol);
        auto record = [&](std::size_t k, const Segment& seg) {
          if (p == seg.a || p == seg.b) return;
          const Point d = seg.b - seg.a;
          cuts[k].emplace_back(dot(p - seg.a, d) / dot(d, d), p);
        };
        record(i, s);
        record(static_cast<std::size_t>(j), o);
      }
    });
  }
  std::vector<Segment> out;
  out.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    auto& c = cuts[i];
    if (c.empty()) {
      out.push_back(segs[i]);
      continue;
    }
    split = true;
    std::sort(c.begin(), c.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    Point prev = segs[i].a;
    for (const auto& [t, p] : c) {
      if (p != prev) out.push_back({prev, p});
      prev = p;
    }
    if (prev != segs[i].b) out.push_back({prev, segs[i].b});
  }
  segs = std::move(out);
  return split;
}

/// Segment soup as a graph over exact point coordinates.
struct SegmentGraph {
  std::vector<Point> points;                    // sorted
  std::vector<std::pair<int, int>> edges;       // point indices
  std::vector<std::vector<int>> incident;       // edge ids per point

  explicit SegmentGraph(const std::vector<Segment>& segs) {
    for (const auto& s : segs) {
      points.push_back(s.a);
      points.push_back(s.b);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    incident.resize(points.size());
    for (const auto& s : segs) {
      const int a = index_of(s.a), b = index_of(s.b);
      incident[a].push_back(static_cast<int>(edges.size()));
      incident[b].push_back(static_cast<int>(edges.size()));
      edges.emplace_back(a, b);
    }
    // Deterministic walk order: neighbors by coordinate.
    for (std::size_t p = 0; p < points.size(); ++p) {
      auto& inc = incident[p];
      std::sort(inc.begin(), inc.end(), [&](int x, int y) {
        const int ox = other(x, static_cast<int>(p)), oy = other(y, static_cast<int>(p));
        return ox != oy ? ox < oy : x < y;
      });
    }
  }

  int index_of(Point p) const {
    return static_cast<int>(std::lower_bound(points.begin(), points.end(), p) - points.begin());
  }
  int other(int e, int p) const { return edges[e].first == p ? edges[e].second : edges[e].first; }
  int degree(int p) const { return static_cast<int>(incident[p].size()); }
};

struct Chain {
  std::vector<int> points;  // point indices; closed chains repeat the first
  bool cycle = false;       // no node along it
};

/// Maximal chains between points of degree != 2, plus isolated cycles.
std::vector<Chain> chains(const SegmentGraph& g) {
  std::vector<char> used(g.edges.size(), 0);
  std::vector<Chain> out;
  auto walk = [&](int start, int e, bool cycle) {
    Chain c;
    c.cycle = cycle;
    c.points.push_back(start);
    int p = start;
    while (true) {
      used[e] = 1;
      p = g.other(e, p);
      c.points.push_back(p);
      if (p == start && cycle) break;
      if (!cycle && g.degree(p) != 2) break;
      int next = -1;
      for (int f : g.incident[p])
        if (!used[f]) {
          next = f;
          break;
        }
      if (next < 0) break;
      e = next;
    }
    out.push_back(std::move(c));
  };
  for (int p = 0; p < static_cast<int>(g.points.size()); ++p) {
    if (g.degree(p) == 2) continue;
    for (int e : g.incident[p])
      if (!used[e]) walk(p, e, false);
  }
  // Remaining edges form rings; start each at its lowest point (points are
  // sorted) heading to the lower neighbor.
  for (int p = 0; p < static_cast<int>(g.points.size()); ++p)
    for (int e : g.incident[p])
      if (!used[e]) walk(p, e, true);
  return out;
}

std::vector<Point> chain_points(const SegmentGraph& g, const Chain& c) {
  std::vector<Point> pts;
  pts.reserve(c.points.size());
  for (int i : c.points) pts.push_back(g.points[i]);
  return pts;
}

// Orients an open chain from its smaller end; rings start at their lowest
// vertex and head to the smaller neighbor.
std::vector<Point> canonical_orientation(std::vector<Point> pts, bool ring) {
  if (ring && pts.size() > 2) {
    pts.pop_back();
    const auto it = std::min_element(pts.begin(), pts.end());
    std::rotate(pts.begin(), it, pts.end());
    if (pts.size() > 2 && pts.back() < pts[1]) std::reverse(pts.begin() + 1, pts.end());
    pts.push_back(pts.front());
    return pts;
  }
  if (pts.back() < pts.front() ||
      (pts.back() == pts.front() && pts.size() > 2 && pts[pts.size() - 2] < pts[1]))
    std::reverse(pts.begin(), pts.end());
  return pts;
}

}  // namespace

std::vector<Polyline> clean_topology(std::span<const Polyline> lines, double snap_tol,
                                     double min_dangle) {
  if (!(snap_tol >= 0.0)) throw Error(ErrorKind::Parameter, "snap tolerance must be >= 0");
  if (!(min_dangle >= 0.0)) throw Error(ErrorKind::Parameter, "minimum dangle length must be >= 0");

  std::vector<Segment> segs;
  for (const auto& line : lines) {
    std::vector<Point> pts;
    pts.reserve(line.points.size());
    for (Point p : line.points) pts.push_back(snap_point(p, snap_tol));
    dedupe_consecutive(pts);
    for (std::size_t i = 1; i < pts.size(); ++i) segs.push_back({pts[i - 1], pts[i]});
  }
  dedupe_segments(segs);
  for (int round = 0; round < 16; ++round) {
    if (!node_segments(segs, snap_tol)) break;
    dedupe_segments(segs);
  }

  // Prune short dangles to a fixpoint.
  while (true) {
    SegmentGraph g(segs);
    const auto cs = chains(g);
    std::vector<char> drop_edge(g.edges.size(), 0);
    bool dropped = false;
    for (const auto& c : cs) {
      if (c.cycle) continue;
      const bool dangling = g.degree(c.points.front()) == 1 || g.degree(c.points.back()) == 1;
      if (!dangling) continue;
      if (polyline_length(chain_points(g, c)) >= min_dangle) continue;
      for (std::size_t i = 1; i < c.points.size(); ++i) {
        const Segment s = canonical({g.points[c.points[i - 1]], g.points[c.points[i]]});
        const auto it = std::lower_bound(segs.begin(), segs.end(), s, seg_less);
        drop_edge[it - segs.begin()] = 1;
      }
      dropped = true;
    }
    if (!dropped) break;
    std::vector<Segment> kept;
    for (std::size_t i = 0; i < segs.size(); ++i)
      if (!drop_edge[i]) kept.push_back(segs[i]);
    segs = std::move(kept);
  }

  SegmentGraph g(segs);
  std::vector<std::vector<Point>> out_pts;
  for (const auto& c : chains(g)) out_pts.push_back(canonical_orientation(chain_points(g, c), c.cycle));
  std::sort(out_pts.begin(), out_pts.end());
  std::vector<Polyline> out;
  out.reserve(out_pts.size());
  for (auto& pts : out_pts) {
    Polyline line;
    line.points = std::move(pts);
    line.id = static_cast<std::int64_t>(out.size());
    out.push_back(std::move(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network

std::vector<int> LineNetwork::degrees() const {
  std::vector<int> deg(nodes.size(), 0);
  for (const auto& e : edges) {
    ++deg[e.node_a];
    ++deg[e.node_b];
  }
  return deg;
}

std::vector<std::vector<int>> LineNetwork::incidence() const {
  std::vector<std::vector<int>> inc(nodes.size());
  for (const auto& e : edges) {
    inc[e.node_a].push_back(e.id);
    inc[e.node_b].push_back(e.id);
  }
  return inc;
}

double LineNetwork::total_length() const {
  double s = 0.0;
  for (const auto& e : edges) s += e.length;
  return s;
}

LineNetwork build_network(std::span<const Polyline> lines) {
  std::vector<Segment> segs = explode(lines);
  dedupe_segments(segs);

  // Every contact between two segments must be a shared endpoint.
  {
    SegmentIndex index(segs, 0.0);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const Segment& s = segs[i];
      index.query(seg_box(s), 1e-9, [&](int j) {
        if (static_cast<std::size_t>(j) <= i) return;
        const Segment& o = segs[j];
        for (const auto& hit : intersect_segments(s.a, s.b, o.a, o.b)) {
          const bool shared = (hit.point == s.a || hit.point == s.b) && (hit.point == o.a || hit.point == o.b);
          if (!shared) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "un-noded crossing at (" << hit.point.x << ", " << hit.point.y << ")";
            throw Error(ErrorKind::Topology, msg.str());
          }
        }
      });
    }
  }

  SegmentGraph g(segs);
  const auto cs = chains(g);

  struct Pending {
    std::vector<Point> pts;
  };
  std::vector<Pending> pending;
  std::vector<Point> node_pts;
  for (const auto& c : cs) {
    auto pts = canonical_orientation(chain_points(g, c), c.cycle);
    node_pts.push_back(pts.front());
    node_pts.push_back(pts.back());
    pending.push_back({std::move(pts)});
  }
  std::sort(node_pts.begin(), node_pts.end());
  node_pts.erase(std::unique(node_pts.begin(), node_pts.end()), node_pts.end());

  LineNetwork net;
  net.nodes = node_pts;
  auto node_id = [&](Point p) {
    return static_cast<int>(std::lower_bound(node_pts.begin(), node_pts.end(), p) - node_pts.begin());
  };
  for (auto& pe : pending) {
    NetworkEdge e;
    e.node_a = node_id(pe.pts.front());
    e.node_b = node_id(pe.pts.back());
    e.geometry.points = std::move(pe.pts);
    e.length = polyline_length(e.geometry);
    net.edges.push_back(std::move(e));
  }
  std::sort(net.edges.begin(), net.edges.end(), [](const NetworkEdge& x, const NetworkEdge& y) {
    if (x.node_a != y.node_a) return x.node_a < y.node_a;
    if (x.node_b != y.node_b) return x.node_b < y.node_b;
    return x.geometry.points < y.geometry.points;
  });
  for (std::size_t i = 0; i < net.edges.size(); ++i) {
    net.edges[i].id = static_cast<int>(i);
    net.edges[i].geometry.id = static_cast<std::int64_t>(i);
  }
  return net;
}

}  // namespace boundline
