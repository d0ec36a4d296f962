#include <algorithm>
#include <array>

#include "boundline/contours.hpp"
#include "boundline/error.hpp"

namespace boundline {

std::size_t BinaryBoundaryMap::count() const {
  return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), std::uint8_t{1}));
}

namespace {

// Ring order E, NE, N, NW, W, SW, S, SE; even entries are 4-neighbors.
constexpr std::array<std::array<int, 2>, 8> kRing = {
    {{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

struct Mask {
  int w, h;
  std::vector<std::uint8_t>& v;
  bool on(int x, int y) const {
    return x >= 0 && y >= 0 && x < w && y < h && v[static_cast<std::size_t>(y) * w + x];
  }
};

// A foreground pixel is simple when deleting it preserves 8-connectivity of
// the foreground and 4-connectivity of the background locally.
bool is_simple(const Mask& m, int x, int y) {
  std::array<bool, 8> fg{};
  for (int i = 0; i < 8; ++i) fg[i] = m.on(x + kRing[i][0], y + kRing[i][1]);

  // 8-components among foreground neighbors.
  std::array<int, 8> parent{};
  for (int i = 0; i < 8; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (int i = 0; i < 8; ++i) {
    if (!fg[i]) continue;
    const int j = (i + 1) % 8;
    if (fg[j]) unite(i, j);
    if (i % 2 == 0) {
      const int k = (i + 2) % 8;
      if (fg[k]) unite(i, k);
    }
  }
  int fg_components = 0;
  for (int i = 0; i < 8; ++i)
    if (fg[i] && find(i) == i) ++fg_components;
  if (fg_components != 1) return false;

  // 4-components of background touching a 4-neighbor of p.
  for (int i = 0; i < 8; ++i) parent[i] = i;
  for (int i = 0; i < 8; ++i) {
    const int j = (i + 1) % 8;
    if (!fg[i] && !fg[j]) unite(i, j);
  }
  std::array<bool, 8> counted{};
  int bg_components = 0;
  for (int i = 0; i < 8; i += 2) {
    if (fg[i]) continue;
    const int r = find(i);
    if (!counted[r]) {
      counted[r] = true;
      ++bg_components;
    }
  }
  return bg_components == 1;
}

int neighbor_count(const Mask& m, int x, int y) {
  int c = 0;
  for (const auto& d : kRing) c += m.on(x + d[0], y + d[1]);
  return c;
}

void zhang_suen(Mask m) {
  std::vector<int> remove;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      remove.clear();
      for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
          if (!m.on(x, y)) continue;
          // P2..P9 clockwise from north.
          const bool p2 = m.on(x, y - 1), p3 = m.on(x + 1, y - 1), p4 = m.on(x + 1, y),
                     p5 = m.on(x + 1, y + 1), p6 = m.on(x, y + 1), p7 = m.on(x - 1, y + 1),
                     p8 = m.on(x - 1, y), p9 = m.on(x - 1, y - 1);
          const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          if (b < 2 || b > 6) continue;
          const std::array<bool, 9> seq = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
          int a = 0;
          for (int i = 0; i < 8; ++i) a += !seq[i] && seq[i + 1];
          if (a != 1) continue;
          if (pass == 0 && ((p2 && p4 && p6) || (p4 && p6 && p8))) continue;
          if (pass == 1 && ((p2 && p4 && p8) || (p2 && p6 && p8))) continue;
          remove.push_back(y * m.w + x);
        }
      for (int i : remove) m.v[i] = 0;
      changed = changed || !remove.empty();
    }
  }
}

}  // namespace

void thin(BinaryBoundaryMap& map) {
  Mask m{map.width, map.height, map.boundary};
  zhang_suen(m);
  // Remove remaining redundant (staircase) pixels until the curves are 8-minimal.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < map.height; ++y)
      for (int x = 0; x < map.width; ++x) {
        if (!m.on(x, y) || neighbor_count(m, x, y) < 2) continue;
        if (is_simple(m, x, y)) {
          map.boundary[static_cast<std::size_t>(y) * map.width + x] = 0;
          changed = true;
        }
      }
  }
}

BinaryBoundaryMap binary_boundary_map(const BoundaryProbabilityMap& strength, double threshold) {
  BinaryBoundaryMap out;
  out.width = strength.width;
  out.height = strength.height;
  out.transform = strength.transform;
  out.boundary.resize(strength.values.size());
  for (std::size_t i = 0; i < strength.values.size(); ++i) {
    const float v = strength.values[i];
    out.boundary[i] = v > 0.f && v >= threshold ? 1 : 0;
  }
  thin(out);
  return out;
}

std::vector<Polyline> vectorize_boundaries(const BinaryBoundaryMap& bin) {
  const int w = bin.width, h = bin.height;
  auto on = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && bin.boundary[static_cast<std::size_t>(y) * w + x];
  };
  // Diagonal links are dropped when a shared 4-neighbor already connects them.
  auto linked = [&](int x, int y, int d) {
    const int dx = kRing[d][0], dy = kRing[d][1];
    if (!on(x + dx, y + dy)) return false;
    if (d % 2 == 0) return true;
    return !on(x + dx, y) && !on(x, y + dy);
  };
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);  // bit per ring direction
  std::vector<std::uint8_t> degree(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (on(x, y))
        for (int d = 0; d < 8; ++d) degree[y * w + x] += linked(x, y, d);

  auto mark = [&](int x, int y, int d) {
    visited[y * w + x] |= static_cast<std::uint8_t>(1u << d);
    const int nx = x + kRing[d][0], ny = y + kRing[d][1];
    visited[ny * w + nx] |= static_cast<std::uint8_t>(1u << ((d + 4) % 8));
  };
  auto free_link = [&](int x, int y) {
    for (int d = 0; d < 8; ++d)
      if (linked(x, y, d) && !(visited[y * w + x] & (1u << d))) return d;
    return -1;
  };
  auto world = [&](int x, int y) { return bin.transform.pixel_to_world(x, y); };

  std::vector<Polyline> out;
  auto trace = [&](int x, int y, int d, bool stop_at_start) {
    Polyline line;
    line.points.push_back(world(x, y));
    const int sx = x, sy = y;
    while (true) {
      mark(x, y, d);
      x += kRing[d][0];
      y += kRing[d][1];
      line.points.push_back(world(x, y));
      if (stop_at_start && x == sx && y == sy) break;
      if (!stop_at_start && degree[y * w + x] != 2) break;
      d = free_link(x, y);
      if (d < 0) break;
    }
    line.id = static_cast<std::int64_t>(out.size());
    out.push_back(std::move(line));
  };

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!on(x, y) || degree[y * w + x] == 2) continue;
      for (int d; (d = free_link(x, y)) >= 0;) trace(x, y, d, false);
    }
  // Closed loops without any junction or endpoint.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!on(x, y)) continue;
      const int d = free_link(x, y);
      if (d >= 0) trace(x, y, d, true);
    }
  return out;
}

ContourResult detect_contours(const LabGrid& lab, const CueParams& params) {
  params.validate();
  auto reduced = downscale(lab, params.max_dim);
  ContourResult result;
  result.downscale_factor = reduced.scale;
  auto mpb = multiscale_pb(reduced.grid, params);
  result.probability = params.spectral ? spectral_globalize(mpb, params) : std::move(mpb);
  const LabelMap regions = close_contours(result.probability);
  result.ucm = boundary_strength(regions, result.probability);
  result.binary = binary_boundary_map(result.ucm, params.threshold);
  result.outlines = vectorize_boundaries(result.binary);
  return result;
}

}  // namespace boundline
