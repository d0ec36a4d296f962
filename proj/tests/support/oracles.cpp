#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace boundline::testing {

std::optional<double> brute_shortest_path(const LineNetwork& net, int source, int target) {
  const auto inc = net.incidence();
  std::vector<char> on_path(net.nodes.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  auto dfs = [&](auto&& self, int u, double len) -> void {
    if (u == target) {
      best = std::min(best, len);
      return;
    }
    on_path[u] = 1;
    for (int e : inc[u]) {
      const auto& edge = net.edges[e];
      const int v = edge.node_a == u ? edge.node_b : edge.node_a;
      if (!on_path[v]) self(self, v, len + edge.length);
    }
    on_path[u] = 0;
  };
  dfs(dfs, source, 0.0);
  if (std::isinf(best)) return std::nullopt;
  return best;
}

std::optional<double> brute_steiner(const LineNetwork& net, std::span<const int> terminals) {
  const int n = static_cast<int>(net.nodes.size());
  std::vector<char> is_terminal(n, 0);
  for (int t : terminals) is_terminal[t] = 1;
  std::vector<int> others;
  for (int i = 0; i < n; ++i)
    if (!is_terminal[i]) others.push_back(i);
  const double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  for (unsigned mask = 0; mask < (1u << others.size()); ++mask) {
    std::vector<char> in(n, 0);
    for (int t : terminals) in[t] = 1;
    for (std::size_t k = 0; k < others.size(); ++k)
      if (mask & (1u << k)) in[others[k]] = 1;
    // Prim on the induced subgraph.
    std::vector<double> key(n, inf);
    std::vector<char> done(n, 0);
    key[terminals[0]] = 0.0;
    double total = 0.0;
    int members = 0, reached = 0;
    for (int i = 0; i < n; ++i) members += in[i];
    for (int round = 0; round < members; ++round) {
      int u = -1;
      for (int i = 0; i < n; ++i)
        if (in[i] && !done[i] && (u < 0 || key[i] < key[u])) u = i;
      if (u < 0 || std::isinf(key[u])) break;
      done[u] = 1;
      ++reached;
      total += key[u];
      for (const auto& e : net.edges) {
        if (e.node_a == e.node_b) continue;
        const int v = e.node_a == u ? e.node_b : (e.node_b == u ? e.node_a : -1);
        if (v >= 0 && in[v] && !done[v] && e.length < key[v]) key[v] = e.length;
      }
    }
    if (reached == members) best = std::min(best, total);
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

std::vector<double> brute_distance(const BinaryRaster& r) {
  const int w = r.grid.width, h = r.grid.height;
  const double gx = r.grid.transform.gsd_x(), gy = r.grid.transform.gsd_y();
  std::vector<double> d(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
          if (!r.at(u, v)) continue;
          const double dx = (x - u) * gx, dy = (y - v) * gy;
          d[static_cast<std::size_t>(y) * w + x] = std::min(d[static_cast<std::size_t>(y) * w + x], std::hypot(dx, dy));
        }
  return d;
}

std::vector<BruteCounts> brute_confusion(const BinaryRaster& delineated, const BinaryRaster& reference,
                                         std::span<const double> distances) {
  const auto to_ref = brute_distance(reference);
  const auto to_del = brute_distance(delineated);
  std::vector<BruteCounts> out;
  for (double d : distances) {
    BruteCounts c;
    for (std::size_t p = 0; p < reference.cells.size(); ++p) {
      const bool del = delineated.cells[p], ref = reference.cells[p];
      if (del && to_ref[p] <= d + 1e-9) ++c.tp;
      else if (del) ++c.fp;
      if (ref && to_del[p] > d + 1e-9) ++c.fn;
    }
    c.tn = static_cast<long long>(reference.cells.size()) - c.tp - c.fp - c.fn;
    out.push_back(c);
  }
  return out;
}

}  // namespace boundline::testing
