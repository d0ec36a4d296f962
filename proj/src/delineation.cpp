#include "boundline/delineation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "boundline/error.hpp"

namespace boundline {

const char* to_string(TrafficLight color) noexcept {
  switch (color) {
    case TrafficLight::Red: return "red";
    case TrafficLight::Yellow: return "yellow";
    case TrafficLight::Green: return "green";
  }
  return "red";
}

TrafficLight parse_traffic_light(std::string_view name) {
  if (name == "red") return TrafficLight::Red;
  if (name == "yellow") return TrafficLight::Yellow;
  if (name == "green") return TrafficLight::Green;
  throw Error(ErrorKind::Format, "unknown color '" + std::string(name) + "'");
}

double sinuosity(std::span<const Point> points) {
  const double length = polyline_length(points);
  if (!(length > 0.0)) throw Error(ErrorKind::Domain, "sinuosity is undefined for a zero-length line");
  const double s = distance(points.front(), points.back()) / length;
  return std::min(s, 1.0);
}

TrafficLight classify_sinuosity(double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    std::ostringstream msg;
    msg << "sinuosity " << s << " outside [0, 1]";
    throw Error(ErrorKind::Domain, msg.str());
  }
  if (s <= 1.0 / 3.0) return TrafficLight::Red;
  if (s <= 2.0 / 3.0) return TrafficLight::Yellow;
  return TrafficLight::Green;
}

Polyline simplify_line(const Polyline& line, double tolerance) {
  if (!(tolerance >= 0.0)) throw Error(ErrorKind::Parameter, "simplification tolerance must be >= 0");
  const auto& pts = line.points;
  if (tolerance == 0.0 || pts.size() <= 2) return line;
  std::vector<char> keep(pts.size(), 0);
  keep.front() = keep.back() = 1;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, pts.size() - 1}};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t at = i;
    for (std::size_t k = i + 1; k < j; ++k) {
      const double d = point_segment_distance(pts[k], pts[i], pts[j]);
      if (d > worst) {
        worst = d;
        at = k;
      }
    }
    if (worst > tolerance) {
      keep[at] = 1;
      stack.emplace_back(at, j);
      stack.emplace_back(i, at);
    }
  }
  Polyline out;
  out.id = line.id;
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (keep[k]) out.points.push_back(pts[k]);
  return out;
}

namespace {

void check_node(const LineNetwork& net, int id) {
  if (id < 0 || id >= static_cast<int>(net.nodes.size()))
    throw Error(ErrorKind::Lookup, "unknown node id " + std::to_string(id));
}

struct ShortestPathTree {
  std::vector<double> dist;
  std::vector<int> via_edge;
};

ShortestPathTree dijkstra(const LineNetwork& net, const std::vector<std::vector<int>>& inc, int source) {
  const double inf = std::numeric_limits<double>::infinity();
  ShortestPathTree t{std::vector<double>(net.nodes.size(), inf), std::vector<int>(net.nodes.size(), -1)};
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  t.dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > t.dist[u]) continue;
    for (int e : inc[u]) {
      const auto& edge = net.edges[e];
      if (edge.node_a == edge.node_b) continue;
      const int v = edge.node_a == u ? edge.node_b : edge.node_a;
      const double nd = d + edge.length;
      if (nd < t.dist[v]) {
        t.dist[v] = nd;
        t.via_edge[v] = e;
        pq.emplace(nd, v);
      }
    }
  }
  return t;
}

NetworkPath trace(const LineNetwork& net, const ShortestPathTree& t, int source, int target) {
  NetworkPath path;
  path.length = t.dist[target];
  int v = target;
  path.nodes.push_back(v);
  while (v != source) {
    const int e = t.via_edge[v];
    path.edges.push_back(e);
    v = net.edges[e].node_a == v ? net.edges[e].node_b : net.edges[e].node_a;
    path.nodes.push_back(v);
  }
  std::reverse(path.nodes.begin(), path.nodes.end());
  std::reverse(path.edges.begin(), path.edges.end());
  return path;
}

// Concatenates edge geometries along a node sequence.
Polyline path_geometry(const LineNetwork& net, const std::vector<int>& nodes, const std::vector<int>& edges) {
  Polyline out;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = net.edges[edges[k]];
    std::vector<Point> pts = e.geometry.points;
    if (e.node_a != nodes[k]) std::reverse(pts.begin(), pts.end());
    if (!out.points.empty()) pts.erase(pts.begin());
    out.points.insert(out.points.end(), pts.begin(), pts.end());
  }
  return out;
}

void finish_scoring(CandidateLine& c) {
  c.length = 0.0;
  for (const auto& g : c.geometry) c.length += polyline_length(g);
  c.sinuosity = sinuosity(c.measured);
  c.color = classify_sinuosity(c.sinuosity);
}

}  // namespace

NetworkPath shortest_path(const LineNetwork& net, int source, int target) {
  check_node(net, source);
  check_node(net, target);
  const auto inc = net.incidence();
  const auto t = dijkstra(net, inc, source);
  if (std::isinf(t.dist[target]))
    throw Error(ErrorKind::NoPath, "no path between nodes " + std::to_string(source) + " and " +
                                       std::to_string(target));
  return trace(net, t, source, target);
}

void rescore(CandidateLine& candidate) { finish_scoring(candidate); }

CandidateLine connect_nodes(const LineNetwork& net, std::span<const int> terminals) {
  if (terminals.size() < 2) throw Error(ErrorKind::Parameter, "at least two terminal nodes are required");
  for (int id : terminals) check_node(net, id);
  for (std::size_t i = 0; i < terminals.size(); ++i)
    for (std::size_t j = i + 1; j < terminals.size(); ++j)
      if (terminals[i] == terminals[j])
        throw Error(ErrorKind::Parameter, "terminal node ids must be distinct (" +
                                              std::to_string(terminals[i]) + " repeated)");

  const auto inc = net.incidence();
  const std::size_t k = terminals.size();
  std::vector<ShortestPathTree> trees;
  trees.reserve(k);
  for (int t : terminals) trees.push_back(dijkstra(net, inc, t));

  std::string unreachable;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (std::isinf(trees[i].dist[terminals[j]])) {
        if (!unreachable.empty()) unreachable += ", ";
        unreachable += std::to_string(terminals[i]) + "-" + std::to_string(terminals[j]);
      }
  if (!unreachable.empty()) throw Error(ErrorKind::NoPath, "no path between nodes " + unreachable);

  CandidateLine c;
  c.terminals.assign(terminals.begin(), terminals.end());

  if (k == 2) {
    const auto path = trace(net, trees[0], terminals[0], terminals[1]);
    c.edges = path.edges;
    c.measured = path_geometry(net, path.nodes, path.edges);
    c.geometry = {c.measured};
    c.end_node = terminals[1];
    finish_scoring(c);
    return c;
  }

  // Prim over the terminal metric closure.
  std::vector<char> in_tree(k, 0);
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  std::vector<int> parent(k, -1);
  best[0] = 0.0;
  std::vector<char> chosen(net.edges.size(), 0);
  for (std::size_t round = 0; round < k; ++round) {
    std::size_t u = k;
    for (std::size_t i = 0; i < k; ++i)
      if (!in_tree[i] && (u == k || best[i] < best[u])) u = i;
    in_tree[u] = 1;
    if (parent[u] >= 0)
      for (int e : trace(net, trees[parent[u]], terminals[parent[u]], terminals[u]).edges) chosen[e] = 1;
    for (std::size_t v = 0; v < k; ++v)
      if (!in_tree[v] && trees[u].dist[terminals[v]] < best[v]) {
        best[v] = trees[u].dist[terminals[v]];
        parent[v] = static_cast<int>(u);
      }
  }

  // Kruskal over the union of expanded paths.
  std::vector<int> cand;
  for (std::size_t e = 0; e < chosen.size(); ++e)
    if (chosen[e]) cand.push_back(static_cast<int>(e));
  std::sort(cand.begin(), cand.end(), [&](int a, int b) {
    return net.edges[a].length != net.edges[b].length ? net.edges[a].length < net.edges[b].length : a < b;
  });
  std::vector<int> dsu(net.nodes.size());
  std::iota(dsu.begin(), dsu.end(), 0);
  std::function<int(int)> find = [&](int x) { return dsu[x] == x ? x : dsu[x] = find(dsu[x]); };
  std::vector<int> tree_edges;
  for (int e : cand) {
    const int a = find(net.edges[e].node_a), b = find(net.edges[e].node_b);
    if (a == b) continue;
    dsu[a] = b;
    tree_edges.push_back(e);
  }

  // Prune non-terminal leaves.
  std::vector<char> is_terminal(net.nodes.size(), 0);
  for (int t : terminals) is_terminal[t] = 1;
  std::vector<char> alive_edge(net.edges.size(), 0);
  std::vector<int> deg(net.nodes.size(), 0);
  for (int e : tree_edges) {
    alive_edge[e] = 1;
    ++deg[net.edges[e].node_a];
    ++deg[net.edges[e].node_b];
  }
  bool pruned = true;
  while (pruned) {
    pruned = false;
    for (int e : tree_edges) {
      if (!alive_edge[e]) continue;
      const int a = net.edges[e].node_a, b = net.edges[e].node_b;
      if ((deg[a] == 1 && !is_terminal[a]) || (deg[b] == 1 && !is_terminal[b])) {
        alive_edge[e] = 0;
        --deg[a];
        --deg[b];
        pruned = true;
      }
    }
  }
  for (int e : tree_edges)
    if (alive_edge[e]) c.edges.push_back(e);
  std::sort(c.edges.begin(), c.edges.end());

  // Tree adjacency and all terminal-to-terminal paths.
  std::vector<std::vector<int>> adj(net.nodes.size());
  for (int e : c.edges) {
    adj[net.edges[e].node_a].push_back(e);
    adj[net.edges[e].node_b].push_back(e);
  }
  auto tree_path = [&](int from, int to) {
    std::vector<int> via(net.nodes.size(), -2);
    std::vector<double> dist(net.nodes.size(), 0.0);
    std::vector<int> stack{from};
    via[from] = -1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int e : adj[u]) {
        const int v = net.edges[e].node_a == u ? net.edges[e].node_b : net.edges[e].node_a;
        if (via[v] != -2) continue;
        via[v] = e;
        dist[v] = dist[u] + net.edges[e].length;
        stack.push_back(v);
      }
    }
    NetworkPath p;
    p.length = dist[to];
    int v = to;
    p.nodes.push_back(v);
    while (v != from) {
      const int e = via[v];
      p.edges.push_back(e);
      v = net.edges[e].node_a == v ? net.edges[e].node_b : net.edges[e].node_a;
      p.nodes.push_back(v);
    }
    std::reverse(p.nodes.begin(), p.nodes.end());
    std::reverse(p.edges.begin(), p.edges.end());
    return p;
  };

  NetworkPath longest;
  longest.length = -1.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      auto p = tree_path(terminals[i], terminals[j]);
      if (p.length > longest.length) longest = std::move(p);
    }
  c.measured = path_geometry(net, longest.nodes, longest.edges);
  c.end_node = longest.nodes.back();

  if (longest.edges.size() == c.edges.size()) {
    c.geometry = {c.measured};
  } else {
    for (int e : c.edges) c.geometry.push_back(net.edges[e].geometry);
  }
  finish_scoring(c);
  return c;
}

// ---------------------------------------------------------------------------

DelineationSession::DelineationSession(LineNetwork network) : network_(std::move(network)) {}

CandidateLine& DelineationSession::require_candidate() {
  if (!candidate_) throw Error(ErrorKind::State, "no candidate line");
  return *candidate_;
}

const CandidateLine& DelineationSession::propose(std::span<const int> terminals, bool replace) {
  if (candidate_ && !replace) throw Error(ErrorKind::State, "a candidate line is already pending");
  CandidateLine c = connect_nodes(network_, terminals);
  std::string detail;
  for (int t : terminals) detail += (detail.empty() ? "" : ",") + std::to_string(t);
  history_.push_back({"candidate", detail});
  candidate_ = std::move(c);
  return *candidate_;
}

const CandidateLine& DelineationSession::simplify_candidate(double tolerance) {
  CandidateLine& c = require_candidate();
  if (!(tolerance >= 0.0)) throw Error(ErrorKind::Parameter, "simplification tolerance must be >= 0");
  if (tolerance > 0.0) {
    CandidateLine next = c;
    for (auto& g : next.geometry) g = simplify_line(g, tolerance);
    next.measured = simplify_line(next.measured, tolerance);
    next.simplified = true;
    finish_scoring(next);
    c = std::move(next);
  }
  std::ostringstream detail;
  detail << tolerance;
  history_.push_back({"simplify", detail.str()});
  return c;
}

const CandidateLine& DelineationSession::replace_candidate_geometry(const Polyline& line) {
  CandidateLine& c = require_candidate();
  Polyline g = line;
  dedupe_consecutive(g.points);
  for (const Point& p : g.points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw Error(ErrorKind::Parameter, "geometry has non-finite coordinates");
  if (g.points.size() < 2) throw Error(ErrorKind::Parameter, "geometry needs at least two distinct vertices");
  CandidateLine next = c;
  next.geometry = {g};
  next.measured = g;
  finish_scoring(next);
  c = std::move(next);
  history_.push_back({"edit", std::to_string(g.points.size()) + " vertices"});
  return c;
}

const AcceptedLine& DelineationSession::accept_candidate() {
  CandidateLine& c = require_candidate();
  AcceptedLine a;
  a.geometry = c.geometry;
  a.terminals = c.terminals;
  a.sinuosity = c.sinuosity;
  a.color = c.color;
  a.simplified = c.simplified;
  a.order = static_cast<int>(accepted_.size());
  suggested_next_ = c.end_node >= 0 ? c.end_node : c.terminals.back();
  accepted_.push_back(std::move(a));
  candidate_.reset();
  history_.push_back({"accept", std::to_string(accepted_.back().order)});
  return accepted_.back();
}

void DelineationSession::delete_candidate() {
  require_candidate();
  candidate_.reset();
  history_.push_back({"delete", ""});
}

void DelineationSession::restore(std::optional<CandidateLine> candidate, std::vector<AcceptedLine> accepted,
                                 std::optional<int> suggested_next, std::vector<HistoryEntry> history) {
  candidate_ = std::move(candidate);
  accepted_ = std::move(accepted);
  suggested_next_ = suggested_next;
  history_ = std::move(history);
}

}  // namespace boundline
