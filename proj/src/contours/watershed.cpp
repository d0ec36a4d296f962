#include <algorithm>
#include <cstdint>
#include <queue>
#include <unordered_map>

#include "boundline/contours.hpp"
#include "boundline/error.hpp"

namespace boundline {

namespace {

template <class F>
void for_each_neighbor4(int i, int w, int h, F&& f) {
  const int x = i % w, y = i / w;
  if (x + 1 < w) f(i + 1);
  if (x > 0) f(i - 1);
  if (y + 1 < h) f(i + w);
  if (y > 0) f(i - w);
}

}  // namespace

LabelMap close_contours(const BoundaryProbabilityMap& pb) {
  const int w = pb.width, h = pb.height;
  const int n = w * h;
  LabelMap out;
  out.width = w;
  out.height = h;
  out.transform = pb.transform;
  out.labels.assign(n, -1);

  // Regional minima: equal-valued plateaus with no strictly lower neighbor.
  std::vector<char> visited(n, 0);
  std::vector<int> plateau, stack;
  int next_label = 0;
  for (int s = 0; s < n; ++s) {
    if (visited[s]) continue;
    const float v = pb.values[s];
    plateau.clear();
    stack.assign(1, s);
    visited[s] = 1;
    bool minimum = true;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      plateau.push_back(p);
      for_each_neighbor4(p, w, h, [&](int q) {
        const float u = pb.values[q];
        if (u < v) minimum = false;
        else if (u == v && !visited[q]) {
          visited[q] = 1;
          stack.push_back(q);
        }
      });
    }
    if (minimum) {
      for (int p : plateau) out.labels[p] = next_label;
      ++next_label;
    }
  }

  // Priority flood; FIFO among equal levels keeps plateau splits geodesic.
  struct Entry {
    float level;
    std::uint64_t seq;
    int pixel;
    int label;
    bool operator>(const Entry& o) const {
      return level != o.level ? level > o.level : seq > o.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::uint64_t seq = 0;
  for (int p = 0; p < n; ++p) {
    if (out.labels[p] < 0) continue;
    for_each_neighbor4(p, w, h, [&](int q) {
      if (out.labels[q] < 0) queue.push({pb.values[q], seq++, q, out.labels[p]});
    });
  }
  while (!queue.empty()) {
    const Entry e = queue.top();
    queue.pop();
    if (out.labels[e.pixel] >= 0) continue;
    out.labels[e.pixel] = e.label;
    for_each_neighbor4(e.pixel, w, h, [&](int q) {
      if (out.labels[q] < 0) queue.push({std::max(e.level, pb.values[q]), seq++, q, e.label});
    });
  }
  relabel_dense(out);
  return out;
}

namespace {

struct Crack {
  int pixel;    // the pixel that carries the crack's level
  float value;  // boundary evidence across the crack
  int next = -1;
};

struct PairStats {
  double sum = 0.0;
  int count = 0;
  int head = -1;
  int tail = -1;
  double mean() const { return sum / count; }
};

}  // namespace

BoundaryProbabilityMap boundary_strength(const LabelMap& regions, const BoundaryProbabilityMap& pb) {
  if (regions.width != pb.width || regions.height != pb.height)
    throw Error(ErrorKind::Dimension, "region map and probability map sizes differ");
  const int w = pb.width, h = pb.height;
  const int n = w * h;
  const int nreg = regions.count;

  std::vector<Crack> cracks;
  std::vector<PairStats> pairs;
  std::vector<std::unordered_map<int, int>> adjacency(nreg);

  auto add_crack = [&](int p, int q) {
    const int a = regions.labels[p], b = regions.labels[q];
    if (a == b) return;
    const float vp = pb.values[p], vq = pb.values[q];
    const int carrier = vq > vp ? q : p;
    const int ci = static_cast<int>(cracks.size());
    cracks.push_back({carrier, std::max(vp, vq)});
    auto [it, inserted] = adjacency[a].try_emplace(b, static_cast<int>(pairs.size()));
    if (inserted) {
      pairs.emplace_back();
      adjacency[b][a] = it->second;
    }
    PairStats& ps = pairs[it->second];
    ps.sum += cracks.back().value;
    ++ps.count;
    if (ps.tail < 0) ps.head = ci;
    else cracks[ps.tail].next = ci;
    ps.tail = ci;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int p = y * w + x;
      if (x + 1 < w) add_crack(p, p + 1);
      if (y + 1 < h) add_crack(p, p + w);
    }

  struct Entry {
    double mean;
    std::uint64_t seq;
    int a, b;
    std::uint32_t va, vb;
    bool operator>(const Entry& o) const { return mean != o.mean ? mean > o.mean : seq > o.seq; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::vector<std::uint32_t> version(nreg, 0);
  std::vector<char> alive(nreg, 1);
  std::uint64_t seq = 0;

  auto push_neighbors = [&](int r) {
    std::vector<int> nbrs;
    nbrs.reserve(adjacency[r].size());
    for (const auto& kv : adjacency[r]) nbrs.push_back(kv.first);
    std::sort(nbrs.begin(), nbrs.end());
    for (int c : nbrs) {
      const PairStats& ps = pairs[adjacency[r].at(c)];
      const int a = std::min(r, c), b = std::max(r, c);
      queue.push({ps.mean(), seq++, a, b, version[a], version[b]});
    }
  };
  {
    std::vector<std::pair<int, int>> initial;
    for (int r = 0; r < nreg; ++r)
      for (const auto& kv : adjacency[r])
        if (kv.first > r) initial.emplace_back(r, kv.first);
    std::sort(initial.begin(), initial.end());
    for (auto [a, b] : initial) queue.push({pairs[adjacency[a].at(b)].mean(), seq++, a, b, 0, 0});
  }

  std::vector<float> crack_level(cracks.size(), 0.f);
  double level = 0.0;
  while (!queue.empty()) {
    const Entry e = queue.top();
    queue.pop();
    if (!alive[e.a] || !alive[e.b] || version[e.a] != e.va || version[e.b] != e.vb) continue;
    level = std::max(level, e.mean);
    const int pid = adjacency[e.a].at(e.b);
    for (int c = pairs[pid].head; c >= 0; c = cracks[c].next) crack_level[c] = static_cast<float>(level);

    int keep = e.a, gone = e.b;
    if (adjacency[keep].size() < adjacency[gone].size()) std::swap(keep, gone);
    adjacency[keep].erase(gone);
    adjacency[gone].erase(keep);
    for (const auto& [c, gp] : adjacency[gone]) {
      adjacency[c].erase(gone);
      auto it = adjacency[keep].find(c);
      if (it == adjacency[keep].end()) {
        adjacency[keep][c] = gp;
        adjacency[c][keep] = gp;
      } else {
        PairStats& into = pairs[it->second];
        PairStats& from = pairs[gp];
        into.sum += from.sum;
        into.count += from.count;
        if (from.head >= 0) {
          if (into.tail >= 0) cracks[into.tail].next = from.head;
          else into.head = from.head;
          into.tail = from.tail;
        }
      }
    }
    adjacency[gone].clear();
    alive[gone] = 0;
    ++version[keep];
    push_neighbors(keep);
  }

  BoundaryProbabilityMap out;
  out.width = w;
  out.height = h;
  out.transform = pb.transform;
  out.kind = PbKind::ucm;
  out.values.assign(n, 0.f);
  for (std::size_t c = 0; c < cracks.size(); ++c)
    out.values[cracks[c].pixel] = std::max(out.values[cracks[c].pixel], crack_level[c]);
  return out;
}

LabelMap partition_at(const BoundaryProbabilityMap& strength, double t) {
  const int w = strength.width, h = strength.height;
  LabelMap out;
  out.width = w;
  out.height = h;
  out.transform = strength.transform;
  out.labels.assign(static_cast<std::size_t>(w) * h, -2);
  auto is_boundary = [&](int i) { return strength.values[i] > 0.f && strength.values[i] >= t; };
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < w * h; ++s) {
    if (out.labels[s] != -2) continue;
    if (is_boundary(s)) {
      out.labels[s] = -1;
      continue;
    }
    out.labels[s] = next;
    stack.assign(1, s);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      for_each_neighbor4(p, w, h, [&](int q) {
        if (out.labels[q] == -2 && !is_boundary(q)) {
          out.labels[q] = next;
          stack.push_back(q);
        }
      });
    }
    ++next;
  }
  out.count = next;
  return out;
}

}  // namespace boundline
