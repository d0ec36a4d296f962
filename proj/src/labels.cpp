#include "boundline/labels.hpp"

#include <queue>

namespace boundline {

void relabel_dense(LabelMap& map) {
  std::vector<int> remap;
  int next = 0;
  for (int& l : map.labels) {
    if (l < 0) continue;
    if (static_cast<std::size_t>(l) >= remap.size()) remap.resize(l + 1, -1);
    if (remap[l] < 0) remap[l] = next++;
    l = remap[l];
  }
  map.count = next;
}

std::vector<int> component_counts(const LabelMap& map) {
  std::vector<int> counts(map.count, 0);
  std::vector<char> seen(map.labels.size(), 0);
  std::vector<int> stack;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * map.width + c;
      if (seen[i] || map.labels[i] < 0) continue;
      const int l = map.labels[i];
      ++counts[l];
      seen[i] = 1;
      stack.assign(1, static_cast<int>(i));
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int pc = p % map.width, pr = p / map.width;
        const int nb[4][2] = {{pc + 1, pr}, {pc - 1, pr}, {pc, pr + 1}, {pc, pr - 1}};
        for (auto& n : nb) {
          if (n[0] < 0 || n[1] < 0 || n[0] >= map.width || n[1] >= map.height) continue;
          const int q = n[1] * map.width + n[0];
          if (!seen[q] && map.labels[q] == l) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
  }
  return counts;
}

}  // namespace boundline
