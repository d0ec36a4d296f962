#pragma once

#include <optional>
#include <span>
#include <vector>

#include "boundline/assessment.hpp"
#include "boundline/vectornet.hpp"

namespace boundline::testing {

/// Minimum over all simple paths, by exhaustive DFS. nullopt if unreachable.
std::optional<double> brute_shortest_path(const LineNetwork& net, int source, int target);

/// Optimal Steiner tree length: minimum over every superset of the terminals
/// of the MST of the induced subgraph. nullopt if no subset connects them.
std::optional<double> brute_steiner(const LineNetwork& net, std::span<const int> terminals);

/// Per-pixel minimum distance over all set pixels (meters), all pairs.
std::vector<double> brute_distance(const BinaryRaster& r);

struct BruteCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};
std::vector<BruteCounts> brute_confusion(const BinaryRaster& delineated, const BinaryRaster& reference,
                                         std::span<const double> distances);

}  // namespace boundline::testing
