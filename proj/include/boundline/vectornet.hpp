#pragma once

#include <span>
#include <vector>

#include "boundline/geometry.hpp"

namespace boundline {

struct BufferResult {
  std::vector<Polyline> lines;
  /// Set when there were no reference lines to buffer; lines is then empty.
  bool reference_empty = false;
};

/// Keeps the parts of `lines` lying within `radius` meters of some reference
/// line. Lines are split where they leave the buffer.
BufferResult buffer_filter(std::span<const Polyline> lines, std::span<const Polyline> reference,
                           double radius);

struct CleanOptions {
  double snap_tol = 0.05;
  double min_dangle = 0.5;
};

/// Snap, node, drop zero-length pieces and duplicates, prune short dangles.
/// The result is noded, contains no degree-2 breaks and is idempotent under a
/// second application.
std::vector<Polyline> clean_topology(std::span<const Polyline> lines, double snap_tol,
                                     double min_dangle);
inline std::vector<Polyline> clean_topology(std::span<const Polyline> lines,
                                            const CleanOptions& opt = {}) {
  return clean_topology(lines, opt.snap_tol, opt.min_dangle);
}

struct NetworkEdge {
  int id = 0;
  int node_a = 0;
  int node_b = 0;
  Polyline geometry;  // runs from node_a to node_b
  double length = 0.0;
};

/// Planar line network. Node ids index `nodes`; edge ids index `edges`.
struct LineNetwork {
  std::vector<Point> nodes;
  std::vector<NetworkEdge> edges;

  std::vector<int> degrees() const;
  /// Edge ids incident to each node (a self-loop appears twice).
  std::vector<std::vector<int>> incidence() const;
  double total_length() const;
};

/// Nodes at line ends and where three or more segments meet; maximal
/// degree-2 chains become single edges. Throws Topology error on a crossing
/// that is not a shared vertex.
LineNetwork build_network(std::span<const Polyline> lines);

}  // namespace boundline
