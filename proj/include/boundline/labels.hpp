#pragma once

#include <vector>

#include "boundline/raster.hpp"

namespace boundline {

/// Integer region labels partitioning a grid. Labels are dense in [0, count).
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  int count = 0;
  GeoTransform transform;

  int at(int col, int row) const { return labels[static_cast<std::size_t>(row) * width + col]; }
  int& at(int col, int row) { return labels[static_cast<std::size_t>(row) * width + col]; }
};

/// Renumbers labels in order of first appearance (raster order); updates count.
void relabel_dense(LabelMap& map);

/// Number of 4-connected components per label, indexed by label.
std::vector<int> component_counts(const LabelMap& map);

}  // namespace boundline
