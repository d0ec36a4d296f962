#pragma once

#include <filesystem>
#include <vector>

#include "boundline/geometry.hpp"
#include "boundline/labels.hpp"
#include "boundline/raster.hpp"

namespace boundline {

struct SlicParams {
  /// Seed grid spacing in pixels. 0 means derive it from target_count.
  int region_size = 0;
  /// Desired number of superpixels; used when region_size is 0.
  int target_count = 0;
  double compactness = 10.0;
  int iterations = 10;
  /// Components smaller than this are absorbed. < 0 means S^2 / 4.
  int min_region_size = -1;

  void validate() const;
  int spacing(int width, int height) const;
  int min_size(int width, int height) const;
};

/// Region size giving superpixels about `edge_m` meters across at `gsd`.
int region_size_for_gsd(double gsd, double edge_m = 1.0);

/// Simple linear iterative clustering in (L, a, b, x, y). Connectivity is
/// enforced on the result.
LabelMap slic(const LabGrid& lab, const SlicParams& params);

/// Only the clustering rounds, without the connectivity post-step.
LabelMap slic_clusters(const LabGrid& lab, const SlicParams& params);

/// Merges 4-connected components smaller than min_region_size into their
/// largest neighbor; every output label is one 4-connected component.
LabelMap enforce_connectivity(const LabelMap& labels, int min_region_size);

/// Crack (pixel-edge) boundaries between differing labels as world polylines.
/// Shared boundaries appear once; polylines break where 3+ labels meet.
std::vector<Polyline> superpixel_outlines(const LabelMap& labels);

void write_label_png(const std::filesystem::path& path, const LabelMap& labels);

}  // namespace boundline
