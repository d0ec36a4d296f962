#pragma once

#include <functional>
#include <string>
#include <vector>

#include "boundline/contours.hpp"
#include "boundline/superpixels.hpp"
#include "boundline/vectornet.hpp"

namespace boundline {

struct PipelineParams {
  CueParams cues;
  /// region_size 0 and target_count 0 mean about 1 m superpixels at the image GSD.
  SlicParams slic;
  double buffer_radius = 5.0;
  CleanOptions clean;
};

struct PipelineResult {
  ContourResult contours;
  LabelMap superpixels;
  std::vector<Polyline> slic_lines;
  std::vector<Polyline> filtered;
  std::vector<Polyline> cleaned;
  LineNetwork network;
  bool reference_empty = false;
};

/// Called with a stage name ("contours", "superpixels", "buffer", "clean",
/// "network") when that stage starts.
using ProgressFn = std::function<void(const std::string&)>;

/// Automatic network generation: contours, superpixels, buffer filter,
/// topology cleaning and network construction.
PipelineResult run_pipeline(const ImageGrid& image, const PipelineParams& params,
                            const ProgressFn& progress = {});

/// Throws Parameter on invalid settings; an unset SLIC region size is allowed.
void validate_pipeline_params(const PipelineParams& params);

/// SlicParams with the region size filled in for the image's GSD if unset.
SlicParams resolve_slic_params(SlicParams params, const GeoTransform& transform);

}  // namespace boundline
