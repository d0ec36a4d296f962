#include "boundline/pipeline.hpp"

#include "boundline/error.hpp"

namespace boundline {

SlicParams resolve_slic_params(SlicParams params, const GeoTransform& transform) {
  if (params.region_size == 0 && params.target_count == 0)
    params.region_size = region_size_for_gsd(transform.gsd());
  return params;
}

void validate_pipeline_params(const PipelineParams& params) {
  params.cues.validate();
  SlicParams probe = params.slic;
  if (probe.region_size == 0 && probe.target_count == 0) probe.region_size = 2;
  probe.validate();
  if (!(params.buffer_radius >= 0.0)) throw Error(ErrorKind::Parameter, "buffer radius must be >= 0");
  if (!(params.clean.snap_tol >= 0.0) || !(params.clean.min_dangle >= 0.0))
    throw Error(ErrorKind::Parameter, "clean tolerances must be >= 0");
}

PipelineResult run_pipeline(const ImageGrid& image, const PipelineParams& params, const ProgressFn& progress) {
  validate_pipeline_params(params);
  const SlicParams slic_params = resolve_slic_params(params.slic, image.transform);
  slic_params.validate();
  auto stage = [&](const char* name) {
    if (progress) progress(name);
  };

  PipelineResult r;
  const LabGrid lab = rgb_to_lab(image);
  stage("contours");
  r.contours = detect_contours(lab, params.cues);
  stage("superpixels");
  r.superpixels = slic(lab, slic_params);
  r.slic_lines = superpixel_outlines(r.superpixels);
  stage("buffer");
  auto buffered = buffer_filter(r.slic_lines, r.contours.outlines, params.buffer_radius);
  r.reference_empty = buffered.reference_empty;
  r.filtered = std::move(buffered.lines);
  stage("clean");
  r.cleaned = clean_topology(r.filtered, params.clean);
  stage("network");
  r.network = build_network(r.cleaned);
  return r;
}

}  // namespace boundline
