#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "boundline/geometry.hpp"
#include "boundline/labels.hpp"
#include "boundline/raster.hpp"

namespace boundline {

enum class PbKind { mPb, sPb, gPb, ucm };

const char* to_string(PbKind kind) noexcept;

/// Per-pixel boundary probability in [0, 1].
struct BoundaryProbabilityMap : ScalarGrid {
  PbKind kind = PbKind::mPb;
};

/// 1 for boundary, 0 otherwise.
struct BinaryBoundaryMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> boundary;
  GeoTransform transform;

  bool at(int col, int row) const {
    return boundary[static_cast<std::size_t>(row) * width + col] != 0;
  }
  std::size_t count() const;
};

struct TextonMap {
  int width = 0;
  int height = 0;
  std::vector<int> ids;
  int count = 0;
};

enum class CueChannel { L = 0, A = 1, B = 2, Texture = 3 };
constexpr int kCueChannels = 4;

/// Parameters of the local and global boundary cues.
struct CueParams {
  int orientations = 8;
  std::vector<int> radii = {3, 6, 10};
  /// weights[channel][scale]; an empty vector for a channel means weight 1
  /// at every scale.
  std::array<std::vector<double>, kCueChannels> weights;
  int bins = 25;
  int textons = 32;
  double filter_sigma = 1.0;

  bool spectral = true;
  double mpb_weight = 1.0;
  double spb_weight = 1.0;
  int eigenvectors = 16;
  int spectral_max_dim = 250;
  int affinity_radius = 3;
  double affinity_rho = 0.1;

  int max_dim = kDefaultMaxDim;
  double threshold = 0.3;
  std::uint64_t seed = 0x5eed5eedULL;

  /// Throws Parameter error on violated invariants.
  void validate() const;
  double weight(CueChannel channel, std::size_t scale) const;
};

// ---- local cues ----------------------------------------------------------

/// Fixed filter bank on L followed by k-means into params.textons clusters.
TextonMap compute_textons(const LabGrid& lab, const CueParams& params);

/// Quantizes a scalar channel into `bins` equal-width bins over its range.
std::vector<int> quantize(const ScalarGrid& channel, int bins);

/// Half-disc chi-squared histogram difference. The disc's dividing diameter
/// runs along `orientation` (radians, x right / y down). Output in [0, 1].
ScalarGrid oriented_gradient(const ScalarGrid& channel, int radius, double orientation, int bins);
ScalarGrid oriented_gradient(const TextonMap& textons, int radius, double orientation);
/// Same on pre-quantized bin indices in [0, bins).
ScalarGrid oriented_gradient_bins(const std::vector<int>& bin_of_pixel, int width, int height,
                                  int bins, int radius, double orientation);

BoundaryProbabilityMap multiscale_pb(const LabGrid& lab, const CueParams& params);

// ---- global cue -----------------------------------------------------------

struct SpectralInfo {
  std::vector<double> eigenvalues;  // generalized eigenvalues, ascending, trivial one first
  int iterations = 0;
  int width = 0;
  int height = 0;
};

BoundaryProbabilityMap spectral_globalize(const BoundaryProbabilityMap& mpb,
                                          const CueParams& params,
                                          SpectralInfo* info = nullptr);

// ---- closure and hierarchy ----------------------------------------------

/// Watershed by flooding from the regional minima of pb. Total partition.
LabelMap close_contours(const BoundaryProbabilityMap& pb);

/// Greedy hierarchical merge giving each boundary pixel the level at which
/// its separating boundary disappears.
BoundaryProbabilityMap boundary_strength(const LabelMap& regions, const BoundaryProbabilityMap& pb);

/// 4-connected components of pixels whose strength is below t. Pixels at or
/// above t are boundary and get label -1; count is the number of regions.
LabelMap partition_at(const BoundaryProbabilityMap& strength, double t);

BinaryBoundaryMap binary_boundary_map(const BoundaryProbabilityMap& strength, double threshold);

/// Thins a boundary mask to 1-px curves preserving 8-connectivity.
void thin(BinaryBoundaryMap& map);

std::vector<Polyline> vectorize_boundaries(const BinaryBoundaryMap& bin);

// ---- pipeline -------------------------------------------------------------

struct ContourResult {
  BoundaryProbabilityMap probability;  // gPb (or mPb if spectral is off)
  BoundaryProbabilityMap ucm;
  BinaryBoundaryMap binary;
  std::vector<Polyline> outlines;
  double downscale_factor = 1.0;
};

/// Full contour stage: downscale to params.max_dim, Lab conversion done by the
/// caller, cues, optional globalization, closure, hierarchy, threshold,
/// vectorization.
ContourResult detect_contours(const LabGrid& lab, const CueParams& params);

}  // namespace boundline
