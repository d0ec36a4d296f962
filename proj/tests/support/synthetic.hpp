#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "boundline/raster.hpp"
#include "boundline/vectornet.hpp"

namespace boundline::testing {

struct ParcelScene {
  ImageGrid image;
  /// True boundaries split at every parcel corner, in world meters.
  std::vector<Polyline> boundaries;
};

/// 512x512 orthoimage at 0.05 m with six axis-aligned colored parcels and
/// mild noise.
ParcelScene make_parcel_scene(std::uint32_t seed = 7);

/// Two-color image split vertically at `split` (pixel column).
ImageGrid make_split_image(int width, int height, int split, double gsd = 0.05);

/// Uniform-color image.
ImageGrid make_constant_image(int width, int height, double gsd = 0.05);

/// Random connected-or-not planar network: nodes at random points, edges
/// with random positive lengths (geometry is a straight segment, length is
/// overridden so metric and geometry may differ).
LineNetwork random_network(std::mt19937& rng, int max_nodes, double edge_probability);

/// Random polyline with n vertices in [-scale, scale]^2, no consecutive duplicates.
Polyline random_polyline(std::mt19937& rng, int n, double scale = 10.0);

}  // namespace boundline::testing
