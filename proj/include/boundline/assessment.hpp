#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boundline/geometry.hpp"
#include "boundline/raster.hpp"

namespace boundline {

struct GridSpec {
  GeoTransform transform;
  int width = 0;
  int height = 0;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Grid aligned to multiples of gsd covering `box` plus `pad` pixels per side.
GridSpec grid_for_bounds(const BBox& box, double gsd, int pad = 2);

struct BinaryRaster {
  GridSpec grid;
  std::vector<std::uint8_t> cells;

  std::uint8_t at(int col, int row) const { return cells[static_cast<std::size_t>(row) * grid.width + col]; }
  std::int64_t count() const;
};

/// 1-pixel Bresenham rasterization; vertices go to the pixel containing them.
BinaryRaster rasterize_lines(std::span<const Polyline> lines, const GridSpec& grid);

/// Euclidean distance in meters from each pixel center to the nearest set
/// pixel center. Throws Domain if the raster is empty.
std::vector<double> distance_transform(const BinaryRaster& reference);

struct AssessmentConfig {
  std::vector<double> distances{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

  void validate() const;
};

struct ConfusionCounts {
  double distance = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
};

struct DistanceBand {
  double lo = 0.0;  // exclusive except for the first band
  double hi = 0.0;
  std::int64_t tp = 0;
};

struct ConfusionSeries {
  std::vector<ConfusionCounts> counts;  // one per configured distance
  std::vector<DistanceBand> bands;
  std::int64_t delineated_pixels = 0;
  std::int64_t reference_pixels = 0;
  std::int64_t total_pixels = 0;

  std::int64_t matched() const;
  double band_percent(std::size_t band) const;
};

/// Throws Dimension if the rasters are not on the same grid.
ConfusionSeries confusion_series(const BinaryRaster& delineated, const BinaryRaster& reference,
                                 const AssessmentConfig& cfg = {});

/// Two decimals, trailing zeros dropped, at least one decimal kept.
std::string format_meters(double v);
/// Lower label of a band: "0.0" for the first, previous edge + 0.01 otherwise.
std::string band_low_label(const ConfusionSeries& series, std::size_t band);

std::string report_csv(const ConfusionSeries& series);
std::string report_text(const ConfusionSeries& series);

}  // namespace boundline
