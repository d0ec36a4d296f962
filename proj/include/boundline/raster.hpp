#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "boundline/geometry.hpp"

namespace boundline {

/// Six-parameter affine map between pixel space and planar world meters.
///
/// Pixel (col, row) covers [col, col+1) x [row, row+1); its center is at
/// (col + 0.5, row + 0.5). origin_x/origin_y is the outer corner of pixel
/// (0, 0). pixel_size_y is negative for north-up rasters.
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size_x = 1.0;
  double pixel_size_y = -1.0;
  double rotation_x = 0.0;  // world x change per row (ESRI "B")
  double rotation_y = 0.0;  // world y change per column (ESRI "D")

  /// World position of the center of pixel (col, row).
  Point pixel_to_world(double col, double row) const;
  /// World position of the pixel-lattice corner (col, row).
  Point corner_to_world(double col, double row) const;
  /// Inverse of pixel_to_world. Throws Domain error when singular.
  Point world_to_pixel(Point world) const;

  double determinant() const { return pixel_size_x * pixel_size_y - rotation_x * rotation_y; }
  /// Ground sample distance along columns, meters per pixel.
  double gsd_x() const;
  double gsd_y() const;
  double gsd() const { return gsd_x(); }

  /// Same world footprint with pixels scaled by (sx, sy).
  GeoTransform scaled(double sx, double sy) const;

  std::array<double, 6> to_array() const;  // A, D, B, E, C, F
  static GeoTransform from_array(const std::array<double, 6>& v);

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

/// 8-bit RGB orthoimage, row-major, interleaved.
struct ImageGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
  GeoTransform transform;

  std::uint8_t* pixel(int col, int row) {
    return rgb.data() + 3 * (static_cast<std::size_t>(row) * width + col);
  }
  const std::uint8_t* pixel(int col, int row) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(row) * width + col);
  }
};

struct Lab {
  float l = 0.f;
  float a = 0.f;
  float b = 0.f;
};

struct LabGrid {
  int width = 0;
  int height = 0;
  std::vector<Lab> pixels;
  GeoTransform transform;

  const Lab& at(int col, int row) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

/// Single-channel float raster sharing the georeferencing conventions above.
struct ScalarGrid {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  GeoTransform transform;

  float& at(int col, int row) { return values[static_cast<std::size_t>(row) * width + col]; }
  float at(int col, int row) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

/// World-space extent of a grid: {min_x, min_y, max_x, max_y} over its corners.
BBox world_extent(const GeoTransform& t, int width, int height);

GeoTransform parse_world_file(const std::string& text);
GeoTransform read_world_file(const std::filesystem::path& path);
std::string format_world_file(const GeoTransform& t);
void write_world_file(const std::filesystem::path& path, const GeoTransform& t);
/// Sidecar next to an image: ".pgw"-style, extension + "w", then ".wld".
std::optional<std::filesystem::path> find_world_file(const std::filesystem::path& image_path);

/// Loads an 8-bit RGB PNG or binary PPM (P6) with its ESRI world file.
ImageGrid load_image(const std::filesystem::path& image_path,
                     const std::filesystem::path& worldfile_path);

/// Writes an 8-bit RGB PNG (used for fixtures and previews).
void write_png_rgb(const std::filesystem::path& path, const ImageGrid& img);
/// Writes a 16-bit grayscale PNG, one sample per pixel.
void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& samples);
/// Scales [0,1] values to the full 16-bit range.
void write_probability_png(const std::filesystem::path& path, const ScalarGrid& grid);

Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
LabGrid rgb_to_lab(const ImageGrid& img);

constexpr int kDefaultMaxDim = 1000;

template <class Grid>
struct Downscaled {
  Grid grid;
  double scale = 1.0;  // original pixels per output pixel along the long axis
};

/// Box-filter reduction so that max(width, height) == max_dim. Identity when
/// the grid already fits. World extent is preserved.
Downscaled<ImageGrid> downscale(const ImageGrid& grid, int max_dim = kDefaultMaxDim);
Downscaled<LabGrid> downscale(const LabGrid& grid, int max_dim = kDefaultMaxDim);
Downscaled<ScalarGrid> downscale(const ScalarGrid& grid, int max_dim = kDefaultMaxDim);

/// Bilinear resampling of a scalar grid onto a target size covering the same
/// world extent.
ScalarGrid resample_bilinear(const ScalarGrid& grid, int width, int height,
                             const GeoTransform& target);

}  // namespace boundline
