#include "boundline/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "boundline/error.hpp"

namespace boundline {

namespace fs = std::filesystem;

Point GeoTransform::corner_to_world(double col, double row) const {
  return {origin_x + col * pixel_size_x + row * rotation_x,
          origin_y + col * rotation_y + row * pixel_size_y};
}

Point GeoTransform::pixel_to_world(double col, double row) const {
  return corner_to_world(col + 0.5, row + 0.5);
}

Point GeoTransform::world_to_pixel(Point world) const {
  const double det = determinant();
  if (det == 0.0 || !std::isfinite(det))
    throw Error(ErrorKind::Domain, "singular geotransform cannot be inverted");
  const double dx = world.x - origin_x;
  const double dy = world.y - origin_y;
  const double col = (pixel_size_y * dx - rotation_x * dy) / det;
  const double row = (-rotation_y * dx + pixel_size_x * dy) / det;
  return {col - 0.5, row - 0.5};
}

double GeoTransform::gsd_x() const { return std::hypot(pixel_size_x, rotation_y); }
double GeoTransform::gsd_y() const { return std::hypot(rotation_x, pixel_size_y); }

GeoTransform GeoTransform::scaled(double sx, double sy) const {
  GeoTransform t = *this;
  t.pixel_size_x *= sx;
  t.rotation_y *= sx;
  t.pixel_size_y *= sy;
  t.rotation_x *= sy;
  return t;
}

std::array<double, 6> GeoTransform::to_array() const {
  return {pixel_size_x, rotation_y, rotation_x, pixel_size_y, origin_x, origin_y};
}

GeoTransform GeoTransform::from_array(const std::array<double, 6>& v) {
  GeoTransform t;
  t.pixel_size_x = v[0];
  t.rotation_y = v[1];
  t.rotation_x = v[2];
  t.pixel_size_y = v[3];
  t.origin_x = v[4];
  t.origin_y = v[5];
  return t;
}

BBox world_extent(const GeoTransform& t, int width, int height) {
  BBox box;
  box.expand(t.corner_to_world(0, 0));
  box.expand(t.corner_to_world(width, 0));
  box.expand(t.corner_to_world(0, height));
  box.expand(t.corner_to_world(width, height));
  return box;
}

// ---------------------------------------------------------------------------
// World files

GeoTransform parse_world_file(const std::string& text) {
  std::istringstream in(text);
  std::array<double, 6> v{};
  std::string line;
  int n = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    if (n == 6)
      throw Error(ErrorKind::Format,
                  "world file line " + std::to_string(lineno) + ": unexpected extra value '" +
                      token + "'");
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(value))
      throw Error(ErrorKind::Format, "world file line " + std::to_string(lineno) +
                                         ": expected a number, got '" + token + "'");
    v[n++] = value;
  }
  if (n != 6)
    throw Error(ErrorKind::Format, "world file line " + std::to_string(lineno + 1) +
                                       ": expected 6 values, found " + std::to_string(n));
  GeoTransform t = GeoTransform::from_array(v);
  if (!(t.pixel_size_x > 0.0))
    throw Error(ErrorKind::Format, "world file line 1: pixel size x must be positive");
  if (t.pixel_size_y == 0.0)
    throw Error(ErrorKind::Format, "world file line 4: pixel size y must be nonzero");
  return t;
}

GeoTransform read_world_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "world file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_world_file(ss.str());
}

std::string format_world_file(const GeoTransform& t) {
  std::string out;
  char buf[64];
  for (double v : t.to_array()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out += buf;
  }
  return out;
}

void write_world_file(const fs::path& path, const GeoTransform& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write world file: " + path.string());
  out << format_world_file(t);
}

std::optional<fs::path> find_world_file(const fs::path& image_path) {
  const std::string ext = image_path.extension().string();
  std::vector<fs::path> candidates;
  if (ext.size() >= 3) {
    auto short_form = image_path;
    short_form.replace_extension(ext.substr(0, 2) + ext.back() + "w");
    candidates.push_back(short_form);
  }
  auto long_form = image_path;
  long_form += "w";
  candidates.push_back(long_form);
  auto wld = image_path;
  wld.replace_extension(".wld");
  candidates.push_back(wld);
  for (const auto& c : candidates)
    if (fs::is_regular_file(c)) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Image I/O

namespace {

bool has_extension(const fs::path& p, std::initializer_list<const char*> exts) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::any_of(exts.begin(), exts.end(), [&](const char* x) { return e == x; });
}

ImageGrid read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw Error(ErrorKind::Format, "cannot decode PNG " + path.string() + ": " + image.message);
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorKind::Format,
                "unsupported bit depth in " + path.string() + ": expected 8-bit samples");
  }
  image.format = PNG_FORMAT_RGB;
  ImageGrid grid;
  grid.width = static_cast<int>(image.width);
  grid.height = static_cast<int>(image.height);
  grid.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, grid.rgb.data(), 0, nullptr))
    throw Error(ErrorKind::Format, "cannot decode PNG " + path.string() + ": " + image.message);
  return grid;
}

ImageGrid read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "image not found: " + path.string());
  auto next_token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(c);
    }
    return tok;
  };
  if (next_token() != "P6") throw Error(ErrorKind::Format, "not a binary PPM (P6): " + path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw Error(ErrorKind::Format, "malformed PPM header: " + path.string());
  }
  if (maxval != 255)
    throw Error(ErrorKind::Format, "unsupported bit depth in " + path.string() +
                                       ": maxval " + std::to_string(maxval));
  if (w <= 0 || h <= 0) throw Error(ErrorKind::Format, "malformed PPM header: " + path.string());
  ImageGrid grid;
  grid.width = w;
  grid.height = h;
  grid.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(grid.rgb.data()), static_cast<std::streamsize>(grid.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(grid.rgb.size()))
    throw Error(ErrorKind::Format, "truncated PPM data: " + path.string());
  return grid;
}

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngWriteGuard() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

}  // namespace

ImageGrid load_image(const fs::path& image_path, const fs::path& worldfile_path) {
  if (!fs::exists(image_path)) throw Error(ErrorKind::Io, "image not found: " + image_path.string());
  if (!fs::exists(worldfile_path))
    throw Error(ErrorKind::Io, "world file not found: " + worldfile_path.string());
  ImageGrid grid = has_extension(image_path, {".ppm", ".pnm"}) ? read_ppm(image_path)
                                                               : read_png(image_path);
  if (grid.width < 2 || grid.height < 2)
    throw Error(ErrorKind::Format, "image must be at least 2x2 pixels, got " +
                                       std::to_string(grid.width) + "x" +
                                       std::to_string(grid.height));
  grid.transform = read_world_file(worldfile_path);
  return grid;
}

void write_png_rgb(const fs::path& path, const ImageGrid& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.rgb.data(), 0, nullptr))
    throw Error(ErrorKind::Io, "cannot write PNG " + path.string() + ": " + image.message);
}

void write_png_gray16(const fs::path& path, int width, int height,
                      const std::vector<std::uint16_t>& samples) {
  if (samples.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorKind::Dimension, "sample count does not match image size");
  PngWriteGuard g;
  g.file = std::fopen(path.c_str(), "wb");
  if (!g.file) throw Error(ErrorKind::Io, "cannot write PNG " + path.string());
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) throw Error(ErrorKind::Internal, "png_create_write_struct failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw Error(ErrorKind::Internal, "png_create_info_struct failed");

  // Big-endian rows, as the format requires.
  std::vector<png_byte> rows(static_cast<std::size_t>(width) * height * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rows[2 * i] = static_cast<png_byte>(samples[i] >> 8);
    rows[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
  }
  std::vector<png_bytep> row_ptrs(height);
  for (int r = 0; r < height; ++r) row_ptrs[r] = rows.data() + static_cast<std::size_t>(r) * width * 2;

  if (setjmp(png_jmpbuf(g.png))) throw Error(ErrorKind::Io, "cannot write PNG " + path.string());
  png_init_io(g.png, g.file);
  png_set_IHDR(g.png, g.info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  png_write_image(g.png, row_ptrs.data());
  png_write_end(g.png, nullptr);
}

void write_probability_png(const fs::path& path, const ScalarGrid& grid) {
  std::vector<std::uint16_t> samples(grid.values.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = std::clamp(static_cast<double>(grid.values[i]), 0.0, 1.0);
    samples[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  write_png_gray16(path, grid.width, grid.height, samples);
}

// ---------------------------------------------------------------------------
// Color

namespace {

struct SrgbLut {
  std::array<double, 256> linear{};
  SrgbLut() {
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      linear[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
  }
};

const SrgbLut& srgb_lut() {
  static const SrgbLut lut;
  return lut;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Lab srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const auto& lut = srgb_lut();
  const double r = lut.linear[r8], g = lut.linear[g8], b = lut.linear[b8];
  // sRGB primaries, D65 white.
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.00000);
  const double fz = lab_f(z / 1.08883);
  Lab out;
  out.l = static_cast<float>(std::clamp(116.0 * fy - 16.0, 0.0, 100.0));
  out.a = static_cast<float>(500.0 * (fx - fy));
  out.b = static_cast<float>(200.0 * (fy - fz));
  return out;
}

LabGrid rgb_to_lab(const ImageGrid& img) {
  LabGrid lab;
  lab.width = img.width;
  lab.height = img.height;
  lab.transform = img.transform;
  lab.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < lab.pixels.size(); ++i) {
    const std::uint8_t* p = img.rgb.data() + 3 * i;
    lab.pixels[i] = srgb_to_lab(p[0], p[1], p[2]);
  }
  return lab;
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

struct Tap {
  int src;
  double weight;
};

// Area-overlap weights of source cells [i, i+1) inside each output cell.
std::vector<std::vector<Tap>> box_taps(int src_len, int dst_len) {
  std::vector<std::vector<Tap>> taps(dst_len);
  const double f = static_cast<double>(src_len) / dst_len;
  for (int j = 0; j < dst_len; ++j) {
    const double lo = j * f;
    const double hi = (j + 1) * f;
    for (int i = static_cast<int>(std::floor(lo)); i < std::min(src_len, static_cast<int>(std::ceil(hi))); ++i) {
      const double w = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
      if (w > 1e-12) taps[j].push_back({i, w / f});
    }
  }
  return taps;
}

std::pair<int, int> reduced_size(int w, int h, int max_dim) {
  if (w >= h) {
    const int nh = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) * max_dim / w)));
    return {max_dim, nh};
  }
  const int nw = std::max(1, static_cast<int>(std::lround(static_cast<double>(w) * max_dim / h)));
  return {nw, max_dim};
}

// Separable box filter over `channels` interleaved double planes.
std::vector<double> box_resample(const std::vector<double>& src, int w, int h, int channels,
                                 int nw, int nh) {
  const auto xt = box_taps(w, nw);
  const auto yt = box_taps(h, nh);
  std::vector<double> tmp(static_cast<std::size_t>(nw) * h * channels, 0.0);
  for (int r = 0; r < h; ++r)
    for (int j = 0; j < nw; ++j)
      for (const Tap& t : xt[j])
        for (int c = 0; c < channels; ++c)
          tmp[(static_cast<std::size_t>(r) * nw + j) * channels + c] +=
              t.weight * src[(static_cast<std::size_t>(r) * w + t.src) * channels + c];
  std::vector<double> dst(static_cast<std::size_t>(nw) * nh * channels, 0.0);
  for (int i = 0; i < nh; ++i)
    for (const Tap& t : yt[i])
      for (int j = 0; j < nw; ++j)
        for (int c = 0; c < channels; ++c)
          dst[(static_cast<std::size_t>(i) * nw + j) * channels + c] +=
              t.weight * tmp[(static_cast<std::size_t>(t.src) * nw + j) * channels + c];
  return dst;
}

void check_max_dim(int max_dim) {
  if (max_dim < 2) throw Error(ErrorKind::Parameter, "max_dim must be at least 2");
}

}  // namespace

Downscaled<ImageGrid> downscale(const ImageGrid& grid, int max_dim) {
  check_max_dim(max_dim);
  if (std::max(grid.width, grid.height) <= max_dim) return {grid, 1.0};
  const auto [nw, nh] = reduced_size(grid.width, grid.height, max_dim);
  std::vector<double> src(grid.rgb.begin(), grid.rgb.end());
  const auto dst = box_resample(src, grid.width, grid.height, 3, nw, nh);
  ImageGrid out;
  out.width = nw;
  out.height = nh;
  out.rgb.resize(dst.size());
  for (std::size_t i = 0; i < dst.size(); ++i)
    out.rgb[i] = static_cast<std::uint8_t>(std::clamp(std::lround(dst[i]), 0L, 255L));
  out.transform = grid.transform.scaled(static_cast<double>(grid.width) / nw,
                                        static_cast<double>(grid.height) / nh);
  return {std::move(out), static_cast<double>(std::max(grid.width, grid.height)) / max_dim};
}

Downscaled<LabGrid> downscale(const LabGrid& grid, int max_dim) {
  check_max_dim(max_dim);
  if (std::max(grid.width, grid.height) <= max_dim) return {grid, 1.0};
  const auto [nw, nh] = reduced_size(grid.width, grid.height, max_dim);
  std::vector<double> src(grid.pixels.size() * 3);
  for (std::size_t i = 0; i < grid.pixels.size(); ++i) {
    src[3 * i] = grid.pixels[i].l;
    src[3 * i + 1] = grid.pixels[i].a;
    src[3 * i + 2] = grid.pixels[i].b;
  }
  const auto dst = box_resample(src, grid.width, grid.height, 3, nw, nh);
  LabGrid out;
  out.width = nw;
  out.height = nh;
  out.pixels.resize(static_cast<std::size_t>(nw) * nh);
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = {static_cast<float>(std::clamp(dst[3 * i], 0.0, 100.0)),
                     static_cast<float>(dst[3 * i + 1]), static_cast<float>(dst[3 * i + 2])};
  out.transform = grid.transform.scaled(static_cast<double>(grid.width) / nw,
                                        static_cast<double>(grid.height) / nh);
  return {std::move(out), static_cast<double>(std::max(grid.width, grid.height)) / max_dim};
}

Downscaled<ScalarGrid> downscale(const ScalarGrid& grid, int max_dim) {
  check_max_dim(max_dim);
  if (std::max(grid.width, grid.height) <= max_dim) return {grid, 1.0};
  const auto [nw, nh] = reduced_size(grid.width, grid.height, max_dim);
  std::vector<double> src(grid.values.begin(), grid.values.end());
  const auto dst = box_resample(src, grid.width, grid.height, 1, nw, nh);
  ScalarGrid out;
  out.width = nw;
  out.height = nh;
  out.values.assign(dst.begin(), dst.end());
  out.transform = grid.transform.scaled(static_cast<double>(grid.width) / nw,
                                        static_cast<double>(grid.height) / nh);
  return {std::move(out), static_cast<double>(std::max(grid.width, grid.height)) / max_dim};
}

ScalarGrid resample_bilinear(const ScalarGrid& grid, int width, int height,
                             const GeoTransform& target) {
  ScalarGrid out;
  out.width = width;
  out.height = height;
  out.transform = target;
  out.values.resize(static_cast<std::size_t>(width) * height);
  const double fx = static_cast<double>(grid.width) / width;
  const double fy = static_cast<double>(grid.height) / height;
  for (int r = 0; r < height; ++r) {
    const double sy = std::clamp((r + 0.5) * fy - 0.5, 0.0, grid.height - 1.0);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, grid.height - 1);
    const double wy = sy - y0;
    for (int c = 0; c < width; ++c) {
      const double sx = std::clamp((c + 0.5) * fx - 0.5, 0.0, grid.width - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, grid.width - 1);
      const double wx = sx - x0;
      const double top = (1 - wx) * grid.at(x0, y0) + wx * grid.at(x1, y0);
      const double bot = (1 - wx) * grid.at(x0, y1) + wx * grid.at(x1, y1);
      out.at(c, r) = static_cast<float>((1 - wy) * top + wy * bot);
    }
  }
  return out;
}

}  // namespace boundline
