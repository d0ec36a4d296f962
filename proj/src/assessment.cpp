#include "boundline/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "boundline/error.hpp"

namespace boundline {

namespace {

constexpr double kDistanceSlack = 1e-9;

void set_pixel(BinaryRaster& r, int col, int row) {
  if (col < 0 || row < 0 || col >= r.grid.width || row >= r.grid.height) return;
  r.cells[static_cast<std::size_t>(row) * r.grid.width + col] = 1;
}

int to_index(double v) { return static_cast<int>(std::floor(v + 0.5 + 1e-9)); }

// Lower envelope of parabolas w (q - p)^2 + f(p), in place.
void edt_1d(std::vector<double>& f, double w, std::vector<int>& v, std::vector<double>& z,
            std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (std::isinf(f[q])) continue;
    while (k >= 0) {
      const int p = v[k];
      const double s = ((f[q] + w * q * q) - (f[p] + w * p * p)) / (2.0 * w * (q - p));
      if (s <= z[k]) --k;
      else break;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf : ((f[q] + w * q * q) - (f[v[k - 1]] + w * double(v[k - 1]) * v[k - 1])) /
                               (2.0 * w * (q - v[k - 1]));
    z[k + 1] = inf;
  }
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = w * d * d + f[v[j]];
  }
  f.swap(out);
}

}  // namespace

GridSpec grid_for_bounds(const BBox& box, double gsd, int pad) {
  if (!(gsd > 0.0)) throw Error(ErrorKind::Parameter, "gsd must be > 0");
  if (box.empty()) throw Error(ErrorKind::Domain, "cannot derive a grid from empty geometry");
  const double x0 = (std::floor(box.min_x / gsd) - pad) * gsd;
  const double y1 = (std::ceil(box.max_y / gsd) + pad) * gsd;
  const double x1 = (std::ceil(box.max_x / gsd) + pad) * gsd;
  const double y0 = (std::floor(box.min_y / gsd) - pad) * gsd;
  GridSpec g;
  g.transform.origin_x = x0;
  g.transform.origin_y = y1;
  g.transform.pixel_size_x = gsd;
  g.transform.pixel_size_y = -gsd;
  g.width = std::max(1, static_cast<int>(std::lround((x1 - x0) / gsd)));
  g.height = std::max(1, static_cast<int>(std::lround((y1 - y0) / gsd)));
  return g;
}

std::int64_t BinaryRaster::count() const {
  return std::count(cells.begin(), cells.end(), std::uint8_t{1});
}

BinaryRaster rasterize_lines(std::span<const Polyline> lines, const GridSpec& grid) {
  if (grid.width <= 0 || grid.height <= 0) throw Error(ErrorKind::Dimension, "grid must be non-empty");
  if (grid.transform.determinant() == 0.0) throw Error(ErrorKind::Domain, "grid transform is singular");
  BinaryRaster r{grid, std::vector<std::uint8_t>(static_cast<std::size_t>(grid.width) * grid.height, 0)};
  for (const auto& line : lines) {
    if (line.points.size() == 1) {
      const Point p = grid.transform.world_to_pixel(line.points[0]);
      set_pixel(r, to_index(p.x), to_index(p.y));
    }
    for (std::size_t i = 1; i < line.points.size(); ++i) {
      const Point a = grid.transform.world_to_pixel(line.points[i - 1]);
      const Point b = grid.transform.world_to_pixel(line.points[i]);
      int x0 = to_index(a.x), y0 = to_index(a.y);
      const int x1 = to_index(b.x), y1 = to_index(b.y);
      if (std::max(x0, x1) < 0 || std::max(y0, y1) < 0 || std::min(x0, x1) >= grid.width ||
          std::min(y0, y1) >= grid.height)
        continue;
      const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
      const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
      int err = dx + dy;
      while (true) {
        set_pixel(r, x0, y0);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
          err += dy;
          x0 += sx;
        }
        if (e2 <= dx) {
          err += dx;
          y0 += sy;
        }
      }
    }
  }
  return r;
}

std::vector<double> distance_transform(const BinaryRaster& reference) {
  const int w = reference.grid.width, h = reference.grid.height;
  if (reference.count() == 0) throw Error(ErrorKind::Domain, "distance transform of an empty reference raster");
  const double gx = reference.grid.transform.gsd_x();
  const double gy = reference.grid.transform.gsd_y();
  const double wy = (gy / gx) * (gy / gx);
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> d(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = reference.cells[i] ? 0.0 : inf;

  const int n = std::max(w, h);
  std::vector<int> v(n + 1);
  std::vector<double> z(n + 2), out(n), f;
  // Columns first (y spacing), then rows.
  for (int x = 0; x < w; ++x) {
    f.assign(h, inf);
    out.assign(h, inf);
    for (int y = 0; y < h; ++y) f[y] = d[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, wy, v, z, out);
    for (int y = 0; y < h; ++y) d[static_cast<std::size_t>(y) * w + x] = f[y];
  }
  for (int y = 0; y < h; ++y) {
    f.assign(d.begin() + static_cast<std::ptrdiff_t>(y) * w, d.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
    out.assign(w, inf);
    edt_1d(f, 1.0, v, z, out);
    std::copy(f.begin(), f.end(), d.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  for (double& x : d) x = std::sqrt(x) * gx;
  return d;
}

void AssessmentConfig::validate() const {
  if (distances.empty()) throw Error(ErrorKind::Parameter, "at least one buffer distance is required");
  if (!(distances.front() >= 0.0)) throw Error(ErrorKind::Parameter, "buffer distances must be >= 0");
  for (std::size_t i = 1; i < distances.size(); ++i)
    if (!(distances[i] > distances[i - 1]))
      throw Error(ErrorKind::Parameter, "buffer distances must be strictly increasing");
}

std::int64_t ConfusionSeries::matched() const {
  std::int64_t s = 0;
  for (const auto& b : bands) s += b.tp;
  return s;
}

double ConfusionSeries::band_percent(std::size_t band) const {
  const auto m = matched();
  return m == 0 ? 0.0 : 100.0 * static_cast<double>(bands[band].tp) / static_cast<double>(m);
}

ConfusionSeries confusion_series(const BinaryRaster& delineated, const BinaryRaster& reference,
                                 const AssessmentConfig& cfg) {
  cfg.validate();
  if (!(delineated.grid == reference.grid))
    throw Error(ErrorKind::Dimension, "delineated and reference rasters are on different grids");

  ConfusionSeries s;
  s.total_pixels = static_cast<std::int64_t>(reference.cells.size());
  s.delineated_pixels = delineated.count();
  s.reference_pixels = reference.count();

  const std::size_t n = reference.cells.size();
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> to_ref = s.reference_pixels ? distance_transform(reference) : std::vector<double>(n, inf);
  const std::vector<double> to_del = s.delineated_pixels ? distance_transform(delineated) : std::vector<double>(n, inf);

  for (std::size_t i = 0; i < cfg.distances.size(); ++i) {
    if (i == 0 && cfg.distances[0] == 0.0 && cfg.distances.size() > 1) continue;
    DistanceBand b;
    b.lo = s.bands.empty() ? 0.0 : s.bands.back().hi;
    b.hi = cfg.distances[i];
    s.bands.push_back(b);
  }

  for (double d : cfg.distances) {
    ConfusionCounts c;
    c.distance = d;
    for (std::size_t p = 0; p < n; ++p) {
      if (delineated.cells[p]) {
        if (to_ref[p] <= d + kDistanceSlack) ++c.tp;
        else ++c.fp;
      }
      if (reference.cells[p] && to_del[p] > d + kDistanceSlack) ++c.fn;
    }
    c.tn = s.total_pixels - c.tp - c.fp - c.fn;
    s.counts.push_back(c);
  }

  for (std::size_t p = 0; p < n; ++p) {
    if (!delineated.cells[p]) continue;
    for (auto& b : s.bands)
      if (to_ref[p] <= b.hi + kDistanceSlack) {
        ++b.tp;
        break;
      }
  }
  return s;
}

std::string format_meters(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string out = buf;
  while (out.size() > 1 && out.back() == '0' && out[out.size() - 2] != '.') out.pop_back();
  return out;
}

std::string band_low_label(const ConfusionSeries& series, std::size_t band) {
  if (band == 0) return "0.0";
  return format_meters(series.bands[band].lo + 0.01);
}

namespace {

std::string percent(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

std::string report_csv(const ConfusionSeries& series) {
  std::ostringstream out;
  out << "band_lo_m,band_hi_m,tp_pixels,tp_percent\n";
  for (std::size_t i = 0; i < series.bands.size(); ++i)
    out << band_low_label(series, i) << ',' << format_meters(series.bands[i].hi) << ',' << series.bands[i].tp
        << ',' << percent(series.band_percent(i)) << '\n';
  out << "total,," << series.matched() << ',' << percent(series.matched() ? 100.0 : 0.0) << '\n';
  return out.str();
}

std::string report_text(const ConfusionSeries& series) {
  std::ostringstream out;
  for (std::size_t i = 0; i < series.bands.size(); ++i)
    out << percent(series.band_percent(i)) << "% within " << band_low_label(series, i) << " - "
        << format_meters(series.bands[i].hi) << " m\n";
  out << series.matched() << " of " << series.delineated_pixels << " delineated pixels matched within "
      << format_meters(series.bands.empty() ? 0.0 : series.bands.back().hi) << " m\n";
  return out.str();
}

}  // namespace boundline
