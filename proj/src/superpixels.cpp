#include "boundline/superpixels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "boundline/error.hpp"

namespace boundline {

void SlicParams::validate() const {
  if (region_size == 0 && target_count < 1)
    throw Error(ErrorKind::Parameter, "either region size or target count must be set");
  if (region_size != 0 && region_size < 2)
    throw Error(ErrorKind::Parameter, "region size must be >= 2");
  if (!(compactness > 0.0)) throw Error(ErrorKind::Parameter, "compactness must be positive");
  if (iterations < 1) throw Error(ErrorKind::Parameter, "iterations must be >= 1");
}

int SlicParams::spacing(int width, int height) const {
  if (region_size > 0) return region_size;
  const double s = std::sqrt(static_cast<double>(width) * height / target_count);
  return std::max(2, static_cast<int>(std::lround(s)));
}

int SlicParams::min_size(int width, int height) const {
  if (min_region_size >= 0) return min_region_size;
  const int s = spacing(width, height);
  return s * s / 4;
}

int region_size_for_gsd(double gsd, double edge_m) {
  if (!(gsd > 0.0)) throw Error(ErrorKind::Parameter, "GSD must be positive");
  return std::max(2, static_cast<int>(std::lround(edge_m / gsd)));
}

namespace {

struct Center {
  double l, a, b, x, y;
};

double gradient_at(const LabGrid& lab, int x, int y) {
  auto px = [&](int cx, int cy) -> const Lab& {
    return lab.at(std::clamp(cx, 0, lab.width - 1), std::clamp(cy, 0, lab.height - 1));
  };
  auto d2 = [](const Lab& p, const Lab& q) {
    const double dl = p.l - q.l, da = p.a - q.a, db = p.b - q.b;
    return dl * dl + da * da + db * db;
  };
  return d2(px(x + 1, y), px(x - 1, y)) + d2(px(x, y + 1), px(x, y - 1));
}

}  // namespace

LabelMap slic_clusters(const LabGrid& lab, const SlicParams& params) {
  params.validate();
  const int w = lab.width, h = lab.height;
  const int s = params.spacing(w, h);
  if (s >= std::min(w, h))
    throw Error(ErrorKind::Parameter, "region size " + std::to_string(s) +
                                          " must be smaller than the image dimensions " +
                                          std::to_string(w) + "x" + std::to_string(h));

  // Seeds at grid-cell centers; moved to a lower-gradient pixel in the 3x3
  // neighborhood only when one is strictly lower.
  const int nx = std::max(1, static_cast<int>(std::lround(static_cast<double>(w) / s)));
  const int ny = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) / s)));
  const double step_x = static_cast<double>(w) / nx;
  const double step_y = static_cast<double>(h) / ny;
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double cx = (i + 0.5) * step_x - 0.5;
      double cy = (j + 0.5) * step_y - 0.5;
      const int rx = std::clamp(static_cast<int>(std::lround(cx)), 0, w - 1);
      const int ry = std::clamp(static_cast<int>(std::lround(cy)), 0, h - 1);
      double best = gradient_at(lab, rx, ry);
      int bx = rx, by = ry;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = rx + dx, qy = ry + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const double g = gradient_at(lab, qx, qy);
          if (g < best) {
            best = g;
            bx = qx;
            by = qy;
          }
        }
      if (bx != rx || by != ry) {
        cx = bx;
        cy = by;
      }
      const Lab& c = lab.at(bx, by);
      centers.push_back({c.l, c.a, c.b, cx, cy});
    }
  }

  const std::size_t n = static_cast<std::size_t>(w) * h;
  const double spatial = params.compactness * params.compactness / (static_cast<double>(s) * s);
  LabelMap out;
  out.width = w;
  out.height = h;
  out.transform = lab.transform;
  out.labels.assign(n, -1);
  std::vector<double> dist(n);

  auto distance2 = [&](const Center& c, const Lab& p, int x, int y) {
    const double dl = p.l - c.l, da = p.a - c.a, db = p.b - c.b;
    const double dx = x - c.x, dy = y - c.y;
    return dl * dl + da * da + db * db + (dx * dx + dy * dy) * spatial;
  };

  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(out.labels.begin(), out.labels.end(), -1);
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - s)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x + s)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - s)));
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y + s)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double d = distance2(c, lab.pixels[i], x, y);
          if (d < dist[i]) {
            dist[i] = d;
            out.labels[i] = static_cast<int>(k);
          }
        }
    }
    // Pixels outside every search window go to the globally nearest center.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (out.labels[i] >= 0) continue;
        for (std::size_t k = 0; k < centers.size(); ++k) {
          const double d = distance2(centers[k], lab.pixels[i], x, y);
          if (d < dist[i]) {
            dist[i] = d;
            out.labels[i] = static_cast<int>(k);
          }
        }
      }

    std::vector<std::array<double, 5>> sums(centers.size(), {0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const int k = out.labels[i];
        const Lab& p = lab.pixels[i];
        auto& acc = sums[k];
        acc[0] += p.l;
        acc[1] += p.a;
        acc[2] += p.b;
        acc[3] += x;
        acc[4] += y;
        ++counts[k];
      }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / counts[k];
      centers[k] = {sums[k][0] * inv, sums[k][1] * inv, sums[k][2] * inv, sums[k][3] * inv,
                    sums[k][4] * inv};
    }
  }
  relabel_dense(out);
  return out;
}

LabelMap slic(const LabGrid& lab, const SlicParams& params) {
  LabelMap clusters = slic_clusters(lab, params);
  return enforce_connectivity(clusters, params.min_size(lab.width, lab.height));
}

LabelMap enforce_connectivity(const LabelMap& labels, int min_region_size) {
  const int w = labels.width, h = labels.height;
  const int n = w * h;

  // 4-connected components, numbered in raster order of first pixel.
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> members;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(members.size());
    members.emplace_back();
    comp[s] = id;
    stack.assign(1, s);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      members[id].push_back(p);
      const int x = p % w, y = p / w;
      const int nb[4] = {x + 1 < w ? p + 1 : -1, x > 0 ? p - 1 : -1, y + 1 < h ? p + w : -1,
                         y > 0 ? p - w : -1};
      for (int q : nb)
        if (q >= 0 && comp[q] < 0 && labels.labels[q] == labels.labels[p]) {
          comp[q] = id;
          stack.push_back(q);
        }
    }
  }

  const int ncomp = static_cast<int>(members.size());
  std::vector<int> parent(ncomp);
  for (int i = 0; i < ncomp; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<std::size_t> size(ncomp);
  for (int i = 0; i < ncomp; ++i) size[i] = members[i].size();

  bool changed = true;
  while (changed) {
    changed = false;
    for (int c = 0; c < ncomp; ++c) {
      if (find(c) != c || size[c] >= static_cast<std::size_t>(min_region_size)) continue;
      int target = -1;
      for (int p : members[c]) {
        const int x = p % w, y = p / w;
        const int nb[4] = {x + 1 < w ? p + 1 : -1, x > 0 ? p - 1 : -1, y + 1 < h ? p + w : -1,
                           y > 0 ? p - w : -1};
        for (int q : nb) {
          if (q < 0) continue;
          const int r = find(comp[q]);
          if (r == c) continue;
          if (target < 0 || size[r] > size[target] || (size[r] == size[target] && r < target))
            target = r;
        }
      }
      if (target < 0) continue;
      parent[c] = target;
      size[target] += size[c];
      auto& into = members[target];
      into.insert(into.end(), members[c].begin(), members[c].end());
      members[c].clear();
      members[c].shrink_to_fit();
      changed = true;
    }
  }

  LabelMap out;
  out.width = w;
  out.height = h;
  out.transform = labels.transform;
  out.labels.resize(n);
  for (int p = 0; p < n; ++p) out.labels[p] = find(comp[p]);
  relabel_dense(out);
  return out;
}

std::vector<Polyline> superpixel_outlines(const LabelMap& labels) {
  const int w = labels.width, h = labels.height;
  const int cw = w + 1;  // corners per row
  auto label = [&](int x, int y) { return labels.labels[static_cast<std::size_t>(y) * w + x]; };

  // Corner (i, j) links: 0 = E, 1 = S, 2 = W, 3 = N.
  constexpr int kDx[4] = {1, 0, -1, 0};
  constexpr int kDy[4] = {0, 1, 0, -1};
  auto link = [&](int i, int j, int d) {
    switch (d) {
      case 0:  // horizontal crack between (i, j-1) and (i, j)
        return i < w && j > 0 && j < h && label(i, j - 1) != label(i, j);
      case 1:  // vertical crack between (i-1, j) and (i, j)
        return j < h && i > 0 && i < w && label(i - 1, j) != label(i, j);
      case 2:
        return i > 0 && j > 0 && j < h && label(i - 1, j - 1) != label(i - 1, j);
      default:
        return j > 0 && i > 0 && i < w && label(i - 1, j - 1) != label(i, j - 1);
    }
  };
  std::vector<std::uint8_t> degree(static_cast<std::size_t>(cw) * (h + 1), 0);
  std::vector<std::uint8_t> used(degree.size(), 0);
  for (int j = 0; j <= h; ++j)
    for (int i = 0; i <= w; ++i)
      for (int d = 0; d < 4; ++d) degree[j * cw + i] += link(i, j, d);

  auto free_link = [&](int i, int j) {
    for (int d = 0; d < 4; ++d)
      if (link(i, j, d) && !(used[j * cw + i] & (1u << d))) return d;
    return -1;
  };
  auto mark = [&](int i, int j, int d) {
    used[j * cw + i] |= static_cast<std::uint8_t>(1u << d);
    used[(j + kDy[d]) * cw + i + kDx[d]] |= static_cast<std::uint8_t>(1u << ((d + 2) % 4));
  };

  std::vector<Polyline> out;
  auto trace = [&](int i, int j, int d, bool loop) {
    std::vector<std::pair<int, int>> corners{{i, j}};
    const int si = i, sj = j;
    int prev_d = d;
    while (true) {
      mark(i, j, d);
      i += kDx[d];
      j += kDy[d];
      if (d == prev_d && corners.size() > 1) corners.back() = {i, j};
      else corners.emplace_back(i, j);
      prev_d = d;
      if (loop && i == si && j == sj) break;
      if (!loop && degree[j * cw + i] != 2) break;
      d = free_link(i, j);
      if (d < 0) break;
    }
    Polyline line;
    for (auto [ci, cj] : corners) line.points.push_back(labels.transform.corner_to_world(ci, cj));
    line.id = static_cast<std::int64_t>(out.size());
    out.push_back(std::move(line));
  };

  for (int j = 0; j <= h; ++j)
    for (int i = 0; i <= w; ++i) {
      const int deg = degree[j * cw + i];
      if (deg == 0 || deg == 2) continue;
      for (int d; (d = free_link(i, j)) >= 0;) trace(i, j, d, false);
    }
  for (int j = 0; j <= h; ++j)
    for (int i = 0; i <= w; ++i) {
      const int d = free_link(i, j);
      if (d >= 0) trace(i, j, d, true);
    }
  return out;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<std::uint16_t> samples(labels.labels.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = static_cast<std::uint16_t>(std::clamp(labels.labels[i], 0, 65535));
  write_png_gray16(path, labels.width, labels.height, samples);
}

}  // namespace boundline
