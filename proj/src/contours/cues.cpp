#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "boundline/contours.hpp"
#include "boundline/error.hpp"

namespace boundline {

const char* to_string(PbKind kind) noexcept {
  switch (kind) {
    case PbKind::mPb: return "mPb";
    case PbKind::sPb: return "sPb";
    case PbKind::gPb: return "gPb";
    case PbKind::ucm: return "ucm";
  }
  return "mPb";
}

void CueParams::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Parameter, m); };
  if (orientations < 1) fail("orientations must be >= 1");
  if (radii.empty()) fail("at least one disc radius is required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 2) fail("disc radii must be >= 2");
    if (i > 0 && radii[i] <= radii[i - 1]) fail("disc radii must be strictly increasing");
  }
  double total = 0.0;
  for (const auto& w : weights) {
    if (!w.empty() && w.size() != radii.size())
      fail("cue weights must list one value per scale");
    for (double v : w) {
      if (!(v >= 0.0)) fail("cue weights must be nonnegative");
      total += v;
    }
  }
  for (int c = 0; c < kCueChannels; ++c)
    for (std::size_t s = 0; s < radii.size(); ++s) total += weights[c].empty() ? 1.0 : 0.0;
  if (total <= 0.0) fail("cue weights must not all be zero");
  if (bins < 2) fail("histogram bins must be >= 2");
  if (textons < 1) fail("texton count must be >= 1");
  if (!(filter_sigma > 0.0)) fail("filter sigma must be positive");
  if (!(mpb_weight >= 0.0) || !(spb_weight >= 0.0) || mpb_weight + spb_weight <= 0.0)
    fail("globalization weights must be nonnegative and not both zero");
  if (eigenvectors < 1) fail("eigenvector count must be >= 1");
  if (spectral_max_dim < 8) fail("spectral cap must be >= 8");
  if (affinity_radius < 1) fail("affinity radius must be >= 1");
  if (!(affinity_rho > 0.0)) fail("affinity rho must be positive");
  if (max_dim < 2) fail("max_dim must be >= 2");
  if (!(threshold >= 0.0)) fail("threshold must be >= 0");
}

double CueParams::weight(CueChannel channel, std::size_t scale) const {
  const auto& w = weights[static_cast<int>(channel)];
  return w.empty() ? 1.0 : w.at(scale);
}

// ---------------------------------------------------------------------------
// Textons

namespace {

struct Kernel {
  int radius = 0;
  std::vector<double> taps;  // (2r+1)^2, row-major
};

void l1_normalize(std::vector<double>& taps) {
  double s = 0.0;
  for (double t : taps) s += std::abs(t);
  if (s > 0.0)
    for (double& t : taps) t /= s;
}

void remove_mean(std::vector<double>& taps) {
  double m = 0.0;
  for (double t : taps) m += t;
  m /= static_cast<double>(taps.size());
  for (double& t : taps) t -= m;
}

// Even/odd elongated Gaussian derivatives at each orientation plus a
// difference-of-Gaussians center-surround filter.
std::vector<Kernel> texton_filter_bank(const CueParams& p) {
  const double sigma = p.filter_sigma;
  const double sigma_long = 2.0 * sigma;
  const int r = static_cast<int>(std::ceil(3.0 * sigma_long));
  const int side = 2 * r + 1;
  std::vector<Kernel> bank;
  for (int k = 0; k < p.orientations; ++k) {
    const double theta = std::numbers::pi * k / p.orientations;
    const double ct = std::cos(theta), st = std::sin(theta);
    Kernel even{r, std::vector<double>(side * side)};
    Kernel odd{r, std::vector<double>(side * side)};
    for (int y = -r; y <= r; ++y) {
      for (int x = -r; x <= r; ++x) {
        const double u = x * ct + y * st;
        const double v = -x * st + y * ct;
        const double g = std::exp(-(u * u) / (2 * sigma_long * sigma_long) - (v * v) / (2 * sigma * sigma));
        const std::size_t i = static_cast<std::size_t>(y + r) * side + (x + r);
        odd.taps[i] = -v / (sigma * sigma) * g;
        even.taps[i] = (v * v / std::pow(sigma, 4) - 1.0 / (sigma * sigma)) * g;
      }
    }
    remove_mean(even.taps);
    remove_mean(odd.taps);
    l1_normalize(even.taps);
    l1_normalize(odd.taps);
    bank.push_back(std::move(even));
    bank.push_back(std::move(odd));
  }
  Kernel dog{r, std::vector<double>(side * side)};
  std::vector<double> g1(side * side), g2(side * side);
  double s1 = 0, s2 = 0;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) {
      const std::size_t i = static_cast<std::size_t>(y + r) * side + (x + r);
      g1[i] = std::exp(-(x * x + y * y) / (2 * sigma * sigma));
      g2[i] = std::exp(-(x * x + y * y) / (2 * sigma_long * sigma_long));
      s1 += g1[i];
      s2 += g2[i];
    }
  for (std::size_t i = 0; i < dog.taps.size(); ++i) dog.taps[i] = g1[i] / s1 - g2[i] / s2;
  remove_mean(dog.taps);
  l1_normalize(dog.taps);
  bank.push_back(std::move(dog));
  return bank;
}

// Replicate-border convolution of one channel; writes feature `f` of `dims`.
void convolve_into(const std::vector<float>& src, int w, int h, const Kernel& k,
                   std::vector<float>& features, int f, int dims) {
  const int r = k.radius;
  const int side = 2 * r + 1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        const float* row = src.data() + static_cast<std::size_t>(yy) * w;
        const double* taps = k.taps.data() + static_cast<std::size_t>(dy + r) * side + r;
        for (int dx = -r; dx <= r; ++dx) acc += taps[dx] * row[std::clamp(x + dx, 0, w - 1)];
      }
      features[(static_cast<std::size_t>(y) * w + x) * dims + f] = static_cast<float>(acc);
    }
  }
}

double sq_dist(const float* a, const float* b, int dims) {
  double s = 0.0;
  for (int d = 0; d < dims; ++d) {
    const double t = static_cast<double>(a[d]) - b[d];
    s += t * t;
  }
  return s;
}

}  // namespace

TextonMap compute_textons(const LabGrid& lab, const CueParams& params) {
  params.validate();
  const auto bank = texton_filter_bank(params);
  const int support = 2 * bank.front().radius + 1;
  if (lab.width < support || lab.height < support)
    throw Error(ErrorKind::Dimension, "image " + std::to_string(lab.width) + "x" +
                                          std::to_string(lab.height) +
                                          " is smaller than the texton filter support " +
                                          std::to_string(support));
  const int w = lab.width, h = lab.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const int dims = static_cast<int>(bank.size());

  std::vector<float> lum(n);
  for (std::size_t i = 0; i < n; ++i) lum[i] = lab.pixels[i].l;
  std::vector<float> features(n * dims);
  for (int f = 0; f < dims; ++f) convolve_into(lum, w, h, bank[f], features, f, dims);

  // k-means++ on a strided sample, then assign every pixel.
  constexpr std::size_t kMaxSample = 20000;
  const std::size_t stride = std::max<std::size_t>(1, n / kMaxSample);
  std::vector<std::size_t> sample;
  for (std::size_t i = 0; i < n; i += stride) sample.push_back(i);

  std::mt19937_64 rng(params.seed);
  std::vector<float> centers;
  auto feat = [&](std::size_t i) { return features.data() + i * dims; };
  {
    std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
    const std::size_t first = sample[pick(rng)];
    centers.insert(centers.end(), feat(first), feat(first) + dims);
    std::vector<double> d2(sample.size());
    for (std::size_t s = 0; s < sample.size(); ++s) d2[s] = sq_dist(feat(sample[s]), feat(first), dims);
    while (static_cast<int>(centers.size() / dims) < params.textons) {
      double total = 0.0;
      for (double d : d2) total += d;
      if (total <= 0.0) break;  // all remaining points coincide with a center
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      std::size_t chosen = sample.size() - 1;
      for (std::size_t s = 0; s < sample.size(); ++s) {
        target -= d2[s];
        if (target <= 0.0 && d2[s] > 0.0) {
          chosen = s;
          break;
        }
      }
      const float* c = feat(sample[chosen]);
      centers.insert(centers.end(), c, c + dims);
      for (std::size_t s = 0; s < sample.size(); ++s)
        d2[s] = std::min(d2[s], sq_dist(feat(sample[s]), c, dims));
    }
  }
  const int k = static_cast<int>(centers.size() / dims);

  auto nearest = [&](const float* x) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = sq_dist(x, centers.data() + static_cast<std::size_t>(c) * dims, dims);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    return best;
  };

  std::vector<int> assign(sample.size(), -1);
  for (int iter = 0; iter < 25; ++iter) {
    bool changed = false;
    for (std::size_t s = 0; s < sample.size(); ++s) {
      const int a = nearest(feat(sample[s]));
      if (a != assign[s]) {
        assign[s] = a;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sums(static_cast<std::size_t>(k) * dims, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t s = 0; s < sample.size(); ++s) {
      const float* x = feat(sample[s]);
      ++counts[assign[s]];
      for (int d = 0; d < dims; ++d) sums[static_cast<std::size_t>(assign[s]) * dims + d] += x[d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (int d = 0; d < dims; ++d)
        centers[static_cast<std::size_t>(c) * dims + d] =
            static_cast<float>(sums[static_cast<std::size_t>(c) * dims + d] / counts[c]);
    }
  }

  TextonMap out;
  out.width = w;
  out.height = h;
  out.ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.ids[i] = nearest(feat(i));
  std::vector<int> remap(k, -1);
  int next = 0;
  for (int& id : out.ids) {
    if (remap[id] < 0) remap[id] = next++;
    id = remap[id];
  }
  out.count = next;
  return out;
}

// ---------------------------------------------------------------------------
// Oriented gradients

std::vector<int> quantize(const ScalarGrid& channel, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(channel.values.begin(), channel.values.end());
  const double lo = channel.values.empty() ? 0.0 : *lo_it;
  const double hi = channel.values.empty() ? 0.0 : *hi_it;
  std::vector<int> out(channel.values.size(), 0);
  if (hi <= lo) return out;
  const double scale = bins / (hi - lo);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::min(bins - 1, static_cast<int>((channel.values[i] - lo) * scale));
  return out;
}

namespace {

struct Offset {
  int dx;
  int dy;
};

struct HalfDisc {
  std::vector<Offset> members;
  std::vector<Offset> entering;  // relative to the new center after a +1 column step
  std::vector<Offset> leaving;   // relative to the old center
};

std::pair<HalfDisc, HalfDisc> half_discs(int radius, double orientation) {
  // Normal of the dividing diameter; sign of n.o selects the half.
  const double nx = -std::sin(orientation);
  const double ny = std::cos(orientation);
  const int r2 = radius * radius;
  auto side_of = [&](int dx, int dy) {
    if (dx * dx + dy * dy > r2) return 0;
    const double s = nx * dx + ny * dy;
    if (s > 1e-9) return 1;
    if (s < -1e-9) return -1;
    return 0;
  };
  HalfDisc a, b;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int s = side_of(dx, dy);
      if (s == 0) continue;
      HalfDisc& hd = s > 0 ? a : b;
      hd.members.push_back({dx, dy});
      if (side_of(dx + 1, dy) != s) hd.entering.push_back({dx, dy});
      if (side_of(dx - 1, dy) != s) hd.leaving.push_back({dx, dy});
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

ScalarGrid oriented_gradient_bins(const std::vector<int>& bin_of_pixel, int width, int height,
                                  int bins, int radius, double orientation) {
  if (radius < 2) throw Error(ErrorKind::Parameter, "oriented gradient radius must be >= 2");
  const auto [ha, hb] = half_discs(radius, orientation);
  ScalarGrid out;
  out.width = width;
  out.height = height;
  out.values.assign(static_cast<std::size_t>(width) * height, 0.0f);

  std::vector<int> hist_a(bins), hist_b(bins);
  int total_a = 0, total_b = 0;
  auto value = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= width || y >= height) return -1;
    return bin_of_pixel[static_cast<std::size_t>(y) * width + x];
  };
  auto apply = [&](const std::vector<Offset>& offs, int cx, int cy, std::vector<int>& hist, int& total,
                   int delta) {
    for (const Offset& o : offs) {
      const int v = value(cx + o.dx, cy + o.dy);
      if (v < 0) continue;
      hist[v] += delta;
      total += delta;
    }
  };

  for (int y = 0; y < height; ++y) {
    std::fill(hist_a.begin(), hist_a.end(), 0);
    std::fill(hist_b.begin(), hist_b.end(), 0);
    total_a = total_b = 0;
    apply(ha.members, 0, y, hist_a, total_a, +1);
    apply(hb.members, 0, y, hist_b, total_b, +1);
    for (int x = 0; x < width; ++x) {
      if (x > 0) {
        apply(ha.leaving, x - 1, y, hist_a, total_a, -1);
        apply(ha.entering, x, y, hist_a, total_a, +1);
        apply(hb.leaving, x - 1, y, hist_b, total_b, -1);
        apply(hb.entering, x, y, hist_b, total_b, +1);
      }
      if (total_a == 0 || total_b == 0) continue;
      const double na = total_a, nb = total_b;
      double chi2 = 0.0;
      for (int k = 0; k < bins; ++k) {
        if (hist_a[k] == 0 && hist_b[k] == 0) continue;
        const double g = hist_a[k] / na, hh = hist_b[k] / nb;
        chi2 += (g - hh) * (g - hh) / (g + hh);
      }
      out.values[static_cast<std::size_t>(y) * width + x] =
          static_cast<float>(std::clamp(0.5 * chi2, 0.0, 1.0));
    }
  }
  return out;
}

ScalarGrid oriented_gradient(const ScalarGrid& channel, int radius, double orientation, int bins) {
  if (bins < 2) throw Error(ErrorKind::Parameter, "histogram bins must be >= 2");
  auto out = oriented_gradient_bins(quantize(channel, bins), channel.width, channel.height, bins,
                                    radius, orientation);
  out.transform = channel.transform;
  return out;
}

ScalarGrid oriented_gradient(const TextonMap& textons, int radius, double orientation) {
  return oriented_gradient_bins(textons.ids, textons.width, textons.height,
                                std::max(1, textons.count), radius, orientation);
}

BoundaryProbabilityMap multiscale_pb(const LabGrid& lab, const CueParams& params) {
  params.validate();
  const int w = lab.width, h = lab.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;

  struct Channel {
    CueChannel id;
    std::vector<int> bins;
    int nbins;
  };
  std::vector<Channel> channels;
  auto want = [&](CueChannel c) {
    for (std::size_t s = 0; s < params.radii.size(); ++s)
      if (params.weight(c, s) > 0.0) return true;
    return false;
  };
  for (CueChannel c : {CueChannel::L, CueChannel::A, CueChannel::B}) {
    if (!want(c)) continue;
    ScalarGrid g;
    g.width = w;
    g.height = h;
    g.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Lab& p = lab.pixels[i];
      g.values[i] = c == CueChannel::L ? p.l : (c == CueChannel::A ? p.a : p.b);
    }
    channels.push_back({c, quantize(g, params.bins), params.bins});
  }
  if (want(CueChannel::Texture)) {
    TextonMap t = compute_textons(lab, params);
    channels.push_back({CueChannel::Texture, std::move(t.ids), std::max(1, t.count)});
  }

  double weight_sum = 0.0;
  for (const auto& ch : channels)
    for (std::size_t s = 0; s < params.radii.size(); ++s) weight_sum += params.weight(ch.id, s);

  BoundaryProbabilityMap out;
  out.width = w;
  out.height = h;
  out.transform = lab.transform;
  out.kind = PbKind::mPb;
  out.values.assign(n, 0.0f);

  std::vector<double> acc(n);
  for (int k = 0; k < params.orientations; ++k) {
    const double theta = std::numbers::pi * k / params.orientations;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& ch : channels) {
      for (std::size_t s = 0; s < params.radii.size(); ++s) {
        const double wt = params.weight(ch.id, s);
        if (wt <= 0.0) continue;
        const auto g = oriented_gradient_bins(ch.bins, w, h, ch.nbins, params.radii[s], theta);
        for (std::size_t i = 0; i < n; ++i) acc[i] += wt * g.values[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      out.values[i] = std::max(out.values[i], static_cast<float>(std::clamp(acc[i] / weight_sum, 0.0, 1.0)));
  }
  return out;
}

}  // namespace boundline
