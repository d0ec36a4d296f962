#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "boundline/contours.hpp"
#include "boundline/error.hpp"

namespace boundline {

namespace {

struct Offset {
  int dx;
  int dy;
};

// Pixels on the discrete segment from (0,0) to (dx,dy), endpoints included.
std::vector<Offset> bresenham(int dx, int dy) {
  std::vector<Offset> out;
  int x = 0, y = 0;
  const int adx = std::abs(dx), ady = -std::abs(dy);
  const int sx = dx >= 0 ? 1 : -1, sy = dy >= 0 ? 1 : -1;
  int err = adx + ady;
  while (true) {
    out.push_back({x, y});
    if (x == dx && y == dy) break;
    const int e2 = 2 * err;
    if (e2 >= ady) {
      err += ady;
      x += sx;
    }
    if (e2 <= adx) {
      err += adx;
      y += sy;
    }
  }
  return out;
}

struct EigenPairs {
  Eigen::VectorXd values;   // of the normalized Laplacian, ascending
  Eigen::MatrixXd vectors;  // columns
  int iterations = 0;
};

// Smallest `want` eigenpairs of the SPD-shifted operator via shift-invert
// Lanczos with full reorthogonalization.
EigenPairs smallest_eigenpairs(const Eigen::SparseMatrix<double>& laplacian, int want,
                               std::uint64_t seed) {
  const int n = static_cast<int>(laplacian.rows());
  want = std::min(want, n);
  constexpr double kShift = 1e-3;
  Eigen::SparseMatrix<double> shifted = laplacian;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += kShift;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "spectral factorization failed (0 iterations)");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd start(n);
  for (int i = 0; i < n; ++i) start[i] = 1.0 + 0.1 * normal(rng);

  int steps = std::min(n, std::max(4 * want + 20, 60));
  const int max_steps = std::min(n, 600);
  int total_iterations = 0;
  while (true) {
    Eigen::MatrixXd basis(n, steps + 1);
    Eigen::VectorXd alpha(steps), beta(steps);
    basis.col(0) = start.normalized();
    int m = 0;
    for (int j = 0; j < steps; ++j) {
      Eigen::VectorXd w = solver.solve(basis.col(j));
      ++total_iterations;
      alpha[j] = w.dot(basis.col(j));
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd coeff = basis.leftCols(j + 1).transpose() * w;
        w -= basis.leftCols(j + 1) * coeff;
      }
      beta[j] = w.norm();
      m = j + 1;
      if (beta[j] < 1e-12) break;
      basis.col(j + 1) = w / beta[j];
    }
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      tri(j, j) = alpha[j];
      if (j + 1 < m) tri(j, j + 1) = tri(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    // Largest Ritz values of the inverse are the smallest of the Laplacian.
    const int got = std::min(want, m);
    bool converged = true;
    const double last_beta = beta[m - 1];
    for (int i = 0; i < got; ++i) {
      const int idx = m - 1 - i;
      const double theta = es.eigenvalues()[idx];
      const double resid = std::abs(last_beta * es.eigenvectors()(m - 1, idx));
      if (resid > 1e-7 * std::abs(theta)) converged = false;
    }
    if (converged || m < steps) {
      EigenPairs out;
      out.values.resize(got);
      out.vectors.resize(n, got);
      for (int i = 0; i < got; ++i) {
        const int idx = m - 1 - i;
        out.values[i] = std::max(0.0, 1.0 / es.eigenvalues()[idx] - kShift);
        out.vectors.col(i) = basis.leftCols(m) * es.eigenvectors().col(idx);
      }
      out.iterations = total_iterations;
      return out;
    }
    if (steps >= max_steps)
      throw Error(ErrorKind::Convergence, "eigensolver did not converge after " +
                                              std::to_string(total_iterations) + " iterations");
    steps = std::min(max_steps, 2 * steps);
  }
}

std::vector<double> gaussian_smooth(const std::vector<double>& src, int w, int h, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * r + 1);
  double s = 0;
  for (int i = -r; i <= r; ++i) s += k[i + r] = std::exp(-i * i / (2 * sigma * sigma));
  for (double& v : k) v /= s;
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * src[y * w + std::clamp(x + i, 0, w - 1)];
      tmp[y * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[std::clamp(y + i, 0, h - 1) * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

}  // namespace

BoundaryProbabilityMap spectral_globalize(const BoundaryProbabilityMap& mpb,
                                          const CueParams& params, SpectralInfo* info) {
  params.validate();
  const std::size_t n_full = mpb.values.size();
  const double alpha_m = params.mpb_weight;
  const double alpha_s = params.spb_weight;

  BoundaryProbabilityMap out;
  static_cast<ScalarGrid&>(out) = mpb;
  out.kind = PbKind::gPb;

  const float mpb_max = n_full ? *std::max_element(mpb.values.begin(), mpb.values.end()) : 0.f;
  if (alpha_s == 0.0 || mpb_max <= 0.0f) {
    // Passthrough: with no spectral weight or no contour evidence the global
    // term contributes nothing.
    for (float& v : out.values) v = static_cast<float>(std::clamp(alpha_m * v / (alpha_m + alpha_s), 0.0, 1.0));
    return out;
  }

  const auto small = downscale(static_cast<const ScalarGrid&>(mpb), params.spectral_max_dim).grid;
  const int w = small.width, h = small.height;
  const int n = w * h;

  // Intervening-contour affinities on a disc neighborhood.
  std::vector<std::pair<Offset, std::vector<Offset>>> stencil;
  const int ra = params.affinity_radius;
  for (int dy = 0; dy <= ra; ++dy)
    for (int dx = -ra; dx <= ra; ++dx) {
      if (dy == 0 && dx <= 0) continue;
      if (dx * dx + dy * dy > ra * ra) continue;
      stencil.push_back({{dx, dy}, bresenham(dx, dy)});
    }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * stencil.size() * 2);
  std::vector<double> degree(n, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      for (const auto& [o, line] : stencil) {
        const int xx = x + o.dx, yy = y + o.dy;
        if (xx < 0 || xx >= w || yy >= h) continue;
        float ic = 0.f;
        for (const Offset& p : line) ic = std::max(ic, small.at(x + p.dx, y + p.dy));
        const double a = std::exp(-ic / params.affinity_rho);
        const int j = yy * w + xx;
        trips.emplace_back(i, j, a);
        degree[i] += a;
        degree[j] += a;
      }
    }
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) inv_sqrt_deg[i] = degree[i] > 0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
  std::vector<Eigen::Triplet<double>> lap;
  lap.reserve(trips.size() * 2 + n);
  for (int i = 0; i < n; ++i) lap.emplace_back(i, i, 1.0);
  for (const auto& t : trips) {
    const double v = -t.value() * inv_sqrt_deg[t.row()] * inv_sqrt_deg[t.col()];
    lap.emplace_back(t.row(), t.col(), v);
    lap.emplace_back(t.col(), t.row(), v);
  }
  Eigen::SparseMatrix<double> laplacian(n, n);
  laplacian.setFromTriplets(lap.begin(), lap.end());

  const auto pairs = smallest_eigenpairs(laplacian, params.eigenvectors + 1, params.seed);
  if (info) {
    info->eigenvalues.assign(pairs.values.data(), pairs.values.data() + pairs.values.size());
    info->iterations = pairs.iterations;
    info->width = w;
    info->height = h;
  }

  // Gradients of the generalized eigenvectors, skipping the trivial one.
  struct Grad {
    std::vector<double> gx, gy;
    double weight;
  };
  std::vector<Grad> grads;
  for (int k = 1; k < pairs.values.size(); ++k) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = pairs.vectors(i, k) * inv_sqrt_deg[i];
    v = gaussian_smooth(v, w, h, 1.0);
    Grad g{std::vector<double>(n), std::vector<double>(n), 1.0 / std::sqrt(std::max(pairs.values[k], 1e-6))};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int i = y * w + x;
        g.gx[i] = 0.5 * (v[y * w + std::min(x + 1, w - 1)] - v[y * w + std::max(x - 1, 0)]);
        g.gy[i] = 0.5 * (v[std::min(y + 1, h - 1) * w + x] - v[std::max(y - 1, 0) * w + x]);
      }
    grads.push_back(std::move(g));
  }

  ScalarGrid spb_small;
  spb_small.width = w;
  spb_small.height = h;
  spb_small.transform = small.transform;
  spb_small.values.assign(n, 0.f);
  for (int o = 0; o < params.orientations; ++o) {
    const double theta = std::numbers::pi * o / params.orientations;
    const double nx = -std::sin(theta), ny = std::cos(theta);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (const auto& g : grads) acc += g.weight * std::abs(nx * g.gx[i] + ny * g.gy[i]);
      spb_small.values[i] = std::max(spb_small.values[i], static_cast<float>(acc));
    }
  }
  ScalarGrid spb = (w == mpb.width && h == mpb.height)
                       ? spb_small
                       : resample_bilinear(spb_small, mpb.width, mpb.height, mpb.transform);
  const float spb_max = *std::max_element(spb.values.begin(), spb.values.end());
  // sPb is brought onto the dynamic range of mPb before mixing.
  const double spb_scale = spb_max > 0.f ? mpb_max / spb_max : 0.0;
  for (std::size_t i = 0; i < n_full; ++i) {
    const double g = (alpha_m * mpb.values[i] + alpha_s * spb_scale * spb.values[i]) / (alpha_m + alpha_s);
    out.values[i] = static_cast<float>(std::clamp(g, 0.0, 1.0));
  }
  return out;
}

}  // namespace boundline
