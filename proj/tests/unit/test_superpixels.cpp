#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>

#include "boundline/error.hpp"
#include "boundline/superpixels.hpp"
#include "synthetic.hpp"

using namespace boundline;
namespace fs = std::filesystem;

namespace {

LabelMap make_labels(int w, int h, const std::vector<int>& v) {
  LabelMap m;
  m.width = w;
  m.height = h;
  m.labels = v;
  m.count = v.empty() ? 0 : *std::max_element(v.begin(), v.end()) + 1;
  m.transform.pixel_size_x = 1.0;
  m.transform.pixel_size_y = 1.0;
  return m;
}

// Same partition up to renaming of labels.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [i1, n1] = ab.emplace(a[i], b[i]);
    auto [i2, n2] = ba.emplace(b[i], a[i]);
    if (i1->second != b[i] || i2->second != a[i]) return false;
  }
  return true;
}

using Crack = std::pair<std::pair<long, long>, std::pair<long, long>>;

Crack crack(long x0, long y0, long x1, long y1) {
  std::pair<long, long> a{x0, y0}, b{x1, y1};
  if (b < a) std::swap(a, b);
  return {a, b};
}

// Unit lattice edges between pixels with differing labels, excluding the image border.
std::multiset<Crack> brute_cracks(const LabelMap& m) {
  std::multiset<Crack> out;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (x + 1 < m.width && m.at(x, y) != m.at(x + 1, y)) out.insert(crack(x + 1, y, x + 1, y + 1));
      if (y + 1 < m.height && m.at(x, y) != m.at(x, y + 1)) out.insert(crack(x, y + 1, x + 1, y + 1));
    }
  return out;
}

// Outline geometry with unit transform, split into unit lattice edges.
std::multiset<Crack> outline_cracks(const std::vector<Polyline>& lines) {
  std::multiset<Crack> out;
  for (const auto& l : lines)
    for (std::size_t i = 0; i + 1 < l.points.size(); ++i) {
      const long x0 = std::lround(l.points[i].x), y0 = std::lround(l.points[i].y);
      const long x1 = std::lround(l.points[i + 1].x), y1 = std::lround(l.points[i + 1].y);
      REQUIRE((x0 == x1 || y0 == y1));
      const long n = std::abs(x1 - x0) + std::abs(y1 - y0);
      const long sx = (x1 > x0) - (x1 < x0), sy = (y1 > y0) - (y1 < y0);
      for (long k = 0; k < n; ++k)
        out.insert(crack(x0 + k * sx, y0 + k * sy, x0 + (k + 1) * sx, y0 + (k + 1) * sy));
    }
  return out;
}

double outline_length(const std::vector<Polyline>& lines) {
  double s = 0.0;
  for (const auto& l : lines) s += polyline_length(l);
  return s;
}

// Smoothly varying color noise: repeated 3-tap box blur of white noise.
ImageGrid noisy_fixture() {
  const int n = 120;
  std::mt19937 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> f(static_cast<std::size_t>(n) * n * 3);
  for (auto& v : f) v = gauss(rng);
  std::vector<double> tmp(f.size());
  auto idx = [n](int x, int y, int c) { return (static_cast<std::size_t>((y + n) % n) * n + (x + n) % n) * 3 + c; };
  for (int pass = 0; pass < 10; ++pass)
    for (int axis = 0; axis < 2; ++axis) {
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          for (int c = 0; c < 3; ++c) {
            const int dx = axis == 0, dy = axis == 1;
            tmp[idx(x, y, c)] = (f[idx(x - dx, y - dy, c)] + f[idx(x, y, c)] + f[idx(x + dx, y + dy, c)]) / 3.0;
          }
      f.swap(tmp);
    }
  double sq = 0.0;
  for (double v : f) sq += v * v;
  const double scale = 30.0 / std::sqrt(sq / f.size());
  ImageGrid img = testing::make_constant_image(n, n);
  for (std::size_t i = 0; i < f.size(); ++i)
    img.rgb[i] = static_cast<std::uint8_t>(std::clamp(128.0 + scale * f[i], 0.0, 255.0));
  return img;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("superpixels") {
  TEST_CASE("constant image gives the seed-grid blocks") {
    const auto lab = rgb_to_lab(testing::make_constant_image(100, 100));
    SlicParams p;
    p.region_size = 20;
    p.compactness = 10;
    const auto labels = slic(lab, p);
    // Spatial-only k-means from cell-center seeds is already at its fixed point.
    std::vector<int> oracle(100 * 100);
    for (int y = 0; y < 100; ++y)
      for (int x = 0; x < 100; ++x) oracle[y * 100 + x] = (y / 20) * 5 + x / 20;
    CHECK(labels.count == 25);
    CHECK(same_partition(labels.labels, oracle));
  }

  TEST_CASE("split image: label changes follow the color edge") {
    const auto lab = rgb_to_lab(testing::make_split_image(100, 100, 50));
    SlicParams p;
    p.region_size = 10;
    const auto labels = slic(lab, p);
    int hit = 0;
    for (int y = 0; y < 100; ++y) {
      bool near = false;
      for (int x = 48; x <= 50; ++x) near |= labels.at(x, y) != labels.at(x + 1, y);
      hit += near;
    }
    CHECK(hit >= 95);
  }

  TEST_CASE("parameter checks") {
    const auto lab = rgb_to_lab(testing::make_constant_image(30, 30));
    SlicParams p;
    p.region_size = 30;
    CHECK_THROWS_AS(slic(lab, p), Error);
    try {
      slic(lab, p);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parameter);
    }
    p.region_size = 10;
    p.iterations = 0;
    CHECK_THROWS_AS(slic(lab, p), Error);
    p.iterations = 1;
    const auto one = slic(lab, p);
    for (int v : one.labels) CHECK((v >= 0 && v < one.count));
    p.iterations = 10;
    p.compactness = 0;
    CHECK_THROWS_AS(slic(lab, p), Error);
  }

  TEST_CASE("region size for ground sample distance") {
    CHECK(region_size_for_gsd(0.05) == 20);
    CHECK(region_size_for_gsd(0.1) == 10);
    CHECK_THROWS_AS(region_size_for_gsd(0.0), Error);
  }

  TEST_CASE("connectivity: identity, stray pixel and checkerboard") {
    const auto blocks = make_labels(4, 2, {0, 0, 1, 1, 0, 0, 1, 1});
    CHECK(same_partition(enforce_connectivity(blocks, 2).labels, blocks.labels));

    std::vector<int> stray(25, 1);
    stray[12] = 0;
    const auto fixed = enforce_connectivity(make_labels(5, 5, stray), 2);
    CHECK(fixed.count == 1);

    std::vector<int> board(16);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) board[y * 4 + x] = (x + y) % 2;
    const auto merged = enforce_connectivity(make_labels(4, 4, board), 2);
    CHECK(merged.count == 1);
    for (int v : merged.labels) CHECK(v == 0);

    // Two separate components sharing one label are split.
    const auto split = enforce_connectivity(make_labels(5, 1, {0, 0, 1, 0, 0}), 1);
    CHECK(split.count == 3);
  }

  TEST_CASE("outlines of a two-label split") {
    std::vector<int> v(6 * 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 6; ++x) v[y * 6 + x] = x >= 3;
    auto m = make_labels(6, 4, v);
    m.transform = parse_world_file("0.05\n0\n0\n-0.05\n100\n200\n");
    const auto lines = superpixel_outlines(m);
    REQUIRE(lines.size() == 1);
    for (const Point& p : lines[0].points) CHECK(p.x == doctest::Approx(100.15));
    CHECK(polyline_length(lines[0]) == doctest::Approx(0.2));

    CHECK(superpixel_outlines(make_labels(3, 3, std::vector<int>(9, 0))).empty());
  }

  TEST_CASE("four blocks meet at one junction") {
    const auto m = make_labels(4, 4, {0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3});
    const auto lines = superpixel_outlines(m);
    REQUIRE(lines.size() == 4);
    for (const auto& l : lines) {
      const bool touches = l.points.front() == Point{2, 2} || l.points.back() == Point{2, 2};
      CHECK(touches);
      CHECK(polyline_length(l) == doctest::Approx(2.0));
    }
  }

  TEST_CASE("outline cracks match a brute-force crack scan") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const int w = 6 + static_cast<int>(rng() % 10), h = 6 + static_cast<int>(rng() % 10);
      const int seeds = 2 + static_cast<int>(rng() % 6);
      std::vector<std::pair<int, int>> s;
      for (int i = 0; i < seeds; ++i) s.emplace_back(rng() % w, rng() % h);
      std::vector<int> v(w * h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          int best = 0;
          for (int i = 1; i < seeds; ++i)
            if (std::hypot(x - s[i].first, y - s[i].second) < std::hypot(x - s[best].first, y - s[best].second))
              best = i;
          v[y * w + x] = best;
        }
      auto m = enforce_connectivity(make_labels(w, h, v), 1);
      m.transform = make_labels(1, 1, {0}).transform;
      CHECK(outline_cracks(superpixel_outlines(m)) == brute_cracks(m));
    }
  }

  TEST_CASE("higher compactness shortens boundaries on smooth noise") {
    const auto lab = rgb_to_lab(noisy_fixture());
    auto length_for = [&](double m) {
      SlicParams p;
      p.region_size = 12;
      p.compactness = m;
      return outline_length(superpixel_outlines(slic(lab, p)));
    };
    const double l1 = length_for(1), l10 = length_for(10), l40 = length_for(40);
    CHECK(l10 <= l1);
    CHECK(l40 <= l10);
  }

  TEST_CASE("slic is deterministic down to the PNG bytes") {
    const auto lab = rgb_to_lab(noisy_fixture());
    SlicParams p;
    p.region_size = 15;
    const auto a = slic(lab, p), b = slic(lab, p);
    CHECK(a.labels == b.labels);
    const fs::path dir = fs::temp_directory_path() / ("boundline_sp_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    write_label_png(dir / "a.png", a);
    write_label_png(dir / "b.png", b);
    CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
    fs::remove_all(dir);
  }
}
