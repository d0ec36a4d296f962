#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "boundline/assessment.hpp"
#include "boundline/error.hpp"
#include "oracles.hpp"

using namespace boundline;

namespace {

Polyline line(std::initializer_list<Point> pts) { return Polyline{std::vector<Point>(pts)}; }

// Origin at (0, 10), 0.05 m pixels, north up.
GridSpec grid(int w = 60, int h = 60) {
  GridSpec g;
  g.transform.origin_x = 0.0;
  g.transform.origin_y = 10.0;
  g.transform.pixel_size_x = 0.05;
  g.transform.pixel_size_y = -0.05;
  g.width = w;
  g.height = h;
  return g;
}

Point center(const GridSpec& g, int col, int row) { return g.transform.pixel_to_world(col, row); }

std::vector<std::string> csv_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  for (std::string r; std::getline(in, r);) rows.push_back(r);
  return rows;
}

}  // namespace

TEST_SUITE("assessment") {
  TEST_CASE("a 1 m line covers 21 pixels in one row") {
    const auto g = grid();
    const Point a = center(g, 5, 10);
    const auto r = rasterize_lines(std::vector<Polyline>{line({a, a + Point{1.0, 0.0}})}, g);
    CHECK(r.count() == 21);
    for (int x = 5; x <= 25; ++x) CHECK(r.at(x, 10) == 1);
  }

  TEST_CASE("empty and out-of-grid input give an empty raster") {
    const auto g = grid();
    CHECK(rasterize_lines(std::vector<Polyline>{}, g).count() == 0);
    CHECK(rasterize_lines(std::vector<Polyline>{line({{100, 100}, {101, 101}})}, g).count() == 0);
  }

  TEST_CASE("diagonal follows the Bresenham cells") {
    const auto g = grid(12, 12);
    const auto r = rasterize_lines(std::vector<Polyline>{line({center(g, 0, 0), center(g, 11, 11)})}, g);
    CHECK(r.count() == 12);
    for (int i = 0; i < 12; ++i) CHECK(r.at(i, i) == 1);
  }

  TEST_CASE("distance transform basics") {
    const auto g = grid(20, 5);
    const auto r = rasterize_lines(std::vector<Polyline>{line({center(g, 2, 0), center(g, 2, 4)})}, g);
    const auto d = distance_transform(r);
    CHECK(d[2] == 0.0);
    CHECK(d[2 * 20 + 6] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(distance_transform(rasterize_lines(std::vector<Polyline>{}, g)), Error);
  }

  TEST_CASE("distance transform matches brute force on random masks") {
    std::mt19937 rng(51);
    for (int trial = 0; trial < 20; ++trial) {
      BinaryRaster r;
      r.grid = grid(32, 32);
      r.cells.assign(32 * 32, 0);
      const int set = 1 + static_cast<int>(rng() % 12);
      for (int i = 0; i < set; ++i) r.cells[rng() % r.cells.size()] = 1;
      const auto fast = distance_transform(r);
      const auto slow = testing::brute_distance(r);
      for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("identical rasters put everything in the first band") {
    const auto g = grid();
    const std::vector<Polyline> lines{line({center(g, 5, 5), center(g, 40, 30)})};
    const auto r = rasterize_lines(lines, g);
    const auto s = confusion_series(r, r);
    for (const auto& c : s.counts) {
      CHECK(c.fp == 0);
      CHECK(c.fn == 0);
      CHECK(c.tp == r.count());
    }
    const auto rows = csv_rows(report_csv(s));
    CHECK(rows[0] == "band_lo_m,band_hi_m,tp_pixels,tp_percent");
    CHECK(rows[1] == "0.0,0.2," + std::to_string(r.count()) + ",100.0");
    CHECK(rows.back() == "total,," + std::to_string(r.count()) + ",100.0");
    CHECK(report_text(s).find("100.0% within 0.0 - 0.2 m") != std::string::npos);
  }

  TEST_CASE("half-meter offset lands in the 0.41 - 0.6 band") {
    const auto g = grid();
    const Point a = center(g, 5, 40), b = center(g, 45, 40);
    const Point up{0.0, 0.5};
    const auto ref = rasterize_lines(std::vector<Polyline>{line({a, b})}, g);
    const auto del = rasterize_lines(std::vector<Polyline>{line({a + up, b + up})}, g);
    const auto s = confusion_series(del, ref);
    for (const auto& c : s.counts) {
      if (c.distance <= 0.4 + 1e-12) CHECK(c.tp == 0);
      else CHECK(c.tp == del.count());
    }
    const auto rows = csv_rows(report_csv(s));
    bool found = false;
    for (const auto& r : rows) found |= r == "0.41,0.6," + std::to_string(del.count()) + ",100.0";
    CHECK(found);
  }

  TEST_CASE("empty delineation matches nothing") {
    const auto g = grid();
    const auto ref = rasterize_lines(std::vector<Polyline>{line({center(g, 1, 1), center(g, 30, 1)})}, g);
    const auto del = rasterize_lines(std::vector<Polyline>{}, g);
    const auto s = confusion_series(del, ref);
    for (const auto& c : s.counts) {
      CHECK(c.tp == 0);
      CHECK(c.fn == ref.count());
    }
    CHECK(s.matched() == 0);
  }

  TEST_CASE("grid mismatch is a dimension error") {
    const auto a = rasterize_lines(std::vector<Polyline>{}, grid(10, 10));
    const auto b = rasterize_lines(std::vector<Polyline>{}, grid(11, 10));
    try {
      confusion_series(a, b);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Dimension);
    }
  }

  TEST_CASE("distances must increase") {
    AssessmentConfig cfg;
    cfg.distances = {0.0, 0.4, 0.2};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.distances = {-0.1, 0.2};
    CHECK_THROWS_AS(cfg.validate(), Error);
  }

  TEST_CASE("confusion counts match brute force and TP is monotone") {
    std::mt19937 rng(52);
    std::uniform_real_distribution<double> u(0.1, 2.9);
    for (int trial = 0; trial < 20; ++trial) {
      const auto g = grid(60, 60);
      auto random_lines = [&] {
        std::vector<Polyline> out;
        for (int i = 0; i < 3; ++i) out.push_back(line({{u(rng), 7.0 + u(rng)}, {u(rng), 7.0 + u(rng)}}));
        return out;
      };
      const auto del = rasterize_lines(random_lines(), g);
      const auto ref = rasterize_lines(random_lines(), g);
      const AssessmentConfig cfg;
      const auto s = confusion_series(del, ref, cfg);
      const auto oracle = testing::brute_confusion(del, ref, cfg.distances);
      std::int64_t prev = -1;
      for (std::size_t i = 0; i < s.counts.size(); ++i) {
        CHECK(s.counts[i].tp == oracle[i].tp);
        CHECK(s.counts[i].fp == oracle[i].fp);
        CHECK(s.counts[i].fn == oracle[i].fn);
        CHECK(s.counts[i].tn == oracle[i].tn);
        CHECK(s.counts[i].tp >= prev);
        prev = s.counts[i].tp;
      }
      std::int64_t banded = 0;
      for (const auto& b : s.bands) banded += b.tp;
      CHECK(banded == s.matched());
    }
  }

  TEST_CASE("meter labels") {
    CHECK(format_meters(0.0) == "0.0");
    CHECK(format_meters(0.2) == "0.2");
    CHECK(format_meters(0.41) == "0.41");
    CHECK(format_meters(1.0) == "1.0");
  }

  TEST_CASE("grid for bounds is aligned and padded") {
    const auto g = grid_for_bounds(BBox{1.01, 2.02, 2.0, 3.0}, 0.05, 2);
    const double k = g.transform.origin_x / 0.05;
    CHECK(std::abs(k - std::round(k)) < 1e-6);
    CHECK(g.transform.origin_x <= 1.01 - 2 * 0.05 + 1e-9);
    CHECK(g.width >= 20 + 4);
    CHECK(g.height >= 20 + 4);
  }
}
