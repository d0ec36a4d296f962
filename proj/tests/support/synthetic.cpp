#include "synthetic.hpp"

#include <algorithm>

namespace boundline::testing {

namespace {

GeoTransform north_up(double gsd) {
  GeoTransform t;
  t.origin_x = 500000.0;
  t.origin_y = 5800000.0;
  t.pixel_size_x = gsd;
  t.pixel_size_y = -gsd;
  return t;
}

}  // namespace

ParcelScene make_parcel_scene(std::uint32_t seed) {
  constexpr int kSize = 512;
  constexpr int kCol1 = 170, kCol2 = 340;
  constexpr int kRowSplit[3] = {250, 300, 200};
  constexpr std::uint8_t kColors[6][3] = {{150, 170, 90},  {200, 180, 120}, {90, 130, 60},
                                          {170, 120, 80},  {120, 150, 140}, {210, 200, 160}};
  ParcelScene s;
  s.image.width = s.image.height = kSize;
  s.image.transform = north_up(0.05);
  s.image.rgb.resize(static_cast<std::size_t>(kSize) * kSize * 3);
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, 4.0);
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x) {
      const int col = x < kCol1 ? 0 : (x < kCol2 ? 1 : 2);
      const int parcel = 2 * col + (y < kRowSplit[col] ? 0 : 1);
      auto* px = s.image.pixel(x, y);
      for (int c = 0; c < 3; ++c)
        px[c] = static_cast<std::uint8_t>(std::clamp(kColors[parcel][c] + noise(rng), 0.0, 255.0));
    }

  const auto& t = s.image.transform;
  auto seg = [&](int x0, int y0, int x1, int y1) {
    Polyline l;
    l.points = {t.corner_to_world(x0, y0), t.corner_to_world(x1, y1)};
    l.id = static_cast<std::int64_t>(s.boundaries.size());
    s.boundaries.push_back(l);
  };
  seg(kCol1, 0, kCol1, 250);
  seg(kCol1, 250, kCol1, 300);
  seg(kCol1, 300, kCol1, kSize);
  seg(kCol2, 0, kCol2, 200);
  seg(kCol2, 200, kCol2, 300);
  seg(kCol2, 300, kCol2, kSize);
  seg(0, 250, kCol1, 250);
  seg(kCol1, 300, kCol2, 300);
  seg(kCol2, 200, kSize, 200);
  return s;
}

ImageGrid make_split_image(int width, int height, int split, double gsd) {
  ImageGrid img;
  img.width = width;
  img.height = height;
  img.transform = north_up(gsd);
  img.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      auto* p = img.pixel(x, y);
      if (x < split) {
        p[0] = 200; p[1] = 60; p[2] = 50;
      } else {
        p[0] = 40; p[1] = 90; p[2] = 200;
      }
    }
  return img;
}

ImageGrid make_constant_image(int width, int height, double gsd) {
  ImageGrid img;
  img.width = width;
  img.height = height;
  img.transform = north_up(gsd);
  img.rgb.assign(static_cast<std::size_t>(width) * height * 3, 128);
  return img;
}

LineNetwork random_network(std::mt19937& rng, int max_nodes, double edge_probability) {
  std::uniform_int_distribution<int> count(2, max_nodes);
  std::uniform_real_distribution<double> coord(0.0, 100.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 20);
  LineNetwork net;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) net.nodes.push_back({coord(rng), coord(rng)});
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (unit(rng) < edge_probability) {
        NetworkEdge e;
        e.id = static_cast<int>(net.edges.size());
        e.node_a = a;
        e.node_b = b;
        e.geometry.points = {net.nodes[a], net.nodes[b]};
        e.length = static_cast<double>(len(rng));
        net.edges.push_back(e);
      }
  return net;
}

Polyline random_polyline(std::mt19937& rng, int n, double scale) {
  std::uniform_real_distribution<double> coord(-scale, scale);
  Polyline p;
  while (static_cast<int>(p.points.size()) < n) {
    const Point q{coord(rng), coord(rng)};
    if (p.points.empty() || p.points.back() != q) p.points.push_back(q);
  }
  return p;
}

}  // namespace boundline::testing
