#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "boundline/geojson.hpp"
#include "boundline/raster.hpp"
#include "boundline/service.hpp"
#include "synthetic.hpp"

using namespace boundline;
namespace fs = std::filesystem;

namespace {

// Three vertical color bands; the two edges are 3 m apart.
void write_fixture(const fs::path& images) {
  fs::create_directories(images);
  ImageGrid img = testing::make_constant_image(160, 96);
  const std::uint8_t colors[3][3] = {{200, 60, 50}, {40, 90, 200}, {60, 180, 70}};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int band = x < 50 ? 0 : (x < 110 ? 1 : 2);
      std::copy(colors[band], colors[band] + 3, img.pixel(x, y));
    }
  write_png_rgb(images / "bands.png", img);
  write_world_file(images / "bands.pgw", parse_world_file("0.05\n0\n0\n-0.05\n1000\n2000\n"));
}

Json fast_params() {
  return {{"cues", {{"spectral", false}, {"radii", {2, 4}}, {"orientations", 4}, {"textons", 8}}},
          {"slic", {{"region_size", 12}}},
          {"buffer_radius_m", 0.3}};
}

struct Server {
  fs::path dir;
  std::unique_ptr<Service> service;
  std::thread thread;
  int port = 0;

  explicit Server(fs::path d) : dir(std::move(d)) { start(); }
  ~Server() { shutdown(); }

  void start() {
    ServiceOptions opt;
    opt.data_dir = dir;
    service = std::make_unique<Service>(opt);
    port = service->bind("127.0.0.1", 0);
    thread = std::thread([this] { service->run(); });
  }
  void shutdown() {
    if (!service) return;
    service->wait_idle();
    service->stop();
    thread.join();
    service.reset();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

struct Reply {
  int status = 0;
  Json body;
  std::string content_type;
};

Reply call(httplib::Client& c, const std::string& method, const std::string& path, const Json& body = nullptr) {
  httplib::Result r;
  const std::string text = body.is_null() ? std::string() : body.dump();
  if (method == "GET") r = c.Get(path);
  else if (method == "POST") r = c.Post(path, text, "application/json");
  else if (method == "PUT") r = c.Put(path, text, "application/json");
  else r = c.Delete(path);
  REQUIRE(r);
  Reply out;
  out.status = r->status;
  out.content_type = r->get_header_value("Content-Type");
  if (!r->body.empty()) out.body = Json::parse(r->body, nullptr, false);
  return out;
}

std::string create(httplib::Client& c, Json params = fast_params()) {
  params["image"] = "bands.png";
  const auto r = call(c, "POST", "/sessions", params);
  REQUIRE(r.status == 202);
  return r.body["session_id"].get<std::string>();
}

// Node ids grouped by connected component of the exported network.
std::vector<std::vector<int>> components(const Json& network) {
  std::map<int, int> parent;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& f : network["features"])
    if (f["properties"]["kind"] == "node") parent[f["properties"]["node_id"].get<int>()] = f["properties"]["node_id"].get<int>();
  for (const auto& f : network["features"])
    if (f["properties"]["kind"] == "edge")
      parent[find(f["properties"]["node_a"].get<int>())] = find(f["properties"]["node_b"].get<int>());
  std::map<int, std::vector<int>> groups;
  for (auto& [id, p] : parent) groups[find(id)].push_back(id);
  std::vector<std::vector<int>> out;
  for (auto& [root, ids] : groups) out.push_back(ids);
  return out;
}

fs::path temp_dir() {
  auto p = fs::temp_directory_path() / ("boundline_svc_" + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("session lifecycle over HTTP") {
    const fs::path dir = temp_dir();
    write_fixture(dir / "images");
    Server server(dir);
    auto c = server.client();

    CHECK(call(c, "GET", "/health").body["status"] == "ok");

    // Request validation.
    CHECK(call(c, "POST", "/sessions", Json{{"image", "missing.png"}}).status == 404);
    CHECK(call(c, "POST", "/sessions", Json{{"image", "bands.png"}, {"bogus", 1}}).status == 400);
    CHECK(call(c, "POST", "/sessions", Json{{"image", "bands.png"}, {"slic", {{"iterations", 0}}}}).status == 400);
    {
      const auto bad = c.Post("/sessions", "{nope", "application/json");
      REQUIRE(bad);
      CHECK(bad->status == 400);
    }
    CHECK(call(c, "GET", "/sessions/ffffffffffffffff").status == 404);

    // A default-parameter session is still running right after creation.
    const std::string busy = create(c, Json::object());
    const auto early = call(c, "GET", "/sessions/" + busy + "/network");
    CHECK(early.status == 409);

    const std::string id = create(c);
    const std::string other = create(c);
    CHECK(id != other);
    server.service->wait_idle();

    const auto summary = call(c, "GET", "/sessions/" + id);
    REQUIRE(summary.status == 200);
    CHECK(summary.body["status"] == "ready");
    CHECK(summary.body["accepted_count"] == 0);

    const auto net = call(c, "GET", "/sessions/" + id + "/network");
    REQUIRE(net.status == 200);
    CHECK(net.content_type.find("geo+json") != std::string::npos);
    CHECK(call(c, "GET", "/sessions/" + id + "/network").body == net.body);
    const auto comps = components(net.body);
    REQUIRE(comps.size() >= 2);
    const auto& first = comps[0];
    REQUIRE(first.size() >= 2);

    // Candidate errors.
    CHECK(call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0]}}}).status == 400);
    CHECK(call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0], "x"}}}).status == 400);
    CHECK(call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0], 99999}}}).status == 404);
    const auto nopath = call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0], comps[1][0]}}});
    CHECK(nopath.status == 422);
    CHECK(nopath.body["error"] == "no_path");

    // Propose, simplify with zero tolerance, delete twice.
    const auto cand = call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0], first[1]}}});
    REQUIRE(cand.status == 200);
    const std::string color = cand.body["color"];
    CHECK((color == "red" || color == "yellow" || color == "green"));
    const auto same = call(c, "POST", "/sessions/" + id + "/candidate/simplify", Json{{"tolerance_m", 0.0}});
    REQUIRE(same.status == 200);
    CHECK(same.body["geometry"] == cand.body["geometry"]);
    CHECK(call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0], first[1]}}}).status == 409);
    CHECK(call(c, "DELETE", "/sessions/" + id + "/candidate").status == 200);
    CHECK(call(c, "DELETE", "/sessions/" + id + "/candidate").status == 409);
    CHECK(call(c, "POST", "/sessions/" + id + "/candidate/accept").status == 409);

    // Manual geometry edit rescoring.
    call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0], first[1]}}});
    const Json bent = {{"type", "LineString"}, {"coordinates", {{1000, 1995}, {1003, 1995}, {1003, 1999}}}};
    const auto edited = call(c, "PUT", "/sessions/" + id + "/candidate/geometry", bent);
    REQUIRE(edited.status == 200);
    CHECK(edited.body["color"] == "green");
    CHECK(edited.body["sinuosity"].get<double>() == doctest::Approx(5.0 / 7.0));
    CHECK(call(c, "PUT", "/sessions/" + id + "/candidate/geometry", Json{{"type", "Point"}, {"coordinates", {0, 0}}}).status ==
          400);
    call(c, "DELETE", "/sessions/" + id + "/candidate");

    // Accept.
    call(c, "POST", "/sessions/" + id + "/candidate", Json{{"node_ids", {first[0], first[1]}}});
    const auto acc = call(c, "POST", "/sessions/" + id + "/candidate/accept");
    REQUIRE(acc.status == 200);
    CHECK(acc.body["accepted_count"] == 1);
    CHECK(acc.body["suggested_next_node"] == first[1]);
    const auto bounds = call(c, "GET", "/sessions/" + id + "/boundaries");
    REQUIRE(bounds.status == 200);
    CHECK(bounds.body["features"].size() == 1);
    CHECK(call(c, "GET", "/sessions/" + other + "/boundaries").body["features"].empty());

    // Assessment of the accepted line against itself.
    const auto self = call(c, "POST", "/assess", Json{{"delineated", {{"session_id", id}}}, {"reference", bounds.body}});
    REQUIRE(self.status == 200);
    CHECK(self.body["bands"][0]["tp_percent"] == 100.0);
    CHECK(self.body["bands"][0]["band_lo_m"] == "0.0");
    const Json g1 = {{"origin_x", 1000}, {"origin_y", 2000}, {"gsd", 0.05}, {"width", 160}, {"height", 96}};
    Json g2 = g1;
    g2["width"] = 150;
    const auto mismatch = call(c, "POST", "/assess",
                               Json{{"delineated", bounds.body}, {"reference", bounds.body}, {"delineated_grid", g1},
                                    {"reference_grid", g2}});
    CHECK(mismatch.status == 400);
    CHECK(call(c, "POST", "/assess", Json{{"delineated", bounds.body}}).status == 400);

    // Concurrent conflicting mutations: one wins, the other gets 409.
    std::vector<int> statuses(2);
    {
      std::vector<std::thread> threads;
      for (int i = 0; i < 2; ++i)
        threads.emplace_back([&, i] {
          auto local = server.client();
          statuses[i] = call(local, "POST", "/sessions/" + other + "/candidate", Json{{"node_ids", {first[0], first[1]}}}).status;
        });
      for (auto& t : threads) t.join();
    }
    std::sort(statuses.begin(), statuses.end());
    CHECK(statuses == std::vector<int>{200, 409});

    const auto listing = call(c, "GET", "/sessions");
    CHECK(listing.status == 200);

    // Snapshots survive a restart.
    server.shutdown();
    CHECK(fs::exists(dir / "sessions" / (id + ".json")));
    server.start();
    auto c2 = server.client();
    const auto reloaded = call(c2, "GET", "/sessions/" + id);
    REQUIRE(reloaded.status == 200);
    CHECK(reloaded.body["accepted_count"] == 1);
    CHECK(reloaded.body["suggested_next_node"] == first[1]);
    CHECK(call(c2, "GET", "/sessions/" + other).body["candidate"].is_object());
    CHECK(call(c2, "GET", "/sessions/" + busy).body["status"] == "ready");
    server.shutdown();
    fs::remove_all(dir);
  }

  TEST_CASE("binding a taken port is an I/O error") {
    const fs::path dir = temp_dir();
    Server server(dir);
    ServiceOptions opt;
    opt.data_dir = dir;
    Service second(opt);
    try {
      second.bind("127.0.0.1", server.port);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
    }
    server.shutdown();
    fs::remove_all(dir);
  }
}
