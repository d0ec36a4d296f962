#include <doctest.h>

#include <httplib.h>
#include <signal.h>
#include <spawn.h>
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <thread>

#include "boundline/geojson.hpp"
#include "boundline/raster.hpp"
#include "synthetic.hpp"

extern char** environ;

using namespace boundline;
namespace fs = std::filesystem;

namespace {

const std::string kCli = BOUNDLINE_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("boundline_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = "timeout 120 " + kCli + " -q " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

void write_image(const fs::path& dir, const std::string& name, const ImageGrid& img) {
  write_png_rgb(dir / (name + ".png"), img);
  write_text(dir / (name + ".pgw"), "0.05\n0\n0\n-0.05\n500\n800\n");
}

// Dark disc on a light background.
ImageGrid disc_image() {
  ImageGrid img = testing::make_constant_image(96, 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      const bool inside = std::hypot(x - 47.5, y - 47.5) < 24.0;
      auto* p = img.pixel(x, y);
      p[0] = inside ? 40 : 220;
      p[1] = inside ? 60 : 210;
      p[2] = inside ? 90 : 190;
    }
  return img;
}

std::string geojson_lines(const std::vector<Polyline>& lines) { return lines_to_geojson(lines).dump(); }

Polyline line(std::initializer_list<Point> pts) { return Polyline{std::vector<Point>(pts)}; }

double total_length(const std::vector<Polyline>& lines) {
  double s = 0.0;
  for (const auto& l : lines) s += polyline_length(l);
  return s;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("contours: constant image, disc and missing world file") {
    TempDir t;
    write_image(t.path, "flat", testing::make_constant_image(64, 64));
    write_image(t.path, "disc", disc_image());
    const auto log = t.path / "log.txt";

    REQUIRE(run("contours " + (t.path / "flat.png").string() + " " + (t.path / "flat.pgw").string() + " -o " +
                    (t.path / "flat_out").string(),
                log) == 0);
    CHECK(lines_from_geojson(read_json_file(t.path / "flat_out" / "gpb_outlines.geojson")).empty());
    CHECK(fs::exists(t.path / "flat_out" / "gpb.png"));
    CHECK(fs::exists(t.path / "flat_out" / "binary.pgw"));

    REQUIRE(run("contours " + (t.path / "disc.png").string() + " " + (t.path / "disc.pgw").string() + " -o " +
                    (t.path / "disc_out").string(),
                log) == 0);
    const auto outlines = lines_from_geojson(read_json_file(t.path / "disc_out" / "gpb_outlines.geojson"));
    REQUIRE(outlines.size() == 1);
    CHECK(outlines[0].closed());

    CHECK(run("contours " + (t.path / "disc.png").string() + " " + (t.path / "nope.pgw").string() + " -o " +
                  (t.path / "x").string(),
              log) == 2);
    CHECK(run("contours " + (t.path / "disc.png").string() + " " + (t.path / "disc.pgw").string() + " -o " +
                  (t.path / "x").string() + " --orientations 0",
              log) == 3);
  }

  TEST_CASE("slic: grid outlines, oversized seeds, determinism") {
    TempDir t;
    write_image(t.path, "flat", testing::make_constant_image(100, 100));
    const auto log = t.path / "log.txt";
    const std::string in = (t.path / "flat.png").string() + " " + (t.path / "flat.pgw").string();
    REQUIRE(run("slic " + in + " --region-size 20 -o " + (t.path / "a").string(), log) == 0);
    REQUIRE(run("slic " + in + " --region-size 20 -o " + (t.path / "b").string(), log) == 0);
    const auto outlines = lines_from_geojson(read_json_file(t.path / "a" / "slic_outlines.geojson"));
    // Four interior grid lines each way, 5 m long.
    CHECK(total_length(outlines) == doctest::Approx(40.0));
    CHECK(slurp(t.path / "a" / "slic_labels.png") == slurp(t.path / "b" / "slic_labels.png"));
    CHECK(slurp(t.path / "a" / "slic_outlines.geojson") == slurp(t.path / "b" / "slic_outlines.geojson"));
    CHECK(run("slic " + in + " --region-size 200 -o " + (t.path / "c").string(), log) == 3);
  }

  TEST_CASE("combine: crossing, disjoint and zero radius") {
    TempDir t;
    const auto log = t.path / "log.txt";
    write_text(t.path / "cross.geojson", geojson_lines({line({{-10, 0}, {10, 0}}), line({{0, -10}, {0, 10}})}));
    write_text(t.path / "far.geojson", geojson_lines({line({{100, 100}, {110, 100}})}));

    REQUIRE(run("combine --slic " + (t.path / "cross.geojson").string() + " --gpb " + (t.path / "cross.geojson").string() +
                    " --radius 5 -o " + (t.path / "plus.geojson").string(),
                log) == 0);
    const auto plus = network_from_geojson(read_json_file(t.path / "plus.geojson"));
    CHECK(plus.edges.size() == 4);
    CHECK(plus.nodes.size() == 5);

    const std::string warn_cmd = kCli + " combine --slic " + (t.path / "cross.geojson").string() + " --gpb " +
                                 (t.path / "far.geojson").string() + " --radius 5 -o " +
                                 (t.path / "empty.geojson").string() + " >" + log.string() + " 2>&1";
    REQUIRE(WEXITSTATUS(std::system(warn_cmd.c_str())) == 0);
    CHECK(network_from_geojson(read_json_file(t.path / "empty.geojson")).edges.empty());
    CHECK(slurp(log).find("warn") != std::string::npos);

    REQUIRE(run("combine --slic " + (t.path / "cross.geojson").string() + " --gpb " + (t.path / "cross.geojson").string() +
                    " --radius 0 -o " + (t.path / "zero.geojson").string(),
                log) == 0);
    const auto zero = network_from_geojson(read_json_file(t.path / "zero.geojson"));
    const std::vector<Polyline> cross{line({{-10, 0}, {10, 0}}), line({{0, -10}, {0, 10}})};
    CHECK(zero.total_length() == doctest::Approx(total_length(clean_topology(cross))));
    CHECK(zero.edges.size() == 4);

    CHECK(run("combine --slic " + (t.path / "missing.geojson").string() + " --gpb " + (t.path / "cross.geojson").string() +
                  " -o " + (t.path / "m.geojson").string(),
              log) == 2);
  }

  TEST_CASE("assess: identical, offset and empty layers") {
    TempDir t;
    const auto log = t.path / "log.txt";
    const Point a{500.025, 799.975 - 2.0}, b{502.025, 799.975 - 2.0};
    write_text(t.path / "ref.geojson", geojson_lines({line({a, b})}));
    write_text(t.path / "off.geojson", geojson_lines({line({a + Point{0, 0.5}, b + Point{0, 0.5}})}));
    write_text(t.path / "none.geojson", R"({"type":"FeatureCollection","features":[]})");
    const std::string ref = " --reference " + (t.path / "ref.geojson").string();

    REQUIRE(run("assess --delineated " + (t.path / "ref.geojson").string() + ref + " -o " + (t.path / "same.csv").string(),
                log) == 0);
    CHECK(slurp(t.path / "same.csv").find("\n0.0,0.2,41,100.0\n") != std::string::npos);
    CHECK(fs::exists(t.path / "same.json"));

    REQUIRE(run("assess --delineated " + (t.path / "off.geojson").string() + ref + " -o " + (t.path / "off.csv").string(),
                log) == 0);
    CHECK(slurp(t.path / "off.csv").find("\n0.41,0.6,41,100.0\n") != std::string::npos);

    REQUIRE(run("assess --delineated " + (t.path / "none.geojson").string() + ref + " -o " + (t.path / "none.csv").string(),
                log) == 0);
    const auto report = read_json_file(t.path / "none.json");
    for (const auto& c : report["counts"]) CHECK(c["tp"] == 0);

    CHECK(run("assess --delineated " + (t.path / "ref.geojson").string() + ref + " --distances 0.4 0.2 -o " +
                  (t.path / "bad.csv").string(),
              log) == 3);
  }

  TEST_CASE("pipeline reruns are byte-identical") {
    TempDir t;
    write_image(t.path, "split", testing::make_split_image(80, 64, 40));
    const auto log = t.path / "log.txt";
    const std::string in = (t.path / "split.png").string() + " " + (t.path / "split.pgw").string() +
                           " --no-spectral --radii 2 4 --orientations 4 --textons 8 --region-size 10";
    REQUIRE(run("pipeline " + in + " -o " + (t.path / "a").string(), log) == 0);
    REQUIRE(run("pipeline " + in + " -o " + (t.path / "b").string(), log) == 0);
    for (const char* f : {"network.geojson", "gpb.png", "slic_labels.png", "gpb_outlines.geojson"})
      CHECK(slurp(t.path / "a" / f) == slurp(t.path / "b" / f));
    CHECK_FALSE(network_from_geojson(read_json_file(t.path / "a" / "network.geojson")).edges.empty());
  }

  TEST_CASE("serve: health, busy port and flush on SIGTERM") {
    TempDir t;
    const std::string data = (t.path / "data").string();
    // Pick a free port by binding and releasing it.
    int port = 0;
    {
      const int fd = socket(AF_INET, SOCK_STREAM, 0);
      sockaddr_in addr{};
      addr.sin_family = AF_INET;
      addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
      socklen_t len = sizeof addr;
      if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), len) == 0 &&
          getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0)
        port = ntohs(addr.sin_port);
      close(fd);
    }
    REQUIRE(port > 0);
    const std::string port_s = std::to_string(port);
    std::vector<std::string> argv_s{kCli, "-q", "serve", "--host", "127.0.0.1", "--port", port_s, "--data-dir", data};
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());
    argv.push_back(nullptr);
    pid_t pid = 0;
    REQUIRE(posix_spawn(&pid, kCli.c_str(), nullptr, nullptr, argv.data(), environ) == 0);

    httplib::Client c("127.0.0.1", port);
    bool up = false;
    for (int i = 0; i < 100 && !up; ++i) {
      auto r = c.Get("/health");
      up = r && r->status == 200 && r->body.find("ok") != std::string::npos;
      if (!up) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    if (!up) kill(pid, SIGKILL);
    REQUIRE(up);

    write_image(t.path, "split", testing::make_split_image(64, 48, 30));
    Json body = {{"image", (t.path / "split.png").string()},
                 {"cues", {{"spectral", false}, {"radii", {2, 4}}, {"orientations", 4}, {"textons", 8}}},
                 {"slic", {{"region_size", 10}}}};
    auto created = c.Post("/sessions", body.dump(), "application/json");
    REQUIRE(created);
    CHECK(created->status == 202);
    const std::string id = Json::parse(created->body)["session_id"];

    CHECK(run("serve --host 127.0.0.1 --port " + port_s + " --data-dir " + data, t.path / "busy.txt") == 2);

    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    const fs::path snap = t.path / "data" / "sessions" / (id + ".json");
    REQUIRE(fs::exists(snap));
    CHECK(read_json_file(snap)["status"] == "ready");
  }
}
