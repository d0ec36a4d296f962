#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "boundline/assessment.hpp"
#include "boundline/contours.hpp"
#include "boundline/error.hpp"
#include "boundline/geojson.hpp"
#include "boundline/pipeline.hpp"
#include "boundline/raster.hpp"
#include "boundline/service.hpp"
#include "boundline/superpixels.hpp"
#include "boundline/vectornet.hpp"

namespace fs = std::filesystem;
using namespace boundline;

namespace {

bool g_json_logs = false;

std::string log_text(const std::string& msg) {
  if (!g_json_logs) return msg;
  const std::string quoted = Json(msg).dump();
  return quoted.substr(1, quoted.size() - 2);
}

void info(const std::string& msg) { spdlog::info(log_text(msg)); }
void warn(const std::string& msg) { spdlog::warn(log_text(msg)); }

void setup_logging(bool json, bool verbose, bool quiet) {
  g_json_logs = json;
  auto logger = spdlog::stderr_color_mt("boundline");
  spdlog::set_default_logger(logger);
  if (json)
    spdlog::set_pattern(R"({"time":"%Y-%m-%dT%H:%M:%S.%e","level":"%l","message":"%v"})");
  else
    spdlog::set_pattern("[%l] %v");
  spdlog::set_level(quiet ? spdlog::level::warn : (verbose ? spdlog::level::debug : spdlog::level::info));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::vector<Polyline> read_lines(const fs::path& path, bool exact_only = false) {
  return lines_from_geojson(read_json_file(path), ReadOptions{exact_only});
}

struct CueOptions {
  double threshold = 0.3;
  bool no_spectral = false;
  int orientations = 8;
  std::vector<int> radii{3, 6, 10};
  int max_dim = kDefaultMaxDim;
  int textons = 32;
  int bins = 25;

  void add(CLI::App* app) {
    app->add_option("--threshold", threshold, "Boundary strength threshold for the binary map")->capture_default_str();
    app->add_flag("--no-spectral", no_spectral, "Skip spectral globalization (local cues only)");
    app->add_option("--orientations", orientations, "Number of gradient orientations")->capture_default_str();
    app->add_option("--radii", radii, "Half-disc radii in pixels")->capture_default_str();
    app->add_option("--max-dim", max_dim, "Downscale so the longer side is at most this")->capture_default_str();
    app->add_option("--textons", textons, "Number of texton clusters")->capture_default_str();
    app->add_option("--bins", bins, "Histogram bins per color channel")->capture_default_str();
  }
  CueParams params() const {
    CueParams p;
    p.threshold = threshold;
    p.spectral = !no_spectral;
    p.orientations = orientations;
    p.radii = radii;
    p.max_dim = max_dim;
    p.textons = textons;
    p.bins = bins;
    return p;
  }
};

struct SlicOptions {
  int region_size = 0;
  double compactness = 10.0;
  int iterations = 10;
  int min_size = -1;

  void add(CLI::App* app) {
    app->add_option("--region-size", region_size, "Seed spacing in pixels (0: about 1 m at the image GSD)")
        ->capture_default_str();
    app->add_option("--compactness", compactness, "Color/space trade-off m")->capture_default_str();
    app->add_option("--iters", iterations, "Clustering iterations")->capture_default_str();
    app->add_option("--min-size", min_size, "Smallest kept component in pixels (-1: S^2/4)")->capture_default_str();
  }
  SlicParams params() const {
    SlicParams p;
    p.region_size = region_size;
    p.compactness = compactness;
    p.iterations = iterations;
    p.min_region_size = min_size;
    return p;
  }
};

void write_contours(const fs::path& dir, const ContourResult& r) {
  write_probability_png(dir / "gpb.png", r.probability);
  write_world_file(dir / "gpb.pgw", r.probability.transform);
  std::vector<std::uint16_t> bin(r.binary.boundary.size());
  for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = r.binary.boundary[i] ? 65535 : 0;
  write_png_gray16(dir / "binary.png", r.binary.width, r.binary.height, bin);
  write_world_file(dir / "binary.pgw", r.binary.transform);
  write_json_file(dir / "gpb_outlines.geojson", lines_to_geojson(r.outlines));
}

void write_slic(const fs::path& dir, const LabelMap& labels, const std::vector<Polyline>& outlines) {
  write_label_png(dir / "slic_labels.png", labels);
  write_world_file(dir / "slic_labels.pgw", labels.transform);
  write_json_file(dir / "slic_outlines.geojson", lines_to_geojson(outlines));
}

int run_serve(const fs::path& data_dir, const std::string& host, int port) {
  // Block SIGTERM/SIGINT before any thread starts so only sigwait sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGINT);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  ServiceOptions opt;
  opt.data_dir = data_dir;
  Service service(opt);
  const int bound = service.bind(host, port);
  info("listening on http://" + host + ":" + std::to_string(bound) + " (data in " + data_dir.string() + ")");

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    info(std::string("received ") + (sig == SIGTERM ? "SIGTERM" : "SIGINT") + ", shutting down");
    service.stop();
  });
  service.run();
  service.flush();
  info("sessions flushed");
  // run() can also return without a signal; release the waiter then.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundline: cadastral boundary delineation from orthoimages"};
  app.require_subcommand(1);
  bool json_logs = false, verbose = false, quiet = false;
  app.add_flag("--json-logs", json_logs, "Log progress as JSON lines on stderr");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors");

  // contours
  auto* contours = app.add_subcommand("contours", "Boundary probability, binary map and outlines");
  std::string c_image, c_world, c_out;
  CueOptions c_cues;
  contours->add_option("image", c_image, "RGB image (PNG or PPM)")->required();
  contours->add_option("worldfile", c_world, "World file")->required();
  contours->add_option("-o,--output", c_out, "Output directory")->required();
  c_cues.add(contours);

  // slic
  auto* slic_cmd = app.add_subcommand("slic", "SLIC superpixels and their outlines");
  std::string s_image, s_world, s_out;
  SlicOptions s_opt;
  slic_cmd->add_option("image", s_image, "RGB image (PNG or PPM)")->required();
  slic_cmd->add_option("worldfile", s_world, "World file")->required();
  slic_cmd->add_option("-o,--output", s_out, "Output directory")->required();
  s_opt.add(slic_cmd);

  // combine
  auto* combine = app.add_subcommand("combine", "Buffer-filter superpixel outlines and build the line network");
  std::string m_slic, m_gpb, m_out;
  double m_radius = 5.0;
  CleanOptions m_clean;
  combine->add_option("--slic", m_slic, "Superpixel outlines GeoJSON")->required();
  combine->add_option("--gpb", m_gpb, "Contour outlines GeoJSON")->required();
  combine->add_option("--radius", m_radius, "Buffer radius in meters")->capture_default_str();
  combine->add_option("--snap", m_clean.snap_tol, "Snapping lattice in meters")->capture_default_str();
  combine->add_option("--min-dangle", m_clean.min_dangle, "Shortest kept dangling line in meters")
      ->capture_default_str();
  combine->add_option("-o,--output", m_out, "Network GeoJSON")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run contours, superpixels and combine in one go");
  std::string p_image, p_world, p_out;
  CueOptions p_cues;
  SlicOptions p_slic;
  double p_radius = 5.0;
  CleanOptions p_clean;
  pipeline->add_option("image", p_image, "RGB image (PNG or PPM)")->required();
  pipeline->add_option("worldfile", p_world, "World file")->required();
  pipeline->add_option("-o,--output", p_out, "Output directory")->required();
  pipeline->add_option("--radius", p_radius, "Buffer radius in meters")->capture_default_str();
  pipeline->add_option("--snap", p_clean.snap_tol, "Snapping lattice in meters")->capture_default_str();
  pipeline->add_option("--min-dangle", p_clean.min_dangle, "Shortest kept dangling line in meters")
      ->capture_default_str();
  p_cues.add(pipeline);
  p_slic.add(pipeline);

  // assess
  auto* assess = app.add_subcommand("assess", "Localization accuracy of delineated lines against a reference");
  std::string a_del, a_ref, a_out;
  double a_gsd = 0.05;
  std::vector<double> a_dist{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  assess->add_option("--delineated", a_del, "Delineated lines GeoJSON")->required();
  assess->add_option("--reference", a_ref, "Reference lines GeoJSON (features with exact=false are skipped)")
      ->required();
  assess->add_option("--gsd", a_gsd, "Raster cell size in meters")->capture_default_str();
  assess->add_option("--distances", a_dist, "Buffer distances in meters")->capture_default_str();
  assess->add_option("-o,--output", a_out, "CSV report; a .json report is written alongside")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP JSON service");
  int v_port = 8080;
  std::string v_host = "127.0.0.1";
  std::string v_data;
  serve->add_option("--port", v_port, "TCP port")->capture_default_str();
  serve->add_option("--host", v_host, "Bind address")->capture_default_str();
  serve->add_option("--data-dir", v_data, "Session storage (default: $BOUNDLINE_DATA_DIR or ./boundline-data)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }
  setup_logging(json_logs, verbose, quiet);

  try {
    if (*contours) {
      const CueParams params = c_cues.params();
      params.validate();
      const ImageGrid img = load_image(c_image, c_world);
      ensure_dir(c_out);
      info("contours: " + std::to_string(img.width) + "x" + std::to_string(img.height) + " image");
      const auto r = detect_contours(rgb_to_lab(img), params);
      write_contours(c_out, r);
      info("contours: " + std::to_string(r.outlines.size()) + " outlines written to " + c_out);
    } else if (*slic_cmd) {
      PipelineParams probe;
      probe.slic = s_opt.params();
      validate_pipeline_params(probe);
      const ImageGrid img = load_image(s_image, s_world);
      const SlicParams params = resolve_slic_params(probe.slic, img.transform);
      ensure_dir(s_out);
      const LabelMap labels = slic(rgb_to_lab(img), params);
      const auto outlines = superpixel_outlines(labels);
      write_slic(s_out, labels, outlines);
      info("slic: " + std::to_string(labels.count) + " superpixels, " + std::to_string(outlines.size()) +
           " outlines written to " + s_out);
    } else if (*combine) {
      const auto slic_lines = read_lines(m_slic);
      const auto gpb_lines = read_lines(m_gpb);
      const auto buffered = buffer_filter(slic_lines, gpb_lines, m_radius);
      if (buffered.reference_empty) warn("combine: contour layer is empty; network will be empty");
      const auto cleaned = clean_topology(buffered.lines, m_clean);
      const auto net = build_network(cleaned);
      if (net.edges.empty()) warn("combine: no lines left after buffering; network is empty");
      write_json_file(m_out, network_to_geojson(net));
      info("combine: " + std::to_string(net.nodes.size()) + " nodes, " + std::to_string(net.edges.size()) +
           " edges written to " + m_out);
    } else if (*pipeline) {
      PipelineParams params;
      params.cues = p_cues.params();
      params.slic = p_slic.params();
      params.buffer_radius = p_radius;
      params.clean = p_clean;
      validate_pipeline_params(params);
      const ImageGrid img = load_image(p_image, p_world);
      ensure_dir(p_out);
      const auto r = run_pipeline(img, params, [](const std::string& stage) { info("pipeline: " + stage); });
      write_contours(p_out, r.contours);
      write_slic(p_out, r.superpixels, r.slic_lines);
      write_json_file(fs::path(p_out) / "network.geojson", network_to_geojson(r.network));
      if (r.network.edges.empty()) warn("pipeline: network is empty");
      info("pipeline: " + std::to_string(r.network.nodes.size()) + " nodes, " +
           std::to_string(r.network.edges.size()) + " edges");
    } else if (*assess) {
      AssessmentConfig cfg;
      cfg.distances = a_dist;
      cfg.validate();
      const auto delineated = read_lines(a_del);
      const auto reference = read_lines(a_ref, true);
      if (reference.empty()) throw Error(ErrorKind::Parameter, "reference layer has no exact lines");
      if (delineated.empty()) warn("assess: delineated layer is empty");
      BBox box = bounds(reference);
      const BBox dbox = bounds(delineated);
      if (!dbox.empty()) {
        box.expand({dbox.min_x, dbox.min_y});
        box.expand({dbox.max_x, dbox.max_y});
      }
      const GridSpec grid = grid_for_bounds(box, a_gsd, 2 + static_cast<int>(std::ceil(cfg.distances.back() / a_gsd)));
      const auto series =
          confusion_series(rasterize_lines(delineated, grid), rasterize_lines(reference, grid), cfg);
      write_text(a_out, report_csv(series));
      fs::path json_out = a_out;
      json_out.replace_extension(".json");
      write_json_file(json_out, report_to_json(series));
      std::cout << report_text(series);
    } else if (*serve) {
      fs::path data = v_data;
      if (data.empty()) {
        const char* env = std::getenv("BOUNDLINE_DATA_DIR");
        data = env && *env ? fs::path(env) : fs::path("boundline-data");
      }
      return run_serve(data, v_host, v_port);
    }
  } catch (const Error& e) {
    spdlog::error(log_text(std::string(to_string(e.kind())) + ": " + e.what()));
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    spdlog::error(log_text(std::string("internal: ") + e.what()));
    return 4;
  }
  return 0;
}
