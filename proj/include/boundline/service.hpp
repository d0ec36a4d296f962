#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "boundline/error.hpp"
#include "boundline/geojson.hpp"
#include "boundline/pipeline.hpp"

namespace boundline {

struct ServiceOptions {
  /// Session snapshots go to data_dir/sessions; relative image refs are
  /// looked up in data_dir/images first.
  std::filesystem::path data_dir = "boundline-data";
  PipelineParams defaults;
};

/// Reads PipelineParams overrides from a request body ("cues", "slic",
/// "buffer_radius_m", "clean"). Throws Parameter on malformed input.
PipelineParams parse_pipeline_params(const Json& body, PipelineParams base = {});
Json pipeline_params_to_json(const PipelineParams& params);

/// HTTP status for a library error.
int http_status(ErrorKind kind) noexcept;

/// HTTP JSON API over sessions. Step I runs on a background worker; every
/// mutation is persisted as a JSON snapshot.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to host:port (0 picks a free port) and returns the port. Throws
  /// Io if the port is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void run();
  void stop();
  /// Writes every session snapshot to disk.
  void flush();
  /// Blocks until the step I queue is empty.
  void wait_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace boundline
