#include "boundline/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "boundline/assessment.hpp"
#include "boundline/error.hpp"
#include "boundline/raster.hpp"

namespace fs = std::filesystem;

namespace boundline {

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kGeoJson = "application/geo+json";

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <class T>
void read_field(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorKind::Parameter, std::string("invalid value for '") + key + "'");
  }
}

void reject_unknown(const Json& obj, std::initializer_list<const char*> keys, const char* where) {
  if (!obj.is_object()) throw Error(ErrorKind::Parameter, std::string(where) + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw Error(ErrorKind::Parameter, "unknown " + std::string(where) + " field '" + k + "'");
  }
}

struct HttpError {
  int status;
  std::string kind;
  std::string message;
};

}  // namespace

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parameter:
    case ErrorKind::Format:
    case ErrorKind::Dimension:
    case ErrorKind::Domain: return 400;
    case ErrorKind::Lookup: return 404;
    case ErrorKind::State: return 409;
    case ErrorKind::NoPath: return 422;
    case ErrorKind::Io:
    case ErrorKind::Topology:
    case ErrorKind::Convergence:
    case ErrorKind::Internal: return 500;
  }
  return 500;
}

PipelineParams parse_pipeline_params(const Json& body, PipelineParams p) {
  if (body.contains("cues")) {
    const Json& c = body["cues"];
    reject_unknown(c,
                   {"orientations", "radii", "bins", "textons", "spectral", "mpb_weight", "spb_weight",
                    "eigenvectors", "max_dim", "threshold"},
                   "cues");
    read_field(c, "orientations", p.cues.orientations);
    read_field(c, "radii", p.cues.radii);
    read_field(c, "bins", p.cues.bins);
    read_field(c, "textons", p.cues.textons);
    read_field(c, "spectral", p.cues.spectral);
    read_field(c, "mpb_weight", p.cues.mpb_weight);
    read_field(c, "spb_weight", p.cues.spb_weight);
    read_field(c, "eigenvectors", p.cues.eigenvectors);
    read_field(c, "max_dim", p.cues.max_dim);
    read_field(c, "threshold", p.cues.threshold);
  }
  if (body.contains("slic")) {
    const Json& s = body["slic"];
    reject_unknown(s, {"region_size", "target_count", "compactness", "iterations", "min_region_size"}, "slic");
    read_field(s, "region_size", p.slic.region_size);
    read_field(s, "target_count", p.slic.target_count);
    read_field(s, "compactness", p.slic.compactness);
    read_field(s, "iterations", p.slic.iterations);
    read_field(s, "min_region_size", p.slic.min_region_size);
  }
  if (body.contains("clean")) {
    const Json& c = body["clean"];
    reject_unknown(c, {"snap_tol_m", "min_dangle_m"}, "clean");
    read_field(c, "snap_tol_m", p.clean.snap_tol);
    read_field(c, "min_dangle_m", p.clean.min_dangle);
  }
  read_field(body, "buffer_radius_m", p.buffer_radius);
  validate_pipeline_params(p);
  return p;
}

Json pipeline_params_to_json(const PipelineParams& p) {
  return {{"cues",
           {{"orientations", p.cues.orientations},
            {"radii", p.cues.radii},
            {"bins", p.cues.bins},
            {"textons", p.cues.textons},
            {"spectral", p.cues.spectral},
            {"mpb_weight", p.cues.mpb_weight},
            {"spb_weight", p.cues.spb_weight},
            {"eigenvectors", p.cues.eigenvectors},
            {"max_dim", p.cues.max_dim},
            {"threshold", p.cues.threshold}}},
          {"slic",
           {{"region_size", p.slic.region_size},
            {"target_count", p.slic.target_count},
            {"compactness", p.slic.compactness},
            {"iterations", p.slic.iterations},
            {"min_region_size", p.slic.min_region_size}}},
          {"clean", {{"snap_tol_m", p.clean.snap_tol}, {"min_dangle_m", p.clean.min_dangle}}},
          {"buffer_radius_m", p.buffer_radius}};
}

// ---------------------------------------------------------------------------

struct SessionRecord {
  std::string id;
  std::string image;
  std::string world_file;
  Json params;
  std::string created;
  std::string updated;
  std::string status;  // processing, ready, failed
  std::string error;
  std::optional<DelineationSession> session;
  mutable std::shared_mutex guard;
};

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::mutex run_mutex;
  bool run_entered = false;
  bool stop_requested = false;
  std::mutex registry_mutex;
  std::map<std::string, std::shared_ptr<SessionRecord>> sessions;

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::condition_variable idle_cv;
  std::deque<std::string> queue;
  bool busy = false;
  bool stopping = false;
  std::thread worker;
  std::mt19937_64 rng{std::random_device{}()};
  std::mutex rng_mutex;

  explicit Impl(ServiceOptions opt) : options(std::move(opt)) {
    fs::create_directories(sessions_dir());
    load_snapshots();
    worker = std::thread([this] { work(); });
    routes();
  }

  ~Impl() {
    {
      std::lock_guard lock(queue_mutex);
      stopping = true;
    }
    queue_cv.notify_all();
    if (worker.joinable()) worker.join();
  }

  fs::path sessions_dir() const { return options.data_dir / "sessions"; }

  std::string new_id() {
    std::lock_guard lock(rng_mutex);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
  }

  // Caller holds at least a shared lock on rec.guard.
  Json record_json(const SessionRecord& rec) const {
    return {{"id", rec.id},
            {"status", rec.status},
            {"image", rec.image},
            {"world_file", rec.world_file},
            {"params", rec.params},
            {"created", rec.created},
            {"updated", rec.updated},
            {"error", rec.error.empty() ? Json() : Json(rec.error)},
            {"session", rec.session ? session_to_json(*rec.session) : Json()}};
  }

  Json summary(const SessionRecord& rec) const {
    Json j{{"session_id", rec.id},
           {"status", rec.status},
           {"status_url", "/sessions/" + rec.id},
           {"image", rec.image},
           {"params", rec.params},
           {"created", rec.created},
           {"updated", rec.updated}};
    if (!rec.error.empty()) j["error"] = rec.error;
    if (rec.session) {
      const auto& s = *rec.session;
      j["node_count"] = s.network().nodes.size();
      j["edge_count"] = s.network().edges.size();
      j["accepted_count"] = s.accepted().size();
      j["candidate"] = s.candidate() ? candidate_to_json(*s.candidate()) : Json();
      j["suggested_next_node"] = s.suggested_next_node() ? Json(*s.suggested_next_node()) : Json();
    }
    return j;
  }

  void persist(const SessionRecord& rec) const {
    write_json_file(sessions_dir() / (rec.id + ".json"), record_json(rec));
  }

  void load_snapshots() {
    for (const auto& entry : fs::directory_iterator(sessions_dir())) {
      if (entry.path().extension() != ".json") continue;
      try {
        const Json j = read_json_file(entry.path());
        auto rec = std::make_shared<SessionRecord>();
        rec->id = j.at("id").get<std::string>();
        rec->image = j.value("image", "");
        rec->world_file = j.value("world_file", "");
        rec->params = j.value("params", Json::object());
        rec->created = j.value("created", "");
        rec->updated = j.value("updated", "");
        rec->status = j.value("status", "failed");
        if (j.contains("error") && j["error"].is_string()) rec->error = j["error"].get<std::string>();
        if (j.contains("session") && !j["session"].is_null()) rec->session = session_from_json(j["session"]);
        if (rec->status == "processing") queue.push_back(rec->id);
        sessions[rec->id] = rec;
      } catch (const std::exception& e) {
        spdlog::warn("skipping unreadable snapshot {}: {}", entry.path().string(), e.what());
      }
    }
    if (!sessions.empty()) spdlog::info("restored {} sessions from {}", sessions.size(), sessions_dir().string());
  }

  void flush() {
    std::lock_guard lock(registry_mutex);
    for (const auto& [id, rec] : sessions) {
      std::shared_lock guard(rec->guard);
      persist(*rec);
    }
  }

  void work() {
    while (true) {
      std::string id;
      {
        std::unique_lock lock(queue_mutex);
        queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        busy = true;
      }
      run_step_one(id);
      {
        std::lock_guard lock(queue_mutex);
        busy = false;
      }
      idle_cv.notify_all();
    }
  }

  void run_step_one(const std::string& id) {
    std::shared_ptr<SessionRecord> rec = find(id);
    if (!rec) return;
    std::string image, world;
    Json params;
    {
      std::shared_lock guard(rec->guard);
      image = rec->image;
      world = rec->world_file;
      params = rec->params;
    }
    spdlog::info("session {}: step I started on {}", id, image);
    std::optional<DelineationSession> session;
    std::string error;
    try {
      const ImageGrid img = load_image(image, world);
      const auto result = run_pipeline(img, parse_pipeline_params(params, options.defaults),
                                       [&](const std::string& stage) { spdlog::debug("session {}: {}", id, stage); });
      session.emplace(result.network);
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::unique_lock guard(rec->guard);
    rec->updated = now_utc();
    if (session) {
      rec->session = std::move(session);
      rec->status = "ready";
      spdlog::info("session {}: ready with {} nodes", id, rec->session->network().nodes.size());
    } else {
      rec->status = "failed";
      rec->error = error;
      spdlog::warn("session {}: step I failed: {}", id, error);
    }
    persist(*rec);
  }

  std::shared_ptr<SessionRecord> find(const std::string& id) {
    std::lock_guard lock(registry_mutex);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  std::shared_ptr<SessionRecord> require(const std::string& id) {
    auto rec = find(id);
    if (!rec) throw HttpError{404, "lookup", "unknown session '" + id + "'"};
    return rec;
  }

  static void require_ready(const SessionRecord& rec) {
    if (rec.status == "processing") throw HttpError{409, "state", "session is still processing"};
    if (rec.status != "ready" || !rec.session)
      throw HttpError{409, "state", "session failed: " + rec.error};
  }

  fs::path resolve_image(const std::string& ref) const {
    fs::path p(ref);
    if (p.is_relative()) {
      const fs::path in_data = options.data_dir / "images" / p;
      if (fs::exists(in_data)) return in_data;
    }
    return p;
  }

  static Json body_json(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
      return Json::parse(req.body);
    } catch (const Json::exception& e) {
      throw HttpError{400, "format", std::string("invalid JSON body: ") + e.what()};
    }
  }

  template <class F>
  httplib::Server::Handler wrap(F&& f) {
    return [this, f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      auto fail = [&](int status, const std::string& kind, const std::string& msg) {
        res.status = status;
        res.set_content(Json{{"error", kind}, {"message", msg}}.dump(), kJson);
      };
      try {
        f(req, res);
      } catch (const HttpError& e) {
        fail(e.status, e.kind, e.message);
      } catch (const Error& e) {
        fail(http_status(e.kind()), to_string(e.kind()), e.what());
      } catch (const Json::exception& e) {
        fail(400, "format", e.what());
      } catch (const std::exception& e) {
        fail(500, "internal", e.what());
      }
    };
  }

  // Runs a mutation under the session's exclusive guard; a concurrent
  // mutation in flight yields 409.
  template <class F>
  void mutate(const std::string& id, httplib::Response& res, F&& f) {
    auto rec = require(id);
    std::unique_lock guard(rec->guard, std::try_to_lock);
    if (!guard.owns_lock()) throw HttpError{409, "state", "session is busy"};
    require_ready(*rec);
    Json out = f(*rec->session);
    rec->updated = now_utc();
    persist(*rec);
    res.set_content(out.dump(), kJson);
  }

  void routes() {
    // Plain SO_REUSEADDR so a second instance cannot share a busy port.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });
    server.Get("/health", wrap([](const httplib::Request&, httplib::Response& res) {
      res.set_content(Json{{"status", "ok"}}.dump(), kJson);
    }));

    server.Get("/sessions", wrap([this](const httplib::Request&, httplib::Response& res) {
      Json list = Json::array();
      std::lock_guard lock(registry_mutex);
      for (const auto& [id, rec] : sessions) {
        std::shared_lock guard(rec->guard);
        list.push_back({{"session_id", id}, {"status", rec->status}, {"image", rec->image}});
      }
      res.set_content(Json{{"sessions", list}}.dump(), kJson);
    }));

    server.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const Json body = body_json(req);
      if (!body.is_object()) throw HttpError{400, "parameter", "request body must be a JSON object"};
      reject_unknown(body, {"image", "world_file", "cues", "slic", "buffer_radius_m", "clean"}, "request");
      if (!body.contains("image") || !body["image"].is_string())
        throw HttpError{400, "parameter", "'image' must be a string"};
      const PipelineParams params = parse_pipeline_params(body, options.defaults);
      const fs::path image = resolve_image(body["image"].get<std::string>());
      if (!fs::is_regular_file(image)) throw HttpError{404, "lookup", "image not found: " + image.string()};
      fs::path world;
      if (body.contains("world_file")) {
        if (!body["world_file"].is_string()) throw HttpError{400, "parameter", "'world_file' must be a string"};
        world = resolve_image(body["world_file"].get<std::string>());
        if (!fs::is_regular_file(world)) throw HttpError{404, "lookup", "world file not found: " + world.string()};
      } else if (auto found = find_world_file(image)) {
        world = *found;
      } else {
        throw HttpError{404, "lookup", "no world file next to " + image.string()};
      }

      auto rec = std::make_shared<SessionRecord>();
      rec->id = new_id();
      rec->image = fs::absolute(image).string();
      rec->world_file = fs::absolute(world).string();
      rec->params = pipeline_params_to_json(params);
      rec->created = rec->updated = now_utc();
      rec->status = "processing";
      {
        std::lock_guard lock(registry_mutex);
        sessions[rec->id] = rec;
      }
      persist(*rec);
      {
        std::lock_guard lock(queue_mutex);
        queue.push_back(rec->id);
      }
      queue_cv.notify_one();
      res.status = 202;
      res.set_header("Location", "/sessions/" + rec->id);
      res.set_content(Json{{"session_id", rec->id}, {"status", "processing"}, {"status_url", "/sessions/" + rec->id}}.dump(),
                      kJson);
    }));

    server.Get(R"(/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto rec = require(req.matches[1]);
      std::shared_lock guard(rec->guard);
      res.set_content(summary(*rec).dump(), kJson);
    }));

    server.Get(R"(/sessions/([^/]+)/network)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto rec = require(req.matches[1]);
      std::shared_lock guard(rec->guard);
      require_ready(*rec);
      res.set_content(network_to_geojson(rec->session->network()).dump(), kGeoJson);
    }));

    server.Get(R"(/sessions/([^/]+)/boundaries)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto rec = require(req.matches[1]);
      std::shared_lock guard(rec->guard);
      require_ready(*rec);
      res.set_content(export_boundaries(*rec->session).dump(), kGeoJson);
    }));

    server.Post(R"(/sessions/([^/]+)/candidate)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const Json body = body_json(req);
      if (!body.is_object() || !body.contains("node_ids") || !body["node_ids"].is_array())
        throw HttpError{400, "parameter", "'node_ids' must be an array of node ids"};
      std::vector<int> ids;
      for (const auto& v : body["node_ids"]) {
        if (!v.is_number_integer()) throw HttpError{400, "parameter", "node ids must be integers"};
        ids.push_back(v.get<int>());
      }
      if (ids.size() < 2) throw HttpError{400, "parameter", "at least two node ids are required"};
      const bool replace = body.value("replace", false);
      mutate(req.matches[1], res, [&](DelineationSession& s) {
        return candidate_to_json(s.propose(ids, replace));
      });
    }));

    server.Post(R"(/sessions/([^/]+)/candidate/simplify)",
                wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const Json body = body_json(req);
                  if (!body.is_object() || !body.contains("tolerance_m") || !body["tolerance_m"].is_number())
                    throw HttpError{400, "parameter", "'tolerance_m' must be a number"};
                  const double tol = body["tolerance_m"].get<double>();
                  mutate(req.matches[1], res, [&](DelineationSession& s) {
                    return candidate_to_json(s.simplify_candidate(tol));
                  });
                }));

    server.Post(R"(/sessions/([^/]+)/candidate/accept)",
                wrap([this](const httplib::Request& req, httplib::Response& res) {
                  mutate(req.matches[1], res, [&](DelineationSession& s) {
                    const AcceptedLine& a = s.accept_candidate();
                    return Json{{"accepted_count", s.accepted().size()},
                                {"accepted_order", a.order},
                                {"suggested_next_node", *s.suggested_next_node()},
                                {"sinuosity", a.sinuosity},
                                {"color", to_string(a.color)}};
                  });
                }));

    server.Delete(R"(/sessions/([^/]+)/candidate)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      mutate(req.matches[1], res, [&](DelineationSession& s) {
        s.delete_candidate();
        return Json{{"candidate", nullptr}, {"accepted_count", s.accepted().size()}};
      });
    }));

    server.Put(R"(/sessions/([^/]+)/candidate/geometry)",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const Json body = body_json(req);
                 Json geom = body;
                 if (body.is_object() && body.value("type", "") == "Feature") geom = body.value("geometry", Json());
                 if (!geom.is_object() || geom.value("type", "") != "LineString")
                   throw HttpError{400, "parameter", "expected a LineString geometry"};
                 std::vector<Polyline> lines;
                 try {
                   lines = lines_from_geojson(geom);
                 } catch (const Error& e) {
                   throw HttpError{400, "format", e.what()};
                 }
                 if (lines.size() != 1) throw HttpError{400, "parameter", "geometry needs two distinct vertices"};
                 mutate(req.matches[1], res, [&](DelineationSession& s) {
                   return candidate_to_json(s.replace_candidate_geometry(lines[0]));
                 });
               }));

    server.Post("/assess", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const Json body = body_json(req);
      res.set_content(assess(body).dump(), kJson);
    }));
  }

  static GridSpec parse_grid(const Json& g) {
    GridSpec spec;
    reject_unknown(g, {"origin_x", "origin_y", "gsd", "width", "height"}, "grid");
    const double gsd = g.at("gsd").get<double>();
    if (!(gsd > 0.0)) throw Error(ErrorKind::Parameter, "grid gsd must be > 0");
    spec.transform.origin_x = g.at("origin_x").get<double>();
    spec.transform.origin_y = g.at("origin_y").get<double>();
    spec.transform.pixel_size_x = gsd;
    spec.transform.pixel_size_y = -gsd;
    spec.width = g.at("width").get<int>();
    spec.height = g.at("height").get<int>();
    if (spec.width <= 0 || spec.height <= 0) throw Error(ErrorKind::Parameter, "grid dimensions must be > 0");
    return spec;
  }

  Json assess(const Json& body) {
    if (!body.is_object()) throw HttpError{400, "parameter", "request body must be a JSON object"};
    reject_unknown(body, {"delineated", "reference", "grid", "delineated_grid", "reference_grid", "gsd", "distances"},
                   "request");
    if (!body.contains("delineated") || !body.contains("reference"))
      throw HttpError{400, "parameter", "'delineated' and 'reference' are required"};

    std::vector<Polyline> delineated;
    const Json& d = body["delineated"];
    if (d.is_object() && d.contains("session_id")) {
      auto rec = require(d["session_id"].get<std::string>());
      std::shared_lock guard(rec->guard);
      require_ready(*rec);
      delineated = lines_from_geojson(export_boundaries(*rec->session));
    } else {
      delineated = lines_from_geojson(d);
    }
    const auto reference = lines_from_geojson(body["reference"], ReadOptions{true});
    if (reference.empty()) throw HttpError{400, "parameter", "reference layer has no exact lines"};

    AssessmentConfig cfg;
    if (body.contains("distances")) cfg.distances = body["distances"].get<std::vector<double>>();
    cfg.validate();

    GridSpec del_grid, ref_grid;
    if (body.contains("delineated_grid") || body.contains("reference_grid")) {
      if (!body.contains("delineated_grid") || !body.contains("reference_grid"))
        throw HttpError{400, "parameter", "give both 'delineated_grid' and 'reference_grid', or 'grid'"};
      del_grid = parse_grid(body["delineated_grid"]);
      ref_grid = parse_grid(body["reference_grid"]);
    } else if (body.contains("grid")) {
      del_grid = ref_grid = parse_grid(body["grid"]);
    } else {
      const double gsd = body.value("gsd", 0.05);
      BBox box = bounds(reference);
      const BBox dbox = bounds(delineated);
      if (!dbox.empty()) {
        box.expand({dbox.min_x, dbox.min_y});
        box.expand({dbox.max_x, dbox.max_y});
      }
      del_grid = ref_grid = grid_for_bounds(box, gsd, 2 + static_cast<int>(std::ceil(cfg.distances.back() / gsd)));
    }
    const auto series = confusion_series(rasterize_lines(delineated, del_grid), rasterize_lines(reference, ref_grid), cfg);
    return report_to_json(series);
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() {
  impl_->server.stop();
  impl_->flush();
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
  return port;
}

void Service::run() {
  {
    std::lock_guard lock(impl_->run_mutex);
    if (impl_->stop_requested) return;
    impl_->run_entered = true;
  }
  impl_->server.listen_after_bind();
}

void Service::stop() {
  bool entered;
  {
    std::lock_guard lock(impl_->run_mutex);
    impl_->stop_requested = true;
    entered = impl_->run_entered;
  }
  // A stop issued before the accept loop starts would otherwise be lost.
  if (entered) impl_->server.wait_until_ready();
  impl_->server.stop();
}

void Service::flush() { impl_->flush(); }

void Service::wait_idle() {
  std::unique_lock lock(impl_->queue_mutex);
  impl_->idle_cv.wait(lock, [&] { return impl_->queue.empty() && !impl_->busy; });
}

}  // namespace boundline
