#include "boundline/geojson.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "boundline/error.hpp"

namespace boundline {

namespace {

Point parse_point(const Json& c) {
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
    throw Error(ErrorKind::Format, "invalid coordinate " + c.dump());
  return {c[0].get<double>(), c[1].get<double>()};
}

std::vector<Point> parse_coords(const Json& c) {
  if (!c.is_array()) throw Error(ErrorKind::Format, "coordinates must be an array");
  std::vector<Point> pts;
  pts.reserve(c.size());
  for (const auto& p : c) pts.push_back(parse_point(p));
  return pts;
}

void add_line(std::vector<Polyline>& out, std::vector<Point> pts, std::int64_t id) {
  dedupe_consecutive(pts);
  if (pts.size() < 2) return;
  Polyline line;
  line.points = std::move(pts);
  line.id = id;
  out.push_back(std::move(line));
}

void read_geometry(const Json& g, std::vector<Polyline>& out, std::int64_t id) {
  if (g.is_null()) return;
  const std::string type = g.value("type", "");
  if (type == "LineString") {
    add_line(out, parse_coords(g.at("coordinates")), id);
  } else if (type == "MultiLineString" || type == "Polygon") {
    for (const auto& part : g.at("coordinates")) add_line(out, parse_coords(part), id);
  } else if (type == "MultiPolygon") {
    for (const auto& poly : g.at("coordinates"))
      for (const auto& ring : poly) add_line(out, parse_coords(ring), id);
  } else if (type == "GeometryCollection") {
    for (const auto& sub : g.at("geometries")) read_geometry(sub, out, id);
  } else if (type == "Point" || type == "MultiPoint") {
    return;
  } else {
    throw Error(ErrorKind::Format, "unsupported geometry type '" + type + "'");
  }
}

Json multi_line(const std::vector<Polyline>& parts) {
  if (parts.size() == 1) return {{"type", "LineString"}, {"coordinates", line_coords(parts[0].points)}};
  Json coords = Json::array();
  for (const auto& p : parts) coords.push_back(line_coords(p.points));
  return {{"type", "MultiLineString"}, {"coordinates", coords}};
}

std::vector<Polyline> parts_of(const Json& geometry) {
  std::vector<Polyline> parts;
  const std::string type = geometry.value("type", "");
  if (type == "LineString") {
    parts.push_back(Polyline{parse_coords(geometry.at("coordinates")), -1});
  } else if (type == "MultiLineString") {
    for (const auto& c : geometry.at("coordinates")) parts.push_back(Polyline{parse_coords(c), -1});
  } else {
    throw Error(ErrorKind::Format, "expected a LineString or MultiLineString geometry");
  }
  return parts;
}

}  // namespace

Json point_coords(Point p) { return Json::array({p.x, p.y}); }

Json line_coords(std::span<const Point> points) {
  Json c = Json::array();
  for (const Point& p : points) c.push_back(point_coords(p));
  return c;
}

Json lines_to_geojson(std::span<const Polyline> lines) {
  Json features = Json::array();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto id = lines[i].id >= 0 ? lines[i].id : static_cast<std::int64_t>(i);
    features.push_back({{"type", "Feature"},
                        {"properties", {{"id", id}}},
                        {"geometry", {{"type", "LineString"}, {"coordinates", line_coords(lines[i].points)}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

std::vector<Polyline> lines_from_geojson(const Json& doc, const ReadOptions& opt) {
  std::vector<Polyline> out;
  try {
    if (!doc.is_object()) throw Error(ErrorKind::Format, "GeoJSON document must be an object");
    const std::string type = doc.value("type", "");
    auto read_feature = [&](const Json& f, std::int64_t index) {
      const Json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : Json::object();
      if (opt.exact_only && props.contains("exact") && props["exact"].is_boolean() && !props["exact"].get<bool>())
        return;
      std::int64_t id = index;
      if (props.contains("id") && props["id"].is_number_integer()) id = props["id"].get<std::int64_t>();
      read_geometry(f.contains("geometry") ? f["geometry"] : Json(), out, id);
    };
    if (type == "FeatureCollection") {
      std::int64_t i = 0;
      for (const auto& f : doc.at("features")) read_feature(f, i++);
    } else if (type == "Feature") {
      read_feature(doc, 0);
    } else {
      read_geometry(doc, out, 0);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed GeoJSON: ") + e.what());
  }
  return out;
}

Json network_to_geojson(const LineNetwork& net) {
  Json features = Json::array();
  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    features.push_back({{"type", "Feature"},
                        {"properties", {{"kind", "node"}, {"node_id", i}}},
                        {"geometry", {{"type", "Point"}, {"coordinates", point_coords(net.nodes[i])}}}});
  for (const auto& e : net.edges)
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"kind", "edge"},
                          {"edge_id", e.id},
                          {"node_a", e.node_a},
                          {"node_b", e.node_b},
                          {"length_m", e.length}}},
                        {"geometry", {{"type", "LineString"}, {"coordinates", line_coords(e.geometry.points)}}}});
  return {{"type", "FeatureCollection"}, {"features", features}};
}

LineNetwork network_from_geojson(const Json& doc) {
  LineNetwork net;
  try {
    std::vector<std::pair<int, Point>> nodes;
    for (const auto& f : doc.at("features")) {
      const auto& props = f.at("properties");
      if (props.contains("node_id")) {
        nodes.emplace_back(props["node_id"].get<int>(), parse_point(f.at("geometry").at("coordinates")));
      } else if (props.contains("edge_id")) {
        NetworkEdge e;
        e.id = props["edge_id"].get<int>();
        e.node_a = props.at("node_a").get<int>();
        e.node_b = props.at("node_b").get<int>();
        e.geometry.points = parse_coords(f.at("geometry").at("coordinates"));
        e.geometry.id = e.id;
        e.length = polyline_length(e.geometry);
        net.edges.push_back(std::move(e));
      }
    }
    net.nodes.resize(nodes.size());
    std::vector<char> seen(nodes.size(), 0);
    for (const auto& [id, p] : nodes) {
      if (id < 0 || id >= static_cast<int>(nodes.size()) || seen[id])
        throw Error(ErrorKind::Format, "node ids must be dense and unique");
      seen[id] = 1;
      net.nodes[id] = p;
    }
    std::sort(net.edges.begin(), net.edges.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < net.edges.size(); ++i) {
      const auto& e = net.edges[i];
      if (e.id != static_cast<int>(i)) throw Error(ErrorKind::Format, "edge ids must be dense and unique");
      if (e.node_a < 0 || e.node_b < 0 || e.node_a >= static_cast<int>(nodes.size()) ||
          e.node_b >= static_cast<int>(nodes.size()))
        throw Error(ErrorKind::Format, "edge " + std::to_string(e.id) + " references an unknown node");
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed network GeoJSON: ") + e.what());
  }
  return net;
}

Json candidate_to_json(const CandidateLine& c) {
  return {{"terminals", c.terminals},
          {"edges", c.edges},
          {"geometry", multi_line(c.geometry)},
          {"measured", line_coords(c.measured.points)},
          {"length_m", c.length},
          {"sinuosity", c.sinuosity},
          {"color", to_string(c.color)},
          {"simplified", c.simplified},
          {"branched", c.branched()},
          {"end_node", c.end_node}};
}

CandidateLine candidate_from_json(const Json& j) {
  try {
    CandidateLine c;
    c.terminals = j.at("terminals").get<std::vector<int>>();
    c.edges = j.value("edges", std::vector<int>{});
    c.geometry = parts_of(j.at("geometry"));
    c.measured.points = parse_coords(j.at("measured"));
    c.length = j.at("length_m").get<double>();
    c.sinuosity = j.at("sinuosity").get<double>();
    c.color = parse_traffic_light(j.at("color").get<std::string>());
    c.simplified = j.value("simplified", false);
    c.end_node = j.value("end_node", -1);
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed candidate: ") + e.what());
  }
}

Json export_boundaries(const DelineationSession& session) {
  Json features = Json::array();
  for (const auto& a : session.accepted())
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"sinuosity", a.sinuosity},
                          {"color", to_string(a.color)},
                          {"simplified", a.simplified},
                          {"accepted_order", a.order},
                          {"terminals", a.terminals}}},
                        {"geometry", multi_line(a.geometry)}});
  return {{"type", "FeatureCollection"}, {"features", features}};
}

std::vector<AcceptedLine> import_boundaries(const Json& doc) {
  std::vector<AcceptedLine> out;
  try {
    for (const auto& f : doc.at("features")) {
      const auto& props = f.at("properties");
      AcceptedLine a;
      a.geometry = parts_of(f.at("geometry"));
      a.sinuosity = props.at("sinuosity").get<double>();
      a.color = parse_traffic_light(props.at("color").get<std::string>());
      a.simplified = props.value("simplified", false);
      a.order = props.value("accepted_order", static_cast<int>(out.size()));
      a.terminals = props.value("terminals", std::vector<int>{});
      out.push_back(std::move(a));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed boundaries: ") + e.what());
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.order < y.order; });
  return out;
}

Json session_to_json(const DelineationSession& session) {
  Json history = Json::array();
  for (const auto& h : session.history()) history.push_back({{"op", h.op}, {"detail", h.detail}});
  Json j{{"network", network_to_geojson(session.network())},
         {"accepted", export_boundaries(session)},
         {"candidate", session.candidate() ? candidate_to_json(*session.candidate()) : Json()},
         {"suggested_next_node", session.suggested_next_node() ? Json(*session.suggested_next_node()) : Json()},
         {"history", history}};
  return j;
}

DelineationSession session_from_json(const Json& j) {
  try {
    DelineationSession s(network_from_geojson(j.at("network")));
    std::optional<CandidateLine> cand;
    if (j.contains("candidate") && !j["candidate"].is_null()) cand = candidate_from_json(j["candidate"]);
    std::optional<int> next;
    if (j.contains("suggested_next_node") && !j["suggested_next_node"].is_null())
      next = j["suggested_next_node"].get<int>();
    std::vector<HistoryEntry> history;
    for (const auto& h : j.value("history", Json::array()))
      history.push_back({h.at("op").get<std::string>(), h.value("detail", "")});
    s.restore(std::move(cand), import_boundaries(j.at("accepted")), next, std::move(history));
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed session snapshot: ") + e.what());
  }
}

Json report_to_json(const ConfusionSeries& series) {
  Json counts = Json::array();
  for (const auto& c : series.counts)
    counts.push_back({{"distance_m", c.distance}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}});
  Json bands = Json::array();
  for (std::size_t i = 0; i < series.bands.size(); ++i)
    bands.push_back({{"band_lo_m", band_low_label(series, i)},
                     {"band_hi_m", format_meters(series.bands[i].hi)},
                     {"tp_pixels", series.bands[i].tp},
                     {"tp_percent", std::round(series.band_percent(i) * 10.0) / 10.0}});
  return {{"counts", counts},
          {"bands", bands},
          {"matched_tp_pixels", series.matched()},
          {"delineated_pixels", series.delineated_pixels},
          {"reference_pixels", series.reference_pixels},
          {"total_pixels", series.total_pixels},
          {"csv", report_csv(series)},
          {"summary", report_text(series)}};
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Format, std::string("invalid JSON: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << doc.dump() << '\n';
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot replace " + path.string() + ": " + ec.message());
}

}  // namespace boundline
