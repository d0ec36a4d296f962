#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundline/assessment.hpp"
#include "boundline/delineation.hpp"
#include "boundline/geometry.hpp"
#include "boundline/vectornet.hpp"

namespace boundline {

using Json = nlohmann::json;

Json point_coords(Point p);
Json line_coords(std::span<const Point> points);

/// LineString features with an "id" property.
Json lines_to_geojson(std::span<const Polyline> lines);

struct ReadOptions {
  /// Skip features whose properties carry "exact": false.
  bool exact_only = false;
};

/// Accepts a FeatureCollection, a Feature or a bare geometry. LineString and
/// MultiLineString parts are read as lines; polygon rings as closed lines.
std::vector<Polyline> lines_from_geojson(const Json& doc, const ReadOptions& opt = {});

/// Nodes as Point features with "node_id"; edges as LineString features
/// with "edge_id", "node_a", "node_b" and "length_m".
Json network_to_geojson(const LineNetwork& net);
LineNetwork network_from_geojson(const Json& doc);

Json candidate_to_json(const CandidateLine& c);
CandidateLine candidate_from_json(const Json& j);

/// Accepted lines in acceptance order.
Json export_boundaries(const DelineationSession& session);
std::vector<AcceptedLine> import_boundaries(const Json& doc);

Json session_to_json(const DelineationSession& session);
DelineationSession session_from_json(const Json& j);

/// Counts, bands, CSV and text summary of an assessment.
Json report_to_json(const ConfusionSeries& series);

Json read_json_file(const std::filesystem::path& path);
/// Writes `doc` followed by a newline, replacing the file atomically.
void write_json_file(const std::filesystem::path& path, const Json& doc);
Json parse_json(const std::string& text);

}  // namespace boundline
