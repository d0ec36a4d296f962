#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boundline/geometry.hpp"
#include "boundline/vectornet.hpp"

namespace boundline {

enum class TrafficLight { Red, Yellow, Green };

const char* to_string(TrafficLight color) noexcept;
TrafficLight parse_traffic_light(std::string_view name);

/// |end - start| / length, in [0, 1]. Throws Domain on zero length.
double sinuosity(std::span<const Point> points);
inline double sinuosity(const Polyline& line) { return sinuosity(line.points); }

/// s <= 1/3 red, s <= 2/3 yellow, otherwise green.
TrafficLight classify_sinuosity(double s);

/// Douglas-Peucker. The output is a subsequence of the input keeping both ends.
Polyline simplify_line(const Polyline& line, double tolerance);

struct NetworkPath {
  std::vector<int> nodes;  // from source to target
  std::vector<int> edges;
  double length = 0.0;
};

/// Dijkstra by edge length. Throws Lookup for unknown ids, NoPath if the
/// target cannot be reached.
NetworkPath shortest_path(const LineNetwork& net, int source, int target);

struct CandidateLine {
  std::vector<int> terminals;
  std::vector<int> edges;
  /// One polyline for a simple path; one per tree edge when branched.
  std::vector<Polyline> geometry;
  /// The line sinuosity is measured on (the path itself, or the longest
  /// terminal-to-terminal path of a tree).
  Polyline measured;
  double length = 0.0;
  double sinuosity = 0.0;
  TrafficLight color = TrafficLight::Red;
  bool simplified = false;
  /// Node the measured line ends at.
  int end_node = -1;

  bool branched() const { return geometry.size() > 1; }
};

/// Shortest path for two terminals, shortest-path-metric MST Steiner
/// approximation for more.
CandidateLine connect_nodes(const LineNetwork& net, std::span<const int> terminals);

/// Recomputes length, sinuosity and color from the current geometry.
void rescore(CandidateLine& candidate);

struct AcceptedLine {
  std::vector<Polyline> geometry;
  std::vector<int> terminals;
  double sinuosity = 0.0;
  TrafficLight color = TrafficLight::Red;
  bool simplified = false;
  int order = 0;
};

struct HistoryEntry {
  std::string op;
  std::string detail;
};

class DelineationSession {
 public:
  DelineationSession() = default;
  explicit DelineationSession(LineNetwork network);

  const LineNetwork& network() const { return network_; }
  const std::optional<CandidateLine>& candidate() const { return candidate_; }
  const std::vector<AcceptedLine>& accepted() const { return accepted_; }
  std::optional<int> suggested_next_node() const { return suggested_next_; }
  const std::vector<HistoryEntry>& history() const { return history_; }

  /// Throws State if a candidate is pending and replace is false.
  const CandidateLine& propose(std::span<const int> terminals, bool replace = false);
  const CandidateLine& simplify_candidate(double tolerance);
  const CandidateLine& replace_candidate_geometry(const Polyline& line);
  const AcceptedLine& accept_candidate();
  void delete_candidate();

  /// Restores state, e.g. from a snapshot.
  void restore(std::optional<CandidateLine> candidate, std::vector<AcceptedLine> accepted,
               std::optional<int> suggested_next, std::vector<HistoryEntry> history);

 private:
  CandidateLine& require_candidate();

  LineNetwork network_;
  std::optional<CandidateLine> candidate_;
  std::vector<AcceptedLine> accepted_;
  std::optional<int> suggested_next_;
  std::vector<HistoryEntry> history_;
};

}  // namespace boundline
