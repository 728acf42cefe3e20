#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hear {

using NodeId = int;

enum class EgoDirection { ahead, right, behind, left };

std::string_view to_string(EgoDirection d);

struct PlacedObject {
  std::string name;
  double bearing = 0.0;  // absolute degrees in [0, 360), clockwise from +y

  bool operator==(const PlacedObject&) const = default;
};

struct Node {
  NodeId id = 0;
  double x = 0.0;
  double y = 0.0;
  int level = 0;
  std::string room;
  std::vector<PlacedObject> objects;

  bool operator==(const Node&) const = default;
};

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  double length_m = 0.0;

  bool operator==(const Edge&) const = default;
};

struct Neighbor {
  NodeId node;
  double length_m;
};

/// Furnished navigation graph. Node ids equal their index in `nodes`.
/// Immutable after `finalize()`; safe for concurrent readers.
class Environment {
 public:
  Environment() = default;
  Environment(std::string id, std::vector<Node> nodes, std::vector<Edge> edges,
              double level_height = 3.0);

  const std::string& id() const { return id_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::set<std::string>& room_vocab() const { return room_vocab_; }
  const std::set<std::string>& object_vocab() const { return object_vocab_; }
  double level_height() const { return level_height_; }

  const Node& node(NodeId id) const;
  bool has_node(NodeId id) const { return id >= 0 && id < static_cast<NodeId>(nodes_.size()); }
  /// Neighbors sorted by node id.
  const std::vector<Neighbor>& neighbors(NodeId id) const;
  bool adjacent(NodeId a, NodeId b) const;
  double edge_length(NodeId a, NodeId b) const;

  /// Straight-line distance including the vertical level offset.
  double euclidean(NodeId a, NodeId b) const;
  /// Clockwise compass bearing from a to b in [0, 360).
  double bearing(NodeId a, NodeId b) const;

  bool operator==(const Environment& o) const {
    return id_ == o.id_ && nodes_ == o.nodes_ && edges_ == o.edges_ &&
           level_height_ == o.level_height_;
  }

 private:
  std::string id_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  double level_height_ = 3.0;
  std::set<std::string> room_vocab_;
  std::set<std::string> object_vocab_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

struct EnvConfig {
  int min_nodes = 10;
  int max_nodes = 14;
  double spacing_m = 2.0;
  double jitter_m = 0.25;
  double extra_edge_prob = 0.15;
  int max_objects = 4;
  int levels = 1;
  double level_height_m = 3.0;
  std::vector<std::string> rooms;    // empty = built-in lexicon
  std::vector<std::string> objects;  // empty = built-in lexicon
};

struct Observation {
  std::string room;
  std::vector<std::pair<std::string, EgoDirection>> visible;

  bool operator==(const Observation&) const = default;
};

struct Action {
  std::string direction;  // one of kActionLabels
  NodeId target = 0;

  bool operator==(const Action&) const = default;
};

struct RouteStep {
  NodeId node = 0;
  double heading = 0.0;  // heading on arrival at `node`
  Observation observation;
  Action action;

  bool operator==(const RouteStep&) const = default;
};

struct Route {
  std::string env_id;
  std::vector<RouteStep> steps;
  double start_heading = 0.0;

  NodeId start_node() const { return steps.front().node; }
  NodeId final_node() const { return steps.back().action.target; }
  /// Heading after the last move.
  double final_heading(const Environment& env) const;
  /// Visited nodes in order, including the final node.
  std::vector<NodeId> path() const;

  bool operator==(const Route&) const = default;
};

/// Quadrant rule over the relative angle (bearing - heading) mod 360.
EgoDirection quadrant(double relative_degrees);
std::string_view action_label(EgoDirection d);
/// Direction label for moving from `from` to `to` while facing `heading`.
std::string action_label_for(const Environment& env, NodeId from, NodeId to, double heading);

double normalize_degrees(double deg);

/// Heading after moving from `from` to `to`; stairs keep the current heading.
double heading_after(const Environment& env, NodeId from, NodeId to, double heading);

Environment generate_environment(std::uint64_t seed, const EnvConfig& config = {},
                                 std::string id = {});

Observation observation_at(const Environment& env, NodeId node, double incoming_heading);

Route sample_route(const Environment& env, std::uint64_t seed, int min_steps, int max_steps);

/// Builds a route along an explicit node path.
Route route_along(const Environment& env, const std::vector<NodeId>& path, double start_heading);

double path_distance(const Environment& env, NodeId a, NodeId b);
/// Node sequence of one shortest path (ties broken by lower node id).
std::vector<NodeId> shortest_path(const Environment& env, NodeId a, NodeId b);

}  // namespace hear
