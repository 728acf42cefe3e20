#include "hear/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "hear/lexicon.hpp"
#include "hear/rng.hpp"

namespace hear {

std::string_view to_string(EgoDirection d) {
  switch (d) {
    case EgoDirection::ahead:
      return "ahead";
    case EgoDirection::right:
      return "right";
    case EgoDirection::behind:
      return "behind";
    case EgoDirection::left:
      return "left";
  }
  return "ahead";
}

double normalize_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  return r;
}

EgoDirection quadrant(double relative_degrees) {
  const double d = normalize_degrees(relative_degrees);
  if (d >= 315.0 || d < 45.0) return EgoDirection::ahead;
  if (d < 135.0) return EgoDirection::right;
  if (d < 225.0) return EgoDirection::behind;
  return EgoDirection::left;
}

std::string_view action_label(EgoDirection d) {
  switch (d) {
    case EgoDirection::ahead:
      return "go straight";
    case EgoDirection::right:
      return "turn right";
    case EgoDirection::behind:
      return "turn around";
    case EgoDirection::left:
      return "turn left";
  }
  return "go straight";
}

Environment::Environment(std::string id, std::vector<Node> nodes, std::vector<Edge> edges,
                         double level_height)
    : id_(std::move(id)), nodes_(std::move(nodes)), edges_(std::move(edges)),
      level_height_(level_height) {
  adjacency_.assign(nodes_.size(), {});
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k].id != static_cast<NodeId>(k)) {
      throw std::invalid_argument("node ids must equal their index");
    }
    room_vocab_.insert(nodes_[k].room);
    for (const auto& o : nodes_[k].objects) object_vocab_.insert(o.name);
  }
  for (const auto& e : edges_) {
    if (!has_node(e.from) || !has_node(e.to)) {
      throw std::invalid_argument("edge references unknown node");
    }
    if (!(e.length_m > 0.0)) throw std::invalid_argument("edge length must be positive");
    adjacency_[e.from].push_back({e.to, e.length_m});
    adjacency_[e.to].push_back({e.from, e.length_m});
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

const Node& Environment::node(NodeId id) const {
  if (!has_node(id)) throw std::out_of_range("unknown node id " + std::to_string(id));
  return nodes_[id];
}

const std::vector<Neighbor>& Environment::neighbors(NodeId id) const {
  if (!has_node(id)) throw std::out_of_range("unknown node id " + std::to_string(id));
  return adjacency_[id];
}

bool Environment::adjacent(NodeId a, NodeId b) const {
  if (!has_node(a) || !has_node(b)) return false;
  const auto& adj = adjacency_[a];
  return std::any_of(adj.begin(), adj.end(), [b](const Neighbor& n) { return n.node == b; });
}

double Environment::edge_length(NodeId a, NodeId b) const {
  for (const auto& n : neighbors(a)) {
    if (n.node == b) return n.length_m;
  }
  throw std::invalid_argument("nodes are not adjacent");
}

double Environment::euclidean(NodeId a, NodeId b) const {
  const Node& p = node(a);
  const Node& q = node(b);
  const double dz = (q.level - p.level) * level_height_;
  return std::sqrt((q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y) + dz * dz);
}

double Environment::bearing(NodeId a, NodeId b) const {
  const Node& p = node(a);
  const Node& q = node(b);
  return normalize_degrees(std::atan2(q.x - p.x, q.y - p.y) * 180.0 / std::numbers::pi);
}

std::string action_label_for(const Environment& env, NodeId from, NodeId to, double heading) {
  const int dl = env.node(to).level - env.node(from).level;
  if (dl > 0) return "go up";
  if (dl < 0) return "go down";
  return std::string(action_label(quadrant(env.bearing(from, to) - heading)));
}

double heading_after(const Environment& env, NodeId from, NodeId to, double heading) {
  if (env.node(from).level != env.node(to).level) return heading;
  return env.bearing(from, to);
}

namespace {

struct Cell {
  int gx;
  int gy;
  auto operator<=>(const Cell&) const = default;
};

}  // namespace

double Route::final_heading(const Environment& env) const {
  const auto& last = steps.back();
  return heading_after(env, last.node, last.action.target, last.heading);
}

std::vector<NodeId> Route::path() const {
  std::vector<NodeId> out;
  for (const auto& s : steps) out.push_back(s.node);
  if (!steps.empty()) out.push_back(final_node());
  return out;
}

Environment generate_environment(std::uint64_t seed, const EnvConfig& config, std::string id) {
  const auto& lex = Lexicon::builtin();
  const auto& rooms = config.rooms.empty() ? lex.rooms() : config.rooms;
  const auto& objects = config.objects.empty() ? lex.objects() : config.objects;
  if (config.min_nodes < 1 || config.max_nodes < config.min_nodes) {
    throw std::invalid_argument("node-count range is empty");
  }
  if (rooms.size() < 2 || objects.size() < 3) {
    throw std::invalid_argument("vocabulary needs at least 2 rooms and 3 objects");
  }
  if (config.levels < 1 || config.max_objects < 0 || config.spacing_m <= 0.0) {
    throw std::invalid_argument("invalid environment config");
  }
  if (config.jitter_m * 2.0 >= config.spacing_m) {
    throw std::invalid_argument("jitter must stay below half the grid spacing");
  }

  Rng rng(derive_seed(seed, "environment"));
  if (id.empty()) id = "env-" + std::to_string(seed);

  const int total = rng.range(config.min_nodes, config.max_nodes);
  const int levels = std::min(config.levels, total);

  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<Cell> cells;       // grid cell per node
  std::vector<int> node_levels;  // level per node
  std::vector<NodeId> parent;

  auto add_edge = [&](NodeId a, NodeId b) {
    edges.push_back({a, b, 0.0});
  };

  Cell origin{0, 0};
  for (int level = 0; level < levels; ++level) {
    const int count = total / levels + (level < total % levels ? 1 : 0);
    std::map<Cell, NodeId> occupied;
    const NodeId first = static_cast<NodeId>(cells.size());
    cells.push_back(origin);
    node_levels.push_back(level);
    parent.push_back(level == 0 ? -1 : first - 1);
    occupied[origin] = first;
    if (level > 0) add_edge(first - 1, first);  // stairs

    static constexpr int kDx[] = {0, 1, 0, -1};
    static constexpr int kDy[] = {1, 0, -1, 0};
    while (static_cast<int>(occupied.size()) < count) {
      const NodeId from = first + static_cast<NodeId>(rng.index(occupied.size()));
      const auto dir = rng.index(4);
      Cell next{cells[from].gx + kDx[dir], cells[from].gy + kDy[dir]};
      if (occupied.count(next)) continue;
      const NodeId nid = static_cast<NodeId>(cells.size());
      cells.push_back(next);
      node_levels.push_back(level);
      parent.push_back(from);
      occupied[next] = nid;
      add_edge(from, nid);
    }
    // Loops between grid neighbours that the growth did not connect.
    for (const auto& [cell, nid] : occupied) {
      for (int dir = 0; dir < 2; ++dir) {
        Cell other{cell.gx + kDx[dir], cell.gy + kDy[dir]};
        auto it = occupied.find(other);
        if (it == occupied.end()) continue;
        const NodeId a = nid;
        const NodeId b = it->second;
        const bool linked = std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
          return (e.from == a && e.to == b) || (e.from == b && e.to == a);
        });
        if (!linked && rng.bernoulli(config.extra_edge_prob)) add_edge(a, b);
      }
    }
    origin = cells.back();
  }

  nodes.resize(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    Node& n = nodes[k];
    n.id = static_cast<NodeId>(k);
    n.level = node_levels[k];
    n.x = cells[k].gx * config.spacing_m + rng.uniform(-config.jitter_m, config.jitter_m);
    n.y = cells[k].gy * config.spacing_m + rng.uniform(-config.jitter_m, config.jitter_m);
    // Stair landings sit directly above/below their partner node.
    if (parent[k] >= 0 && node_levels[parent[k]] != n.level) {
      n.x = nodes[parent[k]].x;
      n.y = nodes[parent[k]].y;
    }
    if (parent[k] >= 0 && rng.bernoulli(0.35)) {
      n.room = nodes[parent[k]].room;
    } else {
      n.room = rng.pick(rooms);
    }
    const int n_obj = rng.range(0, config.max_objects);
    std::vector<std::string> pool = objects;
    for (int o = 0; o < n_obj && !pool.empty(); ++o) {
      const auto idx = rng.index(pool.size());
      const double bearing = std::round(rng.uniform(0.0, 360.0) * 10.0) / 10.0;
      n.objects.push_back({pool[idx], normalize_degrees(bearing)});
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    }
  }

  for (auto& e : edges) {
    const Node& p = nodes[e.from];
    const Node& q = nodes[e.to];
    const double dz = (q.level - p.level) * config.level_height_m;
    e.length_m = std::sqrt((q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y) + dz * dz);
  }
  return Environment(std::move(id), std::move(nodes), std::move(edges), config.level_height_m);
}

Observation observation_at(const Environment& env, NodeId node, double incoming_heading) {
  const Node& n = env.node(node);
  Observation obs;
  obs.room = n.room;
  for (const auto& o : n.objects) {
    obs.visible.emplace_back(o.name, quadrant(o.bearing - incoming_heading));
  }
  return obs;
}

Route route_along(const Environment& env, const std::vector<NodeId>& path, double start_heading) {
  if (path.size() < 2) throw std::invalid_argument("route needs at least one move");
  Route route;
  route.env_id = env.id();
  route.start_heading = normalize_degrees(start_heading);
  double heading = route.start_heading;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const NodeId from = path[k];
    const NodeId to = path[k + 1];
    if (!env.adjacent(from, to)) throw std::invalid_argument("route step between non-adjacent nodes");
    RouteStep step;
    step.node = from;
    step.heading = heading;
    step.observation = observation_at(env, from, heading);
    step.action = {action_label_for(env, from, to, heading), to};
    route.steps.push_back(std::move(step));
    heading = heading_after(env, from, to, heading);
  }
  return route;
}

Route sample_route(const Environment& env, std::uint64_t seed, int min_steps, int max_steps) {
  if (min_steps < 1 || max_steps > 10 || min_steps > max_steps) {
    throw std::invalid_argument("route length range must lie within [1, 10]");
  }
  if (static_cast<int>(env.nodes().size()) < min_steps + 1) {
    throw std::invalid_argument("environment too small for requested route length");
  }
  Rng rng(derive_seed(seed, "route"));
  for (int attempt = 0; attempt < 500; ++attempt) {
    const int length = rng.range(min_steps, max_steps);
    NodeId current = static_cast<NodeId>(rng.index(env.nodes().size()));
    std::vector<NodeId> path{current};
    std::vector<bool> visited(env.nodes().size(), false);
    visited[current] = true;
    while (static_cast<int>(path.size()) <= length) {
      std::vector<NodeId> options;
      for (const auto& nb : env.neighbors(current)) {
        if (!visited[nb.node]) options.push_back(nb.node);
      }
      if (options.empty()) break;
      current = rng.pick(options);
      visited[current] = true;
      path.push_back(current);
    }
    if (static_cast<int>(path.size()) != length + 1) continue;
    const auto& start_nbrs = env.neighbors(path.front());
    const NodeId facing = rng.pick(start_nbrs).node;
    return route_along(env, path, env.bearing(path.front(), facing));
  }
  throw std::invalid_argument("environment too small for requested route length");
}

namespace {

std::pair<std::vector<double>, std::vector<NodeId>> dijkstra(const Environment& env, NodeId src) {
  const auto n = env.nodes().size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<NodeId> prev(n, -1);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[src] = 0.0;
  queue.push({0.0, src});
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const auto& nb : env.neighbors(u)) {
      const double nd = d + nb.length_m;
      if (nd < dist[nb.node] || (nd == dist[nb.node] && u < prev[nb.node])) {
        const bool improved = nd < dist[nb.node];
        dist[nb.node] = nd;
        prev[nb.node] = u;
        if (improved) queue.push({nd, nb.node});
      }
    }
  }
  return {std::move(dist), std::move(prev)};
}

}  // namespace

double path_distance(const Environment& env, NodeId a, NodeId b) {
  env.node(a);
  env.node(b);
  if (a == b) return 0.0;
  // Always search from the lower id so d(a, b) and d(b, a) are bit-identical.
  return dijkstra(env, std::min(a, b)).first[std::max(a, b)];
}

std::vector<NodeId> shortest_path(const Environment& env, NodeId a, NodeId b) {
  auto [dist, prev] = dijkstra(env, a);
  std::vector<NodeId> out;
  for (NodeId v = b; v != -1; v = prev[v]) {
    out.push_back(v);
    if (v == a) break;
  }
  std::reverse(out.begin(), out.end());
  if (out.front() != a) throw std::invalid_argument("nodes are disconnected");
  return out;
}

}  // namespace hear
