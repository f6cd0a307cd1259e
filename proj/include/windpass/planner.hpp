#pragma once

// Minimum-time path planning over a table of static edge costs.
//
// The fringe holds (label, vertex, incoming edge) entries. A relaxation that
// ties the best known label is pushed as well, so equal-cost routes compete
// at the pop step; the pop picks uniformly among all entries whose label is
// within kTieTolerance of the minimum.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "windpass/error.hpp"
#include "windpass/grid.hpp"
#include "windpass/windfield.hpp"

namespace windpass {

inline constexpr double kTieTolerance = 1e-9;

struct PlannedPath {
  std::vector<VertexId> vertices;
  double expected_cost = 0.0;
};

// Sum of table costs along the path, accumulated in path order.
inline double path_cost(const GridGraph& graph, const std::vector<double>& cost, const std::vector<VertexId>& path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) total += cost.at(graph.edge_between(path[i], path[i + 1]));
  return total;
}

namespace detail {

struct FringeEntry {
  double label;
  VertexId vertex;
  std::optional<EdgeId> via;
};

inline void check_costs(const GridGraph& graph, const std::vector<double>& cost) {
  if (cost.size() != graph.edge_count()) throw InvalidArgument("cost table does not match the graph");
  for (EdgeId id = 0; id < graph.edge_count(); ++id) {
    if (!graph.is_traversable(graph.edge(id))) continue;
    if (!(cost[id] > 0.0) || !std::isfinite(cost[id])) {
      throw InvalidArgument("edge costs must be positive and finite (edge " + std::to_string(id) + ")");
    }
  }
}

// rng == nullptr selects the lowest vertex id among tied fringe entries.
inline PlannedPath dijkstra(const GridGraph& graph, const std::vector<double>& cost, VertexId start, VertexId goal,
                            Rng* rng) {
  check_costs(graph, cost);
  if (start == goal) throw InvalidArgument("start and goal coincide");
  if (!graph.is_traversable(start) || !graph.is_traversable(goal)) {
    throw InvalidArgument("start and goal must be traversable vertices");
  }

  const auto inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(graph.vertex_count(), inf);
  std::vector<bool> closed(graph.vertex_count(), false);
  std::vector<std::optional<EdgeId>> parent(graph.vertex_count());
  std::vector<FringeEntry> fringe{{0.0, start, std::nullopt}};
  best[start] = 0.0;
  std::vector<std::size_t> ties;

  while (!fringe.empty()) {
    std::erase_if(fringe, [&](const FringeEntry& e) { return closed[e.vertex]; });
    if (fringe.empty()) break;
    double low = inf;
    for (const auto& e : fringe) low = std::min(low, e.label);
    ties.clear();
    for (std::size_t i = 0; i < fringe.size(); ++i) {
      if (fringe[i].label <= low + kTieTolerance) ties.push_back(i);
    }
    std::size_t pick = ties.front();
    if (rng != nullptr) {
      std::uniform_int_distribution<std::size_t> choose(0, ties.size() - 1);
      pick = ties[choose(*rng)];
    } else {
      for (std::size_t i : ties) {
        if (fringe[i].vertex < fringe[pick].vertex) pick = i;
      }
    }
    const FringeEntry current = fringe[pick];
    fringe[pick] = fringe.back();
    fringe.pop_back();

    closed[current.vertex] = true;
    parent[current.vertex] = current.via;
    if (current.vertex == goal) break;

    for (EdgeId id : graph.out_edges(current.vertex)) {
      const Edge& e = graph.edge(id);
      if (!graph.is_traversable(e.to) || closed[e.to]) continue;
      const double alt = current.label + cost[id];
      if (alt <= best[e.to] + kTieTolerance) {
        fringe.push_back({alt, e.to, id});
        best[e.to] = std::min(best[e.to], alt);
      }
    }
  }
  if (!closed[goal]) throw RuntimeFailure("disconnected: goal unreachable from start");

  PlannedPath out;
  for (VertexId v = goal;;) {
    out.vertices.push_back(v);
    if (!parent[v]) break;
    v = graph.edge(*parent[v]).from;
  }
  std::reverse(out.vertices.begin(), out.vertices.end());
  out.expected_cost = path_cost(graph, cost, out.vertices);
  return out;
}

}  // namespace detail

inline PlannedPath plan(const GridGraph& graph, const std::vector<double>& cost, VertexId start, VertexId goal,
                        Rng& rng) {
  return detail::dijkstra(graph, cost, start, goal, &rng);
}

// Visits every simple start->goal path over traversable vertices.
inline void for_each_simple_path(const GridGraph& graph, VertexId start, VertexId goal,
                                 const std::function<void(const std::vector<VertexId>&)>& visit) {
  std::vector<bool> on_path(graph.vertex_count(), false);
  std::vector<VertexId> path{start};
  on_path[start] = true;
  std::function<void(VertexId)> extend = [&](VertexId v) {
    if (v == goal) {
      visit(path);
      return;
    }
    for (EdgeId id : graph.out_edges(v)) {
      const VertexId next = graph.edge(id).to;
      if (!graph.is_traversable(next) || on_path[next]) continue;
      on_path[next] = true;
      path.push_back(next);
      extend(next);
      path.pop_back();
      on_path[next] = false;
    }
  };
  extend(start);
}

inline PlannedPath plan_by_enumeration(const GridGraph& graph, const std::vector<double>& cost, VertexId start,
                                       VertexId goal) {
  detail::check_costs(graph, cost);
  PlannedPath best;
  best.expected_cost = std::numeric_limits<double>::infinity();
  for_each_simple_path(graph, start, goal, [&](const std::vector<VertexId>& path) {
    const double c = path_cost(graph, cost, path);
    if (c < best.expected_cost) {
      best.expected_cost = c;
      best.vertices = path;
    }
  });
  if (best.vertices.empty()) throw RuntimeFailure("disconnected: goal unreachable from start");
  return best;
}

// Static true edge costs: travel time under the time-averaged wind, whose
// gradient average is d0.
inline std::vector<double> true_static_costs(const WindField& field, double u0) {
  const GridGraph& graph = *field.graph;
  std::vector<double> cost(graph.edge_count(), 0.0);
  for (EdgeId id = 0; id < graph.edge_count(); ++id) {
    const double speed = u0 + field.coeff[id] * field.signal.d0;
    if (!(speed > 0.0)) throw InvalidArgument("nonpositive ground speed in oracle costs");
    cost[id] = graph.edge(id).distance / speed;
  }
  return cost;
}

inline constexpr std::size_t kEnumerationLimit = 25;

inline PlannedPath oracle_plan(const WindField& field, double u0) {
  const GridGraph& graph = *field.graph;
  const auto cost = true_static_costs(field, u0);
  auto path = detail::dijkstra(graph, cost, graph.start(), graph.goal(), nullptr);
  if (graph.n1() * (graph.n2() - 2) <= kEnumerationLimit) {
    const auto brute = plan_by_enumeration(graph, cost, graph.start(), graph.goal());
    if (std::abs(brute.expected_cost - path.expected_cost) > kTieTolerance) {
      throw RuntimeFailure("oracle cross-check failed: dijkstra and enumeration disagree");
    }
  }
  return path;
}

}  // namespace windpass
