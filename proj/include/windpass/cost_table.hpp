#pragma once

// The agent's per-edge travel-time estimates and the direct update rules.

#include <cmath>
#include <vector>

#include "windpass/error.hpp"
#include "windpass/grid.hpp"
#include "windpass/traversal.hpp"

namespace windpass {

struct CostTable {
  std::vector<double> cost;  // seconds, indexed by EdgeId

  double operator[](EdgeId id) const { return cost.at(id); }
  double& operator[](EdgeId id) { return cost.at(id); }
  std::size_t size() const { return cost.size(); }
};

// Travel time over `distance` at ground speed u0 + wind.
inline double travel_time(double distance, double u0, double wind) {
  const double speed = u0 + wind;
  if (!(speed > 0.0)) throw InvalidArgument("nonpositive ground speed");
  return distance / speed;
}

// Optimistic start: every edge assumes the strongest possible tailwind.
inline CostTable init_costs(const GridGraph& graph, double u0, double w_max) {
  if (!(u0 + w_max > 0.0)) throw InvalidArgument("u0 + w_max must be positive");
  CostTable table;
  table.cost.reserve(graph.edge_count());
  for (const auto& e : graph.edges()) table.cost.push_back(e.distance / (u0 + w_max));
  return table;
}

// Time-invariant, noiseless wind: any sample is the edge's wind.
inline void update_case1(CostTable& table, const EdgeWindow& window, double u0, double distance) {
  if (window.samples.empty()) throw InvalidArgument("empty measurement window");
  table[window.edge] = travel_time(distance, u0, window.samples.front());
}

// Time-invariant, noisy wind: the window mean estimates the edge's wind.
inline void update_case2(CostTable& table, const EdgeWindow& window, double u0, double distance) {
  if (window.samples.empty()) throw InvalidArgument("empty measurement window");
  table[window.edge] = travel_time(distance, u0, window.mean());
}

// Static cost from an estimated proportionality constant.
inline void update_cost_case34(CostTable& table, EdgeId edge, double rhat, double distance, double u0) {
  table[edge] = travel_time(distance, u0, rhat);
}

}  // namespace windpass
