#pragma once

// Discrete-time simulation of one pass along a planned path.
//
// Position along an edge is integrated with the ground speed u0 + wind at
// each step. The step during which the remaining distance is covered is the
// exit step; the fractional part of that step is interpolated for cost
// accounting, and the next edge starts on the following integer step.

#include <cstdint>
#include <string>
#include <vector>

#include "windpass/error.hpp"
#include "windpass/grid.hpp"
#include "windpass/windfield.hpp"

namespace windpass {

using Step = std::int64_t;

struct EdgeWindow {
  EdgeId edge = 0;
  Step entry = 0;  // n
  Step exit = 0;   // m
  std::vector<double> samples;  // measured wind at steps entry..exit
  double crossing_time = 0.0;   // seconds

  std::size_t size() const { return samples.size(); }
  double mean() const {
    double sum = 0.0;
    for (double s : samples) sum += s;
    return samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
  }
};

struct PassRecord {
  std::size_t pass_index = 0;
  std::vector<VertexId> path;
  std::vector<EdgeWindow> windows;
  double incurred_cost = 0.0;
  double expected_cost = 0.0;
  Step start_step = 0;

  Step end_step() const { return windows.empty() ? start_step - 1 : windows.back().exit; }
};

inline EdgeWindow traverse_edge(const WindField& field, EdgeId edge, Step entry_step, double u0, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (!(u0 > field.w_max)) {
    throw InvalidArgument("possible stall: headwind can cancel airspeed (u0 must exceed w_max)");
  }
  if (entry_step < 0) throw InvalidArgument("entry step must be nonnegative");
  const double distance = field.graph->edge(edge).distance;

  EdgeWindow window;
  window.edge = edge;
  window.entry = entry_step;
  double covered = 0.0;
  for (Step k = entry_step;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double advance = (u0 + field.true_wind(edge, t)) * dt;
    if (!(advance > 0.0)) throw RuntimeFailure("stall: nonpositive ground speed on edge " + std::to_string(edge));
    window.samples.push_back(measure_wind(field, edge, k, dt, rng));
    if (covered + advance >= distance) {
      const double fraction = (distance - covered) / advance;
      window.exit = k;
      window.crossing_time = (static_cast<double>(k - entry_step) + fraction) * dt;
      return window;
    }
    covered += advance;
  }
}

inline PassRecord execute_pass(const WindField& field, const std::vector<VertexId>& path, double u0, double dt,
                               Step start_step, Rng& rng) {
  if (path.size() < 2) throw InvalidArgument("path needs at least one edge");
  const GridGraph& graph = *field.graph;
  PassRecord record;
  record.path = path;
  record.start_step = start_step;
  Step entry = start_step;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto id = graph.find_edge(path[i], path[i + 1]);
    if (!id) {
      throw InvalidArgument("disconnected path at " + std::to_string(GridGraph::label(path[i])) + "->" +
                            std::to_string(GridGraph::label(path[i + 1])));
    }
    record.windows.push_back(traverse_edge(field, *id, entry, u0, dt, rng));
    record.incurred_cost += record.windows.back().crossing_time;
    entry = record.windows.back().exit + 1;
  }
  return record;
}

}  // namespace windpass
