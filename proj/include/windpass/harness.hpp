#pragma once

// Experiment orchestration: scenario synthesis, the sequential pass loop,
// convergence detection and seed sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "windpass/agent.hpp"
#include "windpass/cost_table.hpp"
#include "windpass/error.hpp"
#include "windpass/grid.hpp"
#include "windpass/planner.hpp"
#include "windpass/traversal.hpp"
#include "windpass/windfield.hpp"

namespace windpass {

struct TrialConfig {
  std::size_t n1 = 5;
  std::size_t n2 = 7;
  double dx1 = 100.0;
  double dx2 = 250.0;
  int scenario_case = 1;
  EstimatorKind estimator = EstimatorKind::Stitch;
  KfModel kf_model = KfModel::Printed;
  double u0 = 15.0;
  double w_max = 10.0;
  double dt = 0.1;
  std::size_t n_terms = 6;
  FrequencyMode freq_mode = FrequencyMode::Period;
  FrequencyRange freq_range{300.0, 500.0};
  double noise_variance = 0.025;
  std::size_t max_passes = 30;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool antisymmetric_updates = true;
  bool reconcile_seams = true;
  std::size_t kf_modes = 6;
  QSchedule q_schedule{};

  bool noisy() const { return scenario_case == 2 || scenario_case == 4; }
  bool time_varying() const { return scenario_case >= 3; }

  void validate() const {
    if (scenario_case < 1 || scenario_case > 4) throw InvalidArgument("case must be 1, 2, 3 or 4");
    if (!(u0 > w_max)) throw InvalidArgument("u0 must exceed w_max");
    if (!(w_max > 0.0)) throw InvalidArgument("w_max must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (max_passes < 1) throw InvalidArgument("max_passes must be at least 1");
    if (n_terms < 1) throw InvalidArgument("n_terms must be at least 1");
    if (noise_variance < 0.0) throw InvalidArgument("noise_variance must be nonnegative");
    if (estimator == EstimatorKind::Kalman && !time_varying()) {
      throw InvalidArgument("the kf estimator applies to cases 3 and 4 only");
    }
    if (kf_modes < 1) throw InvalidArgument("kf_modes must be at least 1");
    frequency_band(freq_range, freq_mode);
    GridGraph(n1, n2, dx1, dx2);
  }
};

// Independent random streams derived from one trial seed.
enum class Stream : std::uint64_t { Scenario = 1, Noise = 2, Planner = 3 };

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

// Resistances are drawn before the signal, so trials that differ only in
// the case share the same network.
inline WindField build_scenario(const TrialConfig& config) {
  auto graph = std::make_shared<const GridGraph>(config.n1, config.n2, config.dx1, config.dx2);
  Rng rng = make_rng(config.seed, Stream::Scenario);
  auto resistance = sample_resistances(*graph, rng);
  const double noise = config.noisy() ? config.noise_variance : 0.0;
  SignalParams signal = config.time_varying()
                            ? generate_signal(config.n_terms, frequency_band(config.freq_range, config.freq_mode),
                                              noise, rng)
                            : static_signal(noise);
  return make_wind_field(std::move(graph), std::move(resistance), std::move(signal), config.w_max);
}

struct PassSnapshot {
  std::vector<double> costs_after;  // cost table after the pass's update
  double signal_error = std::numeric_limits<double>::quiet_NaN();  // mean |percent error| so far
};

struct TrialResult {
  TrialConfig config;
  WindField field;
  std::vector<PassRecord> passes;
  std::vector<double> initial_costs;
  std::vector<PassSnapshot> snapshots;
  std::optional<std::size_t> convergence_pass;
  PlannedPath oracle;
  Step series_first_step = 0;
  std::vector<double> edpx2;  // final normalized gradient estimate
  std::string failure;

  bool ok() const { return failure.empty(); }
  bool is_oracle_path(const PassRecord& pass) const { return pass.path == oracle.vertices; }
};

// Smallest p with every pass from p onward on the oracle path.
inline std::optional<std::size_t> convergence_pass(const std::vector<PassRecord>& passes,
                                                   const std::vector<VertexId>& oracle) {
  std::optional<std::size_t> found;
  for (std::size_t i = passes.size(); i-- > 0;) {
    if (passes[i].path != oracle) break;
    found = passes[i].pass_index;
  }
  return found;
}

struct SignalTraceRow {
  Step step = 0;
  double t = 0.0;
  double true_dpx2 = 0.0;
  double edpx2 = 0.0;
  double percent_error = 0.0;
};

// Estimate rescaled to the true signal's range over the same steps, then
// compared as 100 * |scaled - true| / max(true).
inline std::vector<SignalTraceRow> signal_trace(const SignalParams& signal, Step first_step,
                                                const std::vector<double>& edpx2, double dt) {
  std::vector<SignalTraceRow> rows(edpx2.size());
  double true_peak = 0.0;
  for (std::size_t i = 0; i < edpx2.size(); ++i) {
    rows[i].step = first_step + static_cast<Step>(i);
    rows[i].t = static_cast<double>(rows[i].step) * dt;
    rows[i].true_dpx2 = signal.value(rows[i].t);
    rows[i].edpx2 = edpx2[i];
    true_peak = std::max(true_peak, std::abs(rows[i].true_dpx2));
  }
  if (true_peak == 0.0) return rows;
  for (auto& row : rows) row.percent_error = 100.0 * std::abs(row.edpx2 * true_peak - row.true_dpx2) / true_peak;
  return rows;
}

// Mean |percent error| over the last quarter of the trace.
inline double final_quarter_error(const std::vector<SignalTraceRow>& rows) {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t begin = rows.size() - std::max<std::size_t>(1, rows.size() / 4);
  double sum = 0.0;
  for (std::size_t i = begin; i < rows.size(); ++i) sum += rows[i].percent_error;
  return sum / static_cast<double>(rows.size() - begin);
}

inline AgentOptions agent_options(const TrialConfig& config) {
  AgentOptions options;
  options.scenario_case = config.scenario_case;
  options.estimator = config.estimator;
  options.kf_model = config.kf_model;
  options.u0 = config.u0;
  options.w_max = config.w_max;
  options.dt = config.dt;
  options.antisymmetric_updates = config.antisymmetric_updates;
  options.reconcile_seams = config.reconcile_seams;
  options.kf_modes = config.kf_modes;
  options.q_schedule = config.q_schedule;
  options.r_var = config.noisy() ? config.noise_variance : 1e-6;
  return options;
}

// Runs the pass loop on a prepared field; the field may be overridden by the
// caller (e.g. zero-wind or hand-built coefficient maps).
inline TrialResult run_trial(const TrialConfig& config, WindField field) {
  TrialResult result;
  result.config = config;
  result.field = std::move(field);
  try {
    config.validate();
    const GridGraph& graph = *result.field.graph;
    Rng noise_rng = make_rng(config.seed, Stream::Noise);
    Rng planner_rng = make_rng(config.seed, Stream::Planner);

    EstimatorState agent(graph, agent_options(config));
    result.initial_costs = agent.costs().cost;
    result.oracle = oracle_plan(result.field, config.u0);

    Step step = 0;
    for (std::size_t p = 1; p <= config.max_passes; ++p) {
      const PlannedPath planned = plan(graph, agent.costs().cost, graph.start(), graph.goal(), planner_rng);
      PassRecord pass = execute_pass(result.field, planned.vertices, config.u0, config.dt, step, noise_rng);
      pass.pass_index = p;
      pass.expected_cost = planned.expected_cost;
      step = pass.end_step() + 1;
      agent.absorb(pass);

      PassSnapshot snapshot;
      snapshot.costs_after = agent.costs().cost;
      if (config.time_varying()) {
        const auto trace = signal_trace(result.field.signal, agent.series_first_step(), agent.edpx2_series(), config.dt);
        double sum = 0.0;
        for (const auto& row : trace) sum += row.percent_error;
        snapshot.signal_error = trace.empty() ? 0.0 : sum / static_cast<double>(trace.size());
      }
      result.snapshots.push_back(std::move(snapshot));
      result.passes.push_back(std::move(pass));
    }
    result.convergence_pass = convergence_pass(result.passes, result.oracle.vertices);
    if (config.time_varying()) {
      result.series_first_step = agent.series_first_step();
      result.edpx2 = agent.edpx2_series();
    }
  } catch (const std::exception& e) {
    result.failure = e.what();
  }
  return result;
}

inline TrialResult run_trial(const TrialConfig& config) {
  config.validate();
  return run_trial(config, build_scenario(config));
}

struct SweepCell {
  std::size_t n1 = 5;
  std::size_t n2 = 7;
  int scenario_case = 1;
  EstimatorKind estimator = EstimatorKind::Stitch;
};

struct SummaryRow {
  SweepCell cell;
  std::size_t seeds = 0;
  double median_passes = 0.0;
  std::optional<std::size_t> min_passes;
  std::optional<std::size_t> max_passes;
  double converged_fraction = 0.0;
  std::size_t failures = 0;
  std::vector<std::optional<std::size_t>> per_seed;
};

// Median over all seeds; a trial without convergence counts as
// max_passes + 1 so that it can only raise the median.
inline SummaryRow summarize(const SweepCell& cell, const std::vector<TrialResult>& trials) {
  SummaryRow row;
  row.cell = cell;
  row.seeds = trials.size();
  std::vector<double> values;
  std::size_t converged = 0;
  for (const auto& trial : trials) {
    row.per_seed.push_back(trial.convergence_pass);
    if (!trial.ok()) ++row.failures;
    if (trial.convergence_pass) {
      const std::size_t p = *trial.convergence_pass;
      ++converged;
      row.min_passes = row.min_passes ? std::min(*row.min_passes, p) : p;
      row.max_passes = row.max_passes ? std::max(*row.max_passes, p) : p;
      values.push_back(static_cast<double>(p));
    } else {
      values.push_back(static_cast<double>(trial.config.max_passes + 1));
    }
  }
  if (!values.empty()) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    row.median_passes = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    row.converged_fraction = static_cast<double>(converged) / static_cast<double>(n);
  }
  return row;
}

inline std::vector<SummaryRow> run_sweep(const TrialConfig& base, const std::vector<SweepCell>& cells,
                                         std::size_t n_seeds) {
  if (n_seeds < 1) throw InvalidArgument("n_seeds must be at least 1");
  std::vector<SummaryRow> rows;
  for (const auto& cell : cells) {
    std::vector<TrialResult> trials;
    for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
      TrialConfig config = base;
      config.n1 = cell.n1;
      config.n2 = cell.n2;
      config.scenario_case = cell.scenario_case;
      config.estimator = cell.estimator;
      config.seed = seed;
      TrialResult trial = run_trial(config);
      // Only the convergence outcome is summarized.
      trial.passes.clear();
      trial.snapshots.clear();
      trial.edpx2.clear();
      trials.push_back(std::move(trial));
    }
    rows.push_back(summarize(cell, trials));
  }
  return rows;
}

}  // namespace windpass
