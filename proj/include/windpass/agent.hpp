#pragma once

// The central agent's memory and its per-pass update for each wind case.
//
//   Case 1: static, noiseless    -> cost from the measured wind
//   Case 2: static, noisy        -> cost from the window-mean wind
//   Case 3: varying, noiseless   -> stitched gradient, resistance, static cost
//   Case 4: varying, noisy       -> reconciled (or fitted) stitching, optional
//                                   Kalman filter, resistance, static cost
//
// For Cases 3 and 4 every pass runs the same pipeline: stitch the new windows
// into the history, optionally filter the stitched samples, normalize by the
// signed peak, then re-estimate every measured edge's constant as a ratio of
// time averages against the current estimate.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "windpass/cost_table.hpp"
#include "windpass/grid.hpp"
#include "windpass/kalman.hpp"
#include "windpass/reconcile.hpp"
#include "windpass/spectrum.hpp"
#include "windpass/stitching.hpp"
#include "windpass/traversal.hpp"

namespace windpass {

enum class EstimatorKind { Stitch, Kalman };

struct AgentOptions {
  int scenario_case = 1;
  EstimatorKind estimator = EstimatorKind::Stitch;
  KfModel kf_model = KfModel::Printed;
  double u0 = 15.0;
  double w_max = 10.0;
  double dt = 0.1;
  bool antisymmetric_updates = true;
  std::size_t kf_modes = 6;
  QSchedule q_schedule{};
  double r_var = 0.025;
  bool reconcile_seams = true;  // Case 4: whole-history seam reconciliation
};

struct ResistanceEstimates {
  std::vector<double> rhat;
  std::vector<std::size_t> last_update_pass;  // 0 = never
};

// Series divided by its value of largest magnitude (sign included).
inline std::vector<double> normalize_signed_peak(const std::vector<double>& series) {
  double peak = 0.0;
  for (double v : series) {
    if (std::abs(v) > std::abs(peak)) peak = v;
  }
  std::vector<double> out(series.size(), 0.0);
  if (peak != 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = series[i] / peak;
  }
  return out;
}

class EstimatorState {
 public:
  EstimatorState(const GridGraph& graph, AgentOptions options)
      : graph_(&graph), options_(options), table_(init_costs(graph, options.u0, options.w_max)), reconciler_(graph) {
    if (options_.scenario_case < 1 || options_.scenario_case > 4) throw InvalidArgument("case must be 1..4");
    resistance_.rhat.assign(graph.edge_count(), 0.0);
    resistance_.last_update_pass.assign(graph.edge_count(), 0);
    records_.resize(graph.edge_count());
  }

  const CostTable& costs() const { return table_; }
  const ResistanceEstimates& resistances() const { return resistance_; }
  bool uses_kalman() const { return options_.estimator == EstimatorKind::Kalman && options_.scenario_case >= 3; }
  bool uses_reconciler() const { return options_.reconcile_seams && options_.scenario_case == 4; }

  // Normalized gradient estimate over the history (empty for Cases 1-2).
  const std::vector<double>& edpx2_series() const { return edpx2_; }
  Step series_first_step() const { return first_step_; }
  const std::optional<KFState>& kalman() const { return kf_; }

  void absorb(const PassRecord& pass) {
    switch (options_.scenario_case) {
      case 1:
        for (const auto& w : pass.windows) set_from_wind(w.edge, w.samples.front(), pass.pass_index);
        break;
      case 2:
        for (const auto& w : pass.windows) set_from_wind(w.edge, w.mean(), pass.pass_index);
        break;
      default:
        absorb_varying(pass);
        break;
    }
  }

 private:
  // Estimated winds are clipped to the known bound |w| <= w_max.
  double clip(double wind) const { return std::clamp(wind, -options_.w_max, options_.w_max); }

  void set_from_wind(EdgeId edge, double wind, std::size_t pass_index) {
    const Edge& e = graph_->edge(edge);
    const double w = clip(wind);
    update_cost_case34(table_, edge, w, e.distance, options_.u0);
    resistance_.rhat[edge] = w;
    resistance_.last_update_pass[edge] = pass_index;
    if (options_.antisymmetric_updates) {
      update_cost_case34(table_, e.reverse, -w, e.distance, options_.u0);
      resistance_.rhat[e.reverse] = -w;
      resistance_.last_update_pass[e.reverse] = pass_index;
    }
  }

  void absorb_varying(const PassRecord& pass) {
    if (!pass.windows.empty() && input_.empty() && reconciler_.window_count() == 0) {
      first_step_ = pass.windows.front().entry;
    }
    // Stitched estimate and the stitched (unsmoothed) samples behind it.
    std::vector<double> estimate;
    if (uses_reconciler()) {
      for (const auto& w : pass.windows) reconciler_.add(w);
      auto result = reconciler_.reconcile();
      estimate = std::move(result.smooth);
      input_ = std::move(result.samples);
    } else {
      for (const auto& w : pass.windows) {
        const StitchOutcome outcome = options_.scenario_case == 3 ? stitch_window(stitched_, w, options_.dt)
                                                                  : stitch_window_noisy(stitched_, w, options_.dt);
        for (double v : w.samples) input_.push_back(outcome.scale * v);
      }
      estimate = stitched_.raw_series();
      // The first window is taken as is; its samples carry scale 1.
    }
    if (uses_kalman()) {
      if (auto filtered = kalman_filter(pass.pass_index, estimate)) estimate = std::move(*filtered);
    }
    edpx2_ = normalize_signed_peak(estimate);

    for (const auto& w : pass.windows) {
      const auto offset = static_cast<std::size_t>(w.entry - first_step_);
      double wind_sum = 0.0;
      for (double v : w.samples) wind_sum += v;
      records_[w.edge].push_back(WindowRecord{wind_sum, offset, w.samples.size(), pass.pass_index});
    }
    refresh();
  }

  // Filters the whole stitched sample history with a filter rebuilt from the
  // FFT of that history. The input is scaled by the signed peak of the
  // stitched estimate, which puts it in the units of the gradient so that
  // the measurement variance applies as given. Empty while the history is
  // too short for the FFT.
  std::optional<std::vector<double>> kalman_filter(std::size_t pass_index, const std::vector<double>& estimate) {
    const std::size_t modes = options_.kf_modes;
    if (input_.size() < 2 * modes + 1) return std::nullopt;
    double norm = 0.0;
    for (double v : estimate) {
      if (std::abs(v) > std::abs(norm)) norm = v;
    }
    if (norm == 0.0) return std::nullopt;
    std::vector<double> normalized(input_.size());
    for (std::size_t i = 0; i < normalized.size(); ++i) normalized[i] = input_[i] / norm;
    const Spectrum spectrum = fft_dominant_components(normalized, options_.dt, modes);

    const double duration = static_cast<double>(normalized.size()) * options_.dt;
    const double period = 1.0 / spectrum.components.front().frequency;
    const double q = settled_ ? options_.q_schedule.small : options_.q_schedule(pass_index, duration, period);
    settled_ = settled_ || q == options_.q_schedule.small;

    // Measurement variance in the normalized units of the filter input.
    kf_ = build_kf(spectrum, options_.dt, q, options_.r_var, options_.kf_model);
    auto out = kf_filter_series(*kf_, normalized);
    for (double& v : out) v *= norm;
    return out;
  }

  // Every measured edge is re-estimated against the current normalized
  // series, so all estimates share one normalization. The ratio of time
  // averages runs over every crossing of the edge (reverse crossings with
  // the sign flipped when updates are antisymmetric), and the cost uses the
  // time-averaged wind rhat * mean(edpx2).
  void refresh() {
    if (edpx2_.empty()) return;
    double series_mean = 0.0;
    for (double v : edpx2_) series_mean += v;
    series_mean /= static_cast<double>(edpx2_.size());
    for (EdgeId e = 0; e < records_.size(); ++e) {
      const EdgeId rev = graph_->edge(e).reverse;
      if (options_.antisymmetric_updates && rev < e) continue;
      double wind_sum = 0.0, estimate_sum = 0.0;
      std::size_t samples = 0, last_pass = 0;
      const auto pool = [&](EdgeId id, double sign) {
        for (const auto& rec : records_[id]) {
          wind_sum += sign * rec.wind_sum;
          for (std::size_t i = 0; i < rec.length; ++i) estimate_sum += edpx2_[rec.offset + i];
          samples += rec.length;
          last_pass = std::max(last_pass, rec.pass_index);
        }
      };
      pool(e, 1.0);
      if (options_.antisymmetric_updates) pool(rev, -1.0);
      if (samples == 0) continue;
      // An estimate averaging to zero over the windows leaves the cost as is.
      const auto rhat = estimate_resistance(wind_sum / static_cast<double>(samples),
                                            estimate_sum / static_cast<double>(samples));
      if (!rhat) continue;
      set_from_wind(e, *rhat * series_mean, last_pass);
      resistance_.rhat[e] = *rhat;
      if (options_.antisymmetric_updates) resistance_.rhat[rev] = -*rhat;
    }
  }

  struct WindowRecord {
    double wind_sum = 0.0;
    std::size_t offset = 0;  // into the history
    std::size_t length = 0;
    std::size_t pass_index = 0;
  };

  const GridGraph* graph_;
  AgentOptions options_;
  CostTable table_;
  ResistanceEstimates resistance_;

  StitchedSeries stitched_;
  SeamReconciler reconciler_;
  std::vector<double> input_;  // stitched samples before any smoothing
  std::vector<double> edpx2_;
  Step first_step_ = 0;
  std::vector<std::vector<WindowRecord>> records_;  // every window per directed edge

  std::optional<KFState> kf_;
  bool settled_ = false;
};

}  // namespace windpass
