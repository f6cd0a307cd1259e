#pragma once

// Reconstruction of the pressure-gradient signal from per-edge windows.
//
// Each edge sees the gradient through its own unknown proportionality
// constant, so consecutive windows do not line up. A new window is rescaled so
// that it continues the running series at the seam, appended, and the whole
// series is normalized by its running maximum magnitude.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "windpass/error.hpp"
#include "windpass/traversal.hpp"

namespace windpass {

inline constexpr double kUnscalableThreshold = 1e-12;
inline constexpr double kIndeterminateThreshold = 1e-9;

// c0 + c1*x + c2*x^2 with x = step - origin.
struct Quadratic {
  double origin = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double step) const {
    const double x = step - origin;
    return c0 + x * (c1 + x * c2);
  }
  Quadratic scaled(double r) const { return Quadratic{origin, r * c0, r * c1, r * c2}; }
};

// Least-squares quadratic through samples taken at steps first, first+1, ...
inline Quadratic fit_quadratic(Step first, std::span<const double> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 3) throw RuntimeFailure("degenerate window: quadratic fit needs at least 3 samples");
  // Abscissa scaled to [0, 1] for conditioning.
  const double span = static_cast<double>(n - 1);
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / span;
    design(i, 0) = 1.0;
    design(i, 1) = x;
    design(i, 2) = x * x;
    rhs(i) = samples[static_cast<std::size_t>(i)];
  }
  const auto qr = design.colPivHouseholderQr();
  if (qr.rank() < 3) throw RuntimeFailure("degenerate window: singular normal equations");
  const Eigen::Vector3d c = qr.solve(rhs);
  return Quadratic{static_cast<double>(first), c(0), c(1) / span, c(2) / (span * span)};
}

class StitchedSeries {
 public:
  bool empty() const { return w_.empty(); }
  std::size_t size() const { return w_.size(); }
  Step first_step() const { return first_; }
  Step next_step() const { return first_ + static_cast<Step>(w_.size()); }
  bool covers(Step n, Step m) const { return !empty() && n >= first_ && m < next_step() && n <= m; }

  double raw(Step k) const { return w_.at(static_cast<std::size_t>(k - first_)); }
  const std::vector<double>& raw_series() const { return w_; }
  double max_abs() const { return std::abs(peak_); }
  // Value of largest magnitude, sign included.
  double peak() const { return peak_; }

  // Normalized estimate at step k, in [-1, 1]. The series is divided by its
  // signed peak: the first window's scale carries the unknown sign of that
  // edge's coefficient, and the gradient itself peaks positive.
  double edpx2(Step k) const { return peak_ != 0.0 ? raw(k) / peak_ : 0.0; }
  std::vector<double> edpx2_series() const {
    std::vector<double> out(w_.size());
    for (std::size_t i = 0; i < w_.size(); ++i) out[i] = peak_ != 0.0 ? w_[i] / peak_ : 0.0;
    return out;
  }

  const std::optional<Quadratic>& last_fit() const { return last_fit_; }
  std::size_t unscalable_windows() const { return unscalable_; }

  void append(Step entry, std::span<const double> values) {
    if (!empty() && entry != next_step()) {
      throw InvalidArgument("window does not continue the series (entry " + std::to_string(entry) + ", expected " +
                            std::to_string(next_step()) + ")");
    }
    if (empty()) first_ = entry;
    for (double v : values) {
      w_.push_back(v);
      if (std::abs(v) > std::abs(peak_)) peak_ = v;
    }
  }

  // Value and slope at the last stored step, slope by backward differences.
  double last() const { return w_.back(); }
  double last_slope(double dt) const {
    const std::size_t n = w_.size();
    if (n >= 3) return (3.0 * w_[n - 1] - 4.0 * w_[n - 2] + w_[n - 3]) / (2.0 * dt);
    if (n == 2) return (w_[n - 1] - w_[n - 2]) / dt;
    return 0.0;
  }

  void set_last_fit(std::optional<Quadratic> fit) { last_fit_ = fit; }
  void mark_unscalable() { ++unscalable_; }

 private:
  Step first_ = 0;
  std::vector<double> w_;
  double peak_ = 0.0;
  std::optional<Quadratic> last_fit_;
  std::size_t unscalable_ = 0;
};

struct StitchOutcome {
  double scale = 1.0;
  bool unscalable = false;
};

namespace detail {

// Window carries no usable anchor: hold the extrapolated seam value.
inline StitchOutcome hold_window(StitchedSeries& series, const EdgeWindow& window, double anchor) {
  std::vector<double> held(window.samples.size(), anchor);
  series.append(window.entry, held);
  series.set_last_fit(Quadratic{static_cast<double>(window.entry), anchor, 0.0, 0.0});
  series.mark_unscalable();
  return StitchOutcome{0.0, true};
}

}  // namespace detail

// Noiseless stitching: the new window is scaled to match the series value
// extrapolated one step past its end with a second-order backward slope.
inline StitchOutcome stitch_window(StitchedSeries& series, const EdgeWindow& window, double dt) {
  if (window.samples.empty()) throw InvalidArgument("empty measurement window");
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (series.empty()) {
    series.append(window.entry, window.samples);
    series.set_last_fit(std::nullopt);
    return {};
  }
  const double anchor = series.last() + series.last_slope(dt) * dt;
  const double head = window.samples.front();
  if (std::abs(head) < kUnscalableThreshold) return detail::hold_window(series, window, anchor);

  const double r = anchor / head;
  std::vector<double> scaled(window.samples.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = r * window.samples[i];
  series.append(window.entry, scaled);
  series.set_last_fit(std::nullopt);
  return StitchOutcome{r, false};
}

// Noisy stitching: quadratic fits of the previous and the new window are
// matched half a step before the new window's first sample, and the new
// window's fitted values are appended.
inline StitchOutcome stitch_window_noisy(StitchedSeries& series, const EdgeWindow& window, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  const Quadratic fit = fit_quadratic(window.entry, window.samples);
  const auto fitted_values = [&](double r) {
    std::vector<double> out(window.samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r * fit(static_cast<double>(window.entry + Step(i)));
    return out;
  };
  if (series.empty()) {
    series.append(window.entry, fitted_values(1.0));
    series.set_last_fit(fit);
    return {};
  }
  const double seam = static_cast<double>(window.entry) - 0.5;
  double previous;
  if (series.last_fit()) {
    previous = (*series.last_fit())(seam);
  } else {
    // Previous window came from the noiseless path; extrapolate its tail.
    previous = series.last() + 0.5 * series.last_slope(dt) * dt;
  }
  const double current = fit(seam);
  if (std::abs(current) < kUnscalableThreshold) return detail::hold_window(series, window, previous);

  const double r = previous / current;
  series.append(window.entry, fitted_values(r));
  series.set_last_fit(fit.scaled(r));
  return StitchOutcome{r, false};
}

// Proportionality constant as the ratio of the time-averaged measured wind to
// the time-averaged normalized gradient estimate. Empty when the estimate
// averages to (nearly) zero.
inline std::optional<double> estimate_resistance(double mean_wind, double mean_estimate) {
  if (std::abs(mean_estimate) < kIndeterminateThreshold) return std::nullopt;
  return mean_wind / mean_estimate;
}

inline std::optional<double> estimate_resistance(const EdgeWindow& window, std::span<const double> estimate) {
  if (window.samples.empty() || estimate.size() != window.samples.size()) {
    throw InvalidArgument("estimate does not cover the window");
  }
  double mean_estimate = 0.0;
  for (double e : estimate) mean_estimate += e;
  mean_estimate /= static_cast<double>(estimate.size());
  return estimate_resistance(window.mean(), mean_estimate);
}

inline std::optional<double> estimate_resistance(const StitchedSeries& series, const EdgeWindow& window) {
  if (!series.covers(window.entry, window.exit)) throw InvalidArgument("series does not cover the window");
  std::vector<double> estimate;
  estimate.reserve(window.samples.size());
  for (Step k = window.entry; k <= window.exit; ++k) estimate.push_back(series.edpx2(k));
  return estimate_resistance(window, estimate);
}

}  // namespace windpass
