#pragma once

// Kalman filter for a periodic gradient signal.
//
// The state stacks N displacements, their velocities and their accelerations
// of fictitious spring-mass systems. Two transition models are available:
//
//  * Printed: positions and velocities integrate with step dt, accelerations
//    are a tridiagonal stiffness coupling of the positions, the acceleration
//    persistence block is zero, and the observation reads y_N. Stiffness
//    values are square roots of the FFT angular frequencies.
//  * OscillatorBank: N independent undamped oscillators, discretized exactly,
//    one per FFT frequency; the observation is the sum of displacements.
//
// The filter works on a mean-removed signal; `offset` is added back on output.

#include <cmath>
#include <numbers>
#include <span>
#include <algorithm>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "windpass/error.hpp"
#include "windpass/spectrum.hpp"

namespace windpass {

enum class KfModel { Printed, OscillatorBank };

struct KFState {
  KfModel model = KfModel::Printed;
  std::size_t n_modes = 0;
  double dt = 0.0;
  Eigen::VectorXd xhat;
  Eigen::MatrixXd P;
  Eigen::MatrixXd A;
  Eigen::RowVectorXd C;
  Eigen::MatrixXd Q;
  double R = 0.0;
  std::vector<double> stiffness;
  double offset = 0.0;

  double output() const { return offset + C.dot(xhat); }
  // One-step-ahead prediction of the observation.
  double forecast() const { return offset + C.dot(A * xhat); }
};

inline constexpr double kPriorVarianceFloor = 1e-6;

// Stiffness coupling of the printed model, row by row as published: first row
// -(K1+K2), K2; interior rows -K_l, -(K_l+K_{l+1}), K_{l+1}; last row K_{N-1}, -K_N.
inline Eigen::MatrixXd printed_stiffness_block(const std::vector<double>& k) {
  const auto n = static_cast<Eigen::Index>(k.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index row = 0; row < n; ++row) {
    const double k_here = k[static_cast<std::size_t>(row)];
    if (row == n - 1) {
      if (n > 1) s(row, row - 1) = k[static_cast<std::size_t>(row - 1)];
      s(row, row) = -k_here;
    } else {
      const double k_next = k[static_cast<std::size_t>(row + 1)];
      if (row > 0) s(row, row - 1) = -k_here;
      s(row, row) = -(k_here + k_next);
      s(row, row + 1) = k_next;
    }
  }
  return s;
}

inline KFState build_kf(const Spectrum& spectrum, double dt, double q_scale, double r_var,
                        KfModel model = KfModel::Printed) {
  const std::size_t n = spectrum.components.size();
  if (n == 0) throw InvalidArgument("Kalman filter needs at least one component");
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (q_scale < 0.0 || r_var < 0.0) throw InvalidArgument("covariances must be nonnegative");

  const auto N = static_cast<Eigen::Index>(n);
  KFState kf;
  kf.model = model;
  kf.n_modes = n;
  kf.dt = dt;
  kf.offset = spectrum.mean;
  kf.R = r_var;
  kf.Q = q_scale * Eigen::MatrixXd::Identity(3 * N, 3 * N);
  kf.A = Eigen::MatrixXd::Zero(3 * N, 3 * N);
  kf.C = Eigen::RowVectorXd::Zero(3 * N);
  kf.xhat = Eigen::VectorXd::Zero(3 * N);
  Eigen::VectorXd prior_var = Eigen::VectorXd::Constant(3 * N, kPriorVarianceFloor);

  std::vector<double> omega(n);
  for (std::size_t l = 0; l < n; ++l) omega[l] = 2.0 * std::numbers::pi * spectrum.components[l].frequency;

  for (std::size_t l = 0; l < n; ++l) {
    const auto& c = spectrum.components[l];
    const auto i = static_cast<Eigen::Index>(l);
    const double w = omega[l];
    kf.xhat(i) = c.amplitude * std::cos(c.phase);
    kf.xhat(N + i) = -c.amplitude * w * std::sin(c.phase);
    kf.xhat(2 * N + i) = -c.amplitude * w * w * std::cos(c.phase);
    prior_var(i) += c.amplitude * c.amplitude;
    prior_var(N + i) += std::pow(c.amplitude * w, 2);
    prior_var(2 * N + i) += std::pow(c.amplitude * w * w, 2);
  }

  if (model == KfModel::Printed) {
    for (std::size_t l = 0; l < n; ++l) kf.stiffness.push_back(std::sqrt(omega[l]));
    for (Eigen::Index r = 0; r < 2 * N; ++r) {
      kf.A(r, r) = 1.0;
      kf.A(r, r + N) = dt;
    }
    kf.A.block(2 * N, 0, N, N) = printed_stiffness_block(kf.stiffness);
    kf.C(N - 1) = 1.0;
    // y_N is the observed signal: seed it with the full reconstruction.
    double y = 0.0, v = 0.0, a = 0.0, amp = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const auto i = static_cast<Eigen::Index>(l);
      y += kf.xhat(i);
      v += kf.xhat(N + i);
      a += kf.xhat(2 * N + i);
      amp += spectrum.components[l].amplitude;
    }
    kf.xhat(N - 1) = y;
    kf.xhat(2 * N - 1) = v;
    kf.xhat(3 * N - 1) = a;
    prior_var(N - 1) = kPriorVarianceFloor + amp * amp;
  } else {
    for (std::size_t l = 0; l < n; ++l) {
      const auto i = static_cast<Eigen::Index>(l);
      const double w = omega[l];
      kf.stiffness.push_back(w * w);
      const double cs = std::cos(w * dt);
      const double sn = std::sin(w * dt);
      kf.A(i, i) = cs;
      kf.A(i, N + i) = w > 0.0 ? sn / w : dt;
      kf.A(N + i, i) = -w * sn;
      kf.A(N + i, N + i) = cs;
      kf.A(2 * N + i, i) = -w * w * cs;
      kf.A(2 * N + i, N + i) = -w * sn;
      kf.C(i) = 1.0;
    }
  }
  kf.P = prior_var.asDiagonal();
  return kf;
}

namespace detail {

template <typename Transition>
double kf_step_with(KFState& kf, const Transition& A, double z) {
  kf.xhat = A * kf.xhat;
  const Eigen::MatrixXd AP = A * kf.P;
  kf.P = AP * A.transpose();
  kf.P += kf.Q;

  const Eigen::VectorXd pc = kf.P * kf.C.transpose();
  const double innovation_var = kf.C.dot(pc) + kf.R;
  if (!(innovation_var > 0.0)) throw RuntimeFailure("covariance collapse: innovation variance is not positive");
  const Eigen::VectorXd gain = pc / innovation_var;
  const double innovation = (z - kf.offset) - kf.C.dot(kf.xhat);
  kf.xhat += gain * innovation;

  // With the optimal gain the Joseph form reduces to this symmetric rank-one
  // downdate; symmetrizing keeps round-off from accumulating.
  kf.P.noalias() -= gain * pc.transpose();
  kf.P = 0.5 * (kf.P + kf.P.transpose()).eval();
  return kf.output();
}

}  // namespace detail

// Predict then update with measurement z; returns the filtered signal value.
inline double kf_step(KFState& kf, double z) { return detail::kf_step_with(kf, kf.A, z); }

// Filters a whole series from the prior in kf, returning the filtered output
// at every step. Same arithmetic as repeated kf_step, with the sparse
// structure of the transition matrix exploited.
inline std::vector<double> kf_filter_series(KFState& kf, std::span<const double> series) {
  const Eigen::SparseMatrix<double> A = kf.A.sparseView();
  std::vector<double> out;
  out.reserve(series.size());
  for (double z : series) out.push_back(detail::kf_step_with(kf, A, z));
  return out;
}

// Process noise schedule: large until the series spans enough periods of the
// dominant component for the FFT to be trusted, then small.
struct QSchedule {
  double large = 1.0;
  double small = 1e-4;
  double min_periods = 3.0;

  double operator()(std::size_t pass_index, double series_duration, double dominant_period) const {
    if (pass_index <= 1) return large;
    if (dominant_period > 0.0 && series_duration >= min_periods * dominant_period) return small;
    return large;
  }
};

}  // namespace windpass
