#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "windpass/kalman.hpp"
#include "windpass/spectrum.hpp"
#include "windpass/stitching.hpp"

using namespace windpass;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tones(const std::vector<SpectralComponent>& parts, double mean, std::size_t n, double dt) {
  std::vector<double> out(n, mean);
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& p : parts) out[k] += p.amplitude * std::cos(2.0 * kPi * p.frequency * k * dt + p.phase);
  }
  return out;
}

Spectrum one_component(double f, double a, double c, double mean = 0.0) {
  Spectrum s;
  s.mean = mean;
  s.components = {{f, a, c}};
  return s;
}

}  // namespace

TEST(Fft, SingleToneOnWholePeriods) {
  const double dt = 0.1;
  const std::size_t n = 4000;  // 400 s
  const double b = 4.0 / (n * dt);  // exactly four periods
  const auto s = tones({{b, 0.35, 1.2}}, 0.5, n, dt);
  const auto spec = fft_dominant_components(s, dt, 1);
  ASSERT_EQ(spec.components.size(), 1u);
  EXPECT_NEAR(spec.components[0].frequency, b, 1.0 / (n * dt));
  EXPECT_NEAR(spec.components[0].amplitude, 0.35, 0.02 * 0.35);
  EXPECT_NEAR(spec.components[0].phase, 1.2, 0.05);
  EXPECT_NEAR(spec.mean, 0.5, 1e-12);
}

TEST(Fft, TwoTonesLargerFirst) {
  const double dt = 0.1;
  const std::size_t n = 6000;
  const double b1 = 3.0 / (n * dt), b2 = 7.0 / (n * dt);
  const auto s = tones({{b2, 0.2, 0.4}, {b1, 0.3, 2.0}}, 0.0, n, dt);
  const auto spec = fft_dominant_components(s, dt, 2);
  ASSERT_EQ(spec.components.size(), 2u);
  EXPECT_NEAR(spec.components[0].frequency, b1, 1e-12);
  EXPECT_NEAR(spec.components[0].amplitude, 0.3, 1e-9);
  EXPECT_NEAR(spec.components[1].frequency, b2, 1e-12);
  EXPECT_NEAR(spec.components[1].amplitude, 0.2, 1e-9);
}

TEST(Fft, ShortWindowStillWellFormed) {
  const double dt = 0.1;
  const auto s = tones({{1.0 / 400, 0.5, 0.0}}, 0.5, 500, dt);  // 50 s of a 400 s period
  const auto spec = fft_dominant_components(s, dt, 6);
  ASSERT_EQ(spec.components.size(), 6u);
  for (const auto& c : spec.components) {
    EXPECT_GT(c.frequency, 0.0);
    EXPECT_GE(c.amplitude, 0.0);
    EXPECT_TRUE(std::isfinite(c.phase));
  }
  EXPECT_THROW(fft_dominant_components(std::vector<double>(12, 1.0), dt, 6), InvalidArgument);
}

TEST(Kalman, SingleModeTransition) {
  const double dt = 0.1;
  const auto kf = build_kf(one_component(0.01, 0.3, 0.0), dt, 1e-4, 0.025);
  const double k1 = std::sqrt(2.0 * kPi * 0.01);
  Eigen::Matrix3d expected;
  expected << 1, dt, 0, 0, 1, dt, -k1, 0, 0;
  EXPECT_TRUE(kf.A.isApprox(expected, 1e-15)) << kf.A;
  ASSERT_EQ(kf.stiffness.size(), 1u);
  EXPECT_DOUBLE_EQ(kf.stiffness[0], k1);
}

TEST(Kalman, PrintedBlocksAndSelector) {
  Spectrum s;
  s.components = {{0.01, 0.2, 0.0}, {0.004, 0.1, 1.0}, {0.002, 0.05, 2.0}};
  const double dt = 0.1;
  const auto kf = build_kf(s, dt, 1e-4, 0.025);
  const std::size_t n = 3;
  ASSERT_EQ(kf.A.rows(), 9);
  std::vector<double> k;
  for (const auto& c : s.components) k.push_back(std::sqrt(2.0 * kPi * c.frequency));
  for (std::size_t l = 0; l < n; ++l) EXPECT_DOUBLE_EQ(kf.stiffness[l], k[l]);
  // Stiffness rows as printed.
  EXPECT_DOUBLE_EQ(kf.A(6, 0), -(k[0] + k[1]));
  EXPECT_DOUBLE_EQ(kf.A(6, 1), k[1]);
  EXPECT_DOUBLE_EQ(kf.A(7, 0), -k[1]);
  EXPECT_DOUBLE_EQ(kf.A(7, 1), -(k[1] + k[2]));
  EXPECT_DOUBLE_EQ(kf.A(7, 2), k[2]);
  EXPECT_DOUBLE_EQ(kf.A(8, 1), k[1]);
  EXPECT_DOUBLE_EQ(kf.A(8, 2), -k[2]);
  EXPECT_TRUE(kf.A.block(6, 3, 3, 6).isZero());
  for (int r = 0; r < 6; ++r) {
    EXPECT_EQ(kf.A(r, r), 1.0);
    EXPECT_EQ(kf.A(r, r + 3), dt);
  }
  EXPECT_EQ((kf.C.array() != 0.0).count(), 1);
  EXPECT_EQ(kf.C(2), 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(9, 1.0, 9.0);
  EXPECT_EQ(kf.C.dot(x), 3.0);
}

TEST(Kalman, HugeMeasurementVarianceKeepsPrior) {
  auto kf = build_kf(one_component(0.005, 0.4, 0.7, 0.5), 0.1, 0.0, 1e12);
  KFState prior = kf;
  kf_step(kf, 123.0);
  const Eigen::VectorXd predicted = prior.A * prior.xhat;
  EXPECT_LT((kf.xhat - predicted).norm(), 1e-9);
}

TEST(Kalman, ExactMeasurementWithZeroVariance) {
  auto kf = build_kf(one_component(0.005, 0.4, 0.7, 0.5), 0.1, 1e-3, 0.0);
  for (double z : {0.2, 0.9, 0.55, 0.1}) {
    const double out = kf_step(kf, z);
    EXPECT_NEAR(out, z, 1e-9);
  }
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
  Spectrum s;
  s.mean = 0.5;
  s.components = {{0.0031, 0.2, 0.1}, {0.0027, 0.1, 2.0}, {0.0022, 0.1, 4.0}};
  auto kf = build_kf(s, 0.1, 1e-4, 0.025);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int k = 0; k < 10000; ++k) {
    kf_step(kf, 0.5 + noise(rng));
    if (k % 500 == 0 || k == 9999) {
      EXPECT_LT((kf.P - kf.P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kf.P);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
    }
  }
}

TEST(Kalman, SparseSeriesMatchesDenseSteps) {
  Spectrum s;
  s.mean = 0.5;
  s.components = {{0.0031, 0.2, 0.1}, {0.0022, 0.1, 4.0}};
  auto dense = build_kf(s, 0.1, 1e-3, 0.025);
  auto sparse = dense;
  std::vector<double> z(300);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = 0.5 + 0.2 * std::sin(0.01 * k);
  const auto out = kf_filter_series(sparse, z);
  for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(kf_step(dense, z[k]), out[k], 1e-12);
}

TEST(Kalman, BoundedPropagationWithoutProcessNoise) {
  // Small dt relative to 1/K: free propagation stays within 10x the start.
  Spectrum s;
  s.components = {{0.003, 0.3, 0.2}, {0.0025, 0.2, 1.0}};
  for (auto model : {KfModel::Printed, KfModel::OscillatorBank}) {
    auto kf = build_kf(s, 0.01, 0.0, 0.0, model);
    const double start = std::max(kf.xhat.cwiseAbs().maxCoeff(), 1e-3);
    Eigen::VectorXd x = kf.xhat;
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      x = kf.A * x;
      worst = std::max(worst, x.cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 10.0 * start) << (model == KfModel::Printed ? "printed" : "bank");
  }
}

TEST(Kalman, OscillatorBankBeatsCurveFitOnMatchedTone) {
  // Single tone with the frequency known: the steady-state filter error is
  // below that of the stitched quadratic fits on the final quarter.
  const double dt = 0.1;
  const double b = 1.0 / 400;
  const std::size_t n = 16000;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, std::sqrt(0.025));
  std::vector<double> truth(n), z(n);
  for (std::size_t k = 0; k < n; ++k) {
    truth[k] = 0.5 + 0.5 * std::cos(2 * kPi * b * k * dt + 0.4);
    z[k] = truth[k] + noise(rng);
  }
  auto kf = build_kf(one_component(b, 0.45, 0.3, 0.5), dt, 1e-8, 0.025, KfModel::OscillatorBank);
  const auto filtered = kf_filter_series(kf, z);

  StitchedSeries stitched;
  for (std::size_t first = 0; first < n; first += 160) {
    EdgeWindow w;
    w.entry = static_cast<Step>(first);
    w.samples.assign(z.begin() + first, z.begin() + std::min(n, first + 160));
    w.exit = w.entry + static_cast<Step>(w.samples.size()) - 1;
    stitch_window_noisy(stitched, w, dt);
  }
  double kf_err = 0.0, fit_err = 0.0;
  for (std::size_t k = 3 * n / 4; k < n; ++k) {
    kf_err += std::abs(filtered[k] - truth[k]);
    fit_err += std::abs(stitched.raw(static_cast<Step>(k)) - truth[k]);
  }
  EXPECT_LT(kf_err, fit_err);
}

TEST(QSchedule, LargeEarlySmallLaterMonotone) {
  const QSchedule q;
  EXPECT_EQ(q(1, 5000.0, 400.0), q.large);
  EXPECT_EQ(q(4, 1000.0, 400.0), q.large);
  EXPECT_EQ(q(4, 1200.0, 400.0), q.small);
  double last = q.large;
  for (double duration = 0.0; duration < 5000.0; duration += 50.0) {
    const double v = q(5, duration, 400.0);
    EXPECT_LE(v, last);
    last = v;
  }
}
