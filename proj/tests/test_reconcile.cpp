#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "windpass/reconcile.hpp"

using namespace windpass;

namespace {

double gradient(Step k) {
  const double t = 0.1 * static_cast<double>(k);
  return 0.5 + 0.3 * std::cos(2.0 * std::numbers::pi * t / 380.0 + 0.7) +
         0.2 * std::cos(2.0 * std::numbers::pi * t / 460.0 + 2.1);
}

// Repeatedly walks the same edge cycle, one window of `len` steps per edge.
struct Walk {
  std::vector<EdgeId> edges;
  std::vector<double> coeff;  // per directed edge
};

Walk make_walk(const GridGraph& g) {
  Walk w;
  w.coeff.assign(g.edge_count(), 0.0);
  const std::vector<std::pair<std::size_t, std::size_t>> cells{{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {2, 4}};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(1.0, 6.0);
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    const EdgeId e = g.edge_between(g.vertex(cells[i].first, cells[i].second),
                                    g.vertex(cells[i + 1].first, cells[i + 1].second));
    w.edges.push_back(e);
    const double v = c(rng) * (i % 3 == 1 ? -1.0 : 1.0);
    w.coeff[e] = v;
    w.coeff[g.edge(e).reverse] = -v;
  }
  return w;
}

void feed(SeamReconciler& r, const Walk& walk, int rounds, std::size_t len, double noise_sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  Step k = 0;
  for (int round = 0; round < rounds; ++round) {
    for (EdgeId e : walk.edges) {
      EdgeWindow w;
      w.edge = e;
      w.entry = k;
      for (std::size_t i = 0; i < len; ++i, ++k) {
        w.samples.push_back(walk.coeff[e] * (gradient(k) + (noise_sd > 0.0 ? noise(rng) : 0.0)));
      }
      w.exit = k - 1;
      r.add(w);
    }
  }
}

}  // namespace

// Noiseless windows leave only the bias of the local quadratic smooth.
TEST(Reconcile, NoiselessScalesUpToFirstEdge) {
  const GridGraph g(5, 7, 100.0, 250.0);
  const Walk walk = make_walk(g);
  SeamReconciler r(g);
  feed(r, walk, 3, 150, 0.0, 1);
  const auto result = r.reconcile();
  const double unit = walk.coeff[walk.edges.front()];
  for (EdgeId e : walk.edges) {
    ASSERT_TRUE(result.scales[e].has_value());
    EXPECT_NEAR(*result.scales[e], walk.coeff[e] / unit, 5e-3 * std::abs(walk.coeff[e] / unit));
    EXPECT_DOUBLE_EQ(*result.scales[g.edge(e).reverse], -*result.scales[e]);
  }
  for (std::size_t k = 0; k < result.samples.size(); ++k) {
    EXPECT_NEAR(result.samples[k], gradient(static_cast<Step>(k)) * unit, 5e-3 * std::abs(unit));
  }
}

TEST(Reconcile, NoisyScalesImproveWithRepeatedCrossings) {
  const GridGraph g(5, 7, 100.0, 250.0);
  const Walk walk = make_walk(g);
  const auto rms_error = [&](int rounds) {
    double sq = 0.0;
    int n = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SeamReconciler r(g);
      feed(r, walk, rounds, 150, std::sqrt(0.025), seed);
      const auto scales = r.edge_scales();
      const double unit = walk.coeff[walk.edges.front()];
      for (EdgeId e : walk.edges) {
        const double err = *scales[e] * unit / walk.coeff[e] - 1.0;
        sq += err * err;
        ++n;
      }
    }
    return std::sqrt(sq / n);
  };
  const double few = rms_error(2);
  const double many = rms_error(12);
  EXPECT_LT(many, 0.06);
  EXPECT_LT(many, few / 3.0);
}

TEST(Reconcile, RejectsGapsAndTinyWindows) {
  const GridGraph g(5, 7, 100.0, 250.0);
  SeamReconciler r(g);
  EdgeWindow w;
  w.edge = 0;
  w.entry = 0;
  w.samples = {1.0, 2.0, 3.0, 4.0, 5.0};
  w.exit = 4;
  r.add(w);
  w.entry = 10;
  EXPECT_THROW(r.add(w), InvalidArgument);
  w.entry = 5;
  w.samples = {1.0, 2.0, 3.0};
  EXPECT_THROW(r.add(w), RuntimeFailure);
}
