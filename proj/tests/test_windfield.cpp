#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "windpass/windfield.hpp"

using namespace windpass;

namespace {

// Full nodal analysis of the network: every vertex is a node, vertical
// edges conduct 1/R, horizontal edges a very large conductance standing in
// for zero resistance. The bottom row is held at potential 1 and the top row
// at 0. Returns flow per directed edge (positive from -> to).
std::vector<double> nodal_flows(const GridGraph& g, const std::vector<double>& resistance) {
  constexpr double kShort = 1e8;
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  const auto conductance = [&](EdgeId id) {
    return g.edge(id).axis == Axis::X1 ? kShort : 1.0 / resistance[id];
  };
  const auto fixed = [&](VertexId v) { return g.row(v) == 0 || g.row(v) + 1 == g.n2(); };
  const auto fixed_value = [&](VertexId v) { return g.row(v) == 0 ? 1.0 : 0.0; };

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (fixed(v)) {
      L(v, v) = 1.0;
      b(v) = fixed_value(v);
      continue;
    }
    for (EdgeId id : g.out_edges(v)) {
      const double c = conductance(id);
      L(v, v) += c;
      L(v, g.edge(id).to) -= c;
    }
  }
  const Eigen::VectorXd p = L.fullPivLu().solve(b);
  std::vector<double> flow(g.edge_count());
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    flow[id] = conductance(id) * (p(e.from) - p(e.to));
  }
  return flow;
}

SignalParams single_tone(double a, double b, double c) {
  SignalParams s;
  s.d0 = 0.5;
  s.terms = {{a, b, c}};
  return s;
}

}  // namespace

TEST(Signal, GeneratedAmplitudesNormalized) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto s = generate_signal(6, FrequencyRange{1.0 / 500, 1.0 / 300}, 0.0, rng);
    double total = 0.0;
    for (const auto& t : s.terms) {
      total += t.amplitude;
      EXPECT_GE(t.amplitude, 0.0);
      EXPECT_GE(t.frequency, 1.0 / 500);
      EXPECT_LE(t.frequency, 1.0 / 300);
      EXPECT_GE(t.phase, 0.0);
      EXPECT_LT(t.phase, 2.0 * std::numbers::pi);
    }
    EXPECT_NEAR(total, 0.5, 1e-12);
    EXPECT_EQ(s.d0, 0.5);
    for (int k = 0; k < 20000; ++k) {
      const double v = s.value(0.37 * k);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Signal, EvaluationExamples) {
  Rng rng(1);
  SignalParams flat;
  flat.terms = {{0.0, 0.01, 1.0}, {0.0, 0.002, 2.0}};
  EXPECT_EQ(eval_dpx2(flat, 123.4, false, rng), 0.5);
  EXPECT_DOUBLE_EQ(eval_dpx2(single_tone(0.5, 1.0 / 400, 0.0), 0.0, false, rng), 1.0);
  const auto s = single_tone(0.5, 1.0 / 400, 1.3);
  double lo = 1.0, hi = 0.0;
  for (int k = 0; k <= 40000; ++k) {
    const double v = eval_dpx2(s, 0.01 * k, false, rng);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_NEAR(lo, 0.0, 1e-8);
  EXPECT_NEAR(hi, 1.0, 1e-8);
  EXPECT_THROW(eval_dpx2(s, -1.0, false, rng), InvalidArgument);
}

TEST(Signal, NoiseVariance) {
  Rng rng(5);
  SignalParams s;
  s.noise_variance = 0.025;
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = eval_dpx2(s, 0.0, true, rng) - s.d0;
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(var, 0.025, 0.05 * 0.025);
}

TEST(Signal, FrequencyModes) {
  const auto period = frequency_band({300.0, 500.0}, FrequencyMode::Period);
  EXPECT_DOUBLE_EQ(period.low, 1.0 / 500);
  EXPECT_DOUBLE_EQ(period.high, 1.0 / 300);
  const auto literal = frequency_band({300.0, 500.0}, FrequencyMode::Literal);
  EXPECT_EQ(literal.low, 300.0);
  EXPECT_EQ(literal.high, 500.0);
  EXPECT_THROW(frequency_band({0.0, 5.0}, FrequencyMode::Period), InvalidArgument);
}

TEST(Resistances, RangeCountAndDeterminism) {
  const GridGraph g(5, 5, 100.0, 250.0);
  Rng a(42), b(42);
  const auto ra = sample_resistances(g, a);
  const auto rb = sample_resistances(g, b);
  EXPECT_EQ(ra, rb);
  std::size_t draws = 0;
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    EXPECT_EQ(ra[id], ra[e.reverse]);
    if (e.axis == Axis::X1) {
      EXPECT_EQ(ra[id], 0.0);
    } else {
      EXPECT_GE(ra[id], 0.5);
      EXPECT_LE(ra[id], 1.0);
      if (id < e.reverse) ++draws;
    }
  }
  EXPECT_EQ(draws, 20u);
}

TEST(Network, EqualResistancesGiveUniformVerticalFlow) {
  const GridGraph g(5, 7, 100.0, 250.0);
  std::vector<double> r(g.edge_count(), 0.0);
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    if (g.edge(id).axis == Axis::X2) r[id] = 0.75;
  }
  const auto c = solve_network(g, r);
  // Six gaps in series, five parallel columns each: flow 1 / (6 * 0.75 / 5).
  const double column = (1.0 / (6.0 * 0.75 / 5.0)) / 5.0;
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    if (e.axis == Axis::X1) {
      EXPECT_EQ(c[id], 0.0);
    } else {
      EXPECT_NEAR(c[id], g.row(e.to) > g.row(e.from) ? column : -column, 1e-12);
    }
  }
}

TEST(Network, DoubledColumnCarriesHalf) {
  // 3 columns, 2 row gaps; column 1 has twice the resistance in both gaps.
  // Per gap: conductance 1/R + 1/(2R) + 1/R = 2.5/R, drop 1/2 by symmetry of
  // the gaps, so the ordinary columns carry 0.5/R and the doubled one 0.25/R.
  const GridGraph g(3, 3, 1.0, 1.0);
  const double R = 0.6;
  std::vector<double> r(g.edge_count(), 0.0);
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    if (e.axis == Axis::X2) r[id] = g.col(e.from) == 1 ? 2.0 * R : R;
  }
  const auto c = solve_network(g, r);
  for (std::size_t gap = 0; gap < 2; ++gap) {
    const double side = c[g.edge_between(g.vertex(0, gap), g.vertex(0, gap + 1))];
    const double middle = c[g.edge_between(g.vertex(1, gap), g.vertex(1, gap + 1))];
    EXPECT_NEAR(side, 0.5 / R, 1e-12);
    EXPECT_NEAR(middle, 0.25 / R, 1e-12);
  }
  // Middle row: left vertex receives 0.5/R from below and passes 0.5/R up,
  // so no horizontal flow anywhere.
  EXPECT_NEAR(c[g.edge_between(g.vertex(0, 1), g.vertex(1, 1))], 0.0, 1e-12);
}

TEST(Network, MatchesNodalAnalysis) {
  Rng rng(9);
  for (auto [n1, n2] : {std::pair{3, 3}, std::pair{5, 7}, std::pair{7, 9}, std::pair{4, 6}}) {
    const GridGraph g(n1, n2, 100.0, 250.0);
    const auto r = sample_resistances(g, rng);
    const auto c = solve_network(g, r);
    const auto oracle = nodal_flows(g, r);
    for (EdgeId id = 0; id < g.edge_count(); ++id) EXPECT_NEAR(c[id], oracle[id], 1e-6) << "edge " << id;
  }
}

TEST(Network, ConservationAntisymmetryAndGapFlow) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const GridGraph g(3 + trial % 7, 3 + (trial * 3) % 8, 100.0, 250.0);
    const auto c = solve_network(g, sample_resistances(g, rng));
    for (EdgeId id = 0; id < g.edge_count(); ++id) EXPECT_EQ(c[id], -c[g.edge(id).reverse]);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      if (!g.is_traversable(v)) continue;
      double net = 0.0;
      for (EdgeId id : g.out_edges(v)) net += c[id];
      EXPECT_NEAR(net, 0.0, 1e-9);
    }
    std::vector<double> gap_flow(g.n2() - 1, 0.0);
    for (std::size_t gap = 0; gap + 1 < g.n2(); ++gap) {
      for (std::size_t col = 0; col < g.n1(); ++col) {
        gap_flow[gap] += c[g.edge_between(g.vertex(col, gap), g.vertex(col, gap + 1))];
      }
    }
    for (double f : gap_flow) EXPECT_NEAR(f, gap_flow.front(), 1e-9);
  }
}

TEST(Network, RejectsSingular) {
  const GridGraph g(3, 3, 1.0, 1.0);
  std::vector<double> r(g.edge_count(), 0.0);
  EXPECT_THROW(solve_network(g, r), RuntimeFailure);
}

TEST(Scaling, Examples) {
  const SignalParams constant = static_signal(0.0);
  const auto twice = scale_to_wmax({2.0, -2.0, 1.0}, constant, 10.0);
  EXPECT_DOUBLE_EQ(twice.factor, 5.0);
  const auto dominant = scale_to_wmax({4.0, -1.0, 0.5}, constant, 10.0);
  EXPECT_DOUBLE_EQ(dominant.coeff[0], 10.0);
  EXPECT_THROW(scale_to_wmax({0.0, 0.0}, constant, 10.0), InvalidArgument);
}

TEST(Scaling, DenseSampleMaxIsWmax) {
  Rng rng(23);
  const auto graph = std::make_shared<const GridGraph>(5, 7, 100.0, 250.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto signal = generate_signal(6, FrequencyRange{1.0 / 500, 1.0 / 300}, 0.0, rng);
    const auto field = make_wind_field(graph, sample_resistances(*graph, rng), signal, 10.0);
    double cmax = 0.0;
    for (double c : field.coeff) cmax = std::max(cmax, std::abs(c));
    // Independent sampling grid over the same horizon, 3x denser.
    const double horizon = 20.0 * signal.fundamental_period();
    const int n = 600000;
    double peak = 0.0;
    for (int k = 0; k < n; ++k) peak = std::max(peak, std::abs(signal.value(horizon * k / (n - 1.0))));
    EXPECT_NEAR(cmax * peak, 10.0, 1e-6);
  }
}

TEST(Measurement, AntisymmetricAndStatic) {
  Rng rng(2);
  const auto graph = std::make_shared<const GridGraph>(5, 7, 100.0, 250.0);
  const auto field = make_wind_field(graph, sample_resistances(*graph, rng), static_signal(0.0), 10.0);
  for (EdgeId id = 0; id < graph->edge_count(); ++id) {
    EXPECT_EQ(measure_wind(field, id, 3, 0.1, rng), -measure_wind(field, graph->edge(id).reverse, 3, 0.1, rng));
    EXPECT_EQ(measure_wind(field, id, 3, 0.1, rng), measure_wind(field, id, 9000, 0.1, rng));
  }
  EXPECT_THROW(measure_wind(field, 9999, 0, 0.1, rng), InvalidArgument);
}

TEST(Measurement, NoisyMeanWithinThreeStandardErrors) {
  Rng rng(4);
  const auto graph = std::make_shared<const GridGraph>(5, 7, 100.0, 250.0);
  const auto field = make_wind_field(graph, sample_resistances(*graph, rng), static_signal(0.025), 10.0);
  const EdgeId edge = graph->edge_between(graph->vertex(2, 2), graph->vertex(2, 3));
  const double truth = field.coeff[edge];
  const int n = 10000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += measure_wind(field, edge, k, 0.1, rng);
  const double se = std::abs(truth) * std::sqrt(0.025 / n);
  EXPECT_NEAR(sum / n, truth, 3.0 * se);
}
