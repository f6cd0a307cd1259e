#pragma once

// Ground-truth wind synthesis.
//
// Vertical edges are resistors in a network driven by a unit pressure
// difference between the bottom and top boundary rows; horizontal edges have
// zero resistance, so each row is equipotential. Solving the network gives a
// per-edge proportionality constant (coefficient); the wind on an edge at
// time t is coefficient * dpx2(t), where dpx2 is a cosine-sum pressure
// gradient signal. Positive coefficients mean flow from the bottom boundary
// toward the top boundary, i.e. a tailwind for travel toward the goal.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "windpass/error.hpp"
#include "windpass/grid.hpp"

namespace windpass {

using Rng = std::mt19937_64;

struct CosineTerm {
  double amplitude = 0.0;  // a_l
  double frequency = 0.0;  // b_l, Hz
  double phase = 0.0;      // c_l, radians in [0, 2*pi)
};

struct SignalParams {
  double d0 = 0.5;
  std::vector<CosineTerm> terms;
  double noise_variance = 0.0;

  // Noiseless value of the pressure gradient at time t.
  double value(double t) const {
    double v = d0;
    for (const auto& term : terms) {
      v += term.amplitude * std::cos(2.0 * std::numbers::pi * term.frequency * t + term.phase);
    }
    return v;
  }

  bool noisy() const { return noise_variance > 0.0; }

  // Longest period among the terms; the window used for dense sampling.
  double fundamental_period() const {
    double lowest = 0.0;
    for (const auto& term : terms) {
      if (term.frequency > 0.0 && (lowest == 0.0 || term.frequency < lowest)) lowest = term.frequency;
    }
    return lowest > 0.0 ? 1.0 / lowest : 1.0;
  }
};

struct FrequencyRange {
  double low = 0.0;
  double high = 0.0;
};

// Frequencies drawn literally from the range, or the range read as periods in
// seconds and converted to [1/high, 1/low] Hz.
enum class FrequencyMode { Literal, Period };

inline FrequencyRange frequency_band(FrequencyRange range, FrequencyMode mode) {
  if (!(range.low > 0.0) || !(range.high >= range.low)) {
    throw InvalidArgument("frequency range must be positive and ordered");
  }
  if (mode == FrequencyMode::Literal) return range;
  return FrequencyRange{1.0 / range.high, 1.0 / range.low};
}

inline SignalParams generate_signal(std::size_t n_terms, FrequencyRange band, double noise_variance, Rng& rng) {
  if (n_terms < 1) throw InvalidArgument("signal needs at least one term");
  if (!(band.low > 0.0) || !(band.high >= band.low)) {
    throw InvalidArgument("frequency range must be positive and ordered");
  }
  if (noise_variance < 0.0) throw InvalidArgument("noise variance must be nonnegative");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> freq(band.low, band.high);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  SignalParams signal;
  signal.d0 = 0.5;
  signal.noise_variance = noise_variance;
  signal.terms.resize(n_terms);
  double total = 0.0;
  for (auto& term : signal.terms) {
    term.amplitude = unit(rng);
    term.frequency = freq(rng);
    term.phase = phase(rng);
    if (term.phase >= 2.0 * std::numbers::pi) term.phase = 0.0;
    total += term.amplitude;
  }
  if (total <= 0.0) {
    for (auto& term : signal.terms) term.amplitude = 1.0;
    total = static_cast<double>(n_terms);
  }
  for (auto& term : signal.terms) term.amplitude = 0.5 * term.amplitude / total;
  return signal;
}

// Constant gradient dpx2 == 1 used by the time-invariant scenarios.
inline SignalParams static_signal(double noise_variance) {
  SignalParams signal;
  signal.d0 = 1.0;
  signal.noise_variance = noise_variance;
  return signal;
}

inline double eval_dpx2(const SignalParams& signal, double t, bool include_noise, Rng& rng) {
  if (t < 0.0) throw InvalidArgument("time must be nonnegative");
  double v = signal.value(t);
  if (include_noise && signal.noise_variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(signal.noise_variance));
    v += noise(rng);
  }
  return v;
}

inline constexpr std::size_t kPeakSamplesPerPeriod = 10000;
inline constexpr std::size_t kPeakPeriods = 20;

// Largest |dpx2| over a dense sample of kPeakPeriods fundamental periods.
// The terms are incommensurate, so a single period can miss the peak that a
// long trial later runs into; 20 periods of at least 300 s outlast any trial
// in the default frequency mode.
inline double dpx2_peak(const SignalParams& signal) {
  if (signal.terms.empty()) return std::abs(signal.d0);
  const double window = signal.fundamental_period() * static_cast<double>(kPeakPeriods);
  const std::size_t samples = kPeakSamplesPerPeriod * kPeakPeriods;
  double peak = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = window * static_cast<double>(i) / static_cast<double>(samples - 1);
    peak = std::max(peak, std::abs(signal.value(t)));
  }
  return peak;
}

// One Uniform[0.5, 1] draw per undirected vertical edge; horizontal edges get 0.
inline std::vector<double> sample_resistances(const GridGraph& graph, Rng& rng) {
  std::uniform_real_distribution<double> draw(0.5, 1.0);
  std::vector<double> resistance(graph.edge_count(), 0.0);
  for (EdgeId id = 0; id < graph.edge_count(); id += 2) {
    if (graph.edge(id).axis != Axis::X2) continue;
    const double r = draw(rng);
    resistance[id] = r;
    resistance[graph.edge(id).reverse] = r;
  }
  return resistance;
}

// Coefficients under a unit pressure difference, bottom boundary high.
inline std::vector<double> solve_network(const GridGraph& graph, const std::vector<double>& resistance) {
  if (resistance.size() != graph.edge_count()) throw InvalidArgument("resistance map does not match the graph");
  const std::size_t n1 = graph.n1();
  const std::size_t gaps = graph.n2() - 1;

  // Per row gap: parallel conductance of its vertical edges.
  std::vector<double> conductance(gaps, 0.0);
  for (std::size_t gap = 0; gap < gaps; ++gap) {
    for (std::size_t col = 0; col < n1; ++col) {
      const EdgeId up = graph.edge_between(graph.vertex(col, gap), graph.vertex(col, gap + 1));
      const double r = resistance[up];
      if (!(r > 0.0) || resistance[graph.edge(up).reverse] != r) {
        throw RuntimeFailure("singular network: vertical resistances must be positive and symmetric");
      }
      conductance[gap] += 1.0 / r;
    }
  }
  double series = 0.0;
  for (double g : conductance) series += 1.0 / g;
  const double flow = 1.0 / series;

  std::vector<double> coeff(graph.edge_count(), 0.0);
  // vertical_up[row * n1 + col]: flow from (col,row) to (col,row+1).
  std::vector<double> vertical_up(gaps * n1, 0.0);
  for (std::size_t gap = 0; gap < gaps; ++gap) {
    const double drop = flow / conductance[gap];
    for (std::size_t col = 0; col < n1; ++col) {
      const EdgeId up = graph.edge_between(graph.vertex(col, gap), graph.vertex(col, gap + 1));
      const double f = drop / resistance[up];
      vertical_up[gap * n1 + col] = f;
      coeff[up] = f;
      coeff[graph.edge(up).reverse] = -f;
    }
  }
  // Horizontal flow: running sum of net vertical inflow along each row,
  // zero flow entering at the left end.
  for (std::size_t row = 1; row + 1 < graph.n2(); ++row) {
    double carried = 0.0;
    for (std::size_t col = 0; col + 1 < n1; ++col) {
      carried += vertical_up[(row - 1) * n1 + col] - vertical_up[row * n1 + col];
      const EdgeId right = graph.edge_between(graph.vertex(col, row), graph.vertex(col + 1, row));
      coeff[right] = carried;
      coeff[graph.edge(right).reverse] = -carried;
    }
  }
  return coeff;
}

struct ScaledCoefficients {
  std::vector<double> coeff;
  double factor = 1.0;
};

inline ScaledCoefficients scale_to_wmax(const std::vector<double>& coeff, const SignalParams& signal, double w_max) {
  if (!(w_max > 0.0)) throw InvalidArgument("w_max must be positive");
  double largest = 0.0;
  for (double c : coeff) largest = std::max(largest, std::abs(c));
  if (largest == 0.0) throw InvalidArgument("cannot scale an all-zero coefficient map");
  const double peak = dpx2_peak(signal);
  if (peak == 0.0) throw InvalidArgument("cannot scale against an identically zero signal");

  ScaledCoefficients out;
  out.factor = w_max / (largest * peak);
  out.coeff.reserve(coeff.size());
  for (double c : coeff) out.coeff.push_back(c * out.factor);
  return out;
}

struct WindField {
  std::shared_ptr<const GridGraph> graph;
  std::vector<double> resistance;
  std::vector<double> coeff;
  SignalParams signal;
  double w_max = 0.0;

  double true_wind(EdgeId edge, double t) const { return coeff.at(edge) * signal.value(t); }
};

inline WindField make_wind_field(std::shared_ptr<const GridGraph> graph, std::vector<double> resistance,
                                 SignalParams signal, double w_max) {
  WindField field;
  auto raw = solve_network(*graph, resistance);
  field.coeff = scale_to_wmax(raw, signal, w_max).coeff;
  field.graph = std::move(graph);
  field.resistance = std::move(resistance);
  field.signal = std::move(signal);
  field.w_max = w_max;
  return field;
}

// Measured wind at step k; noisy exactly when the signal carries noise.
inline double measure_wind(const WindField& field, EdgeId edge, std::int64_t k, double dt, Rng& rng) {
  if (edge >= field.coeff.size()) throw InvalidArgument("unknown edge " + std::to_string(edge));
  if (k < 0) throw InvalidArgument("time step must be nonnegative");
  return field.coeff[edge] * eval_dpx2(field.signal, static_cast<double>(k) * dt, true, rng);
}

}  // namespace windpass
