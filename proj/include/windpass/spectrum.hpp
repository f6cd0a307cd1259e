#pragma once

// Dominant frequency components of a uniformly sampled series.

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <fftw3.h>

#include "windpass/error.hpp"

namespace windpass {

struct SpectralComponent {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;
  double phase = 0.0;  // radians, cosine convention
};

struct Spectrum {
  double mean = 0.0;
  std::vector<SpectralComponent> components;  // largest amplitude first
};

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct FftwPlanDestroy {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

// Nonnegative-frequency DFT bins 0..n/2 of a real series.
inline std::vector<std::complex<double>> real_dft(std::span<const double> series) {
  const int n = static_cast<int>(series.size());
  const int bins = n / 2 + 1;
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * series.size())));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(bins))));
  std::unique_ptr<fftw_plan_s, FftwPlanDestroy> plan(fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE));
  std::copy(series.begin(), series.end(), in.get());
  fftw_execute(plan.get());
  std::vector<std::complex<double>> result(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) result[static_cast<std::size_t>(i)] = {out.get()[i][0], out.get()[i][1]};
  return result;
}

}  // namespace detail

// Mean-removed DFT; the n_modes non-DC bins of largest magnitude, ties toward
// the lower frequency.
inline Spectrum fft_dominant_components(std::span<const double> series, double dt, std::size_t n_modes) {
  if (n_modes < 1) throw InvalidArgument("need at least one mode");
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (series.size() < 2 * n_modes + 1) throw InvalidArgument("series too short for the requested modes");

  const std::size_t n = series.size();
  Spectrum out;
  for (double v : series) out.mean += v;
  out.mean /= static_cast<double>(n);
  std::vector<double> centered(series.begin(), series.end());
  for (double& v : centered) v -= out.mean;

  const auto bins = detail::real_dft(centered);
  std::vector<std::size_t> order;
  for (std::size_t b = 1; b < bins.size(); ++b) order.push_back(b);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(bins[a]) > std::abs(bins[b]); });
  order.resize(std::min(order.size(), n_modes));

  const double length = static_cast<double>(n);
  for (std::size_t b : order) {
    // The Nyquist bin of an even-length series has no mirrored partner.
    const bool unpaired = (n % 2 == 0) && (b == n / 2);
    SpectralComponent c;
    c.frequency = static_cast<double>(b) / (length * dt);
    c.amplitude = (unpaired ? 1.0 : 2.0) * std::abs(bins[b]) / length;
    c.phase = std::arg(bins[b]);
    out.components.push_back(c);
  }
  return out;
}

}  // namespace windpass
