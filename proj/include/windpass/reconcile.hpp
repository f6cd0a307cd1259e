#pragma once

// Whole-history stitching for noisy measurements.
//
// Sequential seam matching lets every seam error carry into all later
// windows. Every window on one edge sees the gradient through the same
// constant, though, and the agent crosses the same edges on pass after pass.
// Here each seam is read as a noisy measurement of the log-ratio of two edge
// constants. All seams seen so far are reconciled in one weighted least-squares
// solve, so repeated crossings average the seam errors out instead of
// accumulating them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "windpass/error.hpp"
#include "windpass/grid.hpp"
#include "windpass/stitching.hpp"
#include "windpass/traversal.hpp"

namespace windpass {

// Quadratic fit plus what is needed for the variance of its predictions.
struct WindowFit {
  Quadratic fit;
  Step first = 0;
  double span = 1.0;             // abscissa scale used in the fit
  Eigen::Matrix3d inv_normal;    // (X^T X)^-1 on the scaled abscissa
  double residual_variance = 0.0;

  double variance_at(double step) const {
    const double x = (step - static_cast<double>(first)) / span;
    const Eigen::Vector3d phi(1.0, x, x * x);
    return residual_variance * phi.dot(inv_normal * phi);
  }
};

inline WindowFit fit_window(Step first, std::span<const double> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 4) throw RuntimeFailure("degenerate window: variance of a quadratic fit needs at least 4 samples");
  WindowFit out;
  out.first = first;
  out.span = static_cast<double>(n - 1);
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / out.span;
    design.row(i) << 1.0, x, x * x;
    rhs(i) = samples[static_cast<std::size_t>(i)];
  }
  const Eigen::Matrix3d normal = design.transpose() * design;
  const auto lu = normal.fullPivLu();
  if (!lu.isInvertible()) throw RuntimeFailure("degenerate window: singular normal equations");
  out.inv_normal = lu.inverse();
  const Eigen::Vector3d c = out.inv_normal * (design.transpose() * rhs);
  out.residual_variance = (rhs - design * c).squaredNorm() / static_cast<double>(n - 3);
  out.fit = Quadratic{static_cast<double>(first), c(0), c(1) / out.span, c(2) / (out.span * out.span)};
  return out;
}

class SeamReconciler {
 public:
  // Seams whose fitted values are within this many standard deviations of
  // zero carry no usable ratio.
  static constexpr double kMinSignalToNoise = 3.0;
  static constexpr Step kSmoothHalfWidth = 200;
  static constexpr std::size_t kRefinePasses = 8;

  explicit SeamReconciler(const GridGraph& graph) : graph_(&graph) {}

  std::size_t window_count() const { return windows_.size(); }
  Step first_step() const { return windows_.empty() ? 0 : windows_.front().entry; }

  void add(const EdgeWindow& window) {
    if (!windows_.empty()) {
      const auto& prev = windows_.back();
      if (window.entry != prev.entry + static_cast<Step>(prev.length)) {
        throw InvalidArgument("window does not continue the series");
      }
    }
    Entry e;
    e.edge = window.edge;
    e.entry = window.entry;
    e.length = window.samples.size();
    e.fit = fit_window(window.entry, window.samples);
    e.samples = window.samples;
    if (!windows_.empty()) add_seam(windows_.back(), e);
    windows_.push_back(std::move(e));
  }

  struct Result {
    // Signed constant of each directed edge up to one common factor (the
    // first window's edge has +1); empty for edges never measured.
    std::vector<std::optional<double>> scales;
    // Gradient estimate over the whole history, up to the same factor.
    std::vector<double> smooth;
    // Raw samples divided by their edge constants.
    std::vector<double> samples;
  };

  Result reconcile() const {
    auto [scales, smooth] = refine();
    Result out{std::move(scales), std::move(smooth), {}};
    for (const auto& w : windows_) {
      const double g = *out.scales[w.edge];
      for (double v : w.samples) out.samples.push_back(v / g);
    }
    return out;
  }
  std::vector<std::optional<double>> edge_scales() const { return refine().first; }
  std::vector<double> series() const { return refine().second; }

 private:
  struct Entry {
    EdgeId edge = 0;
    Step entry = 0;
    std::size_t length = 0;
    WindowFit fit;
    std::vector<double> samples;
  };
  struct Seam {
    EdgeId from = 0;     // undirected node of the earlier window
    EdgeId to = 0;       // undirected node of the later window
    double log_ratio = 0.0;  // log |c_to / c_from|
    double sign = 1.0;       // sign(c_to / c_from)
    double weight = 0.0;
  };

  // Undirected node: the lower id of the edge pair; the sign relates the
  // directed edge's constant to the node's.
  EdgeId node(EdgeId e) const { return std::min(e, graph_->edge(e).reverse); }
  double orientation(EdgeId e) const { return e == node(e) ? 1.0 : -1.0; }

  void add_seam(const Entry& prev, const Entry& next) {
    if (node(prev.edge) == node(next.edge)) return;
    const double seam = static_cast<double>(next.entry) - 0.5;
    const double a = prev.fit.fit(seam);
    const double b = next.fit.fit(seam);
    const double va = prev.fit.variance_at(seam);
    const double vb = next.fit.variance_at(seam);
    if (a * a <= kMinSignalToNoise * kMinSignalToNoise * va || b * b <= kMinSignalToNoise * kMinSignalToNoise * vb) {
      return;
    }
    const double rel_var = va / (a * a) + vb / (b * b);
    Seam s;
    s.from = node(prev.edge);
    s.to = node(next.edge);
    s.log_ratio = std::log(std::abs(b / a));
    s.sign = (b / a) * orientation(prev.edge) * orientation(next.edge) > 0.0 ? 1.0 : -1.0;
    // Floor keeps noiseless seams finite.
    s.weight = 1.0 / std::max(rel_var, 1e-12);
    seams_.push_back(s);
  }

  // Seam solve, then alternating refinement of the rank-one model
  // w(k) = c_e(k) * s(k): s is a local quadratic smooth of the samples
  // divided by their edge constants, and each constant is the least-squares
  // regression of its edge's samples on s.
  std::pair<std::vector<std::optional<double>>, std::vector<double>> refine() const {
    std::vector<std::optional<double>> scales(graph_->edge_count());
    if (windows_.empty()) return {scales, {}};
    const auto [log_scale, sign] = solve();
    std::map<EdgeId, double> c;
    for (const auto& [v, x] : log_scale) c[v] = sign.at(v) * std::exp(x);

    std::vector<double> smooth;
    for (std::size_t iter = 0; iter <= kRefinePasses; ++iter) {
      smooth = smoothed(c, iter < kRefinePasses);
      if (iter == kRefinePasses) break;
      std::map<EdgeId, std::pair<double, double>> acc;  // sum w*s, sum s*s
      std::size_t offset = 0;
      for (const auto& w : windows_) {
        auto& [ws, ss] = acc[node(w.edge)];
        const double o = orientation(w.edge);
        for (std::size_t i = 0; i < w.length; ++i) {
          ws += o * w.samples[i] * smooth[offset + i];
          ss += smooth[offset + i] * smooth[offset + i];
        }
        offset += w.length;
      }
      const EdgeId anchor = node(windows_.front().edge);
      for (auto& [v, value] : c) {
        const auto& [ws, ss] = acc[v];
        if (ss > 0.0 && ws != 0.0) value = ws / ss;
      }
      const double gauge = c.at(anchor) * orientation(windows_.front().edge);
      for (auto& [v, value] : c) value /= gauge;
    }
    for (const auto& [v, value] : c) {
      scales[v] = value;
      scales[graph_->edge(v).reverse] = -value;
    }
    return {scales, smooth};
  }

  // Each window's value is a quadratic fit over the window widened by
  // kSmoothHalfWidth steps on each side, using all samples there divided by
  // their edge constants. With leave_out, the window's own samples are
  // excluded so that the regression on the smooth is not pulled back toward
  // the current constant.
  std::vector<double> smoothed(const std::map<EdgeId, double>& c, bool leave_out) const {
    std::vector<double> z;
    for (const auto& w : windows_) {
      const double g = orientation(w.edge) * c.at(node(w.edge));
      for (double v : w.samples) z.push_back(v / g);
    }
    const auto total = static_cast<Step>(z.size());
    std::vector<double> out(z.size());
    Step offset = 0;
    for (const auto& w : windows_) {
      const Step len = static_cast<Step>(w.length);
      const Step lo = std::max<Step>(0, offset - kSmoothHalfWidth);
      const Step hi = std::min<Step>(total, offset + len + kSmoothHalfWidth);
      std::vector<double> x, y;
      for (Step k = lo; k < hi; ++k) {
        if (leave_out && k >= offset && k < offset + len) continue;
        x.push_back(static_cast<double>(k - lo));
        y.push_back(z[static_cast<std::size_t>(k)]);
      }
      const Quadratic f = x.size() >= 3 ? fit_quadratic_at(x, y, static_cast<double>(lo))
                                        : fit_window(offset, std::span<const double>(z.data() + offset, w.length)).fit;
      for (Step k = offset; k < offset + len; ++k) out[static_cast<std::size_t>(k)] = f(static_cast<double>(k));
      offset += len;
    }
    return out;
  }

  // Least-squares quadratic through arbitrary abscissae (relative to origin).
  static Quadratic fit_quadratic_at(const std::vector<double>& x, const std::vector<double>& y, double origin) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const double span = std::max(x.back() - x.front(), 1.0);
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = x[static_cast<std::size_t>(i)] / span;
      design.row(i) << 1.0, u, u * u;
      rhs(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d c = design.colPivHouseholderQr().solve(rhs);
    return Quadratic{origin, c(0), c(1) / span, c(2) / (span * span)};
  }

  std::pair<std::map<EdgeId, double>, std::map<EdgeId, double>> solve() const {
    std::map<EdgeId, Eigen::Index> index;
    std::vector<EdgeId> nodes;
    for (const auto& w : windows_) {
      if (index.emplace(node(w.edge), static_cast<Eigen::Index>(nodes.size())).second) nodes.push_back(node(w.edge));
    }
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    std::map<std::pair<EdgeId, EdgeId>, double> sign_votes;
    double total = 0.0;
    for (const auto& s : seams_) {
      const auto i = index.at(s.from), j = index.at(s.to);
      laplacian(i, i) += s.weight;
      laplacian(j, j) += s.weight;
      laplacian(i, j) -= s.weight;
      laplacian(j, i) -= s.weight;
      rhs(j) += s.weight * s.log_ratio;
      rhs(i) -= s.weight * s.log_ratio;
      sign_votes[std::minmax(s.from, s.to)] += s.weight * s.sign;
      total += s.weight;
    }
    // Gauge: the first window's edge has unit constant. The tiny ridge pins
    // edges no usable seam reaches.
    const double ridge = 1e-9 * std::max(total, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) laplacian(i, i) += ridge;
    laplacian(0, 0) += std::max(total, 1.0);
    const Eigen::VectorXd x = laplacian.ldlt().solve(rhs);

    std::map<EdgeId, double> log_scale, sign;
    for (Eigen::Index i = 0; i < n; ++i) log_scale[nodes[static_cast<std::size_t>(i)]] = x(i);
    for (EdgeId v : nodes) sign[v] = 1.0;

    // Signs along a maximum-confidence spanning tree from the first edge.
    std::map<EdgeId, std::vector<std::pair<EdgeId, double>>> adjacency;
    for (const auto& [pair, vote] : sign_votes) {
      adjacency[pair.first].push_back({pair.second, vote});
      adjacency[pair.second].push_back({pair.first, vote});
    }
    std::map<EdgeId, bool> done;
    using Item = std::tuple<double, EdgeId, EdgeId, double>;  // confidence, node, parent, vote
    std::priority_queue<Item> frontier;
    frontier.push({std::numeric_limits<double>::infinity(), nodes.front(), nodes.front(), 1.0});
    while (!frontier.empty()) {
      const auto [confidence, v, parent, vote] = frontier.top();
      frontier.pop();
      if (done[v]) continue;
      done[v] = true;
      if (v != parent) sign[v] = sign[parent] * (vote >= 0.0 ? 1.0 : -1.0);
      for (const auto& [u, vu] : adjacency[v]) {
        if (!done[u]) frontier.push({std::abs(vu), u, v, vu});
      }
    }
    // The first window's edge is oriented by its own direction of travel.
    const double flip = orientation(windows_.front().edge);
    for (auto& [v, s] : sign) s *= flip;
    return {log_scale, sign};
  }

  const GridGraph* graph_;
  std::vector<Entry> windows_;
  std::vector<Seam> seams_;
};

}  // namespace windpass
