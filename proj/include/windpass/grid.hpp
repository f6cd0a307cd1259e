#pragma once

// Directed 4-neighbor grid of an urban street network.
//
// Vertices are stored row-major from the bottom-left corner. Row 0 and row
// n2-1 are boundary rows: they take part in the wind model (the pressure
// difference is applied across them) but are never part of a path. Vertical
// (x2-aligned) edges exist between every pair of vertically adjacent
// vertices; horizontal (x1-aligned) edges exist only inside traversable rows.
//
// Internally vertices are 0-based; `label()` gives the 1-based label used in
// reports (bottom-left traversable vertex of a 5-column grid is label 6).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "windpass/error.hpp"

namespace windpass {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

enum class Axis : std::uint8_t { X1, X2 };

struct Edge {
  VertexId from = 0;
  VertexId to = 0;
  Axis axis = Axis::X1;
  double distance = 0.0;  // meters
  EdgeId reverse = 0;
};

class GridGraph {
 public:
  GridGraph(std::size_t n1, std::size_t n2, double dx1, double dx2) : n1_(n1), n2_(n2), dx1_(dx1), dx2_(dx2) {
    if (n1 < 3 || n2 < 3) {
      throw InvalidArgument("grid too small for boundary rows: need n1 >= 3 and n2 >= 3, got " +
                            std::to_string(n1) + "x" + std::to_string(n2));
    }
    if (!(dx1 > 0.0) || !(dx2 > 0.0)) {
      throw InvalidArgument("edge lengths must be positive");
    }
    out_.resize(n1_ * n2_);
    for (std::size_t row = 0; row < n2_; ++row) {
      for (std::size_t col = 0; col < n1_; ++col) {
        const VertexId v = vertex(col, row);
        if (col + 1 < n1_ && is_traversable_row(row)) {
          add_pair(v, vertex(col + 1, row), Axis::X1, dx1_);
        }
        if (row + 1 < n2_) {
          add_pair(v, vertex(col, row + 1), Axis::X2, dx2_);
        }
      }
    }
  }

  std::size_t n1() const { return n1_; }
  std::size_t n2() const { return n2_; }
  double dx1() const { return dx1_; }
  double dx2() const { return dx2_; }

  std::size_t vertex_count() const { return n1_ * n2_; }
  std::size_t edge_count() const { return edges_.size(); }

  VertexId vertex(std::size_t col, std::size_t row) const { return static_cast<VertexId>(row * n1_ + col); }
  std::size_t col(VertexId v) const { return v % n1_; }
  std::size_t row(VertexId v) const { return v / n1_; }
  static std::size_t label(VertexId v) { return static_cast<std::size_t>(v) + 1; }

  bool is_traversable_row(std::size_t row) const { return row > 0 && row + 1 < n2_; }
  bool is_traversable(VertexId v) const { return is_traversable_row(row(v)); }
  // An edge the planner may use: both endpoints lie in the interior rows.
  bool is_traversable(const Edge& e) const { return is_traversable(e.from) && is_traversable(e.to); }

  VertexId start() const { return vertex(0, 1); }
  VertexId goal() const { return vertex(n1_ - 1, n2_ - 2); }

  const Edge& edge(EdgeId id) const { return edges_.at(id); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<EdgeId>& out_edges(VertexId v) const { return out_.at(v); }

  std::optional<EdgeId> find_edge(VertexId from, VertexId to) const {
    if (from >= out_.size()) return std::nullopt;
    for (EdgeId id : out_[from]) {
      if (edges_[id].to == to) return id;
    }
    return std::nullopt;
  }

  EdgeId edge_between(VertexId from, VertexId to) const {
    if (auto id = find_edge(from, to)) return *id;
    throw InvalidArgument("no edge " + std::to_string(label(from)) + "->" + std::to_string(label(to)));
  }

 private:
  void add_pair(VertexId a, VertexId b, Axis axis, double distance) {
    const auto ab = static_cast<EdgeId>(edges_.size());
    edges_.push_back(Edge{a, b, axis, distance, ab + 1});
    edges_.push_back(Edge{b, a, axis, distance, ab});
    out_[a].push_back(ab);
    out_[b].push_back(ab + 1);
  }

  std::size_t n1_;
  std::size_t n2_;
  double dx1_;
  double dx2_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_;
};

inline GridGraph build_grid(std::size_t n1, std::size_t n2, double dx1, double dx2) {
  return GridGraph(n1, n2, dx1, dx2);
}

// Path as a vertex sequence, printed with 1-based labels joined by '-'.
inline std::string path_string(const std::vector<VertexId>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(GridGraph::label(path[i]));
  }
  return out;
}

}  // namespace windpass
