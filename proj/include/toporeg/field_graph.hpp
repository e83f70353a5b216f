#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace toporeg {

using VertexIndex = std::size_t;

/// Dense row-major storage for a set of D-dimensional points.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords);

  static PointSet from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) { return {coords_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> point);
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

  const std::vector<double>& data() const noexcept { return coords_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Uniform lattice with `resolution` samples per axis over `bounds`.
struct GridSpec {
  std::size_t resolution = 2;
  std::size_t dim = 1;
  std::vector<Interval> bounds;

  /// [0,1]^dim.
  static GridSpec unit(std::size_t resolution, std::size_t dim);

  void validate() const;
  /// resolution^dim, or CapacityError on overflow.
  std::size_t vertex_count() const;
  double coordinate(std::size_t axis, std::size_t step) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Unordered edge, stored with u < v.
struct Edge {
  VertexIndex u;
  VertexIndex v;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected simple graph with vertex coordinates and CSR adjacency.
class Graph {
 public:
  Graph() = default;
  /// Validates: no self-loops, no duplicates, indices in range. Edges are
  /// normalized to u < v and sorted.
  Graph(PointSet positions, std::vector<Edge> edges);

  std::size_t vertex_count() const noexcept { return positions_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const PointSet& positions() const noexcept { return positions_; }

  std::span<const VertexIndex> neighbors(VertexIndex v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

  /// Set when the graph came from build_grid_graph.
  const std::optional<GridSpec>& grid() const noexcept { return grid_; }

  /// Label of the connected component of every vertex, numbered by first
  /// appearance in index order, and the number of components.
  std::pair<std::vector<std::size_t>, std::size_t> connected_components() const;

 private:
  friend Graph build_grid_graph(const GridSpec& spec);

  PointSet positions_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<VertexIndex> adjacency_;
  std::optional<GridSpec> grid_;
};

/// One finite value per vertex.
class ScalarField {
 public:
  ScalarField() = default;
  /// Throws EvaluationError at the first non-finite value.
  explicit ScalarField(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](VertexIndex v) const { return values_[v]; }
  const std::vector<double>& values() const noexcept { return values_; }

  ScalarField negated() const;
  ScalarField scaled(double c) const;

 private:
  std::vector<double> values_;
};

/// Axis-aligned lattice graph (2*dim connectivity), row-major vertex order
/// with axis 0 varying slowest.
Graph build_grid_graph(const GridSpec& spec);

/// Union-symmetrized exact k-nearest-neighbour graph. Distance ties go to
/// the smaller index.
Graph build_knn_graph(const PointSet& points, std::size_t k);

using Predictor = std::function<double(std::span<const double>)>;

ScalarField evaluate_field(const Predictor& predict, const Graph& graph);

/// Per-axis min-max ranges recorded by normalize_unit_box.
struct UnitBoxTransform {
  std::vector<Interval> ranges;

  bool empty() const noexcept { return ranges.empty(); }
  void apply_inplace(std::span<double> point) const;
  PointSet apply(const PointSet& points) const;

  friend bool operator==(const UnitBoxTransform&, const UnitBoxTransform&) = default;
};

/// Min-max scales every axis into [0,1]; a constant axis maps to 0.5.
std::pair<PointSet, UnitBoxTransform> normalize_unit_box(const PointSet& points);

}  // namespace toporeg
