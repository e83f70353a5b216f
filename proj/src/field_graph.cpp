#include "toporeg/field_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "toporeg/errors.hpp"

namespace toporeg {

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 ? !coords_.empty() : coords_.size() % dim_ != 0)
    throw StructuralError("coordinate count is not a multiple of the dimension");
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  PointSet out(rows.front().size());
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r);
  return out;
}

void PointSet::push_back(std::span<const double> point) {
  if (dim_ == 0 && coords_.empty()) dim_ = point.size();
  if (point.size() != dim_) throw StructuralError("point dimension mismatch");
  coords_.insert(coords_.end(), point.begin(), point.end());
}

GridSpec GridSpec::unit(std::size_t resolution, std::size_t dim) {
  return GridSpec{resolution, dim, std::vector<Interval>(dim, Interval{0.0, 1.0})};
}

void GridSpec::validate() const {
  if (resolution < 2) throw StructuralError("grid resolution must be at least 2");
  if (dim == 0) throw StructuralError("grid dimension must be positive");
  if (bounds.size() != dim) throw StructuralError("grid bounds do not match dimension");
  for (const auto& b : bounds)
    if (!(b.lo < b.hi)) throw StructuralError("grid bounds need lo < hi on every axis");
}

std::size_t GridSpec::vertex_count() const {
  std::size_t n = 1;
  for (std::size_t a = 0; a < dim; ++a) {
    if (n > std::numeric_limits<std::uint32_t>::max() / resolution)
      throw CapacityError("grid of " + std::to_string(resolution) + "^" +
                          std::to_string(dim) + " vertices is too large");
    n *= resolution;
  }
  return n;
}

double GridSpec::coordinate(std::size_t axis, std::size_t step) const {
  const auto& b = bounds[axis];
  if (step + 1 == resolution) return b.hi;
  return b.lo + (b.hi - b.lo) * static_cast<double>(step) / static_cast<double>(resolution - 1);
}

Graph::Graph(PointSet positions, std::vector<Edge> edges)
    : positions_(std::move(positions)), edges_(std::move(edges)) {
  const std::size_t n = positions_.size();
  for (auto& e : edges_) {
    if (e.u == e.v) throw StructuralError("self-loop at vertex " + std::to_string(e.u));
    if (e.u >= n || e.v >= n) throw StructuralError("edge endpoint out of range");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw StructuralError("duplicate edge");

  offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[fill[e.u]++] = e.v;
    adjacency_[fill[e.v]++] = e.u;
  }
}

std::pair<std::vector<std::size_t>, std::size_t> Graph::connected_components() const {
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(vertex_count(), unset);
  std::vector<VertexIndex> stack;
  std::size_t count = 0;
  for (VertexIndex s = 0; s < vertex_count(); ++s) {
    if (label[s] != unset) continue;
    label[s] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      const VertexIndex v = stack.back();
      stack.pop_back();
      for (VertexIndex u : neighbors(v)) {
        if (label[u] == unset) {
          label[u] = count;
          stack.push_back(u);
        }
      }
    }
    ++count;
  }
  return {std::move(label), count};
}

ScalarField::ScalarField(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i])) throw EvaluationError(i, values_[i]);
}

ScalarField ScalarField::negated() const {
  ScalarField out;
  out.values_.resize(values_.size());
  std::transform(values_.begin(), values_.end(), out.values_.begin(),
                 [](double x) { return -x; });
  return out;
}

ScalarField ScalarField::scaled(double c) const {
  std::vector<double> v(values_);
  for (auto& x : v) x *= c;
  return ScalarField(std::move(v));
}

Graph build_grid_graph(const GridSpec& spec) {
  spec.validate();
  const std::size_t n = spec.vertex_count();
  const std::size_t res = spec.resolution;
  const std::size_t dim = spec.dim;

  // stride[a] = res^(dim-1-a): axis 0 is the slowest.
  std::vector<std::size_t> stride(dim, 1);
  for (std::size_t a = dim - 1; a > 0; --a) stride[a - 1] = stride[a] * res;

  std::vector<double> coords(n * dim);
  std::vector<Edge> edges;
  edges.reserve(dim * (n / res) * (res - 1));
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t a = 0; a < dim; ++a) {
      const std::size_t step = (v / stride[a]) % res;
      coords[v * dim + a] = spec.coordinate(a, step);
      if (step + 1 < res) edges.push_back({v, v + stride[a]});
    }
  }
  Graph g(PointSet(dim, std::move(coords)), std::move(edges));
  g.grid_ = spec;
  return g;
}

Graph build_knn_graph(const PointSet& points, std::size_t k) {
  const std::size_t n = points.size();
  if (n == 0) throw StructuralError("knn graph needs at least one point");
  if (k == 0 || k >= n) throw StructuralError("knn requires 0 < k < number of points");

  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::vector<std::pair<double, VertexIndex>> dist(n - 1);
  for (VertexIndex i = 0; i < n; ++i) {
    const auto p = points[i];
    std::size_t m = 0;
    for (VertexIndex j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto q = points[j];
      double d2 = 0.0;
      for (std::size_t a = 0; a < p.size(); ++a) {
        const double d = p[a] - q[a];
        d2 += d * d;
      }
      dist[m++] = {d2, j};
    }
    // pair ordering breaks distance ties by smaller index
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t r = 0; r < k; ++r) edges.push_back({std::min(i, dist[r].second),
                                                        std::max(i, dist[r].second)});
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Graph(points, std::move(edges));
}

ScalarField evaluate_field(const Predictor& predict, const Graph& graph) {
  const auto& pos = graph.positions();
  std::vector<double> values(graph.vertex_count());
  for (VertexIndex v = 0; v < values.size(); ++v) {
    values[v] = predict(pos[v]);
    if (!std::isfinite(values[v])) throw EvaluationError(v, values[v]);
  }
  return ScalarField(std::move(values));
}

void UnitBoxTransform::apply_inplace(std::span<double> point) const {
  if (point.size() != ranges.size()) throw StructuralError("transform dimension mismatch");
  for (std::size_t a = 0; a < point.size(); ++a) {
    const auto& r = ranges[a];
    point[a] = r.hi > r.lo ? (point[a] - r.lo) / (r.hi - r.lo) : 0.5;
  }
}

PointSet UnitBoxTransform::apply(const PointSet& points) const {
  PointSet out = points;
  for (std::size_t i = 0; i < out.size(); ++i) apply_inplace(out[i]);
  return out;
}

std::pair<PointSet, UnitBoxTransform> normalize_unit_box(const PointSet& points) {
  UnitBoxTransform t;
  t.ranges.assign(points.dim(), Interval{std::numeric_limits<double>::infinity(),
                                         -std::numeric_limits<double>::infinity()});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points[i];
    for (std::size_t a = 0; a < p.size(); ++a) {
      t.ranges[a].lo = std::min(t.ranges[a].lo, p[a]);
      t.ranges[a].hi = std::max(t.ranges[a].hi, p[a]);
    }
  }
  return {t.apply(points), std::move(t)};
}

}  // namespace toporeg
