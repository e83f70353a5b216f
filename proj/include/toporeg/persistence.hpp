#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "toporeg/field_graph.hpp"

namespace toporeg {

/// A sublevel-set component born at `birth_vertex` and merged into an older
/// one at `death_vertex`.
struct PersistencePair {
  VertexIndex birth_vertex = 0;
  VertexIndex death_vertex = 0;
  double birth_value = 0.0;
  double death_value = 0.0;

  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceResult {
  std::vector<PersistencePair> pairs;
  /// Global minimum of each connected component, in sweep order.
  std::vector<VertexIndex> essential_roots;
  /// Global maximum of the component rooted at essential_roots[i].
  std::vector<VertexIndex> component_max;
  /// Vertices in sweep order.
  std::vector<VertexIndex> order;
  /// rank[v] = position of v in `order`.
  std::vector<std::size_t> rank;
};

/// Ascending by value, ties by ascending vertex index.
std::vector<VertexIndex> total_order(const ScalarField& field);

/// 0-dimensional sublevel-set persistence of `field` on `graph` (elder rule).
PersistenceResult merge_pairs(const Graph& graph, const ScalarField& field);

/// Same sweep with a caller-supplied order, which must be a permutation
/// sorting `field` ascending (ties in any fixed way).
PersistenceResult merge_pairs(const Graph& graph, const ScalarField& field,
                              std::vector<VertexIndex> order);

/// Which side of zero a stored value of exactly 0 belongs to.
enum class ZeroSide { Positive, Negative };

/// Pairs whose lifetime straddles zero: birth below, death above.
std::vector<PersistencePair> zero_crossing_filter(const PersistenceResult& result,
                                                  ZeroSide zero = ZeroSide::Positive);

/// Disjoint sets that remember the earliest-swept member of every set, so the
/// elder survives a merge independently of which root union-by-rank keeps.
class ElderUnionFind {
 public:
  explicit ElderUnionFind(std::size_t n);

  std::size_t find(std::size_t x) noexcept;
  /// Merges the sets of a and b; returns the new root.
  std::size_t unite(std::size_t a, std::size_t b) noexcept;

  std::size_t elder(std::size_t root) const noexcept { return elder_[root]; }
  void set_elder(std::size_t root, std::size_t v) noexcept { elder_[root] = v; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<std::size_t> elder_;
};

}  // namespace toporeg
