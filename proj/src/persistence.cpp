#include "toporeg/persistence.hpp"

#include <algorithm>
#include <numeric>

#include "toporeg/errors.hpp"

namespace toporeg {

ElderUnionFind::ElderUnionFind(std::size_t n) : parent_(n), rank_(n, 0), elder_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  std::iota(elder_.begin(), elder_.end(), std::size_t{0});
}

std::size_t ElderUnionFind::find(std::size_t x) noexcept {
  std::size_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    const std::size_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

std::size_t ElderUnionFind::unite(std::size_t a, std::size_t b) noexcept {
  a = find(a);
  b = find(b);
  if (a == b) return a;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  if (rank_[a] == rank_[b]) ++rank_[a];
  parent_[b] = a;
  return a;
}

std::vector<VertexIndex> total_order(const ScalarField& field) {
  const auto& f = field.values();
  std::vector<VertexIndex> order(f.size());
  std::iota(order.begin(), order.end(), VertexIndex{0});
  std::sort(order.begin(), order.end(), [&f](VertexIndex a, VertexIndex b) {
    return f[a] < f[b] || (f[a] == f[b] && a < b);
  });
  return order;
}

PersistenceResult merge_pairs(const Graph& graph, const ScalarField& field) {
  return merge_pairs(graph, field, total_order(field));
}

PersistenceResult merge_pairs(const Graph& graph, const ScalarField& field,
                              std::vector<VertexIndex> order) {
  const std::size_t n = graph.vertex_count();
  if (field.size() != n || order.size() != n)
    throw StructuralError("field has " + std::to_string(field.size()) + " values for " +
                          std::to_string(n) + " vertices");

  PersistenceResult out;
  out.order = std::move(order);
  out.rank.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.rank[out.order[i]] = i;

  const auto& rank = out.rank;
  const auto& f = field.values();
  ElderUnionFind sets(n);
  std::vector<VertexIndex> latest(n);  // per root: last swept member
  std::vector<std::size_t> roots;

  for (std::size_t step = 0; step < n; ++step) {
    const VertexIndex v = out.order[step];
    roots.clear();
    for (VertexIndex u : graph.neighbors(v)) {
      if (rank[u] > step) continue;
      const std::size_t r = sets.find(u);
      if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
    }
    latest[v] = v;
    if (roots.empty()) continue;  // local minimum: a new tree

    // Oldest tree first; every younger tree dies at v.
    std::sort(roots.begin(), roots.end(), [&](std::size_t a, std::size_t b) {
      return rank[sets.elder(a)] < rank[sets.elder(b)];
    });
    const VertexIndex survivor = sets.elder(roots.front());
    for (std::size_t i = 1; i < roots.size(); ++i) {
      const VertexIndex p = sets.elder(roots[i]);
      out.pairs.push_back({p, v, f[p], f[v]});
    }
    std::size_t root = sets.unite(v, roots.front());
    for (std::size_t i = 1; i < roots.size(); ++i) root = sets.unite(root, roots[i]);
    sets.set_elder(root, survivor);
    latest[root] = v;
  }

  for (std::size_t step = 0; step < n; ++step) {
    const VertexIndex v = out.order[step];
    const std::size_t r = sets.find(v);
    if (sets.elder(r) == v) {
      out.essential_roots.push_back(v);
      out.component_max.push_back(latest[r]);
    }
  }
  return out;
}

std::vector<PersistencePair> zero_crossing_filter(const PersistenceResult& result,
                                                  ZeroSide zero) {
  const bool zero_positive = zero == ZeroSide::Positive;
  auto below = [&](double x) { return x < 0.0 || (x == 0.0 && !zero_positive); };
  auto above = [&](double x) { return x > 0.0 || (x == 0.0 && zero_positive); };

  std::vector<PersistencePair> out;
  for (const auto& p : result.pairs)
    if (below(p.birth_value) && above(p.death_value)) out.push_back(p);
  return out;
}

}  // namespace toporeg
