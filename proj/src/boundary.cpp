#include "toporeg/boundary.hpp"

#include <algorithm>
#include <cmath>

#include "toporeg/errors.hpp"

namespace toporeg {

std::string_view origin_name(ComponentOrigin origin) noexcept {
  switch (origin) {
    case ComponentOrigin::SublevelF:
      return "SUBLEVEL_F";
    case ComponentOrigin::SublevelNegF:
      return "SUBLEVEL_NEG_F";
    case ComponentOrigin::Essential:
      return "ESSENTIAL";
  }
  return "?";
}

WeakCritical select_weak_critical(const PersistencePair& pair) noexcept {
  if (std::abs(pair.death_value) < std::abs(pair.birth_value))
    return {pair.death_vertex, pair.death_value};
  return {pair.birth_vertex, pair.birth_value};
}

namespace {

BoundaryComponent make_component(const PersistencePair& pair, ComponentOrigin origin) {
  const auto weak = select_weak_critical(pair);
  return {pair, std::abs(weak.value), weak.vertex, weak.value, origin};
}

void sort_by_birth(std::vector<BoundaryComponent>::iterator first,
                   std::vector<BoundaryComponent>::iterator last) {
  std::sort(first, last, [](const BoundaryComponent& a, const BoundaryComponent& b) {
    return a.pair.birth_vertex < b.pair.birth_vertex ||
           (a.pair.birth_vertex == b.pair.birth_vertex &&
            a.pair.death_vertex < b.pair.death_vertex);
  });
}

}  // namespace

ComponentSet boundary_components(const Graph& graph, const ScalarField& field) {
  if (field.size() != graph.vertex_count())
    throw StructuralError("field size does not match graph");
  const auto& f = field.values();

  ComponentSet out;
  auto& comps = out.components;

  const PersistenceResult up = merge_pairs(graph, field);
  for (const auto& p : zero_crossing_filter(up, ZeroSide::Positive))
    comps.push_back(make_component(p, ComponentOrigin::SublevelF));
  sort_by_birth(comps.begin(), comps.end());

  // -f is swept in exactly the reverse order so both sweeps see the same
  // tie-broken function. An exact zero of f sits just below zero in -f.
  std::vector<VertexIndex> reversed(up.order.rbegin(), up.order.rend());
  const PersistenceResult down = merge_pairs(graph, field.negated(), std::move(reversed));
  const std::size_t neg_begin = comps.size();
  for (const auto& p : zero_crossing_filter(down, ZeroSide::Negative)) {
    const PersistencePair in_f{p.birth_vertex, p.death_vertex, f[p.birth_vertex],
                               f[p.death_vertex]};
    comps.push_back(make_component(in_f, ComponentOrigin::SublevelNegF));
  }
  sort_by_birth(comps.begin() + static_cast<std::ptrdiff_t>(neg_begin), comps.end());

  const std::size_t ess_begin = comps.size();
  for (std::size_t i = 0; i < up.essential_roots.size(); ++i) {
    const VertexIndex lo = up.essential_roots[i];
    const VertexIndex hi = up.component_max[i];
    if (f[lo] < 0.0 && f[hi] >= 0.0)
      comps.push_back(make_component({lo, hi, f[lo], f[hi]}, ComponentOrigin::Essential));
  }
  sort_by_birth(comps.begin() + static_cast<std::ptrdiff_t>(ess_begin), comps.end());

  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (!out.excluded_index) {
      out.excluded_index = i;
      continue;
    }
    const auto& best = comps[*out.excluded_index];
    if (comps[i].robustness > best.robustness ||
        (comps[i].robustness == best.robustness && comps[i].weak_vertex < best.weak_vertex))
      out.excluded_index = i;
  }
  return out;
}

bool same_pairing(const ComponentSet& a, const ComponentSet& b) noexcept {
  if (a.excluded_index != b.excluded_index || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.components[i];
    const auto& y = b.components[i];
    if (x.origin != y.origin || x.pair.birth_vertex != y.pair.birth_vertex ||
        x.pair.death_vertex != y.pair.death_vertex || x.weak_vertex != y.weak_vertex)
      return false;
  }
  return true;
}

double topo_penalty(const ComponentSet& set) noexcept {
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.excluded_index == i) continue;
    const double r = set.components[i].robustness;
    total += r * r;
  }
  return total;
}

std::vector<PenaltySeed> penalty_seeds(const ComponentSet& set) {
  std::vector<PenaltySeed> seeds;
  seeds.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.excluded_index == i) continue;
    const auto& c = set.components[i];
    seeds.push_back({c.weak_vertex, 2.0 * c.weak_value});
  }
  return seeds;
}

}  // namespace toporeg
