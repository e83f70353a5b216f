#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "toporeg/field_graph.hpp"
#include "toporeg/persistence.hpp"

namespace toporeg {

enum class ComponentOrigin { SublevelF, SublevelNegF, Essential };

std::string_view origin_name(ComponentOrigin origin) noexcept;

/// One connected component of the zero level set.
///
/// `pair` always carries values of f (not -f), so for SublevelNegF entries
/// birth_value > 0 > death_value. `weak_vertex` is the endpoint whose |f| is
/// the robustness; the penalty gradient flows only through it.
struct BoundaryComponent {
  PersistencePair pair;
  double robustness = 0.0;
  VertexIndex weak_vertex = 0;
  double weak_value = 0.0;
  ComponentOrigin origin = ComponentOrigin::SublevelF;
};

struct ComponentSet {
  std::vector<BoundaryComponent> components;
  /// The most robust component, which the penalty leaves alone.
  std::optional<std::size_t> excluded_index;

  std::size_t size() const noexcept { return components.size(); }
  bool empty() const noexcept { return components.empty(); }
};

/// Same pairs, weak vertices, origins and exclusion. Values are ignored.
bool same_pairing(const ComponentSet& a, const ComponentSet& b) noexcept;

/// Zero-level-set components from the sublevel persistence of f and -f plus
/// one essential (min, max) pair per graph component that crosses zero.
/// Exact zeros count as positive.
ComponentSet boundary_components(const Graph& graph, const ScalarField& field);

struct WeakCritical {
  VertexIndex vertex;
  double value;
};

/// Endpoint with the smaller |value|; ties go to the birth vertex.
WeakCritical select_weak_critical(const PersistencePair& pair) noexcept;

/// Sum of squared robustness over all but the excluded component.
double topo_penalty(const ComponentSet& set) noexcept;

struct PenaltySeed {
  VertexIndex vertex;
  /// d(penalty)/d(field value at vertex) = 2 * weak_value.
  double coefficient;
};

std::vector<PenaltySeed> penalty_seeds(const ComponentSet& set);

}  // namespace toporeg
