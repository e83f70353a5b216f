#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "toporeg/boundary.hpp"

using namespace toporeg;

namespace {

Graph path_graph(std::size_t n) {
  PointSet p(1);
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) {
    p.push_back(std::vector<double>{double(i)});
    if (i + 1 < n) e.push_back({i, i + 1});
  }
  return Graph(p, e);
}

std::vector<double> robustness(const ComponentSet& s) {
  std::vector<double> r;
  for (const auto& c : s.components) r.push_back(c.robustness);
  std::sort(r.begin(), r.end());
  return r;
}

const BoundaryComponent* find(const ComponentSet& s, VertexIndex birth, VertexIndex death) {
  for (const auto& c : s.components)
    if (c.pair.birth_vertex == birth && c.pair.death_vertex == death) return &c;
  return nullptr;
}

}  // namespace

TEST_SUITE_BEGIN("boundary");

TEST_CASE("worked path example") {
  const ScalarField f({-1.0, 0.21, -0.55, 0.9, -2.0, 1.5});
  const auto s = boundary_components(path_graph(6), f);
  REQUIRE(s.size() == 5);
  CHECK(robustness(s) == std::vector<double>{0.21, 0.21, 0.9, 0.9, 1.5});

  const auto* a = find(s, 2, 1);
  REQUIRE(a);
  CHECK(a->origin == ComponentOrigin::SublevelF);
  CHECK(a->pair.birth_value == -0.55);
  CHECK(a->weak_vertex == 1);

  const auto* b = find(s, 0, 3);
  REQUIRE(b);
  CHECK(b->origin == ComponentOrigin::SublevelF);
  CHECK(b->weak_vertex == 3);

  const auto* c = find(s, 1, 2);
  REQUIRE(c);
  CHECK(c->origin == ComponentOrigin::SublevelNegF);
  CHECK(c->pair.birth_value == 0.21);
  CHECK(c->pair.death_value == -0.55);
  CHECK(c->weak_vertex == 1);

  const auto* d = find(s, 3, 4);
  REQUIRE(d);
  CHECK(d->origin == ComponentOrigin::SublevelNegF);
  CHECK(d->robustness == 0.9);

  const auto* e = find(s, 4, 5);
  REQUIRE(e);
  CHECK(e->origin == ComponentOrigin::Essential);
  REQUIRE(s.excluded_index);
  CHECK(&s.components[*s.excluded_index] == e);

  CHECK(std::abs(topo_penalty(s) - 1.7082) <= 1e-12);

  const auto seeds = penalty_seeds(s);
  REQUIRE(seeds.size() == 4);
  for (const auto& seed : seeds) {
    CHECK((seed.vertex == 1 || seed.vertex == 3));
    CHECK(seed.coefficient == 2 * f[seed.vertex]);
  }
}

TEST_CASE("three components around one positive hub") {
  // hub at 1.5 joined to minima -2.0, -0.83, -0.21
  const Graph g(PointSet(1, {0, 1, 2, 3}), {{0, 1}, {0, 2}, {0, 3}});
  const auto s = boundary_components(g, ScalarField({1.5, -2.0, -0.83, -0.21}));
  REQUIRE(s.size() == 3);
  CHECK(robustness(s) == std::vector<double>{0.21, 0.83, 1.5});
  REQUIRE(s.excluded_index);
  CHECK(s.components[*s.excluded_index].origin == ComponentOrigin::Essential);
  CHECK(topo_penalty(s) == 0.83 * 0.83 + 0.21 * 0.21);
}

TEST_CASE("uniform sign and trivial sets") {
  CHECK(boundary_components(path_graph(3), ScalarField({1, 2, 3})).empty());
  CHECK(boundary_components(path_graph(3), ScalarField({-1, -2, -3})).empty());
  CHECK(boundary_components(path_graph(3), ScalarField({0, 0, 0})).empty());
  CHECK(topo_penalty(ComponentSet{}) == 0.0);
  CHECK(penalty_seeds(ComponentSet{}).empty());

  const auto one = boundary_components(path_graph(3), ScalarField({-1, 0.5, 2}));
  REQUIRE(one.size() == 1);
  CHECK(one.components[0].origin == ComponentOrigin::Essential);
  CHECK(topo_penalty(one) == 0.0);
  CHECK(penalty_seeds(one).empty());
}

TEST_CASE("exact zeros count as positive") {
  const auto s = boundary_components(path_graph(5), ScalarField({-1, 0, -1, 0, -1}));
  CHECK(s.size() == 4);
  const auto t = boundary_components(path_graph(3), ScalarField({-1, 0, 1}));
  CHECK(t.size() == 1);
  CHECK(t.components[0].robustness == 1.0);
}

TEST_CASE("one essential per crossing graph component") {
  const Graph g(PointSet(1, {0, 1, 2, 3, 4, 5}), {{0, 1}, {2, 3}, {4, 5}});
  const auto s = boundary_components(g, ScalarField({-1, 1, -2, 3, 4, 5}));
  REQUIRE(s.size() == 2);
  for (const auto& c : s.components) CHECK(c.origin == ComponentOrigin::Essential);
  REQUIRE(s.excluded_index);
  CHECK(s.components[*s.excluded_index].robustness == 2.0);
}

TEST_CASE("select_weak_critical") {
  auto w = select_weak_critical({0, 1, -0.55, 0.21});
  CHECK(w.vertex == 1);
  CHECK(w.value == 0.21);
  w = select_weak_critical({4, 5, -2.0, 1.5});
  CHECK(w.vertex == 5);
  w = select_weak_critical({8, 9, -0.3, 0.3});
  CHECK(w.vertex == 8);
  CHECK(w.value == -0.3);
}

TEST_CASE("penalty seeds") {
  ComponentSet s;
  s.components.push_back({{7, 8, 0.21, -0.5}, 0.21, 7, 0.21, ComponentOrigin::SublevelNegF});
  s.components.push_back({{1, 2, -3.0, 3.0}, 3.0, 1, -3.0, ComponentOrigin::Essential});
  s.excluded_index = 1;
  const auto seeds = penalty_seeds(s);
  REQUIRE(seeds.size() == 1);
  CHECK(seeds[0].vertex == 7);
  CHECK(seeds[0].coefficient == 0.42);
}

TEST_CASE("path count equals sign changes") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    const ScalarField f = oracle::random_field(n, rng);
    std::size_t changes = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) changes += (f[i] < 0) != (f[i + 1] < 0);
    CHECK(boundary_components(path_graph(n), f).size() == changes);
  }
}

TEST_CASE("count matches region oracle on random graphs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 63;
    const Graph g = oracle::random_connected_graph(n, rng() % (n + 1), rng);
    const ScalarField f = oracle::random_field(n, rng);
    CHECK(boundary_components(g, f).size() == oracle::boundary_count(g, f));
  }
}

TEST_CASE("negation symmetry and scaling covariance") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    const Graph g = oracle::random_connected_graph(n, rng() % n, rng);
    const ScalarField f = oracle::random_field(n, rng);
    const auto s = boundary_components(g, f);
    const auto neg = boundary_components(g, f.negated());
    CHECK(robustness(s) == robustness(neg));

    const double c = std::ldexp(1.0, int(rng() % 7) - 3);  // exact scaling
    const auto scaled = boundary_components(g, f.scaled(c));
    REQUIRE(scaled.size() == s.size());
    CHECK(same_pairing(s, scaled));
    CHECK(topo_penalty(scaled) == c * c * topo_penalty(s));
  }
}

TEST_CASE("exclusion ties go to the smallest weak vertex") {
  // two separate crossings, identical robustness
  const Graph g(PointSet(1, {0, 1, 2, 3}), {{0, 1}, {2, 3}});
  const auto s = boundary_components(g, ScalarField({-1, 1, -1, 1}));
  REQUIRE(s.size() == 2);
  REQUIRE(s.excluded_index);
  const auto& kept = s.components[*s.excluded_index];
  for (const auto& c : s.components) CHECK(kept.weak_vertex <= c.weak_vertex);
}

TEST_SUITE_END();
