#include "doctest.h"

#include <random>

#include "otpr/instances.hpp"
#include "otpr/oracles.hpp"
#include "test_util.hpp"

using namespace otpr;
using otpr::testing::enumerate_min_flow_cost;
using otpr::testing::random_instance;

TEST_CASE("hungarian_exact solves hand instances") {
  SUBCASE("zero diagonal gives the identity matching") {
    AssignmentInstance inst;
    inst.n_a = 4;
    inst.n_b = 4;
    inst.cost = Matrix<double>(4, 4, 0.5);
    for (Index i = 0; i < 4; ++i) inst.cost(i, i) = 0.0;
    auto [m, cost] = hungarian_exact(inst);
    CHECK(cost == 0.0);
    for (Index i = 0; i < 4; ++i) CHECK(m.match_of_a[i] == i);
  }

  SUBCASE("antidiagonal 2x2 costs zero") {
    AssignmentInstance inst;
    inst.n_a = 2;
    inst.n_b = 2;
    inst.cost = Matrix<double>(2, 2, 0.0);
    inst.cost(0, 1) = 1.0;
    inst.cost(1, 0) = 1.0;
    auto [m, cost] = hungarian_exact(inst);
    CHECK(cost == 0.0);
  }
}

TEST_CASE("hungarian_exact equals brute force on random instances") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 7);
    const AssignmentInstance inst = random_instance(n, n, seed * 13);
    auto [m, cost] = hungarian_exact(inst);
    m.validate();
    CHECK(m.size() == n);
    CHECK(cost == doctest::Approx(brute_force_matching(inst)).epsilon(1e-12));
  }
}

TEST_CASE("hungarian_exact handles rectangular instances") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const AssignmentInstance inst = random_instance(7, 4, seed * 17);
    auto [m, cost] = hungarian_exact(inst);
    CHECK(m.size() == 4);
    CHECK(cost == doctest::Approx(brute_force_matching(inst)).epsilon(1e-12));

    const AssignmentInstance wide = random_instance(4, 7, seed * 19);
    auto [mw, cw] = hungarian_exact(wide);
    CHECK(mw.size() == 4);
    CHECK(cw == doctest::Approx(brute_force_matching(wide)).epsilon(1e-12));
  }
}

TEST_CASE("oracle caps are enforced") {
  const AssignmentInstance inst = random_instance(10, 10, 1);
  CHECK_THROWS_AS(hungarian_exact(inst, 8), ParameterError);
  CHECK_THROWS_AS(brute_force_matching(inst), ParameterError);
}

TEST_CASE("brute_force_matching on hand instances") {
  AssignmentInstance one;
  one.n_a = 1;
  one.n_b = 1;
  one.cost = Matrix<double>(1, 1, 0.42);
  CHECK(brute_force_matching(one) == 0.42);

  AssignmentInstance anti;
  anti.n_a = 2;
  anti.n_b = 2;
  anti.cost = Matrix<double>(2, 2, 0.0);
  anti.cost(0, 1) = 1.0;
  anti.cost(1, 0) = 1.0;
  CHECK(brute_force_matching(anti) == 0.0);

  AssignmentInstance flat;
  flat.n_a = 3;
  flat.n_b = 3;
  flat.cost = Matrix<double>(3, 3, 0.2);
  CHECK(brute_force_matching(flat) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("exact_ot solves hand instances") {
  SUBCASE("single pair ships everything") {
    OTInstance inst;
    inst.mu = {1.0};
    inst.nu = {1.0};
    inst.cost = Matrix<double>(1, 1, 0.37);
    auto [plan, cost] = exact_ot(inst);
    REQUIRE(plan.entries.size() == 1);
    CHECK(plan.entries[0].mass == doctest::Approx(1.0));
    CHECK(cost == doctest::Approx(0.37));
  }

  SUBCASE("uniform antidiagonal costs zero") {
    OTInstance inst;
    inst.mu = {0.5, 0.5};
    inst.nu = {0.5, 0.5};
    inst.cost = Matrix<double>(2, 2, 0.0);
    inst.cost(0, 1) = 1.0;
    inst.cost(1, 0) = 1.0;
    auto [plan, cost] = exact_ot(inst);
    CHECK(cost == doctest::Approx(0.0));
  }
}

TEST_CASE("exact_ot ships all supply within demand capacities") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const OTInstance inst = gen_random_ot_rational(5, 4, seed * 3);
    auto [plan, cost] = exact_ot(inst);
    const auto cols = plan.col_sums(inst.n_b());
    for (Index b = 0; b < inst.n_b(); ++b)
      CHECK(cols[b] == doctest::Approx(inst.nu[b]).epsilon(1e-9));
    // Demand capacities can be relaxed by the rationalization drift patch,
    // a perturbation of a few 1e-9 units.
    const auto rows = plan.row_sums(inst.n_a());
    for (Index a = 0; a < inst.n_a(); ++a)
      CHECK(rows[a] <= inst.mu[a] + 1e-7);
  }
}

TEST_CASE("exact_ot_units agrees with exhaustive enumeration at tiny scale") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n_a = 2 + static_cast<Index>(rng() % 2);
    const Index n_b = 2 + static_cast<Index>(rng() % 2);
    const AssignmentInstance inst = random_instance(n_a, n_b, rng());

    std::vector<std::int64_t> u(n_a), v(n_b);
    std::int64_t total_u = 0;
    for (auto& x : u) {
      x = 1 + static_cast<std::int64_t>(rng() % 3);
      total_u += x;
    }
    std::int64_t left = total_u;
    for (Index b = 0; b < n_b; ++b) {
      v[b] = (left > 0) ? static_cast<std::int64_t>(rng() % (std::min<std::int64_t>(left, 3) + 1)) : 0;
      left -= v[b];
    }

    auto [flow, cost] = exact_ot_units(inst.cost, u, v);
    const double expected = enumerate_min_flow_cost(inst.cost, u, v);
    CHECK(cost == doctest::Approx(expected).epsilon(1e-12));

    // Flow marginals respect the unit bounds.
    for (Index b = 0; b < n_b; ++b) {
      std::int64_t shipped = 0;
      for (Index a = 0; a < n_a; ++a) shipped += flow(a, b);
      CHECK(shipped == v[b]);
    }
    for (Index a = 0; a < n_a; ++a) {
      std::int64_t used = 0;
      for (Index b = 0; b < n_b; ++b) used += flow(a, b);
      CHECK(used <= u[a]);
    }
  }
}

TEST_CASE("exact_ot_units cost scales linearly with the mass scale") {
  const AssignmentInstance inst = random_instance(4, 4, 404);
  const std::vector<std::int64_t> u = {3, 1, 4, 2};
  const std::vector<std::int64_t> v = {2, 2, 3, 3};
  auto [f1, c1] = exact_ot_units(inst.cost, u, v);
  for (const std::int64_t theta : {2, 7, 60}) {
    std::vector<std::int64_t> su(u), sv(v);
    for (auto& x : su) x *= theta;
    for (auto& x : sv) x *= theta;
    auto [f2, c2] = exact_ot_units(inst.cost, su, sv);
    CHECK(c2 == doctest::Approx(static_cast<double>(theta) * c1).epsilon(1e-12));
  }
}

TEST_CASE("exact_ot rejects oversized instances") {
  const OTInstance inst = gen_random_ot_rational(70, 10, 2);
  CHECK_THROWS_AS(exact_ot(inst), ParameterError);
}
