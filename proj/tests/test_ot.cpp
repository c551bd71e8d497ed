#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "otpr/assignment.hpp"
#include "otpr/instances.hpp"
#include "otpr/oracles.hpp"
#include "otpr/ot.hpp"
#include "test_util.hpp"

using namespace otpr;
using otpr::testing::flow_by_groups;
using otpr::testing::random_instance;

namespace {

OTInstance micro_ot(std::vector<double> mu, std::vector<double> nu,
                    std::vector<double> costs) {
  OTInstance inst;
  inst.mu = std::move(mu);
  inst.nu = std::move(nu);
  inst.cost = Matrix<double>(static_cast<Index>(inst.mu.size()),
                             static_cast<Index>(inst.nu.size()));
  for (Index a = 0; a < inst.n_a(); ++a)
    for (Index b = 0; b < inst.n_b(); ++b)
      inst.cost(a, b) = costs[static_cast<std::size_t>(a) * inst.n_b() + b];
  return inst;
}

// Materializes a copy instance into a plain assignment instance plus group
// maps; costs of a copy pair are the costs of the originals.
struct Materialized {
  AssignmentInstance inst;
  std::vector<Index> demand_groups;
  std::vector<Index> supply_groups;
};

Materialized materialize(const CopyInstance& ci,
                         const AssignmentInstance& original_costs) {
  Materialized out;
  for (Index a = 0; a < original_costs.n_a; ++a)
    for (std::int64_t c = 0; c < ci.demand_copies[a]; ++c)
      out.demand_groups.push_back(a);
  for (Index b = 0; b < original_costs.n_b; ++b)
    for (std::int64_t c = 0; c < ci.supply_copies[b]; ++c)
      out.supply_groups.push_back(b);

  out.inst.n_a = static_cast<Index>(out.demand_groups.size());
  out.inst.n_b = static_cast<Index>(out.supply_groups.size());
  out.inst.cost = Matrix<double>(out.inst.n_a, out.inst.n_b);
  for (Index i = 0; i < out.inst.n_a; ++i)
    for (Index j = 0; j < out.inst.n_b; ++j)
      out.inst.cost(i, j) =
          original_costs.cost(out.demand_groups[i], out.supply_groups[j]);
  return out;
}

}  // namespace

TEST_CASE("scale_and_round applies theta = 4n/eps with floor/ceil") {
  const OTInstance inst =
      micro_ot({0.55, 0.45}, {0.3, 0.7}, {0.1, 0.2, 0.3, 0.4});
  const ScaledMasses sm = scale_and_round(inst, 0.5);
  CHECK(sm.theta == doctest::Approx(16.0));
  CHECK(sm.d == std::vector<std::int64_t>{9, 8});    // ceil(8.8), ceil(7.2)
  CHECK(sm.s == std::vector<std::int64_t>{4, 11});   // floor(4.8), floor(11.2)
  CHECK(sm.total_s() <= 16);
  CHECK(16 <= sm.total_d());
}

TEST_CASE("scale_and_round leaves exact dyadic multiples unchanged") {
  const OTInstance inst =
      micro_ot({0.25, 0.75}, {0.5, 0.5}, {0.1, 0.2, 0.3, 0.4});
  const ScaledMasses sm = scale_and_round(inst, 0.5);  // theta = 16
  CHECK(sm.d == std::vector<std::int64_t>{4, 12});
  CHECK(sm.s == std::vector<std::int64_t>{8, 8});
}

TEST_CASE("scaled totals bracket theta on random instances") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const OTInstance inst = gen_random_ot_rational(6, 4, seed);
    const ScaledMasses sm = scale_and_round(inst, 0.23);
    CHECK(static_cast<double>(sm.total_s()) <= sm.theta + 1e-9);
    CHECK(sm.theta <= static_cast<double>(sm.total_d()) + 1e-9);
  }
}

TEST_CASE("solve_ot: 1x1 ships everything at the edge cost") {
  const OTInstance inst = micro_ot({1.0}, {1.0}, {0.2});
  auto [plan, stats] = solve_ot(inst, 0.1);
  REQUIRE(plan.entries.size() >= 1);
  CHECK(plan.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(plan.cost == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(plan.col_sums(1)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_ot: 2x2 antidiagonal stays within eps of zero") {
  const OTInstance inst =
      micro_ot({0.5, 0.5}, {0.5, 0.5}, {0.0, 1.0, 1.0, 0.0});
  auto [plan, stats] = solve_ot(inst, 0.1);
  CHECK(plan.cost <= 0.1);
  const auto cols = plan.col_sums(2);
  CHECK(cols[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cols[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_ot respects the additive bound against the exact oracle") {
  for (const double eps : {0.25, 0.1}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const OTInstance inst = gen_random_ot_rational(10, 10, seed * 7);
      auto [plan, stats] = solve_ot(inst, eps);
      auto [oplan, oracle] = exact_ot(inst);
      CHECK(plan.cost <= oracle + eps);

      // Complete plan: supply marginals match nu.
      const auto cols = plan.col_sums(inst.n_b());
      for (Index b = 0; b < inst.n_b(); ++b)
        CHECK(std::abs(cols[b] - inst.nu[b]) <= 1e-12);
      const auto rows = plan.row_sums(inst.n_a());
      for (Index a = 0; a < inst.n_a(); ++a)
        CHECK(rows[a] <= inst.mu[a] + 1e-12);
    }
  }
}

TEST_CASE("solve_ot validates parameters and masses") {
  const OTInstance good = micro_ot({1.0}, {1.0}, {0.2});
  CHECK_THROWS_AS(solve_ot(good, 0.0), ParameterError);
  CHECK_THROWS_AS(solve_ot(good, 1.0), ParameterError);
  OTInstance bad = good;
  bad.nu = {0.9};
  CHECK_THROWS_AS(solve_ot(bad, 0.1), InputError);
}

TEST_CASE("cluster invariant checker") {
  const AssignmentInstance costs = random_instance(2, 2, 17);
  CopyInstance ci;
  ci.costs = scale_round_costs(costs, 0.25);
  ci.demand_copies = {3, 2};
  ci.supply_copies = {2, 2};

  SUBCASE("fresh state passes with one cluster per vertex") {
    ClusterState state;
    state.demand = {{DemandCluster{0, 3, {}}}, {DemandCluster{0, 2, {}}}};
    state.supply = {{SupplyCluster{1, 2, 0}}, {SupplyCluster{1, 2, 0}}};
    CHECK(check_cluster_invariant(state, ci).ok());
    CHECK(check_cluster_feasibility(state, ci).ok());
  }

  SUBCASE("three distinct duals on one vertex is flagged") {
    ClusterState state;
    state.demand = {{DemandCluster{0, 1, {}}, DemandCluster{-1, 1, {}},
                     DemandCluster{-2, 1, {}}},
                    {DemandCluster{0, 2, {}}}};
    state.supply = {{SupplyCluster{1, 2, 0}}, {SupplyCluster{1, 2, 0}}};
    CHECK_FALSE(check_cluster_invariant(state, ci).ok());
  }

  SUBCASE("free supply copies below the vertex maximum are flagged") {
    ClusterState state;
    state.demand = {{DemandCluster{0, 3, {}}}, {DemandCluster{0, 2, {}}}};
    state.supply = {{SupplyCluster{1, 1, 0}, SupplyCluster{3, 0, 1}},
                    {SupplyCluster{1, 2, 0}}};
    const ClusterReport report = check_cluster_invariant(state, ci);
    CHECK_FALSE(report.ok());
  }
}

TEST_CASE("cluster state stays legal after every phase") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const OTInstance inst = gen_random_ot_rational(5, 5, seed * 31);
    OTOptions opt;
    opt.check_invariants = true;  // throws internally on violation
    int phases_seen = 0;
    opt.observer = [&](const ClusterPhaseSnapshot& snap) {
      phases_seen += 1;
      CHECK(check_cluster_invariant(snap.state, snap.inst).ok());
      CHECK(check_cluster_feasibility(snap.state, snap.inst).ok());
      CHECK(snap.sum_abs_after - snap.sum_abs_before >= snap.n_i);
    };
    auto [plan, stats] = solve_ot(inst, 0.25, opt);
    CHECK(phases_seen == stats.phases);
  }
}

TEST_CASE("plan_from_flow") {
  SUBCASE("full flow on a single edge gives mass one") {
    const OTInstance inst = micro_ot({1.0}, {1.0}, {0.3});
    ScaledMasses sm;
    sm.theta = 10.0;
    sm.d = {10};
    sm.s = {10};
    Matrix<std::int64_t> flow(1, 1, 10);
    const TransportPlan plan = plan_from_flow(flow, sm, inst);
    REQUIRE(plan.entries.size() == 1);
    CHECK(plan.entries[0].mass == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(plan.cost == doctest::Approx(0.3).epsilon(1e-15));
  }

  SUBCASE("zero flow ships everything through the residual pass") {
    const OTInstance inst =
        micro_ot({0.5, 0.5}, {0.25, 0.75}, {0.1, 0.2, 0.3, 0.4});
    ScaledMasses sm;
    sm.theta = 16.0;
    sm.d = {8, 8};
    sm.s = {4, 12};
    Matrix<std::int64_t> flow(2, 2, 0);
    const TransportPlan plan = plan_from_flow(flow, sm, inst);
    const auto cols = plan.col_sums(2);
    CHECK(cols[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(cols[1] == doctest::Approx(0.75).epsilon(1e-12));
    const auto rows = plan.row_sums(2);
    CHECK(rows[0] <= 0.5 + 1e-12);
    CHECK(rows[1] <= 0.5 + 1e-12);
  }

  SUBCASE("marginals of emitted plans match the instance") {
    for (std::uint64_t seed = 3; seed <= 8; ++seed) {
      const OTInstance inst = gen_random_ot_rational(4, 6, seed);
      auto [plan, stats] = solve_ot(inst, 0.3);
      const auto cols = plan.col_sums(inst.n_b());
      for (Index b = 0; b < inst.n_b(); ++b)
        CHECK(std::abs(cols[b] - inst.nu[b]) <= 1e-12);
      const auto rows = plan.row_sums(inst.n_a());
      for (Index a = 0; a < inst.n_a(); ++a)
        CHECK(rows[a] <= inst.mu[a] + 1e-12);
      for (const auto& e : plan.entries) CHECK(e.mass > 0.0);
    }
  }
}

TEST_CASE("compressed solver matches the explicit copy solver phase by phase") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  while (checked < 15) {
    const double eps = 0.2 + 0.1 * static_cast<double>(rng() % 4);
    const Index n_a = static_cast<Index>(rng() % 3) + 1;
    const Index n_b = static_cast<Index>(rng() % 3) + 1;
    const AssignmentInstance original = random_instance(n_a, n_b, rng());

    CopyInstance ci;
    ci.costs = scale_round_costs(original, eps);
    ci.demand_copies.resize(n_a);
    ci.supply_copies.resize(n_b);
    std::int64_t total_d = 0, total_s = 0;
    for (Index a = 0; a < n_a; ++a) {
      ci.demand_copies[a] = static_cast<std::int64_t>(rng() % 3) + 1;
      total_d += ci.demand_copies[a];
    }
    for (Index b = 0; b < n_b; ++b) {
      const std::int64_t room = total_d - total_s;
      ci.supply_copies[b] =
          room > 0 ? static_cast<std::int64_t>(rng() % (room + 1)) : 0;
      total_s += ci.supply_copies[b];
    }
    if (total_s == 0 || total_d + total_s > 12) continue;
    ++checked;

    // Compressed run, recording the flow after every phase.
    std::vector<Matrix<std::int64_t>> cluster_flows;
    std::vector<std::int64_t> cluster_ni;
    ClusterOptions copt;
    copt.check_invariants = true;
    copt.observer = [&](const ClusterPhaseSnapshot& snap) {
      cluster_flows.push_back(snap.state.flow_matrix(n_a, n_b));
      cluster_ni.push_back(snap.n_i);
    };
    const ClusterSolveResult compressed = solve_copy_matching(ci, eps, copt);

    // Explicit run on materialized copies, same processing order.
    const Materialized mat = materialize(ci, original);
    std::vector<Matrix<std::int64_t>> explicit_flows;
    std::vector<std::int64_t> explicit_ni;
    AssignmentOptions aopt;
    aopt.eps = eps;
    aopt.demand_groups = &mat.demand_groups;
    aopt.supply_groups = &mat.supply_groups;
    aopt.check_invariants = true;
    aopt.observer = [&](const PhaseSnapshot& snap) {
      explicit_flows.push_back(flow_by_groups(
          snap.matching, mat.demand_groups, mat.supply_groups, n_a, n_b));
      explicit_ni.push_back(
          static_cast<std::int64_t>(snap.workset.b_free.size()));
    };
    auto [em, estats] = solve_assignment(mat.inst, aopt);

    REQUIRE(compressed.stats.phases == estats.phases);
    CHECK(cluster_ni == explicit_ni);
    for (std::size_t p = 0; p < cluster_flows.size(); ++p)
      CHECK(cluster_flows[p] == explicit_flows[p]);

    // Final flows (completion included) agree exactly.
    const Matrix<std::int64_t> explicit_final = flow_by_groups(
        em, mat.demand_groups, mat.supply_groups, n_a, n_b);
    CHECK(compressed.flow == explicit_final);
  }
}

TEST_CASE("compressed solver matches the explicit solver on larger instances") {
  // Dozens of copies per vertex exercise cluster splits, merges and
  // partner displacement much harder than the micro grid.
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 25; ++trial) {
    const double eps = 0.1 + 0.05 * static_cast<double>(rng() % 5);
    const Index n_a = static_cast<Index>(rng() % 4) + 2;
    const Index n_b = static_cast<Index>(rng() % 4) + 2;
    const AssignmentInstance original = random_instance(n_a, n_b, rng());

    CopyInstance ci;
    ci.costs = scale_round_costs(original, eps);
    ci.demand_copies.resize(n_a);
    ci.supply_copies.resize(n_b);
    std::int64_t total_d = 0, total_s = 0;
    for (Index a = 0; a < n_a; ++a) {
      ci.demand_copies[a] = static_cast<std::int64_t>(rng() % 12) + 1;
      total_d += ci.demand_copies[a];
    }
    for (Index b = 0; b < n_b; ++b) {
      const std::int64_t room = total_d - total_s;
      ci.supply_copies[b] =
          room > 0 ? static_cast<std::int64_t>(rng() % (room + 1)) : 0;
      total_s += ci.supply_copies[b];
    }
    if (total_s == 0) continue;

    ClusterOptions copt;
    copt.check_invariants = true;
    const ClusterSolveResult compressed = solve_copy_matching(ci, eps, copt);

    const Materialized mat = materialize(ci, original);
    AssignmentOptions aopt;
    aopt.eps = eps;
    aopt.demand_groups = &mat.demand_groups;
    aopt.supply_groups = &mat.supply_groups;
    aopt.check_invariants = true;
    auto [em, estats] = solve_assignment(mat.inst, aopt);

    CHECK(compressed.stats.phases == estats.phases);
    CHECK(compressed.stats.free_counts == estats.free_counts);
    const Matrix<std::int64_t> explicit_final = flow_by_groups(
        em, mat.demand_groups, mat.supply_groups, n_a, n_b);
    CHECK(compressed.flow == explicit_final);
  }
}

TEST_CASE("solve_ot handles zero-mass points") {
  OTInstance inst;
  inst.mu = {0.0, 0.6, 0.4};
  inst.nu = {0.5, 0.0, 0.5};
  inst.cost = Matrix<double>(3, 3, 0.4);
  inst.cost(1, 0) = 0.1;
  inst.cost(2, 2) = 0.2;

  auto [plan, stats] = solve_ot(inst, 0.2);
  const auto cols = plan.col_sums(3);
  CHECK(std::abs(cols[0] - 0.5) <= 1e-12);
  CHECK(cols[1] == 0.0);
  CHECK(std::abs(cols[2] - 0.5) <= 1e-12);
  const auto rows = plan.row_sums(3);
  CHECK(rows[0] == 0.0);  // zero-mass demand receives nothing
  CHECK(rows[1] <= 0.6 + 1e-12);
  CHECK(rows[2] <= 0.4 + 1e-12);

  auto [oplan, oracle] = exact_ot(inst);
  CHECK(plan.cost <= oracle + 0.2);
}

TEST_CASE("copy instance validation") {
  const AssignmentInstance costs = random_instance(2, 2, 3);
  CopyInstance ci;
  ci.costs = scale_round_costs(costs, 0.25);
  ci.demand_copies = {1, 1};
  ci.supply_copies = {3, 3};  // supply exceeds demand
  CHECK_THROWS_AS(ci.validate(), ParameterError);
}
