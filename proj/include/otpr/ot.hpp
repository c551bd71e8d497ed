#pragma once

// Optimal transport via reduction to unbalanced matching: masses are scaled
// by theta = 4*max(|A|,|B|)/eps, supplies rounded down and demands up to
// integer copy counts, and the copy instance is solved by the phase
// algorithm. Copies are never materialized: copies of one original vertex
// carry at most two distinct dual values at any time, so per-vertex
// clusters of (dual, count) describe the whole state.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "otpr/assignment.hpp"
#include "otpr/core.hpp"

namespace otpr {

// Discrete OT instance: distributions mu on the demand side A and nu on
// the supply side B, costs in [0,1]. Mass sums must be 1 within 1e-9;
// construction-time renormalization divides the drift out.
struct OTInstance {
  std::vector<double> mu;
  std::vector<double> nu;
  Matrix<double> cost;  // n_a x n_b

  double norm_factor = 1.0;
  std::uint64_t seed = 0;

  Index n_a() const { return static_cast<Index>(mu.size()); }
  Index n_b() const { return static_cast<Index>(nu.size()); }

  void validate() const;
  void renormalize();
};

// Integer copy counts after theta-scaling: d_a = ceil(mu_a * theta) demand
// copies, s_b = floor(nu_b * theta) supply copies, so sum(s) <= theta <=
// sum(d).
struct ScaledMasses {
  double theta = 0.0;
  std::vector<std::int64_t> d;
  std::vector<std::int64_t> s;

  std::int64_t total_d() const;
  std::int64_t total_s() const;
};

// theta = 4 * max(|A|,|B|) / eps. Throws ParameterError when the copy
// counts would overflow.
ScaledMasses scale_and_round(const OTInstance& inst, double eps);

// An unbalanced matching instance over vertex copies, kept implicit:
// rounded costs on the original edges plus a copy count per original
// vertex. Requires sum(supply_copies) <= sum(demand_copies).
struct CopyInstance {
  ScaledCosts costs;  // n_a x n_b over originals
  std::vector<std::int64_t> demand_copies;
  std::vector<std::int64_t> supply_copies;

  std::int64_t total_demand() const;
  std::int64_t total_supply() const;
  void validate() const;
};

// One group of copies of a demand vertex sharing a dual value. Matched
// copies are recorded as flow toward their supply originals.
struct DemandCluster {
  DualUnits y = 0;
  std::int64_t free_count = 0;
  std::vector<std::pair<Index, std::int64_t>> flow;  // (b, copies), sorted

  std::int64_t matched() const;
  std::int64_t count() const { return free_count + matched(); }
};

struct SupplyCluster {
  DualUnits y = 0;
  std::int64_t free_count = 0;
  std::int64_t matched_count = 0;

  std::int64_t count() const { return free_count + matched_count; }
};

struct ClusterState {
  std::vector<std::vector<DemandCluster>> demand;  // per a, at most 2 live
  std::vector<std::vector<SupplyCluster>> supply;  // per b, at most 2 live

  Matrix<std::int64_t> flow_matrix(Index n_a, Index n_b) const;
  std::int64_t free_supply_total() const;
  std::int64_t free_demand_of(Index a) const;
  DualUnits sum_abs_duals() const;
};

struct ClusterReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Structural checks: at most two distinct duals per original vertex, free
// supply copies all at their vertex's maximum dual, free demand copies at
// dual zero, counts consistent with the instance, flow marginals matching
// the supply-side matched counts.
ClusterReport check_cluster_invariant(const ClusterState& state,
                                      const CopyInstance& inst);

// Feasibility of the expanded state: every matched copy pair is tight and
// every unmatched copy pair respects the dual-sum allowance, checked
// cluster-by-cluster without materializing copies.
ClusterReport check_cluster_feasibility(const ClusterState& state,
                                        const CopyInstance& inst);

struct ClusterPhaseSnapshot {
  int phase;  // 1-based
  const CopyInstance& inst;
  const ClusterState& state;
  std::int64_t n_i;  // free supply copies at phase start
  DualUnits sum_abs_before;
  DualUnits sum_abs_after;
};

struct ClusterOptions {
  // Run invariant + feasibility + greedy-maximality checks after every
  // phase; throws InvariantViolation on failure.
  bool check_invariants = false;
  std::function<void(const ClusterPhaseSnapshot&)> observer;
};

struct ClusterSolveResult {
  ClusterState state;  // final state before arbitrary completion
  Matrix<std::int64_t> flow;  // matched copies per edge, completion included
  SolveStats stats;
};

// Runs the phase loop on the copy instance until at most an eps-fraction
// of the supply copies is free, then pairs leftovers off by index. Copies
// of one vertex are processed in bulk: a claim takes free copies of the
// admissible demand cluster first, then rematches its matched copies in
// ascending order of their current partner. Matches the explicit-copy
// solver (solve_assignment in copy mode) flow for flow.
ClusterSolveResult solve_copy_matching(const CopyInstance& inst, double eps,
                                       const ClusterOptions& opt = {});

// Converts integer copy flow to masses sigma = f/theta, reroutes the small
// per-row overshoot that demand rounding (ceil) may create, and ships each
// supply's floor residual nu_b - s_b/theta to demands with spare capacity,
// ascending index. The result transports all supply.
TransportPlan plan_from_flow(const Matrix<std::int64_t>& flow,
                             const ScaledMasses& sm, const OTInstance& inst);

struct OTOptions {
  bool check_invariants = false;
  std::function<void(const ClusterPhaseSnapshot&)> observer;
};

// Full pipeline at accuracy eps: runs the copy solver at internal accuracy
// eps/3 so rounding, matching and completion errors together stay within
// eps of the optimal transport cost.
std::pair<TransportPlan, SolveStats> solve_ot(const OTInstance& inst,
                                              double eps,
                                              const OTOptions& opt = {});

}  // namespace otpr
