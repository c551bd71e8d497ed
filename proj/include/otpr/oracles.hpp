#pragma once

// Exact reference solvers. Compiled into the test and benchmark builds
// only; the solver library itself never links against this.

#include <cstdint>
#include <utility>
#include <vector>

#include "otpr/core.hpp"
#include "otpr/ot.hpp"

namespace otpr {

// Minimum-cost matching saturating the smaller side, by shortest
// augmenting paths with potentials in O(n^3). Refuses instances larger
// than the cap; the oracle exists for verification, not production.
std::pair<Matching, double> hungarian_exact(const AssignmentInstance& inst,
                                            Index cap = 512);

// Minimum matching cost by enumerating all injections of the smaller side
// into the larger. max(n_a, n_b) <= 9.
double brute_force_matching(const AssignmentInstance& inst);

// Exact min-cost flow (successive shortest augmenting paths with
// potentials) on integer mass units. Returns the optimal flow and its cost
// sum(f(a,b) * cost(a,b)). Requires sum(demand_units) >= sum(supply_units);
// ships all supply.
std::pair<Matrix<std::int64_t>, double> exact_ot_units(
    const Matrix<double>& cost, const std::vector<std::int64_t>& demand_units,
    const std::vector<std::int64_t>& supply_units);

// Exact optimal transport: masses snapped to rationals with denominator
// 1e9 (error beyond 1e-9 is refused), solved as integer min-cost flow.
std::pair<TransportPlan, double> exact_ot(const OTInstance& inst,
                                          Index cap = 64);

}  // namespace otpr
