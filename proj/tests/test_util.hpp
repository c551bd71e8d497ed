#pragma once

// Shared helpers for the test suites: seeded random instances and small
// independent reference computations.

#include <cstdint>
#include <random>
#include <vector>

#include "otpr/core.hpp"
#include "otpr/ot.hpp"

namespace otpr::testing {

inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline AssignmentInstance random_instance(Index n_a, Index n_b,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AssignmentInstance inst;
  inst.n_a = n_a;
  inst.n_b = n_b;
  inst.seed = seed;
  inst.cost = Matrix<double>(n_a, n_b);
  for (Index a = 0; a < n_a; ++a)
    for (Index b = 0; b < n_b; ++b) inst.cost(a, b) = u01(rng);
  return inst;
}

// Aggregates a copy-instance matching into per-original-edge flow counts.
inline Matrix<std::int64_t> flow_by_groups(const Matching& m,
                                           const std::vector<Index>& demand_groups,
                                           const std::vector<Index>& supply_groups,
                                           Index n_a, Index n_b) {
  Matrix<std::int64_t> flow(n_a, n_b, 0);
  for (Index i = 0; i < static_cast<Index>(m.match_of_a.size()); ++i) {
    const Index j = m.match_of_a[i];
    if (j != kUnmatched) flow(demand_groups[i], supply_groups[j]) += 1;
  }
  return flow;
}

// Minimum cost over all integral flows shipping every supply unit within
// the demand capacities. Exhaustive; tiny instances only.
inline double enumerate_min_flow_cost(const Matrix<double>& cost,
                                      const std::vector<std::int64_t>& demand_units,
                                      const std::vector<std::int64_t>& supply_units) {
  const auto n_a = static_cast<Index>(demand_units.size());
  const auto n_b = static_cast<Index>(supply_units.size());
  std::vector<std::int64_t> rem(demand_units);
  double best = std::numeric_limits<double>::infinity();

  // Column by column: place supply_units[b] among the rows.
  auto recurse = [&](auto&& self, Index b, Index a, std::int64_t left,
                     double acc) -> void {
    if (acc >= best) return;
    if (b == n_b) {
      best = acc;
      return;
    }
    if (left == 0) {
      self(self, b + 1, 0, (b + 1 < n_b) ? supply_units[b + 1] : 0, acc);
      return;
    }
    if (a == n_a) return;
    const std::int64_t cap = std::min(rem[a], left);
    for (std::int64_t f = 0; f <= cap; ++f) {
      rem[a] -= f;
      self(self, b, a + 1, left - f,
           acc + static_cast<double>(f) * cost(a, b));
      rem[a] += f;
    }
  };
  recurse(recurse, 0, 0, n_b > 0 ? supply_units[0] : 0, 0.0);
  return best;
}

}  // namespace otpr::testing
