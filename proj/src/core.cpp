#include "otpr/core.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace otpr {

void AssignmentInstance::validate() const {
  if (n_a < 1 || n_b < 1)
    throw ParameterError("instance needs at least one vertex per side");
  if (cost.rows() != n_a || cost.cols() != n_b)
    throw ParameterError("cost matrix dimensions do not match n_a x n_b");
  for (Index a = 0; a < n_a; ++a) {
    for (Index b = 0; b < n_b; ++b) {
      const double c = cost(a, b);
      if (!(c >= 0.0 && c <= 1.0))
        throw ParameterError("cost entry outside [0,1] at (" +
                             std::to_string(a) + "," + std::to_string(b) +
                             "): " + std::to_string(c));
    }
  }
}

std::int64_t scaled_floor(double c, double eps) {
  auto k = static_cast<std::int64_t>(std::floor(c / eps));
  // Repair the off-by-one cases introduced by inexact division.
  while (static_cast<double>(k + 1) * eps <= c) ++k;
  while (k > 0 && static_cast<double>(k) * eps > c) --k;
  return k;
}

ScaledCosts scale_round_costs(const AssignmentInstance& inst, double eps) {
  inst.validate();
  if (!(eps > 0.0 && eps < 1.0))
    throw ParameterError("eps must lie in (0, 1), got " + std::to_string(eps));

  const std::int64_t unit_floor = scaled_floor(1.0, eps);
  if (unit_floor + 4 > std::numeric_limits<std::int32_t>::max())
    throw ParameterError("eps too small: 1/eps overflows the cost unit type");

  ScaledCosts sc;
  sc.eps = eps;
  sc.unit_floor = static_cast<std::int32_t>(unit_floor);
  const bool exact = static_cast<double>(unit_floor) * eps == 1.0;
  sc.unit_ceil = static_cast<std::int32_t>(exact ? unit_floor : unit_floor + 1);
  sc.k = Matrix<std::int32_t>(inst.n_a, inst.n_b);
  for (Index a = 0; a < inst.n_a; ++a)
    for (Index b = 0; b < inst.n_b; ++b)
      sc.k(a, b) = static_cast<std::int32_t>(scaled_floor(inst.cost(a, b), eps));
  return sc;
}

DualUnits DualState::sum_abs() const {
  DualUnits s = 0;
  for (DualUnits y : y_a) s += std::llabs(y);
  for (DualUnits y : y_b) s += std::llabs(y);
  return s;
}

Index Matching::size() const {
  Index n = 0;
  for (Index b : match_of_a)
    if (b != kUnmatched) ++n;
  return n;
}

void Matching::validate() const {
  const auto n_a = static_cast<Index>(match_of_a.size());
  const auto n_b = static_cast<Index>(match_of_b.size());
  for (Index a = 0; a < n_a; ++a) {
    const Index b = match_of_a[a];
    if (b == kUnmatched) continue;
    if (b < 0 || b >= n_b || match_of_b[b] != a)
      throw InvariantViolation("matching is not mutually consistent at a=" +
                               std::to_string(a));
  }
  for (Index b = 0; b < n_b; ++b) {
    const Index a = match_of_b[b];
    if (a == kUnmatched) continue;
    if (a < 0 || a >= n_a || match_of_a[a] != b)
      throw InvariantViolation("matching is not mutually consistent at b=" +
                               std::to_string(b));
  }
}

std::int64_t slack(const ScaledCosts& sc, const DualState& duals,
                   const Matching& m, Index a, Index b) {
  if (m.match_of_a[a] == b) return 0;
  return static_cast<std::int64_t>(sc.k(a, b)) + 1 - duals.y_a[a] -
         duals.y_b[b];
}

double matching_cost(const Matching& m, const AssignmentInstance& inst) {
  double total = 0.0;
  for (Index a = 0; a < inst.n_a; ++a) {
    const Index b = m.match_of_a[a];
    if (b != kUnmatched) total += inst.cost(a, b);
  }
  return total;
}

std::vector<double> TransportPlan::row_sums(Index n_a) const {
  std::vector<double> s(n_a, 0.0);
  for (const Entry& e : entries) s[e.a] += e.mass;
  return s;
}

std::vector<double> TransportPlan::col_sums(Index n_b) const {
  std::vector<double> s(n_b, 0.0);
  for (const Entry& e : entries) s[e.b] += e.mass;
  return s;
}

double TransportPlan::total_mass() const {
  double s = 0.0;
  for (const Entry& e : entries) s += e.mass;
  return s;
}

}  // namespace otpr
