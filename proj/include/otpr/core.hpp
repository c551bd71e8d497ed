#pragma once

// Shared data model for the approximate assignment / transport solvers.
// Rounded costs and dual weights are stored as exact integers in units of
// the rounding step eps, so every feasibility decision is integer
// arithmetic; doubles appear only in original costs and reported values.

#include <cstdint>
#include <span>
#include <vector>

#include "otpr/errors.hpp"

namespace otpr {

using Index = std::int32_t;
using DualUnits = std::int64_t;

inline constexpr Index kUnmatched = -1;

// Dense row-major matrix. Rows index the demand side A, columns the
// supply side B throughout this library.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(Index rows, Index cols, T fill = T{})
      : rows_(rows),
        cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
              fill) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(Index r, Index c) { return data_[flat(r, c)]; }
  const T& operator()(Index r, Index c) const { return data_[flat(r, c)]; }

  std::span<const T> row(Index r) const {
    return {data_.data() + flat(r, 0), static_cast<std::size_t>(cols_)};
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (Index r = 0; r < rows_; ++r)
      for (Index c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t flat(Index r, Index c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c);
  }

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<T> data_;
};

// A bipartite assignment instance: |A| demand vertices, |B| supply
// vertices, and a dense cost matrix with entries in [0, 1].
struct AssignmentInstance {
  Index n_a = 0;
  Index n_b = 0;
  Matrix<double> cost;  // n_a x n_b

  // Provenance metadata. Costs are stored normalized; multiplying by
  // norm_factor recovers the raw scale (1.0 when no normalization applied).
  double norm_factor = 1.0;
  std::uint64_t seed = 0;

  // Throws ParameterError if dimensions or cost entries are invalid.
  void validate() const;
};

// Costs rounded down to integer multiples of eps: k(a,b) = floor(c/eps),
// so the rounded cost is eps * k. Entries never exceed floor(1/eps).
struct ScaledCosts {
  double eps = 0.0;
  Matrix<std::int32_t> k;

  // floor(1/eps) and ceil(1/eps) under the same rounding semantics as the
  // entries themselves.
  std::int32_t unit_floor = 0;
  std::int32_t unit_ceil = 0;

  // Bound on |Y(v)| maintained by the solver: ceil(1/eps) + 2.
  DualUnits dual_bound() const { return static_cast<DualUnits>(unit_ceil) + 2; }
};

// floor(c / eps) evaluated so that the defining inequality
// eps*k <= c < eps*(k+1) holds in double arithmetic (plain division can be
// off by one at exact multiples).
std::int64_t scaled_floor(double c, double eps);

// Rounds all costs of an instance to integer eps-units.
// Throws ParameterError unless 0 < eps < 1 and 1/eps fits the entry type.
ScaledCosts scale_round_costs(const AssignmentInstance& inst, double eps);

// Dual weights in integer eps-units: y(v) = eps * Y(v). Demand duals stay
// nonpositive and supply duals nonnegative while a solver runs.
struct DualState {
  std::vector<DualUnits> y_a;
  std::vector<DualUnits> y_b;

  DualUnits sum_abs() const;
};

// Partial injective map between A and B, mirrored on both sides.
struct Matching {
  std::vector<Index> match_of_a;  // kUnmatched = free
  std::vector<Index> match_of_b;

  Matching() = default;
  Matching(Index n_a, Index n_b)
      : match_of_a(n_a, kUnmatched), match_of_b(n_b, kUnmatched) {}

  bool has_a(Index a) const { return match_of_a[a] != kUnmatched; }
  bool has_b(Index b) const { return match_of_b[b] != kUnmatched; }

  void link(Index a, Index b) {
    match_of_a[a] = b;
    match_of_b[b] = a;
  }

  // Number of matched pairs.
  Index size() const;

  // Mutual consistency + injectivity; throws InvariantViolation on failure.
  void validate() const;
};

// Slack of edge (a, b) in integer units, with the feasibility allowance
// folded in: 0 for matching edges, otherwise k(a,b) + 1 - Y(a) - Y(b).
// A non-matching edge is admissible exactly when this returns 0.
std::int64_t slack(const ScaledCosts& sc, const DualState& duals,
                   const Matching& m, Index a, Index b);

// Sum of original (unrounded) costs over the matched edges.
double matching_cost(const Matching& m, const AssignmentInstance& inst);

// Sparse nonnegative mass assignment on A x B edges.
struct TransportPlan {
  struct Entry {
    Index a;
    Index b;
    double mass;
  };
  std::vector<Entry> entries;
  double cost = 0.0;

  std::vector<double> row_sums(Index n_a) const;
  std::vector<double> col_sums(Index n_b) const;
  double total_mass() const;
};

}  // namespace otpr
