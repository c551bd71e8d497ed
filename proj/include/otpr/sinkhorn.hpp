#pragma once

// Entropically regularized OT by alternating kernel scaling. Timing and
// accuracy comparison point only; deliberately plain (no log-domain
// stabilization), so a too-small regularization surfaces as an explicit
// error instead of NaNs.

#include "otpr/core.hpp"
#include "otpr/ot.hpp"

namespace otpr {

struct SinkhornConfig {
  double reg = 0.01;       // regularization strength, > 0
  int max_iters = 10000;
  double tol = 1e-9;       // L1 marginal violation threshold, > 0
  double time_budget_ms = 0.0;  // 0 = no budget
};

struct SinkhornResult {
  TransportPlan plan;  // rounded to exact marginals
  int iters = 0;
  double cost = 0.0;
  bool converged = false;
  double marginal_violation = 0.0;  // before rounding, at exit
};

// Throws NumericalError when the kernel exp(-c/reg) underflows to an
// all-zero row or column, or when a scaling vector stops being finite.
SinkhornResult sinkhorn(const OTInstance& inst, const SinkhornConfig& cfg);

}  // namespace otpr
