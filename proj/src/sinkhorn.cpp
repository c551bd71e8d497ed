#include "otpr/sinkhorn.hpp"

#include <chrono>
#include <cmath>

namespace otpr {

namespace {

// Rescale rows then columns down to their targets, then place the missing
// mass greedily by index. Leaves exact marginals up to roundoff.
TransportPlan round_to_marginals(Matrix<double>& p, const OTInstance& inst) {
  const Index n_a = inst.n_a();
  const Index n_b = inst.n_b();

  std::vector<double> row(n_a, 0.0), col(n_b, 0.0);
  for (Index a = 0; a < n_a; ++a)
    for (Index b = 0; b < n_b; ++b) row[a] += p(a, b);
  for (Index a = 0; a < n_a; ++a) {
    const double scale = (row[a] > inst.mu[a] && row[a] > 0.0)
                             ? inst.mu[a] / row[a]
                             : 1.0;
    if (scale < 1.0)
      for (Index b = 0; b < n_b; ++b) p(a, b) *= scale;
  }
  for (Index a = 0; a < n_a; ++a)
    for (Index b = 0; b < n_b; ++b) col[b] += p(a, b);
  for (Index b = 0; b < n_b; ++b) {
    const double scale = (col[b] > inst.nu[b] && col[b] > 0.0)
                             ? inst.nu[b] / col[b]
                             : 1.0;
    if (scale < 1.0)
      for (Index a = 0; a < n_a; ++a) p(a, b) *= scale;
  }

  std::vector<double> err_a(n_a, 0.0);
  std::fill(row.begin(), row.end(), 0.0);
  std::fill(col.begin(), col.end(), 0.0);
  for (Index a = 0; a < n_a; ++a)
    for (Index b = 0; b < n_b; ++b) {
      row[a] += p(a, b);
      col[b] += p(a, b);
    }
  for (Index a = 0; a < n_a; ++a) err_a[a] = std::max(0.0, inst.mu[a] - row[a]);

  for (Index b = 0; b < n_b; ++b) {
    double rest = std::max(0.0, inst.nu[b] - col[b]);
    for (Index a = 0; a < n_a && rest > 0.0; ++a) {
      const double add = std::min(err_a[a], rest);
      if (add <= 0.0) continue;
      p(a, b) += add;
      err_a[a] -= add;
      rest -= add;
    }
  }

  TransportPlan plan;
  for (Index a = 0; a < n_a; ++a)
    for (Index b = 0; b < n_b; ++b)
      if (p(a, b) > 0.0) {
        plan.entries.push_back({a, b, p(a, b)});
        plan.cost += p(a, b) * inst.cost(a, b);
      }
  return plan;
}

}  // namespace

SinkhornResult sinkhorn(const OTInstance& inst, const SinkhornConfig& cfg) {
  inst.validate();
  if (!(cfg.reg > 0.0)) throw ParameterError("sinkhorn: reg must be positive");
  if (!(cfg.tol > 0.0)) throw ParameterError("sinkhorn: tol must be positive");

  const Index n_a = inst.n_a();
  const Index n_b = inst.n_b();

  Matrix<double> kernel(n_a, n_b);
  for (Index a = 0; a < n_a; ++a) {
    for (Index b = 0; b < n_b; ++b)
      kernel(a, b) = std::exp(-inst.cost(a, b) / cfg.reg);
  }
  for (Index a = 0; a < n_a; ++a) {
    double mx = 0.0;
    for (Index b = 0; b < n_b; ++b) mx = std::max(mx, kernel(a, b));
    if (mx == 0.0)
      throw NumericalError("regularization too small: kernel row underflowed");
  }
  for (Index b = 0; b < n_b; ++b) {
    double mx = 0.0;
    for (Index a = 0; a < n_a; ++a) mx = std::max(mx, kernel(a, b));
    if (mx == 0.0)
      throw NumericalError("regularization too small: kernel column underflowed");
  }

  std::vector<double> u(n_a, 1.0), v(n_b, 1.0), kv(n_a, 0.0), ktu(n_b, 0.0);
  SinkhornResult result;
  const auto start = std::chrono::steady_clock::now();

  while (result.iters < cfg.max_iters) {
    result.iters += 1;

    for (Index a = 0; a < n_a; ++a) {
      double s = 0.0;
      for (Index b = 0; b < n_b; ++b) s += kernel(a, b) * v[b];
      if (!(s > 0.0) || !std::isfinite(s))
        throw NumericalError("regularization too small: scaling underflowed");
      kv[a] = s;
      u[a] = inst.mu[a] / s;
      if (!std::isfinite(u[a]))
        throw NumericalError("regularization too small: scaling diverged");
    }
    for (Index b = 0; b < n_b; ++b) {
      double s = 0.0;
      for (Index a = 0; a < n_a; ++a) s += kernel(a, b) * u[a];
      if (!(s > 0.0) || !std::isfinite(s))
        throw NumericalError("regularization too small: scaling underflowed");
      ktu[b] = s;
      v[b] = inst.nu[b] / s;
      if (!std::isfinite(v[b]))
        throw NumericalError("regularization too small: scaling diverged");
    }

    // Column marginals are exact right after the v-update; the violation
    // lives in the rows.
    double violation = 0.0;
    for (Index a = 0; a < n_a; ++a) {
      double s = 0.0;
      for (Index b = 0; b < n_b; ++b) s += kernel(a, b) * v[b];
      violation += std::abs(u[a] * s - inst.mu[a]);
    }
    result.marginal_violation = violation;
    if (violation <= cfg.tol) {
      result.converged = true;
      break;
    }
    if (cfg.time_budget_ms > 0.0) {
      const double elapsed =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - start)
              .count();
      if (elapsed > cfg.time_budget_ms) break;
    }
  }

  Matrix<double> p(n_a, n_b);
  for (Index a = 0; a < n_a; ++a)
    for (Index b = 0; b < n_b; ++b) p(a, b) = u[a] * kernel(a, b) * v[b];
  result.plan = round_to_marginals(p, inst);
  result.cost = result.plan.cost;
  return result;
}

}  // namespace otpr
