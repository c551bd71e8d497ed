#pragma once

// Benchmark plumbing shared by the CLI and the tests: single-run driver,
// CSV row/aggregate emission. Timing covers the solve proper (cost
// rounding through plan or matching completion); instance generation and
// oracle verification run outside the timer.

#include <optional>
#include <string>
#include <vector>

#include "otpr/core.hpp"
#include "otpr/ot.hpp"

namespace otpr {

struct RunRecord {
  std::string solver;
  Index n = 0;  // smaller instance side
  std::optional<double> eps;
  std::optional<double> reg;  // sinkhorn only
  std::uint64_t seed = 0;
  double cost = 0.0;
  std::optional<double> oracle_cost;
  double time_ms = 0.0;
  std::int64_t phases = 0;  // phases or iterations; 0 for exact solvers
};

struct SolveRequest {
  std::string solver;  // pushrelabel | pushrelabel-ot | sinkhorn |
                       // hungarian | exact-ot
  double eps = 0.1;
  std::optional<double> reg;  // overrides the eps-derived default
  int threads = 1;
  bool verify = false;

  // Interpret eps on the instance's raw cost scale and report raw costs.
  bool no_normalize = false;

  int sinkhorn_max_iters = 10000;
  Index hungarian_cap = 512;
  Index exact_ot_cap = 64;
};

struct SolveOutcome {
  RunRecord record;
  std::vector<std::string> verify_violations;
  std::vector<std::string> notes;
};

// Runs one solver on one instance. With verify set, a second (untimed)
// checked run validates the per-phase invariants, and the oracle gap is
// checked whenever the instance is under the oracle cap.
SolveOutcome run_solver(const AssignmentInstance& inst,
                        const SolveRequest& req);

// Sinkhorn regularization used when a benchmark is driven by eps:
// reg = eps / (4 ln n), clamped for n <= 2.
double reg_for_eps(double eps, Index n);

std::string csv_header();
std::string csv_row(const RunRecord& rec);
void write_csv(const std::string& path, const std::vector<RunRecord>& rows);

struct AggregateRow {
  std::string solver;
  Index n = 0;
  std::optional<double> eps;
  int runs = 0;
  double mean_cost = 0.0;
  double mean_time_ms = 0.0;
};

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& rows);
void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows);

// Stable numeric formatting used in every CSV field (shortest round-trip
// form, '.' decimal point).
std::string format_double(double v);

}  // namespace otpr
