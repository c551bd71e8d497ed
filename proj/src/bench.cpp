#include "otpr/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "otpr/assignment.hpp"
#include "otpr/instances.hpp"
#include "otpr/oracles.hpp"
#include "otpr/sinkhorn.hpp"

namespace otpr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

// Scale reported costs back to the raw scale in no-normalize mode.
double report_scale(const AssignmentInstance& inst, const SolveRequest& req) {
  return req.no_normalize ? inst.norm_factor : 1.0;
}

double effective_eps(const AssignmentInstance& inst, const SolveRequest& req) {
  return req.no_normalize ? req.eps / inst.norm_factor : req.eps;
}

}  // namespace

double reg_for_eps(double eps, Index n) {
  const double denom = 4.0 * std::log(std::max<double>(n, 2.0));
  return eps / denom;
}

SolveOutcome run_solver(const AssignmentInstance& inst,
                        const SolveRequest& req) {
  inst.validate();
  SolveOutcome out;
  RunRecord& rec = out.record;
  rec.solver = req.solver;
  rec.n = std::min(inst.n_a, inst.n_b);
  rec.seed = inst.seed;

  const double scale = report_scale(inst, req);
  const double eps = effective_eps(inst, req);
  const Index m_side = std::min(inst.n_a, inst.n_b);

  if (req.solver == "pushrelabel") {
    rec.eps = req.eps;
    AssignmentOptions opt;
    opt.eps = eps;
    opt.threads = req.threads;

    const auto start = Clock::now();
    auto [matching, stats] = solve_assignment(inst, opt);
    rec.time_ms = ms_since(start);
    rec.cost = matching_cost(matching, inst) * scale;
    rec.phases = stats.phases;

    if (req.verify) {
      // Untimed checked rerun; sequential solves are deterministic.
      AssignmentOptions vopt = opt;
      std::int64_t prev_matched = 0;
      vopt.observer = [&](const PhaseSnapshot& snap) {
        const FeasibilityReport rep =
            verify_feasibility(snap.costs, snap.duals, snap.matching);
        for (const auto& v : rep.violations)
          out.verify_violations.push_back("phase " +
                                          std::to_string(snap.phase) + ": " + v);
        const std::int64_t matched = snap.matching.size();
        if (matched < prev_matched)
          out.verify_violations.push_back(
              "phase " + std::to_string(snap.phase) +
              ": matched demand count decreased");
        prev_matched = matched;
        const auto n_i = static_cast<std::int64_t>(snap.workset.b_free.size());
        if (snap.sum_abs_after - snap.sum_abs_before < n_i)
          out.verify_violations.push_back(
              "phase " + std::to_string(snap.phase) +
              ": dual magnitude progress below the free count");
        std::set<Index> prime_a, prime_b;
        for (const auto& [a, b] : snap.workset.m_prime) {
          prime_a.insert(a);
          prime_b.insert(b);
        }
        for (std::size_t i = 0; i < snap.workset.b_free.size(); ++i) {
          if (prime_b.count(snap.workset.b_free[i])) continue;
          for (const Index a : snap.workset.e_admissible[i])
            if (!prime_a.count(a))
              out.verify_violations.push_back(
                  "phase " + std::to_string(snap.phase) +
                  ": greedy matching left an admissible pair unmatched");
        }
      };
      auto [vm, vstats] = solve_assignment(inst, vopt);
      if (vstats.phases > vstats.phase_bound(eps))
        out.verify_violations.push_back("phase count exceeds bound");
      if (vstats.sum_ni > vstats.sum_ni_bound(eps, m_side))
        out.verify_violations.push_back("total free count exceeds bound");
      if (vstats.full_match_termination)
        out.notes.push_back("terminated by full matching");

      if (std::max(inst.n_a, inst.n_b) <= req.hungarian_cap) {
        auto [om, ocost] = hungarian_exact(inst, req.hungarian_cap);
        rec.oracle_cost = ocost * scale;
        const double bound =
            *rec.oracle_cost + 3.0 * eps * static_cast<double>(m_side) * scale;
        if (rec.cost > bound)
          out.verify_violations.push_back("cost exceeds oracle + 3*eps*m");
      }
    }
    return out;
  }

  if (req.solver == "hungarian") {
    rec.eps = std::nullopt;
    const auto start = Clock::now();
    auto [matching, cost] = hungarian_exact(inst, req.hungarian_cap);
    rec.time_ms = ms_since(start);
    rec.cost = cost * scale;
    return out;
  }

  // Remaining solvers run on the OT form with uniform masses.
  const OTInstance ot = assignment_to_ot(inst);

  if (req.solver == "pushrelabel-ot") {
    rec.eps = req.eps;
    const auto start = Clock::now();
    auto [plan, stats] = solve_ot(ot, eps);
    rec.time_ms = ms_since(start);
    rec.cost = plan.cost * scale;
    rec.phases = stats.phases;

    if (req.verify) {
      OTOptions vopt;
      vopt.check_invariants = true;
      try {
        solve_ot(ot, eps, vopt);
      } catch (const InvariantViolation& err) {
        out.verify_violations.push_back(err.what());
      }
      if (std::max(inst.n_a, inst.n_b) <= req.exact_ot_cap) {
        auto [oplan, ocost] = exact_ot(ot, req.exact_ot_cap);
        rec.oracle_cost = ocost * scale;
        if (rec.cost > *rec.oracle_cost + eps * scale)
          out.verify_violations.push_back("cost exceeds oracle + eps");
      }
    }
    return out;
  }

  if (req.solver == "sinkhorn") {
    rec.eps = req.eps;
    SinkhornConfig cfg;
    cfg.reg = req.reg ? *req.reg : reg_for_eps(eps, std::max(inst.n_a, inst.n_b));
    cfg.max_iters = req.sinkhorn_max_iters;
    rec.reg = cfg.reg;

    const auto start = Clock::now();
    const SinkhornResult res = sinkhorn(ot, cfg);
    rec.time_ms = ms_since(start);
    rec.cost = res.cost * scale;
    rec.phases = res.iters;
    if (!res.converged)
      out.notes.push_back("sinkhorn stopped before tolerance (violation " +
                          format_double(res.marginal_violation) + ")");
    if (req.verify && std::max(inst.n_a, inst.n_b) <= req.exact_ot_cap) {
      auto [oplan, ocost] = exact_ot(ot, req.exact_ot_cap);
      rec.oracle_cost = ocost * scale;
    }
    return out;
  }

  if (req.solver == "exact-ot") {
    rec.eps = std::nullopt;
    const auto start = Clock::now();
    auto [plan, cost] = exact_ot(ot, req.exact_ot_cap);
    rec.time_ms = ms_since(start);
    rec.cost = cost * scale;
    return out;
  }

  throw ParameterError("unknown solver: " + req.solver);
}

std::string format_double(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string csv_header() {
  return "solver,n,eps,reg,seed,cost,oracle_cost,time_ms,phases";
}

std::string csv_row(const RunRecord& rec) {
  std::string row = rec.solver;
  row += ',' + std::to_string(rec.n);
  row += ',';
  if (rec.eps) row += format_double(*rec.eps);
  row += ',';
  if (rec.reg) row += format_double(*rec.reg);
  row += ',' + std::to_string(rec.seed);
  row += ',' + format_double(rec.cost);
  row += ',';
  if (rec.oracle_cost) row += format_double(*rec.oracle_cost);
  row += ',' + format_double(rec.time_ms);
  row += ',' + std::to_string(rec.phases);
  return row;
}

void write_csv(const std::string& path, const std::vector<RunRecord>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << csv_header() << '\n';
  for (const RunRecord& rec : rows) out << csv_row(rec) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& rows) {
  std::map<std::tuple<std::string, Index, double>, AggregateRow> cells;
  for (const RunRecord& rec : rows) {
    const double eps_key = rec.eps ? *rec.eps : -1.0;
    auto& cell = cells[{rec.solver, rec.n, eps_key}];
    if (cell.runs == 0) {
      cell.solver = rec.solver;
      cell.n = rec.n;
      cell.eps = rec.eps;
    }
    cell.runs += 1;
    cell.mean_cost += rec.cost;
    cell.mean_time_ms += rec.time_ms;
  }
  std::vector<AggregateRow> result;
  result.reserve(cells.size());
  for (auto& [key, cell] : cells) {
    cell.mean_cost /= cell.runs;
    cell.mean_time_ms /= cell.runs;
    result.push_back(std::move(cell));
  }
  return result;
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << "solver,n,eps,runs,mean_cost,mean_time_ms\n";
  for (const AggregateRow& r : rows) {
    out << r.solver << ',' << r.n << ',';
    if (r.eps) out << format_double(*r.eps);
    out << ',' << r.runs << ',' << format_double(r.mean_cost) << ','
        << format_double(r.mean_time_ms) << '\n';
  }
  if (!out) throw InputError("write failed: " + path);
}

}  // namespace otpr
