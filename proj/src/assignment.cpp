#include "otpr/assignment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <thread>

namespace otpr {

namespace {

// Members of each group, ascending. Used only in copy mode.
std::vector<std::vector<Index>> group_members(const std::vector<Index>& groups,
                                              Index n_groups) {
  std::vector<std::vector<Index>> members(n_groups);
  for (Index v = 0; v < static_cast<Index>(groups.size()); ++v)
    members[groups[v]].push_back(v);
  return members;
}

Index max_group_id(const std::vector<Index>& groups) {
  Index m = -1;
  for (Index g : groups) m = std::max(m, g);
  return m + 1;
}

int effective_threads(int requested, std::size_t work_items) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int t = std::min(requested, hw);
  t = std::min<int>(t, static_cast<int>(work_items));
  return std::max(t, 1);
}

}  // namespace

std::size_t PhaseWorkset::edge_count() const {
  std::size_t n = 0;
  for (const auto& adj : e_admissible) n += adj.size();
  return n;
}

std::int64_t SolveStats::phase_bound(double eps) const {
  return static_cast<std::int64_t>(std::ceil((1.0 + 2.0 * eps) / (eps * eps)));
}

std::int64_t SolveStats::sum_ni_bound(double eps, Index n) const {
  return static_cast<std::int64_t>(
      std::ceil(static_cast<double>(n) * (1.0 + 2.0 * eps) / eps));
}

std::pair<Matching, DualState> init_state(const ScaledCosts& sc) {
  Matching m(sc.k.rows(), sc.k.cols());
  DualState duals;
  duals.y_a.assign(sc.k.rows(), 0);
  duals.y_b.assign(sc.k.cols(), 1);
  return {std::move(m), std::move(duals)};
}

namespace {

// Admissible neighbors of free supply vertex b, ascending demand index.
void scan_plain(const ScaledCosts& sc, const DualState& duals, Index b,
                std::vector<Index>& out) {
  const Index n_a = sc.k.rows();
  const DualUnits yb = duals.y_b[b];
  const auto krow_base = sc.k.data();
  for (Index a = 0; a < n_a; ++a) {
    const auto k = static_cast<std::int64_t>(
        krow_base[static_cast<std::size_t>(a) * sc.k.cols() + b]);
    if (duals.y_a[a] + yb == k + 1) out.push_back(a);
  }
}

// Copy-mode scan: per demand group, free copies first (ascending id), then
// matched copies ordered by their current partner's supply group. Keeps
// runs of the compressed solver and of this solver on materialized copies
// aligned edge for edge.
void scan_grouped(const ScaledCosts& sc, const DualState& duals,
                  const Matching& m, Index b,
                  const std::vector<std::vector<Index>>& demand_members,
                  const std::vector<Index>& supply_groups,
                  std::vector<Index>& out) {
  const DualUnits yb = duals.y_b[b];
  std::vector<Index> matched;
  for (const auto& members : demand_members) {
    matched.clear();
    for (Index a : members) {
      const auto k = static_cast<std::int64_t>(sc.k(a, b));
      if (duals.y_a[a] + yb != k + 1) continue;
      if (m.has_a(a))
        matched.push_back(a);
      else
        out.push_back(a);
    }
    std::stable_sort(matched.begin(), matched.end(), [&](Index x, Index y) {
      return supply_groups[m.match_of_a[x]] < supply_groups[m.match_of_a[y]];
    });
    out.insert(out.end(), matched.begin(), matched.end());
  }
}

}  // namespace

PhaseWorkset collect_workset(const ScaledCosts& sc, const DualState& duals,
                             const Matching& m, const AssignmentOptions* opt) {
  const Index n_a = sc.k.rows();
  const Index n_b = sc.k.cols();

  PhaseWorkset ws;
  for (Index b = 0; b < n_b; ++b)
    if (!m.has_b(b)) ws.b_free.push_back(b);
  ws.e_admissible.resize(ws.b_free.size());

  const bool grouped = opt && opt->demand_groups && opt->supply_groups;
  std::vector<std::vector<Index>> demand_members;
  if (grouped)
    demand_members =
        group_members(*opt->demand_groups, max_group_id(*opt->demand_groups));

  auto scan_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      if (grouped)
        scan_grouped(sc, duals, m, ws.b_free[i], demand_members,
                     *opt->supply_groups, ws.e_admissible[i]);
      else
        scan_plain(sc, duals, ws.b_free[i], ws.e_admissible[i]);
    }
  };

  const int threads =
      opt ? effective_threads(opt->threads, ws.b_free.size()) : 1;
  if (threads <= 1) {
    scan_range(0, ws.b_free.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (ws.b_free.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(ws.b_free.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(scan_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<char> seen(n_a, 0);
  for (const auto& adj : ws.e_admissible)
    for (Index a : adj) seen[a] = 1;
  for (Index a = 0; a < n_a; ++a)
    if (seen[a]) ws.a_touched.push_back(a);
  return ws;
}

void greedy_maximal_matching(PhaseWorkset& ws, Index n_a, int threads) {
  ws.m_prime.clear();
  threads = effective_threads(threads, ws.b_free.size());

  if (threads <= 1) {
    std::vector<char> claimed(n_a, 0);
    for (std::size_t i = 0; i < ws.b_free.size(); ++i) {
      for (Index a : ws.e_admissible[i]) {
        if (claimed[a]) continue;
        claimed[a] = 1;
        ws.m_prime.emplace_back(a, ws.b_free[i]);
        break;
      }
    }
    return;
  }

  // Parallel mode: supply vertices are split across workers and demand
  // vertices are claimed atomically. The result is still maximal: a worker
  // gives up on b only after every admissible neighbor is claimed.
  auto claimed = std::make_unique<std::atomic<char>[]>(n_a);
  for (Index a = 0; a < n_a; ++a) claimed[a].store(0, std::memory_order_relaxed);

  std::vector<std::vector<std::pair<Index, Index>>> local(threads);
  auto work = [&](int tid, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (Index a : ws.e_admissible[i]) {
        char expected = 0;
        if (claimed[a].compare_exchange_strong(expected, 1,
                                               std::memory_order_acq_rel)) {
          local[tid].emplace_back(a, ws.b_free[i]);
          break;
        }
      }
    }
  };

  std::vector<std::thread> pool;
  const std::size_t chunk = (ws.b_free.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(ws.b_free.size(), lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(work, t, lo, hi);
  }
  for (auto& th : pool) th.join();

  for (auto& part : local)
    ws.m_prime.insert(ws.m_prime.end(), part.begin(), part.end());
  std::sort(ws.m_prime.begin(), ws.m_prime.end(),
            [](const auto& x, const auto& y) { return x.second < y.second; });
}

void apply_phase(const ScaledCosts& sc, DualState& duals, Matching& m,
                 PhaseWorkset& ws, const AssignmentOptions* opt) {
  const Index n_b = sc.k.cols();
  ws.a_double.clear();
  ws.m_double.clear();

  // Matching update: add M', drop the edges M'' it displaces.
  for (const auto& [a, b] : ws.m_prime) {
    const Index old_b = m.match_of_a[a];
    if (old_b != kUnmatched) {
      ws.a_double.push_back(a);
      ws.m_double.emplace_back(a, old_b);
      m.match_of_b[old_b] = kUnmatched;
    }
    m.link(a, b);
  }

  // Dual update: demands matched in M' go down one unit; supply vertices
  // of B' that M' left unmatched go up one unit.
  std::vector<char> matched_by_prime(n_b, 0);
  for (const auto& [a, b] : ws.m_prime) {
    duals.y_a[a] -= 1;
    matched_by_prime[b] = 1;
  }
  for (Index b : ws.b_free)
    if (!matched_by_prime[b]) duals.y_b[b] += 1;

  // Copy mode: every free supply copy is lifted to the maximum dual among
  // the copies of its original vertex. Feasible because an edge of the
  // maximum-dual copy and the same edge of the lifted copy carry the same
  // rounded cost.
  if (opt && opt->supply_groups) {
    const auto members =
        group_members(*opt->supply_groups, max_group_id(*opt->supply_groups));
    for (const auto& group : members) {
      DualUnits top = 0;
      for (Index b : group) top = std::max(top, duals.y_b[b]);
      for (Index b : group)
        if (!m.has_b(b)) duals.y_b[b] = top;
    }
  }
}

Matching complete_matching(Matching m, const AssignmentInstance& inst) {
  std::vector<Index> free_a, free_b;
  for (Index a = 0; a < inst.n_a; ++a)
    if (!m.has_a(a)) free_a.push_back(a);
  for (Index b = 0; b < inst.n_b; ++b)
    if (!m.has_b(b)) free_b.push_back(b);
  const std::size_t pairs = std::min(free_a.size(), free_b.size());
  for (std::size_t i = 0; i < pairs; ++i) m.link(free_a[i], free_b[i]);
  return m;
}

FeasibilityReport verify_feasibility(const ScaledCosts& sc,
                                     const DualState& duals,
                                     const Matching& m) {
  FeasibilityReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  const Index n_a = sc.k.rows();
  const Index n_b = sc.k.cols();
  try {
    m.validate();
  } catch (const InvariantViolation& err) {
    fail(err.what());
    return report;
  }

  const DualUnits bound = sc.dual_bound();
  for (Index a = 0; a < n_a; ++a) {
    if (duals.y_a[a] > 0)
      fail("demand dual positive at a=" + std::to_string(a));
    if (!m.has_a(a) && duals.y_a[a] != 0)
      fail("free demand vertex with nonzero dual at a=" + std::to_string(a));
    if (std::llabs(duals.y_a[a]) > bound)
      fail("demand dual magnitude exceeds bound at a=" + std::to_string(a));
  }
  for (Index b = 0; b < n_b; ++b) {
    if (duals.y_b[b] < 0)
      fail("supply dual negative at b=" + std::to_string(b));
    if (std::llabs(duals.y_b[b]) > bound)
      fail("supply dual magnitude exceeds bound at b=" + std::to_string(b));
  }

  for (Index a = 0; a < n_a; ++a) {
    for (Index b = 0; b < n_b; ++b) {
      const auto k = static_cast<std::int64_t>(sc.k(a, b));
      const DualUnits sum = duals.y_a[a] + duals.y_b[b];
      if (m.match_of_a[a] == b) {
        if (sum != k)
          fail("matching edge not tight at (" + std::to_string(a) + "," +
               std::to_string(b) + "): Y(a)+Y(b)=" + std::to_string(sum) +
               " k=" + std::to_string(k));
      } else if (sum > k + 1) {
        fail("dual sum exceeds rounded cost allowance at (" +
             std::to_string(a) + "," + std::to_string(b) +
             "): Y(a)+Y(b)=" + std::to_string(sum) + " k=" + std::to_string(k));
      }
    }
  }
  return report;
}

namespace {

std::pair<Matching, SolveStats> solve_oriented(const AssignmentInstance& inst,
                                               const AssignmentOptions& opt,
                                               bool swapped) {
  const ScaledCosts sc = scale_round_costs(inst, opt.eps);
  auto [matching, duals] = init_state(sc);

  SolveStats stats;
  stats.swapped = swapped;
  const Index m_side = std::min(inst.n_a, inst.n_b);
  const double threshold = opt.eps * static_cast<double>(m_side);
  const std::int64_t phase_cap = stats.phase_bound(opt.eps) + 8;

  while (true) {
    PhaseWorkset ws = collect_workset(sc, duals, matching, &opt);
    const auto n_i = static_cast<std::int64_t>(ws.b_free.size());
    if (static_cast<double>(n_i) <= threshold) {
      stats.full_match_termination = (n_i == 0);
      break;
    }

    const DualUnits before = duals.sum_abs();
    greedy_maximal_matching(ws, inst.n_a, opt.threads);
    apply_phase(sc, duals, matching, ws, &opt);

    stats.phases += 1;
    stats.free_counts.push_back(n_i);
    stats.sum_ni += n_i;

    if (opt.check_invariants) {
      const FeasibilityReport report = verify_feasibility(sc, duals, matching);
      if (!report.ok())
        throw InvariantViolation("phase " + std::to_string(stats.phases) +
                                 ": " + report.violations.front());
    }
    if (opt.observer) {
      const PhaseSnapshot snap{stats.phases, sc,     duals,
                               matching,     ws,     before,
                               duals.sum_abs()};
      opt.observer(snap);
    }
    if (stats.phases > phase_cap)
      throw InvariantViolation("phase count exceeded the proven bound; "
                               "solver state is corrupt");
  }

  matching = complete_matching(std::move(matching), inst);
  stats.duals_final = duals;
  return {std::move(matching), std::move(stats)};
}

}  // namespace

std::pair<Matching, SolveStats> solve_assignment(const AssignmentInstance& inst,
                                                 const AssignmentOptions& opt) {
  inst.validate();
  if (!(opt.eps > 0.0 && opt.eps < 1.0))
    throw ParameterError("eps must lie in (0, 1)");
  if ((opt.demand_groups == nullptr) != (opt.supply_groups == nullptr))
    throw ParameterError("copy mode needs both demand and supply groups");

  if (opt.demand_groups) {
    if (static_cast<Index>(opt.demand_groups->size()) != inst.n_a ||
        static_cast<Index>(opt.supply_groups->size()) != inst.n_b)
      throw ParameterError("group map sizes do not match the instance");
    if (inst.n_b > inst.n_a)
      throw ParameterError("copy mode requires n_b <= n_a");
    return solve_oriented(inst, opt, /*swapped=*/false);
  }

  if (inst.n_b <= inst.n_a) return solve_oriented(inst, opt, false);

  // Swap sides so the supply side is the smaller one; swap the result back.
  AssignmentInstance flipped;
  flipped.n_a = inst.n_b;
  flipped.n_b = inst.n_a;
  flipped.cost = inst.cost.transposed();
  flipped.norm_factor = inst.norm_factor;
  flipped.seed = inst.seed;

  auto [matching, stats] = solve_oriented(flipped, opt, /*swapped=*/true);
  Matching unflipped;
  unflipped.match_of_a = std::move(matching.match_of_b);
  unflipped.match_of_b = std::move(matching.match_of_a);
  return {std::move(unflipped), std::move(stats)};
}

}  // namespace otpr
