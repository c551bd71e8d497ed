#pragma once

// Phase-based push-relabel solver for additive eps-approximate bipartite
// assignment. Each phase greedily matches admissible edges incident on the
// free supply vertices (push), then adjusts the dual weights of the
// vertices that took part (relabel). The loop stops once at most an
// eps-fraction of the smaller side remains free; the leftovers are paired
// off by index.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "otpr/core.hpp"

namespace otpr {

// Per-phase working set: the free supply vertices B', the admissible edges
// E' incident on them (grouped per free vertex, demand indices in scan
// order), and the phase products M', A'', M''.
struct PhaseWorkset {
  std::vector<Index> b_free;                    // B'
  std::vector<std::vector<Index>> e_admissible; // E', aligned with b_free
  std::vector<Index> a_touched;                 // A' (sorted, unique)

  std::vector<std::pair<Index, Index>> m_prime;  // greedy matching, (a, b)
  std::vector<Index> a_double;                   // A'': rematched demands
  std::vector<std::pair<Index, Index>> m_double; // M'': edges dropped from M

  std::size_t edge_count() const;
};

struct SolveStats {
  int phases = 0;
  std::vector<std::int64_t> free_counts;  // n_i per phase
  std::int64_t sum_ni = 0;
  DualState duals_final;  // internal orientation (see swapped)

  // True when the solver swapped sides so the supply side is the smaller
  // one; stats and duals refer to the swapped orientation.
  bool swapped = false;

  // The phase loop ended because the matching covered the whole smaller
  // side, not because the free count dropped under the eps threshold. The
  // dual-magnitude bound is reported unconditionally but this case is
  // flagged since its usual derivation does not apply.
  bool full_match_termination = false;

  std::int64_t phase_bound(double eps) const;   // ceil((1+2eps)/eps^2)
  std::int64_t sum_ni_bound(double eps, Index n) const;  // ceil(n(1+2eps)/eps)
};

// State handed to the phase observer after each phase, in the solver's
// internal orientation. References stay valid only during the callback.
struct PhaseSnapshot {
  int phase;  // 1-based
  const ScaledCosts& costs;
  const DualState& duals;
  const Matching& matching;
  const PhaseWorkset& workset;
  DualUnits sum_abs_before;
  DualUnits sum_abs_after;
};

using PhaseObserver = std::function<void(const PhaseSnapshot&)>;

struct AssignmentOptions {
  double eps = 0.1;

  // Worker threads for the admissible-edge scan and the greedy matching.
  // 1 = sequential and deterministic; >1 trades determinism for speed.
  int threads = 1;

  // Run the full feasibility check after every phase and throw
  // InvariantViolation on failure. O(n^2) per phase; off by default.
  bool check_invariants = false;

  PhaseObserver observer;

  // Copy-instance mode: maps each vertex to the original vertex it is a
  // copy of. When set, duals of supply vertices freed by a rematch are
  // raised to the maximum dual among their group, and the greedy scan
  // orders each demand group's copies canonically (free copies first, then
  // by current partner's group). Requires n_b <= n_a. Both or neither must
  // be set.
  const std::vector<Index>* demand_groups = nullptr;
  const std::vector<Index>* supply_groups = nullptr;
};

// Empty matching, supply duals at one unit, demand duals at zero. The
// resulting state is feasible for any cost matrix.
std::pair<Matching, DualState> init_state(const ScaledCosts& sc);

// Assembles B', E', A' for the current state. adjacency order is ascending
// demand index (canonical group order in copy mode, see AssignmentOptions).
PhaseWorkset collect_workset(const ScaledCosts& sc, const DualState& duals,
                             const Matching& m,
                             const AssignmentOptions* opt = nullptr);

// Fills ws.m_prime with a maximal matching of (A', B', E'): processes each
// free supply vertex in b_free order and takes its first admissible demand
// vertex not yet claimed. threads > 1 claims demands atomically instead,
// producing some (unspecified) maximal matching.
void greedy_maximal_matching(PhaseWorkset& ws, Index n_a, int threads = 1);

// Matching update followed by the dual update: adds M' to M, drops the
// displaced edges M'', lowers duals of demands matched in M', and lifts
// duals of supply vertices in B' left unmatched by M'. Fills ws.a_double /
// ws.m_double. In copy mode, also raises duals of freed supply copies to
// their group maximum.
void apply_phase(const ScaledCosts& sc, DualState& duals, Matching& m,
                 PhaseWorkset& ws, const AssignmentOptions* opt = nullptr);

// Pairs the i-th free demand vertex with the i-th free supply vertex (both
// by ascending index) until the smaller side is fully matched.
Matching complete_matching(Matching m, const AssignmentInstance& inst);

struct FeasibilityReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  bool ok() const { return violations.empty(); }
};

// Exhaustive state check: dual signs, zero duals on free demands, the
// dual-magnitude bound, and integer feasibility of every edge
// (Y(a)+Y(b) <= k+1 off the matching, == k on it).
FeasibilityReport verify_feasibility(const ScaledCosts& sc,
                                     const DualState& duals,
                                     const Matching& m);

// Full solve: rounds costs, runs phases until at most eps * min(n_a, n_b)
// supply vertices remain free, completes the matching, and returns it
// (original orientation) with per-phase stats. The result costs at most
// 3 * eps * min(n_a, n_b) more than the optimal matching of that size.
std::pair<Matching, SolveStats> solve_assignment(const AssignmentInstance& inst,
                                                 const AssignmentOptions& opt);

}  // namespace otpr
