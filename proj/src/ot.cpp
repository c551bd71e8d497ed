#include "otpr/ot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>

namespace otpr {

namespace {

constexpr double kMassTolerance = 1e-9;

std::int64_t exact_floor(double x) {
  auto f = static_cast<std::int64_t>(std::floor(x));
  while (static_cast<double>(f + 1) <= x) ++f;
  while (static_cast<double>(f) > x) --f;
  return f;
}

std::int64_t exact_ceil(double x) {
  auto c = static_cast<std::int64_t>(std::ceil(x));
  while (static_cast<double>(c - 1) >= x) --c;
  while (static_cast<double>(c) < x) ++c;
  return c;
}

std::int64_t flow_of(const DemandCluster& c, Index b) {
  for (const auto& [to, cnt] : c.flow)
    if (to == b) return cnt;
  return 0;
}

void flow_add(DemandCluster& c, Index b, std::int64_t cnt) {
  if (cnt == 0) return;
  auto it = std::lower_bound(
      c.flow.begin(), c.flow.end(), b,
      [](const auto& e, Index key) { return e.first < key; });
  if (it != c.flow.end() && it->first == b)
    it->second += cnt;
  else
    c.flow.insert(it, {b, cnt});
}

void flow_sub(DemandCluster& c, Index b, std::int64_t cnt) {
  auto it = std::lower_bound(
      c.flow.begin(), c.flow.end(), b,
      [](const auto& e, Index key) { return e.first < key; });
  if (it == c.flow.end() || it->first != b || it->second < cnt)
    throw InvariantViolation("cluster flow underflow while rematching");
  it->second -= cnt;
  if (it->second == 0) c.flow.erase(it);
}

}  // namespace

void OTInstance::validate() const {
  if (mu.empty() || nu.empty())
    throw ParameterError("OT instance needs at least one point per side");
  if (cost.rows() != n_a() || cost.cols() != n_b())
    throw ParameterError("OT cost matrix dimensions do not match mass vectors");
  double sum_mu = 0.0, sum_nu = 0.0;
  for (double m : mu) {
    if (!(m >= 0.0)) throw ParameterError("negative or NaN demand mass");
    sum_mu += m;
  }
  for (double m : nu) {
    if (!(m >= 0.0)) throw ParameterError("negative or NaN supply mass");
    sum_nu += m;
  }
  if (std::abs(sum_mu - 1.0) > kMassTolerance ||
      std::abs(sum_nu - 1.0) > kMassTolerance)
    throw InputError("masses must each sum to 1 within 1e-9 (got " +
                     std::to_string(sum_mu) + " and " + std::to_string(sum_nu) +
                     ")");
  for (Index a = 0; a < n_a(); ++a)
    for (Index b = 0; b < n_b(); ++b) {
      const double c = cost(a, b);
      if (!(c >= 0.0 && c <= 1.0))
        throw ParameterError("OT cost entry outside [0,1]");
    }
}

void OTInstance::renormalize() {
  double sum_mu = 0.0, sum_nu = 0.0;
  for (double m : mu) sum_mu += m;
  for (double m : nu) sum_nu += m;
  if (sum_mu <= 0.0 || sum_nu <= 0.0)
    throw InputError("cannot renormalize all-zero masses");
  for (double& m : mu) m /= sum_mu;
  for (double& m : nu) m /= sum_nu;
}

std::int64_t ScaledMasses::total_d() const {
  std::int64_t t = 0;
  for (auto v : d) t += v;
  return t;
}

std::int64_t ScaledMasses::total_s() const {
  std::int64_t t = 0;
  for (auto v : s) t += v;
  return t;
}

ScaledMasses scale_and_round(const OTInstance& inst, double eps) {
  inst.validate();
  if (!(eps > 0.0 && eps < 1.0))
    throw ParameterError("eps must lie in (0, 1)");

  const auto n = static_cast<double>(std::max(inst.n_a(), inst.n_b()));
  const double theta = 4.0 * n / eps;
  if (!(theta < 4.0e15))
    throw ParameterError("theta = 4n/eps too large: copy counts overflow");

  ScaledMasses sm;
  sm.theta = theta;
  sm.d.reserve(inst.mu.size());
  sm.s.reserve(inst.nu.size());
  for (double m : inst.mu) sm.d.push_back(exact_ceil(m * theta));
  for (double m : inst.nu) sm.s.push_back(exact_floor(m * theta));
  if (sm.total_s() > sm.total_d())
    throw InvariantViolation("scaled supplies exceed scaled demands");
  return sm;
}

std::int64_t CopyInstance::total_demand() const {
  std::int64_t t = 0;
  for (auto v : demand_copies) t += v;
  return t;
}

std::int64_t CopyInstance::total_supply() const {
  std::int64_t t = 0;
  for (auto v : supply_copies) t += v;
  return t;
}

void CopyInstance::validate() const {
  if (costs.k.rows() != static_cast<Index>(demand_copies.size()) ||
      costs.k.cols() != static_cast<Index>(supply_copies.size()))
    throw ParameterError("copy counts do not match the cost matrix");
  for (auto v : demand_copies)
    if (v < 0) throw ParameterError("negative demand copy count");
  for (auto v : supply_copies)
    if (v < 0) throw ParameterError("negative supply copy count");
  if (total_supply() > total_demand())
    throw ParameterError("copy instance needs total supply <= total demand");
}

std::int64_t DemandCluster::matched() const {
  std::int64_t t = 0;
  for (const auto& [b, cnt] : flow) t += cnt;
  return t;
}

Matrix<std::int64_t> ClusterState::flow_matrix(Index n_a, Index n_b) const {
  Matrix<std::int64_t> f(n_a, n_b, 0);
  for (Index a = 0; a < n_a; ++a)
    for (const DemandCluster& c : demand[a])
      for (const auto& [b, cnt] : c.flow) f(a, b) += cnt;
  return f;
}

std::int64_t ClusterState::free_supply_total() const {
  std::int64_t t = 0;
  for (const auto& clusters : supply)
    for (const SupplyCluster& c : clusters) t += c.free_count;
  return t;
}

std::int64_t ClusterState::free_demand_of(Index a) const {
  std::int64_t t = 0;
  for (const DemandCluster& c : demand[a]) t += c.free_count;
  return t;
}

DualUnits ClusterState::sum_abs_duals() const {
  DualUnits t = 0;
  for (const auto& clusters : demand)
    for (const DemandCluster& c : clusters) t += std::llabs(c.y) * c.count();
  for (const auto& clusters : supply)
    for (const SupplyCluster& c : clusters) t += std::llabs(c.y) * c.count();
  return t;
}

ClusterReport check_cluster_invariant(const ClusterState& state,
                                      const CopyInstance& inst) {
  ClusterReport report;
  auto fail = [&](std::string msg) {
    report.violations.push_back(std::move(msg));
  };
  const Index n_a = inst.costs.k.rows();
  const Index n_b = inst.costs.k.cols();
  const DualUnits bound = inst.costs.dual_bound();

  for (Index a = 0; a < n_a; ++a) {
    std::vector<DualUnits> values;
    std::int64_t total = 0;
    for (const DemandCluster& c : state.demand[a]) {
      if (c.count() == 0) continue;
      values.push_back(c.y);
      total += c.count();
      if (c.y > 0) fail("demand cluster with positive dual at a=" + std::to_string(a));
      if (std::llabs(c.y) > bound)
        fail("demand cluster dual exceeds magnitude bound at a=" + std::to_string(a));
      if (c.free_count > 0 && c.y != 0)
        fail("free demand copies away from dual zero at a=" + std::to_string(a));
      for (const auto& [b, cnt] : c.flow)
        if (b < 0 || b >= n_b || cnt <= 0)
          fail("bad flow entry at a=" + std::to_string(a));
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() > 2)
      fail("more than two distinct duals among copies of a=" + std::to_string(a));
    if (total != inst.demand_copies[a])
      fail("demand copy count mismatch at a=" + std::to_string(a));
  }

  for (Index b = 0; b < n_b; ++b) {
    std::vector<DualUnits> values;
    std::int64_t total = 0, free_clusters = 0;
    DualUnits max_y = std::numeric_limits<DualUnits>::min();
    for (const SupplyCluster& c : state.supply[b]) {
      if (c.count() == 0) continue;
      values.push_back(c.y);
      total += c.count();
      max_y = std::max(max_y, c.y);
      if (c.y < 0) fail("supply cluster with negative dual at b=" + std::to_string(b));
      if (std::llabs(c.y) > bound)
        fail("supply cluster dual exceeds magnitude bound at b=" + std::to_string(b));
      if (c.free_count > 0) ++free_clusters;
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() > 2)
      fail("more than two distinct duals among copies of b=" + std::to_string(b));
    if (total != inst.supply_copies[b])
      fail("supply copy count mismatch at b=" + std::to_string(b));
    if (free_clusters > 1)
      fail("free supply copies split across duals at b=" + std::to_string(b));
    for (const SupplyCluster& c : state.supply[b])
      if (c.count() > 0 && c.free_count > 0 && c.y != max_y)
        fail("free supply copies below their vertex maximum dual at b=" +
             std::to_string(b));
  }

  // Flow marginals against supply-side matched counts.
  std::vector<std::int64_t> inbound(n_b, 0);
  for (Index a = 0; a < n_a; ++a)
    for (const DemandCluster& c : state.demand[a])
      for (const auto& [b, cnt] : c.flow) inbound[b] += cnt;
  for (Index b = 0; b < n_b; ++b) {
    std::int64_t matched = 0;
    for (const SupplyCluster& c : state.supply[b]) matched += c.matched_count;
    if (inbound[b] != matched)
      fail("flow into b=" + std::to_string(b) +
           " disagrees with matched supply count");
  }
  return report;
}

ClusterReport check_cluster_feasibility(const ClusterState& state,
                                        const CopyInstance& inst) {
  ClusterReport report;
  auto fail = [&](std::string msg) {
    report.violations.push_back(std::move(msg));
  };
  const Index n_a = inst.costs.k.rows();
  const Index n_b = inst.costs.k.cols();

  // Matched copy pairs must be tight: a copy matched toward b from a
  // demand cluster at dual y has its partner at exactly k(a,b) - y.
  std::vector<std::map<DualUnits, std::int64_t>> expected(n_b);
  for (Index a = 0; a < n_a; ++a) {
    for (const DemandCluster& ca : state.demand[a]) {
      for (const auto& [b, cnt] : ca.flow) {
        const DualUnits partner_y =
            static_cast<DualUnits>(inst.costs.k(a, b)) - ca.y;
        expected[b][partner_y] += cnt;
      }
    }
  }
  for (Index b = 0; b < n_b; ++b) {
    std::map<DualUnits, std::int64_t> actual;
    for (const SupplyCluster& cb : state.supply[b])
      if (cb.matched_count > 0) actual[cb.y] += cb.matched_count;
    if (actual != expected[b])
      fail("matched copies of b=" + std::to_string(b) +
           " are not tight against their partners");
  }

  // Unmatched cross pairs must respect the dual-sum allowance.
  for (Index a = 0; a < n_a; ++a) {
    for (const DemandCluster& ca : state.demand[a]) {
      if (ca.count() == 0) continue;
      for (Index b = 0; b < n_b; ++b) {
        const auto k = static_cast<std::int64_t>(inst.costs.k(a, b));
        for (const SupplyCluster& cb : state.supply[b]) {
          if (cb.count() == 0) continue;
          const std::int64_t pairs = ca.count() * cb.count();
          const std::int64_t matched_cross =
              (k - ca.y == cb.y) ? flow_of(ca, b) : 0;
          if (pairs > matched_cross && ca.y + cb.y > k + 1)
            fail("dual-sum allowance violated between copies of a=" +
                 std::to_string(a) + " and b=" + std::to_string(b));
        }
      }
    }
  }
  return report;
}

namespace {

// Scratch availability of one demand cluster during the greedy step.
struct Avail {
  std::int64_t free = 0;
  std::vector<std::pair<Index, std::int64_t>> flow;

  std::int64_t total() const {
    std::int64_t t = free;
    for (const auto& [b, cnt] : flow) t += cnt;
    return t;
  }
};

struct Claim {
  Index a = 0;
  std::size_t ci = 0;
  Index b = 0;
  std::int64_t take_free = 0;
  std::vector<std::pair<Index, std::int64_t>> displaced;

  std::int64_t total() const {
    std::int64_t t = take_free;
    for (const auto& [b_old, cnt] : displaced) t += cnt;
    return t;
  }
};

DemandCluster& find_or_create_demand(std::vector<DemandCluster>& clusters,
                                     DualUnits y) {
  for (DemandCluster& c : clusters)
    if (c.y == y) return c;
  clusters.push_back(DemandCluster{y, 0, {}});
  return clusters.back();
}

SupplyCluster& find_or_create_supply(std::vector<SupplyCluster>& clusters,
                                     DualUnits y) {
  for (SupplyCluster& c : clusters)
    if (c.y == y) return c;
  clusters.push_back(SupplyCluster{y, 0, 0});
  return clusters.back();
}

void normalize_demand(std::vector<DemandCluster>& clusters, Index a) {
  // Merge equal duals, drop dead clusters, keep descending dual order.
  std::sort(clusters.begin(), clusters.end(),
            [](const DemandCluster& x, const DemandCluster& y) {
              return x.y > y.y;
            });
  std::vector<DemandCluster> merged;
  for (DemandCluster& c : clusters) {
    if (c.count() == 0) continue;
    if (!merged.empty() && merged.back().y == c.y) {
      merged.back().free_count += c.free_count;
      for (const auto& [b, cnt] : c.flow) flow_add(merged.back(), b, cnt);
    } else {
      merged.push_back(std::move(c));
    }
  }
  clusters = std::move(merged);
  if (clusters.size() > 2)
    throw InvariantViolation("third dual value among copies of demand vertex " +
                             std::to_string(a));
}

void normalize_supply(std::vector<SupplyCluster>& clusters, Index b) {
  // Lift every free copy to the vertex's maximum dual, then merge.
  DualUnits max_y = std::numeric_limits<DualUnits>::min();
  std::int64_t total_free = 0;
  for (const SupplyCluster& c : clusters) {
    if (c.count() == 0) continue;
    max_y = std::max(max_y, c.y);
    total_free += c.free_count;
  }
  for (SupplyCluster& c : clusters) c.free_count = 0;
  if (total_free > 0) find_or_create_supply(clusters, max_y).free_count = total_free;

  std::sort(clusters.begin(), clusters.end(),
            [](const SupplyCluster& x, const SupplyCluster& y) {
              return x.y > y.y;
            });
  std::vector<SupplyCluster> merged;
  for (const SupplyCluster& c : clusters) {
    if (c.count() == 0) continue;
    if (!merged.empty() && merged.back().y == c.y) {
      merged.back().free_count += c.free_count;
      merged.back().matched_count += c.matched_count;
    } else {
      merged.push_back(c);
    }
  }
  clusters = std::move(merged);
  if (clusters.size() > 2)
    throw InvariantViolation("third dual value among copies of supply vertex " +
                             std::to_string(b));
}

}  // namespace

ClusterSolveResult solve_copy_matching(const CopyInstance& inst, double eps,
                                       const ClusterOptions& opt) {
  inst.validate();
  if (!(eps > 0.0 && eps < 1.0))
    throw ParameterError("eps must lie in (0, 1)");

  const Index n_a = inst.costs.k.rows();
  const Index n_b = inst.costs.k.cols();

  ClusterSolveResult result;
  ClusterState& state = result.state;
  state.demand.resize(n_a);
  state.supply.resize(n_b);
  for (Index a = 0; a < n_a; ++a)
    if (inst.demand_copies[a] > 0)
      state.demand[a].push_back(DemandCluster{0, inst.demand_copies[a], {}});
  for (Index b = 0; b < n_b; ++b)
    if (inst.supply_copies[b] > 0)
      state.supply[b].push_back(SupplyCluster{1, inst.supply_copies[b], 0});

  SolveStats& stats = result.stats;
  const std::int64_t total_s = inst.total_supply();
  const double threshold = eps * static_cast<double>(total_s);
  const std::int64_t phase_cap = stats.phase_bound(eps) + 8;

  std::vector<std::array<Avail, 2>> avail(n_a);
  std::vector<std::int64_t> matched_from_b(n_b, 0);
  std::vector<std::vector<std::pair<DualUnits, std::int64_t>>> freed_at(n_b);

  while (true) {
    const std::int64_t n_i = state.free_supply_total();
    if (static_cast<double>(n_i) <= threshold) {
      stats.full_match_termination = (n_i == 0);
      break;
    }
    const DualUnits sum_before = state.sum_abs_duals();

    // Greedy step: bulk claims against phase-start duals. Free copies of a
    // supply vertex are interchangeable; a claim consumes the admissible
    // demand cluster's free copies first, then rematches its matched
    // copies ascending by current partner.
    for (Index a = 0; a < n_a; ++a) {
      for (std::size_t ci = 0; ci < 2; ++ci) {
        if (ci < state.demand[a].size()) {
          avail[a][ci].free = state.demand[a][ci].free_count;
          avail[a][ci].flow = state.demand[a][ci].flow;
        } else {
          avail[a][ci].free = 0;
          avail[a][ci].flow.clear();
        }
      }
    }
    std::fill(matched_from_b.begin(), matched_from_b.end(), 0);
    for (auto& v : freed_at) v.clear();
    std::vector<Claim> claims;
    std::vector<std::int64_t> remaining_free(n_b, 0);
    std::vector<DualUnits> free_dual(n_b, 0);

    for (Index b = 0; b < n_b; ++b) {
      std::int64_t free_b = 0;
      DualUnits y_b = 0;
      for (const SupplyCluster& c : state.supply[b]) {
        if (c.free_count > 0) {
          free_b += c.free_count;
          y_b = c.y;
        }
      }
      remaining_free[b] = free_b;
      free_dual[b] = y_b;
      if (free_b == 0) continue;

      std::int64_t remaining = free_b;
      for (Index a = 0; a < n_a && remaining > 0; ++a) {
        const DualUnits need_y =
            static_cast<DualUnits>(inst.costs.k(a, b)) + 1 - y_b;
        for (std::size_t ci = 0; ci < state.demand[a].size(); ++ci) {
          if (state.demand[a][ci].y != need_y) continue;
          Avail& av = avail[a][ci];
          const std::int64_t total = av.total();
          if (total == 0) break;
          const std::int64_t take = std::min(remaining, total);

          Claim claim;
          claim.a = a;
          claim.ci = ci;
          claim.b = b;
          claim.take_free = std::min(take, av.free);
          av.free -= claim.take_free;
          std::int64_t rest = take - claim.take_free;
          for (auto& [b_old, cnt] : av.flow) {
            if (rest == 0) break;
            const std::int64_t use = std::min(cnt, rest);
            if (use == 0) continue;
            cnt -= use;
            rest -= use;
            claim.displaced.emplace_back(b_old, use);
          }
          claims.push_back(std::move(claim));
          remaining -= take;
          break;
        }
      }
      matched_from_b[b] = free_b - remaining;
      remaining_free[b] = remaining;
    }

    if (opt.check_invariants) {
      // Greedy maximality: a supply vertex keeps free copies only when
      // every admissible demand cluster has been fully claimed.
      for (Index b = 0; b < n_b; ++b) {
        if (remaining_free[b] == 0) continue;
        for (Index a = 0; a < n_a; ++a) {
          const DualUnits need_y =
              static_cast<DualUnits>(inst.costs.k(a, b)) + 1 - free_dual[b];
          for (std::size_t ci = 0; ci < state.demand[a].size(); ++ci)
            if (state.demand[a][ci].y == need_y && avail[a][ci].total() > 0)
              throw InvariantViolation(
                  "greedy step left an admissible pair unmatched");
        }
      }
    }

    // Matching update, supply side: claimed copies stay at their dual as
    // matched; leftover free copies of the phase's free set go up a unit.
    for (Index b = 0; b < n_b; ++b) {
      std::int64_t free_b = matched_from_b[b] + remaining_free[b];
      if (free_b == 0) continue;
      for (SupplyCluster& c : state.supply[b]) {
        if (c.free_count == 0) continue;
        c.free_count = 0;
        c.matched_count += matched_from_b[b];
      }
      if (remaining_free[b] > 0)
        find_or_create_supply(state.supply[b], free_dual[b] + 1).free_count +=
            remaining_free[b];
    }

    // Matching + dual update, demand side, and displaced supply copies.
    for (const Claim& claim : claims) {
      DemandCluster& src = state.demand[claim.a][claim.ci];
      src.free_count -= claim.take_free;
      for (const auto& [b_old, cnt] : claim.displaced) {
        flow_sub(src, b_old, cnt);
        const DualUnits y_old =
            static_cast<DualUnits>(inst.costs.k(claim.a, b_old)) - src.y;
        bool found = false;
        for (SupplyCluster& c : state.supply[b_old]) {
          if (c.y == y_old && c.matched_count >= cnt) {
            c.matched_count -= cnt;
            found = true;
            break;
          }
        }
        if (!found)
          throw InvariantViolation("displaced supply copy has no cluster");
        freed_at[b_old].emplace_back(y_old, cnt);
      }
      DemandCluster& dst =
          find_or_create_demand(state.demand[claim.a], src.y - 1);
      flow_add(dst, claim.b, claim.total());
    }

    // Freed supply copies come back as free; the normalize pass lifts all
    // free copies to the vertex maximum, which keeps feasibility since all
    // copies share their original's costs.
    for (Index b = 0; b < n_b; ++b) {
      for (const auto& [y_old, cnt] : freed_at[b])
        find_or_create_supply(state.supply[b], y_old).free_count += cnt;
      normalize_supply(state.supply[b], b);
    }
    for (Index a = 0; a < n_a; ++a) normalize_demand(state.demand[a], a);

    stats.phases += 1;
    stats.free_counts.push_back(n_i);
    stats.sum_ni += n_i;

    if (opt.check_invariants) {
      const ClusterReport inv = check_cluster_invariant(state, inst);
      if (!inv.ok())
        throw InvariantViolation("phase " + std::to_string(stats.phases) +
                                 ": " + inv.violations.front());
      const ClusterReport feas = check_cluster_feasibility(state, inst);
      if (!feas.ok())
        throw InvariantViolation("phase " + std::to_string(stats.phases) +
                                 ": " + feas.violations.front());
    }
    if (opt.observer) {
      const ClusterPhaseSnapshot snap{stats.phases,  inst,
                                      state,         n_i,
                                      sum_before,    state.sum_abs_duals()};
      opt.observer(snap);
    }
    if (stats.phases > phase_cap)
      throw InvariantViolation(
          "phase count exceeded the proven bound; solver state is corrupt");
  }

  // Arbitrary completion: pair leftover free supply copies with spare
  // demand copies, both sides ascending by index.
  result.flow = state.flow_matrix(n_a, n_b);
  Index a_cursor = 0;
  std::int64_t a_spare = (n_a > 0) ? state.free_demand_of(0) : 0;
  for (Index b = 0; b < n_b; ++b) {
    std::int64_t need = 0;
    for (const SupplyCluster& c : state.supply[b]) need += c.free_count;
    while (need > 0) {
      while (a_spare == 0) {
        ++a_cursor;
        if (a_cursor >= n_a)
          throw InvariantViolation("completion ran out of demand copies");
        a_spare = state.free_demand_of(a_cursor);
      }
      const std::int64_t take = std::min(need, a_spare);
      result.flow(a_cursor, b) += take;
      need -= take;
      a_spare -= take;
    }
  }
  return result;
}

TransportPlan plan_from_flow(const Matrix<std::int64_t>& flow,
                             const ScaledMasses& sm, const OTInstance& inst) {
  const Index n_a = inst.n_a();
  const Index n_b = inst.n_b();
  if (flow.rows() != n_a || flow.cols() != n_b)
    throw ParameterError("flow matrix dimensions do not match the instance");

  Matrix<double> sigma(n_a, n_b, 0.0);
  std::vector<double> row_mass(n_a, 0.0), col_mass(n_b, 0.0);
  for (Index a = 0; a < n_a; ++a) {
    for (Index b = 0; b < n_b; ++b) {
      if (flow(a, b) < 0) throw ParameterError("negative flow entry");
      if (flow(a, b) == 0) continue;
      const double m = static_cast<double>(flow(a, b)) / sm.theta;
      sigma(a, b) = m;
      row_mass[a] += m;
      col_mass[b] += m;
    }
  }

  // Per-column residual pools: supply lost to floor rounding, plus any
  // mass trimmed from rows that ceil rounding pushed past their demand.
  std::vector<double> pool(n_b, 0.0);
  for (Index b = 0; b < n_b; ++b)
    pool[b] = std::max(0.0, inst.nu[b] - col_mass[b]);

  for (Index a = 0; a < n_a; ++a) {
    double excess = row_mass[a] - inst.mu[a];
    if (excess <= 0.0) continue;
    for (Index b = 0; b < n_b && excess > 0.0; ++b) {
      if (sigma(a, b) <= 0.0) continue;
      const double take = std::min(sigma(a, b), excess);
      sigma(a, b) -= take;
      pool[b] += take;
      excess -= take;
      row_mass[a] -= take;
    }
  }

  // Ship each pool to demands with spare capacity, ascending index.
  for (Index b = 0; b < n_b; ++b) {
    double rest = pool[b];
    for (Index a = 0; a < n_a && rest > 0.0; ++a) {
      const double cap = inst.mu[a] - row_mass[a];
      if (cap <= 0.0) continue;
      const double add = std::min(cap, rest);
      sigma(a, b) += add;
      row_mass[a] += add;
      rest -= add;
    }
    if (rest > kMassTolerance)
      throw InvariantViolation("residual supply could not be placed");
  }

  TransportPlan plan;
  for (Index a = 0; a < n_a; ++a) {
    for (Index b = 0; b < n_b; ++b) {
      if (sigma(a, b) > 0.0) {
        plan.entries.push_back({a, b, sigma(a, b)});
        plan.cost += sigma(a, b) * inst.cost(a, b);
      }
    }
  }
  return plan;
}

std::pair<TransportPlan, SolveStats> solve_ot(const OTInstance& inst,
                                              double eps, const OTOptions& opt) {
  inst.validate();
  if (!(eps > 0.0 && eps < 1.0))
    throw ParameterError("eps must lie in (0, 1)");
  const double eps_inner = eps / 3.0;

  const ScaledMasses sm = scale_and_round(inst, eps_inner);

  AssignmentInstance costs_view;
  costs_view.n_a = inst.n_a();
  costs_view.n_b = inst.n_b();
  costs_view.cost = inst.cost;
  costs_view.norm_factor = inst.norm_factor;

  CopyInstance copy_inst;
  copy_inst.costs = scale_round_costs(costs_view, eps_inner);
  copy_inst.demand_copies = sm.d;
  copy_inst.supply_copies = sm.s;

  ClusterOptions copt;
  copt.check_invariants = opt.check_invariants;
  copt.observer = opt.observer;
  ClusterSolveResult result = solve_copy_matching(copy_inst, eps_inner, copt);

  TransportPlan plan = plan_from_flow(result.flow, sm, inst);
  return {std::move(plan), std::move(result.stats)};
}

}  // namespace otpr
