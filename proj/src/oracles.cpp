#include "otpr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace otpr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment on a rows x cols matrix, rows <= cols.
// Returns col assigned to each row. Classic O(rows^2 * cols) potentials
// formulation.
std::vector<Index> solve_rectangular(const Matrix<double>& a) {
  const Index n = a.rows();
  const Index m = a.cols();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<Index> p(m + 1, 0), way(m + 1, 0);

  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Index> row_to_col(n, kUnmatched);
  for (Index j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

std::pair<Matching, double> hungarian_exact(const AssignmentInstance& inst,
                                            Index cap) {
  inst.validate();
  if (std::max(inst.n_a, inst.n_b) > cap)
    throw ParameterError("hungarian_exact: instance exceeds the oracle cap of " +
                         std::to_string(cap));

  Matching m(inst.n_a, inst.n_b);
  if (inst.n_a <= inst.n_b) {
    const std::vector<Index> row_to_col = solve_rectangular(inst.cost);
    for (Index a = 0; a < inst.n_a; ++a) m.link(a, row_to_col[a]);
  } else {
    const std::vector<Index> row_to_col =
        solve_rectangular(inst.cost.transposed());
    for (Index b = 0; b < inst.n_b; ++b) m.link(row_to_col[b], b);
  }
  return {m, matching_cost(m, inst)};
}

double brute_force_matching(const AssignmentInstance& inst) {
  inst.validate();
  const Index large = std::max(inst.n_a, inst.n_b);
  const Index small = std::min(inst.n_a, inst.n_b);
  if (large > 9)
    throw ParameterError("brute_force_matching: instance exceeds n <= 9");

  std::vector<Index> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    double total = 0.0;
    for (Index i = 0; i < small; ++i)
      total += (inst.n_a <= inst.n_b) ? inst.cost(i, perm[i])
                                      : inst.cost(perm[i], i);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

struct FlowEdge {
  int to;
  std::int64_t cap;
  double cost;
  int rev;  // index of the reverse edge in graph[to]
};

class FlowNetwork {
 public:
  explicit FlowNetwork(int n) : graph_(n), potential_(n, 0.0) {}

  void add_edge(int from, int to, std::int64_t cap, double cost) {
    graph_[from].push_back({to, cap, cost, static_cast<int>(graph_[to].size())});
    graph_[to].push_back(
        {from, 0, -cost, static_cast<int>(graph_[from].size()) - 1});
  }

  // Sends as much flow as possible from s to t, cheapest paths first.
  // Dense Dijkstra with potentials; all original costs are nonnegative.
  std::int64_t min_cost_flow(int s, int t) {
    const int n = static_cast<int>(graph_.size());
    std::int64_t total = 0;
    while (true) {
      std::vector<double> dist(n, kInf);
      std::vector<char> done(n, 0);
      std::vector<std::pair<int, int>> parent(n, {-1, -1});
      dist[s] = 0.0;
      for (int iter = 0; iter < n; ++iter) {
        int v = -1;
        for (int u = 0; u < n; ++u)
          if (!done[u] && dist[u] < kInf && (v == -1 || dist[u] < dist[v]))
            v = u;
        if (v == -1) break;
        done[v] = 1;
        for (int ei = 0; ei < static_cast<int>(graph_[v].size()); ++ei) {
          const FlowEdge& e = graph_[v][ei];
          if (e.cap <= 0) continue;
          const double nd = dist[v] + e.cost + potential_[v] - potential_[e.to];
          if (nd < dist[e.to] - 1e-15) {
            dist[e.to] = nd;
            parent[e.to] = {v, ei};
          }
        }
      }
      if (dist[t] >= kInf) break;
      for (int v = 0; v < n; ++v)
        if (dist[v] < kInf) potential_[v] += dist[v];

      std::int64_t push = std::numeric_limits<std::int64_t>::max();
      for (int v = t; v != s;) {
        const auto [pv, pe] = parent[v];
        push = std::min(push, graph_[pv][pe].cap);
        v = pv;
      }
      for (int v = t; v != s;) {
        const auto [pv, pe] = parent[v];
        FlowEdge& e = graph_[pv][pe];
        e.cap -= push;
        graph_[v][e.rev].cap += push;
        v = pv;
      }
      total += push;
    }
    return total;
  }

  const std::vector<std::vector<FlowEdge>>& graph() const { return graph_; }

 private:
  std::vector<std::vector<FlowEdge>> graph_;
  std::vector<double> potential_;
};

}  // namespace

std::pair<Matrix<std::int64_t>, double> exact_ot_units(
    const Matrix<double>& cost, const std::vector<std::int64_t>& demand_units,
    const std::vector<std::int64_t>& supply_units) {
  const auto n_a = static_cast<Index>(demand_units.size());
  const auto n_b = static_cast<Index>(supply_units.size());
  if (cost.rows() != n_a || cost.cols() != n_b)
    throw ParameterError("exact_ot_units: dimension mismatch");

  std::int64_t total_d = 0, total_s = 0;
  for (auto v : demand_units) total_d += v;
  for (auto v : supply_units) total_s += v;
  if (total_s > total_d)
    throw ParameterError("exact_ot_units: supply exceeds demand capacity");

  // Nodes: source, supplies, demands, sink.
  const int src = 0;
  const int sink = 1 + n_b + n_a;
  FlowNetwork net(sink + 1);
  for (Index b = 0; b < n_b; ++b)
    net.add_edge(src, 1 + b, supply_units[b], 0.0);
  for (Index b = 0; b < n_b; ++b)
    for (Index a = 0; a < n_a; ++a)
      net.add_edge(1 + b, 1 + n_b + a, total_s, cost(a, b));
  for (Index a = 0; a < n_a; ++a)
    net.add_edge(1 + n_b + a, sink, demand_units[a], 0.0);

  const std::int64_t shipped = net.min_cost_flow(src, sink);
  if (shipped != total_s)
    throw InvariantViolation("exact_ot_units: could not ship all supply");

  Matrix<std::int64_t> flow(n_a, n_b, 0);
  double total_cost = 0.0;
  for (Index b = 0; b < n_b; ++b) {
    for (const FlowEdge& e : net.graph()[1 + b]) {
      if (e.to < 1 + n_b || e.to >= 1 + n_b + n_a) continue;
      const Index a = static_cast<Index>(e.to - 1 - n_b);
      const std::int64_t f = total_s - e.cap;  // used capacity
      if (f > 0) {
        flow(a, b) += f;
        total_cost += static_cast<double>(f) * cost(a, b);
      }
    }
  }
  return {std::move(flow), total_cost};
}

std::pair<TransportPlan, double> exact_ot(const OTInstance& inst, Index cap) {
  inst.validate();
  if (inst.n_a() > cap || inst.n_b() > cap)
    throw ParameterError("exact_ot: instance exceeds the oracle cap of " +
                         std::to_string(cap));

  constexpr std::int64_t kDenom = 1'000'000'000;
  std::vector<std::int64_t> u(inst.n_a()), v(inst.n_b());
  for (Index a = 0; a < inst.n_a(); ++a) {
    u[a] = std::llround(inst.mu[a] * kDenom);
    if (std::abs(inst.mu[a] - static_cast<double>(u[a]) / kDenom) > 1e-9)
      throw InputError("exact_ot: demand mass is not rational at denominator 1e9");
  }
  for (Index b = 0; b < inst.n_b(); ++b) {
    v[b] = std::llround(inst.nu[b] * kDenom);
    if (std::abs(inst.nu[b] - static_cast<double>(v[b]) / kDenom) > 1e-9)
      throw InputError("exact_ot: supply mass is not rational at denominator 1e9");
  }

  // Rounding can leave a few units of drift between the totals. Slack
  // demand capacity is harmless; a shortfall gets patched onto the largest
  // demand (a perturbation of order 1e-9 mass).
  std::int64_t sum_u = 0, sum_v = 0;
  for (auto x : u) sum_u += x;
  for (auto x : v) sum_v += x;
  const std::int64_t drift = sum_u - sum_v;
  if (std::llabs(drift) > inst.n_a() + inst.n_b() + 2)
    throw InputError("exact_ot: mass totals disagree beyond rounding");
  if (drift < 0)
    u[std::max_element(u.begin(), u.end()) - u.begin()] -= drift;

  auto [flow, unit_cost] = exact_ot_units(inst.cost, u, v);

  TransportPlan plan;
  for (Index a = 0; a < inst.n_a(); ++a) {
    for (Index b = 0; b < inst.n_b(); ++b) {
      if (flow(a, b) > 0) {
        const double mass = static_cast<double>(flow(a, b)) / kDenom;
        plan.entries.push_back({a, b, mass});
        plan.cost += mass * inst.cost(a, b);
      }
    }
  }
  return {std::move(plan), plan.cost};
}

}  // namespace otpr
