// Benchmark and inspection CLI: generate instances, run solvers with
// optional invariant verification, and sweep (solver, n, eps) grids into
// CSV tables.
//
// Exit codes: 0 success, 2 parameter error, 3 input/format error,
// 4 numerical failure, 5 invariant violation under --verify.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otpr/assignment.hpp"
#include "otpr/bench.hpp"
#include "otpr/core.hpp"
#include "otpr/errors.hpp"
#include "otpr/instances.hpp"

namespace {

struct InstanceArgs {
  std::string input;   // cached instance file
  std::string kind = "square";
  std::string images;  // IDX3 path for kind=mnist
  otpr::Index n = 100;
  std::uint64_t seed = 1;
};

void add_instance_flags(CLI::App* cmd, InstanceArgs& args) {
  cmd->add_option("--in", args.input, "cached instance file (overrides generation)");
  cmd->add_option("--kind", args.kind, "instance kind: square | mnist")
      ->check(CLI::IsMember({"square", "mnist"}));
  cmd->add_option("--images", args.images, "IDX3 image file for --kind mnist")
      ->envname("OTPR_DATA");
  cmd->add_option("--n", args.n, "points per side");
  cmd->add_option("--seed", args.seed, "generator seed");
}

otpr::AssignmentInstance make_instance(const InstanceArgs& args) {
  if (!args.input.empty()) return otpr::load_instance(args.input);
  if (args.kind == "square") return otpr::gen_uniform_square(args.n, args.seed);
  if (args.images.empty())
    throw otpr::ParameterError("--kind mnist needs --images (or $OTPR_DATA)");
  return otpr::load_mnist_pair(args.images, args.n, args.seed);
}

void print_outcome(const otpr::SolveOutcome& out) {
  const otpr::RunRecord& r = out.record;
  std::printf("solver=%s n=%d", r.solver.c_str(), r.n);
  if (r.eps) std::printf(" eps=%s", otpr::format_double(*r.eps).c_str());
  if (r.reg) std::printf(" reg=%s", otpr::format_double(*r.reg).c_str());
  std::printf(" seed=%llu cost=%s",
              static_cast<unsigned long long>(r.seed),
              otpr::format_double(r.cost).c_str());
  if (r.oracle_cost)
    std::printf(" oracle_cost=%s", otpr::format_double(*r.oracle_cost).c_str());
  std::printf(" time_ms=%s phases=%lld\n", otpr::format_double(r.time_ms).c_str(),
              static_cast<long long>(r.phases));
  for (const std::string& n : out.notes) std::printf("note: %s\n", n.c_str());
  for (const std::string& v : out.verify_violations)
    std::printf("violation: %s\n", v.c_str());
}

int run(int argc, char** argv) {
  CLI::App app{"approximate optimal transport / assignment benchmark"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate and cache an instance");
  InstanceArgs gen_args;
  add_instance_flags(gen, gen_args);
  std::string gen_out;
  gen->add_option("--out", gen_out, "output instance file")->required();

  // --- solve ---
  auto* solve = app.add_subcommand("solve", "run one solver on one instance");
  InstanceArgs solve_args;
  add_instance_flags(solve, solve_args);
  otpr::SolveRequest req;
  solve->add_option("--solver", req.solver,
                    "pushrelabel | pushrelabel-ot | sinkhorn | hungarian | exact-ot")
      ->required()
      ->check(CLI::IsMember({"pushrelabel", "pushrelabel-ot", "sinkhorn",
                             "hungarian", "exact-ot"}));
  solve->add_option("--eps", req.eps, "additive accuracy");
  double reg_flag = 0.0;
  auto* reg_opt = solve->add_option("--reg", reg_flag, "sinkhorn regularization");
  solve->add_option("--threads", req.threads, "phase worker threads");
  solve->add_option("--sinkhorn-max-iters", req.sinkhorn_max_iters,
                    "iteration cap for the sinkhorn baseline");
  solve->add_flag("--verify", req.verify, "check invariants and oracle gap");
  solve->add_flag("--no-normalize", req.no_normalize,
                  "interpret eps and report costs on the raw cost scale");
  std::string solve_csv;
  solve->add_option("--csv", solve_csv, "also write the record as a CSV file");

  // --- bench ---
  auto* bench = app.add_subcommand("bench", "sweep a (solver, n, eps) grid");
  std::vector<std::string> bench_solvers = {"pushrelabel", "sinkhorn"};
  std::vector<otpr::Index> bench_ns = {500, 1000, 2000};
  std::vector<double> bench_eps = {0.1, 0.01};
  int bench_runs = 30;
  std::uint64_t bench_seed0 = 1;
  std::string bench_kind = "square";
  std::string bench_images;
  std::string bench_out = "bench.csv";
  std::string bench_agg;
  int bench_threads = 1;
  bool bench_no_normalize = false;
  int bench_sinkhorn_iters = 10000;
  bench->add_option("--solvers", bench_solvers, "solvers to run");
  bench->add_option("--n", bench_ns, "instance sizes");
  bench->add_option("--eps", bench_eps, "accuracy grid");
  bench->add_option("--runs", bench_runs, "seeded runs per cell");
  bench->add_option("--seed0", bench_seed0, "first seed");
  bench->add_option("--kind", bench_kind, "square | mnist")
      ->check(CLI::IsMember({"square", "mnist"}));
  bench->add_option("--images", bench_images, "IDX3 image file for mnist")
      ->envname("OTPR_DATA");
  bench->add_option("--out", bench_out, "per-run CSV path");
  bench->add_option("--aggregate", bench_agg, "per-cell mean CSV path");
  bench->add_option("--threads", bench_threads, "phase worker threads");
  bench->add_flag("--no-normalize", bench_no_normalize,
                  "interpret eps and report costs on the raw cost scale");
  bench->add_option("--sinkhorn-max-iters", bench_sinkhorn_iters,
                    "iteration cap for the sinkhorn baseline");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const otpr::AssignmentInstance inst = make_instance(gen_args);
    otpr::save_instance(inst, gen_out);
    std::printf("wrote %s: n_a=%d n_b=%d seed=%llu norm_factor=%s\n",
                gen_out.c_str(), inst.n_a, inst.n_b,
                static_cast<unsigned long long>(inst.seed),
                otpr::format_double(inst.norm_factor).c_str());
    return 0;
  }

  if (solve->parsed()) {
    if (reg_opt->count() > 0) req.reg = reg_flag;
    const otpr::AssignmentInstance inst = make_instance(solve_args);
    const otpr::SolveOutcome out = otpr::run_solver(inst, req);
    print_outcome(out);
    if (!solve_csv.empty()) otpr::write_csv(solve_csv, {out.record});
    if (!out.verify_violations.empty()) return 5;
    return 0;
  }

  // bench
  std::vector<otpr::RunRecord> rows;
  for (const std::string& solver : bench_solvers) {
    for (const otpr::Index n : bench_ns) {
      for (const double eps : bench_eps) {
        for (int run_id = 0; run_id < bench_runs; ++run_id) {
          const std::uint64_t seed = bench_seed0 + static_cast<std::uint64_t>(run_id);
          InstanceArgs args;
          args.kind = bench_kind;
          args.images = bench_images;
          args.n = n;
          args.seed = seed;
          const otpr::AssignmentInstance inst = make_instance(args);

          otpr::SolveRequest cell;
          cell.solver = solver;
          cell.eps = eps;
          cell.threads = bench_threads;
          cell.no_normalize = bench_no_normalize;
          cell.sinkhorn_max_iters = bench_sinkhorn_iters;
          rows.push_back(otpr::run_solver(inst, cell).record);
        }
      }
    }
  }
  otpr::write_csv(bench_out, rows);
  std::printf("wrote %zu rows to %s\n", rows.size(), bench_out.c_str());
  if (!bench_agg.empty()) {
    otpr::write_aggregate_csv(bench_agg, otpr::aggregate(rows));
    std::printf("wrote aggregates to %s\n", bench_agg.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const otpr::ParameterError& err) {
    std::fprintf(stderr, "parameter error: %s\n", err.what());
    return 2;
  } catch (const otpr::FormatError& err) {
    std::fprintf(stderr, "format error: %s\n", err.what());
    return 3;
  } catch (const otpr::InputError& err) {
    std::fprintf(stderr, "input error: %s\n", err.what());
    return 3;
  } catch (const otpr::NumericalError& err) {
    std::fprintf(stderr, "numerical failure: %s\n", err.what());
    return 4;
  } catch (const otpr::InvariantViolation& err) {
    std::fprintf(stderr, "invariant violation: %s\n", err.what());
    return 5;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}
