#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tnloss/bench.hpp"
#include "tnloss/check.hpp"
#include "tnloss/constraints.hpp"
#include "tnloss/errors.hpp"
#include "tnloss/gradients.hpp"
#include "tnloss/memory_model.hpp"
#include "tnloss/prediction.hpp"
#include "tnloss/sparse.hpp"
#include "tnloss/trainer.hpp"

namespace {

using nlohmann::json;
using namespace tnloss;

struct CommonIn {
  std::string constraints_path;
  std::string labels_path;
  std::string pred_path;
  std::string tnorm = "product";
  bool lenient = false;
  int threads = 1;
};

void add_input_flags(CLI::App* sub, CommonIn& in, bool with_pred) {
  sub->add_option("--constraints", in.constraints_path, "clause file (DIMACS CNF body)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--labels", in.labels_path, "label map file")
      ->required()
      ->check(CLI::ExistingFile);
  if (with_pred)
    sub->add_option("--pred", in.pred_path, "prediction matrix (PMAT binary or CSV)")
        ->required()
        ->check(CLI::ExistingFile);
  sub->add_option("--tnorm", in.tnorm, "t-norm: godel | lukasiewicz | product")
      ->check(CLI::IsMember({"godel", "lukasiewicz", "product"}));
  sub->add_flag("--lenient", in.lenient, "clamp out-of-range confidences instead of rejecting");
  sub->add_option("--threads", in.threads, "row-parallel worker count")->check(CLI::PositiveNumber);
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

int run_loss(const CommonIn& in, double weight, const std::string& grad_out, bool want_grad) {
  const ConstraintSet cs = load_constraints(in.labels_path, in.constraints_path);
  const Matrix<float> p =
      load_prediction(in.pred_path, in.lenient ? DomainCheck::clamp : DomainCheck::strict);
  const TNormKind kind = parse_tnorm(in.tnorm);
  const LossResult<float> r =
      sparse_loss(cs, p, kind, want_grad || !grad_out.empty(), in.threads);

  json out{{"loss", static_cast<double>(r.loss)},
           {"weighted_loss", weight * static_cast<double>(r.loss)},
           {"weight", weight},
           {"tnorm", in.tnorm},
           {"d", p.rows()},
           {"n_labels", cs.n_labels()},
           {"n_constraints", cs.n_constraints()}};
  if (!grad_out.empty()) {
    save_pmat(grad_out, *r.grad);
    out["grad_out"] = grad_out;
  }
  emit(out);
  return 0;
}

int run_fd_check(const CommonIn& in, double step, double margin) {
  const ConstraintSet cs = load_constraints(in.labels_path, in.constraints_path);
  const Matrix<float> p =
      load_prediction(in.pred_path, in.lenient ? DomainCheck::clamp : DomainCheck::strict);
  const FDReport r = finite_diff_check(cs, p.cast<double>(), parse_tnorm(in.tnorm), step, margin);
  emit(json{{"max_abs_error", r.max_abs_error},
            {"max_rel_error", r.max_rel_error},
            {"num_skipped_nonsmooth", r.num_skipped_nonsmooth},
            {"num_checked", r.num_checked},
            {"step_size", r.step_size}});
  return 0;
}

int run_equiv_check(const CheckConfig& config, const std::string& replay_dir) {
  const CheckReport r = run_check(config);
  json out{{"trials", r.trials},
           {"max_abs_dev_single", r.max_abs_dev_single},
           {"max_abs_dev_double", r.max_abs_dev_double},
           {"tolerance_single", config.tol_single},
           {"tolerance_double", config.tol_double},
           {"pass", r.pass}};
  if (r.failure) out["replay"] = write_replay(*r.failure, replay_dir);
  emit(out);
  return r.pass ? 0 : 1;
}

int run_bench(SweepConfig config, const std::string& path_sel, const std::string& out_path) {
  config.run_dense = path_sel != "sparse";
  config.run_sparse = path_sel != "dense";
  const std::vector<BenchRecord> records = run_sweep(config);
  const std::string csv = emit_csv(records);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw parse_error("cannot open output file " + out_path);
    out << csv;
  }
  std::cout << csv;
  return 0;
}

int run_estimate(std::uint64_t d, std::uint64_t n_constraints, std::uint64_t n_labels,
                 std::uint64_t elem_bytes, std::uint64_t aux_factor, std::uint64_t budget) {
  const MemoryModel m = estimate(d, n_constraints, n_labels, elem_bytes, aux_factor);
  json out{{"d", m.d},
           {"n_constraints", m.n_constraints},
           {"n_labels", m.n_labels},
           {"elem_bytes", m.elem_bytes},
           {"sparse_aux_factor", m.sparse_aux_factor},
           {"dense_single_tensor_bytes", m.dense_single_tensor_bytes},
           {"dense_single_tensor_gib", to_gib(m.dense_single_tensor_bytes)},
           {"dense_total_bytes", m.dense_total_bytes},
           {"dense_total_gib", to_gib(m.dense_total_bytes)},
           {"sparse_goal_bytes", m.sparse_goal_bytes},
           {"sparse_goal_gib", to_gib(m.sparse_goal_bytes)},
           {"sparse_total_bytes", m.sparse_total_bytes},
           {"sparse_total_gib", to_gib(m.sparse_total_bytes)}};
  if (budget > 0) {
    out["budget_bytes"] = budget;
    out["dense_crossover_n_constraints"] =
        dense_crossover_constraints(d, n_labels, elem_bytes, budget);
  }
  emit(out);
  return 0;
}

struct TrainDemoOpts {
  CommonIn in;
  double weight = 10.0;
  int warmup_epochs = -1;  // -1: one third of epochs
  int epochs = 120;
  double learning_rate = 1.0;
  double threshold = 0.5;
  double unlabelled_frac = 0.1;
  double labelled_frac = 0.1;
  std::size_t pool = 400;
  std::size_t features = 16;
  std::uint64_t seed = 1;
  std::string report_path;
};

int run_train_demo(const TrainDemoOpts& opts) {
  ConstraintSet cs = load_constraints(opts.in.labels_path, opts.in.constraints_path);
  const std::size_t n_labels = cs.n_labels();
  TaskSizes sizes;
  sizes.n_labelled =
      std::max<std::size_t>(1, static_cast<std::size_t>(opts.labelled_frac * opts.pool + 0.5));
  sizes.n_unlabelled = static_cast<std::size_t>(opts.unlabelled_frac * opts.pool + 0.5);
  sizes.n_eval = opts.pool;
  const SyntheticTask task = make_task(opts.seed, n_labels, opts.features, sizes, std::move(cs));

  TrainConfig config;
  config.kind = parse_tnorm(opts.in.tnorm);
  config.logic_weight = opts.weight;
  config.epochs = opts.epochs;
  config.warmup_epochs = opts.warmup_epochs < 0 ? opts.epochs / 3 : opts.warmup_epochs;
  config.learning_rate = opts.learning_rate;
  config.threshold = opts.threshold;
  config.seed = opts.seed;

  const TrainResult r = train(task, config);
  json out{{"config",
            json{{"tnorm", opts.in.tnorm},
                 {"weight", config.logic_weight},
                 {"warmup_epochs", config.warmup_epochs},
                 {"epochs", config.epochs},
                 {"learning_rate", config.learning_rate},
                 {"threshold", config.threshold},
                 {"seed", config.seed},
                 {"n_labelled", sizes.n_labelled},
                 {"n_unlabelled", sizes.n_unlabelled},
                 {"n_eval", sizes.n_eval},
                 {"n_features", opts.features},
                 {"n_labels", n_labels}}},
           {"violation_rate", r.report.violation_rate},
           {"mean_ap", r.report.mean_ap},
           {"per_label_ap", r.report.per_label_ap},
           {"eval_bce", r.report.eval_bce},
           {"eval_logic_loss", r.report.eval_logic_loss},
           {"final_bce", r.bce_curve.empty() ? 0.0 : r.bce_curve.back()},
           {"final_logic", r.logic_curve.empty() ? 0.0 : r.logic_curve.back()},
           {"logic_invocations", r.logic_invocations},
           {"bce_curve", r.bce_curve},
           {"logic_curve", r.logic_curve}};
  if (!opts.report_path.empty()) {
    std::ofstream report(opts.report_path, std::ios::binary);
    if (!report) throw parse_error("cannot open report file " + opts.report_path);
    report << out.dump(2) << "\n";
  }
  emit(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"t-norm logical-constraint losses over prediction matrices"};
  app.require_subcommand(1);
  int exit_code = 0;

  // loss
  CommonIn loss_in;
  double loss_weight = 10.0;
  std::string loss_grad_out;
  CLI::App* loss_cmd = app.add_subcommand("loss", "evaluate the constraint loss on a prediction matrix");
  add_input_flags(loss_cmd, loss_in, /*with_pred=*/true);
  loss_cmd->add_option("--weight", loss_weight, "external loss weight w");
  loss_cmd->add_option("--grad-out", loss_grad_out, "write dL/dP to this PMAT file");
  loss_cmd->callback([&] { exit_code = run_loss(loss_in, loss_weight, loss_grad_out, false); });

  // grad
  CommonIn grad_in;
  double grad_weight = 10.0;
  std::string grad_out;
  bool fd_check = false;
  double fd_step = 1e-4, fd_margin = 1e-3;
  CLI::App* grad_cmd = app.add_subcommand("grad", "evaluate the loss gradient (or verify it numerically)");
  add_input_flags(grad_cmd, grad_in, /*with_pred=*/true);
  grad_cmd->add_option("--weight", grad_weight, "external loss weight w");
  grad_cmd->add_option("--grad-out", grad_out, "write dL/dP to this PMAT file");
  grad_cmd->add_flag("--fd-check", fd_check, "compare against central finite differences");
  grad_cmd->add_option("--step", fd_step, "finite-difference step");
  grad_cmd->add_option("--margin", fd_margin, "nonsmooth-boundary margin");
  grad_cmd->callback([&] {
    exit_code = fd_check ? run_fd_check(grad_in, fd_step, fd_margin)
                         : run_loss(grad_in, grad_weight, grad_out, true);
  });

  // check
  CheckConfig check_config;
  std::string replay_dir = "check_failure";
  CLI::App* check_cmd = app.add_subcommand("check", "randomized dense/sparse equivalence check");
  check_cmd->add_option("--trials", check_config.trials, "random instances to draw")
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--max-d", check_config.max_d, "maximum rows")->check(CLI::PositiveNumber);
  check_cmd->add_option("--max-labels", check_config.max_labels, "maximum labels")
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--max-constraints", check_config.max_constraints, "maximum clauses")
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--seed", check_config.seed, "RNG seed");
  check_cmd->add_option("--replay-dir", replay_dir, "where to dump a failing instance");
  check_cmd->callback([&] { exit_code = run_equiv_check(check_config, replay_dir); });

  // bench
  SweepConfig sweep;
  std::string bench_path = "both";
  std::string bench_tnorm = "product";
  std::string bench_out;
  bool no_estimate = false;
  CLI::App* bench_cmd = app.add_subcommand("bench", "peak-allocation sweep over constraint counts");
  bench_cmd->add_option("--path", bench_path, "dense | sparse | both")
      ->check(CLI::IsMember({"dense", "sparse", "both"}));
  bench_cmd->add_option("--tnorm", bench_tnorm, "t-norm: godel | lukasiewicz | product")
      ->check(CLI::IsMember({"godel", "lukasiewicz", "product"}));
  bench_cmd->add_option("--d", sweep.d, "prediction rows per pass")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--labels-n", sweep.n_labels, "label count")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--constraint-counts", sweep.constraint_counts, "sweep points")
      ->delimiter(',');
  bench_cmd->add_option("--iters", sweep.iterations, "passes per point")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--budget-bytes", sweep.budget_bytes, "allocation budget per point");
  bench_cmd->add_flag("--no-estimate", no_estimate, "fail on over-budget points instead of estimating");
  bench_cmd->add_option("--aux-factor", sweep.sparse_aux_factor, "sparse model constant k");
  bench_cmd->add_option("--seed", sweep.seed, "RNG seed");
  bench_cmd->add_option("--threads", sweep.threads, "row-parallel worker count")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_out, "also write the CSV here");
  bench_cmd->callback([&] {
    sweep.kind = parse_tnorm(bench_tnorm);
    sweep.estimate_fallback = !no_estimate;
    exit_code = run_bench(sweep, bench_path, bench_out);
  });

  // estimate
  std::uint64_t est_d = 550000, est_npi = 200, est_nl = 50, est_eb = 4, est_k = 4, est_budget = 0;
  CLI::App* est_cmd = app.add_subcommand("estimate", "analytic memory model for a configuration");
  est_cmd->add_option("--d", est_d, "prediction rows");
  est_cmd->add_option("--constraints-n", est_npi, "constraint count");
  est_cmd->add_option("--labels-n", est_nl, "label count");
  est_cmd->add_option("--elem-bytes", est_eb, "bytes per element");
  est_cmd->add_option("--aux-factor", est_k, "sparse model constant k");
  est_cmd->add_option("--budget-bytes", est_budget, "also report the dense crossover for this budget");
  est_cmd->callback([&] { exit_code = run_estimate(est_d, est_npi, est_nl, est_eb, est_k, est_budget); });

  // train-demo
  TrainDemoOpts demo;
  CLI::App* demo_cmd = app.add_subcommand("train-demo", "toy constrained-training demonstration");
  add_input_flags(demo_cmd, demo.in, /*with_pred=*/false);
  demo_cmd->add_option("--weight", demo.weight, "logic loss weight w");
  demo_cmd->add_option("--warmup-epochs", demo.warmup_epochs, "epochs before the logic loss activates (-1: epochs/3)");
  demo_cmd->add_option("--epochs", demo.epochs, "training epochs")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--learning-rate", demo.learning_rate, "gradient-descent step size");
  demo_cmd->add_option("--threshold", demo.threshold, "prediction threshold theta");
  demo_cmd->add_option("--unlabelled-frac", demo.unlabelled_frac, "unlabelled share of the data pool");
  demo_cmd->add_option("--labelled-frac", demo.labelled_frac, "labelled share of the data pool");
  demo_cmd->add_option("--pool", demo.pool, "data pool size (eval set size)");
  demo_cmd->add_option("--features", demo.features, "feature dimension")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--seed", demo.seed, "task and training seed");
  demo_cmd->add_option("--report", demo.report_path, "also write the report JSON here");
  demo_cmd->callback([&] { exit_code = run_train_demo(demo); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
