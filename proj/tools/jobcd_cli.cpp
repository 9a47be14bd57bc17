// jobcd: run and compare solvers for smooth problems under X^T J X = J.

#include "jobcd/jobcd.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

struct Options {
  std::string problem = "hevp";
  std::string solver = "gs";
  std::vector<std::string> solvers{"gs", "umcm", "admm"};
  std::string q_mode;
  std::string varsigma = "auto";
  std::string data_format;
  jobcd::RunSpec spec;
  std::optional<double> theta, time_limit, step, switch_prob;
  std::optional<std::size_t> max_iters;
  std::optional<jobcd::Index> manifold_p, batch_large, batch_small;
  std::optional<std::string> data, targets, trace, summary;
  std::optional<std::string> config;
  bool no_vr = false;
};

// Fill options that were not given on the command line from an INI/TOML file.
// Keys may be bare or live in a section named after the subcommand.
void apply_config(CLI::App& sub, const std::string& path) {
  const std::vector<CLI::ConfigItem> items = CLI::ConfigINI().from_file(path);
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub.get_name())) continue;
    if (item.name == "config") throw jobcd::Error("config files cannot include other config files");
    CLI::Option* op = sub.get_option_no_throw("--" + item.name);
    if (op == nullptr) throw jobcd::Error("unknown key '" + item.name + "' in " + path);
    if (op->count() > 0) continue;
    op->add_result(item.inputs);
    op->run_callback();
  }
}

void add_common(CLI::App& app, Options& o) {
  app.add_option("--config", o.config, "key=value file; command-line flags take precedence");
  app.add_option("--problem", o.problem, "hevp | hspp | quadratic")->capture_default_str();
  app.add_option("--n", o.spec.n, "matrix size n")->capture_default_str();
  app.add_option("--p", o.spec.p, "number of +1 entries in J")->capture_default_str();
  app.add_option("--m", o.spec.m, "number of data rows")->capture_default_str();
  app.add_option("--seed", o.spec.seed, "seed for data, initialization and sampling")->capture_default_str();
  app.add_option("--theta", o.theta, "proximal weight theta > 0");
  app.add_option("--varsigma", o.varsigma, "scalar curvature, or 'auto'")->capture_default_str();
  app.add_option("--q-mode", o.q_mode, "gs curvature: exact | scalar");
  app.add_option("--time-limit", o.time_limit, "budget in seconds");
  app.add_option("--max-iters", o.max_iters, "iteration cap");
  app.add_option("--alpha", o.spec.alpha, "hspp manifold radius")->capture_default_str();
  app.add_option("--manifold-p", o.manifold_p, "hspp manifold signature (default: p)");
  app.add_option("--data", o.data, "m x n data matrix (csv or MatrixMarket)");
  app.add_option("--targets", o.targets, "hspp m x m target distances");
  app.add_option("--data-format", o.data_format, "csv | matrixmarket (default: from extension)");
  app.add_option("--trace-every", o.spec.trace_every, "record every k-th iteration")->capture_default_str();
  app.add_flag("--omit-timing", o.spec.omit_timing, "write 0 in timing columns");
  app.add_option("--threads", o.spec.threads, "vrj worker threads (0: hardware count)")->capture_default_str();
  app.add_flag("--no-vr", o.no_vr, "vrj: use exact gradients");
  app.add_option("--batch-large", o.batch_large, "vrj large batch b");
  app.add_option("--batch-small", o.batch_small, "vrj small batch b'");
  app.add_option("--switch-prob", o.switch_prob, "vrj refresh probability p");
  app.add_option("--penalty", o.spec.penalty, "baseline penalty lambda")->capture_default_str();
  app.add_option("--step", o.step, "baseline step size eta");
  app.add_option("--dual-step", o.spec.dual_step, "admm dual step rho")->capture_default_str();
}

jobcd::RunSpec finish(Options& o, const std::string& solver) {
  jobcd::RunSpec s = o.spec;
  s.problem = jobcd::parse_problem(o.problem);
  s.solver = jobcd::parse_solver(solver);
  s.theta = o.theta;
  s.time_limit = o.time_limit;
  s.max_iters = o.max_iters;
  s.manifold_p = o.manifold_p;
  s.data_path = o.data;
  s.targets_path = o.targets;
  s.trace_path = o.trace;
  s.summary_path = o.summary;
  s.batch_large = o.batch_large;
  s.batch_small = o.batch_small;
  s.switch_prob = o.switch_prob;
  s.step = o.step;
  s.vr_enabled = !o.no_vr;
  if (!o.data_format.empty()) s.data_format = jobcd::parse_format(o.data_format);
  if (o.q_mode == "exact") s.q_mode = jobcd::QMode::Exact;
  else if (o.q_mode == "scalar") s.q_mode = jobcd::QMode::Scalar;
  else if (!o.q_mode.empty()) throw jobcd::Error("unknown --q-mode '" + o.q_mode + "'");
  if (o.varsigma != "auto") {
    std::size_t used = 0;
    try {
      s.varsigma = std::stod(o.varsigma, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != o.varsigma.size()) throw jobcd::Error("--varsigma must be a number or 'auto'");
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block coordinate descent under J-orthogonality constraints"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "run one solver and write its trace");
  add_common(*run, o);
  run->add_option("--solver", o.solver, "gs | j | vrj | umcm | admm")->capture_default_str();
  run->add_option("--trace", o.trace, "trace CSV path (default: stdout)");
  run->add_option("--summary", o.summary, "summary CSV path (default: stderr)");

  auto* cmp = app.add_subcommand("compare", "run several solvers from one initialization");
  add_common(*cmp, o);
  cmp->add_option("--solvers", o.solvers, "comma-separated solver list")->delimiter(',')->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (o.config) apply_config(run->parsed() ? *run : *cmp, *o.config);
    if (run->parsed()) {
      const jobcd::RunSpec spec = finish(o, o.solver);
      const jobcd::RunSummary s = jobcd::run_and_write(spec);
      if (!spec.trace_path) jobcd::write_trace(std::cout, s.trace, spec.omit_timing);
      if (!spec.summary_path) jobcd::write_summary(std::cerr, s, spec.omit_timing);
    } else {
      std::vector<jobcd::RunSpec> specs;
      for (const auto& name : o.solvers)
        if (!name.empty()) specs.push_back(finish(o, name));
      jobcd::compare(std::move(specs), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
