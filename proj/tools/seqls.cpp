// seqls: run, sweep, diagnose and plot sequential policy-learning experiments.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "seqls/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sequential off-policy learning experiments"};
  app.require_subcommand(1);

  seqls::CommandOptions opts;
  std::string out_dir;
  std::uint64_t seed_base = 0;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "experiment config file")->required();
    cmd->add_option("--out", out_dir, "output directory (SEQOPS_OUT takes precedence)");
    cmd->add_option("--jobs", opts.jobs, "concurrent seeds")->check(CLI::PositiveNumber);
    cmd->add_option("--seed-base", seed_base, "first seed");
  };

  auto* run = app.add_subcommand("run", "run the configured learner over all seeds");
  add_common(run);

  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "sweep one axis and tabulate mean final risk");
  add_common(sweep);
  sweep->add_option("--axis", axis, "k, alpha, lambda or algorithm")->required();
  sweep->add_option("--values", values, "axis values")->required()->delimiter(',');

  auto* diagnose = app.add_subcommand("diagnose", "theory diagnostics for the stored traces of `run`");
  add_common(diagnose);

  std::string trace_glob;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "SVG chart of risk per round");
  plot->add_option("--traces", trace_glob, "trace file pattern, e.g. out/trace_*.jsonl")->required();
  plot->add_option("--out", plot_out, "SVG file to write")->required();

  CLI11_PARSE(app, argc, argv);

  if (!out_dir.empty()) opts.out_dir = out_dir;
  for (auto* cmd : {run, sweep, diagnose}) {
    if (cmd->parsed() && cmd->count("--seed-base")) opts.seed_base = seed_base;
  }

  if (run->parsed()) return seqls::cmd_run(opts, std::cout, std::cerr);
  if (sweep->parsed()) return seqls::cmd_sweep(opts, axis, values, std::cout, std::cerr);
  if (diagnose->parsed()) return seqls::cmd_diagnose(opts, std::cout, std::cerr);
  return seqls::cmd_plot(trace_glob, plot_out, std::cout, std::cerr);
}
