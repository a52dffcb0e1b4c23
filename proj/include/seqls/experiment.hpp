#pragma once

// Experiment orchestration behind the command-line tool: seeded runs,
// sweeps, per-round diagnostics and SVG charts. Every command returns a
// process exit code and writes human-readable progress to `log`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seqls/config.hpp"
#include "seqls/env.hpp"
#include "seqls/learner.hpp"

namespace seqls {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitBadTrace = 3;

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;  // overrides run.out
  int jobs = 1;
  std::optional<std::uint64_t> seed_base;        // first seed; default 0
};

/// Output directory: SEQOPS_OUT, then --out, then the config's run.out.
std::filesystem::path resolve_out_dir(const CommandOptions& opts, const ExperimentConfig& cfg);

Environment build_environment(const ExperimentConfig& cfg);
/// pi_0: uniform when alpha = 0, else the scaled supervised fit.
GaussianPolicyParams build_initial_policy(const ExperimentConfig& cfg, const Environment& env);

/// Runs `seeds` independent replicas of `cfg.learner` with up to `jobs` threads.
/// Results are ordered like `seeds` regardless of scheduling.
std::vector<RunTrace> run_replicas(const Environment& env, const LearnerConfig& cfg,
                                   const std::vector<std::uint64_t>& seeds, int jobs);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};
SummaryStats summarize(const std::vector<double>& values);

std::string trace_file_name(std::uint64_t seed);
std::string checkpoint_file_name(std::uint64_t seed, int round);

int cmd_run(const CommandOptions& opts, std::ostream& log, std::ostream& err);

/// axis in {k, alpha, lambda, algorithm}; writes sweep_<axis>.csv.
int cmd_sweep(const CommandOptions& opts, const std::string& axis, const std::vector<std::string>& values,
              std::ostream& log, std::ostream& err);

/// Snapshots and lemma reports for every stored trace of `cmd_run`.
int cmd_diagnose(const CommandOptions& opts, std::ostream& log, std::ostream& err);

struct PlotSeries {
  std::string label;
  std::vector<std::vector<double>> runs;  // true_risk per round, one vector per trace
};

/// Self-contained SVG: per-series mean polyline and min-max band.
std::string render_risk_chart(const std::vector<PlotSeries>& series, const std::string& title);

/// Matches `pattern` ('*' and '?' wildcards in the file name part).
std::vector<std::filesystem::path> match_traces(const std::string& pattern);

int cmd_plot(const std::string& trace_glob, const std::filesystem::path& out_path, std::ostream& log,
             std::ostream& err);

}  // namespace seqls
