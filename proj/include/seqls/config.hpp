#pragma once

// Plain-text experiment configuration.
//
//   # comment
//   [section]
//   key = value
//   list = [1, 2, 3]
//
// Keys are addressed as "section.key". Unknown sections or keys are errors,
// so a typo never silently falls back to a default.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqls/env.hpp"
#include "seqls/learner.hpp"
#include "seqls/policy.hpp"

namespace seqls {

/// Invalid configuration; `key()` names the offending "section.key".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : "config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Parsed key-value document. Lookups mark keys as consumed.
class ConfigDocument {
 public:
  static ConfigDocument parse(std::istream& in);
  static ConfigDocument load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> text(const std::string& key) const;
  std::optional<std::vector<std::string>> list(const std::string& key) const;

  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;

  /// Throws ConfigError naming the first key nobody read.
  void reject_unused() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

struct EnvBlock {
  int d = 20;
  int num_actions = 10;
  double eps = 0.2;
  std::uint64_t seed = 0;
  int num_eval = kDefaultEvalContexts;
  std::string data_path;              // feature/label file; empty = synthetic
  std::vector<double> drift_step;     // per-round mean shift; empty = no drift
  int drift_horizon = 0;              // 0 = learner rounds
};

struct PolicyBlock {
  double sigma = 1.0;
  double alpha = 0.0;                 // 0 = uniform pi_0
  std::size_t supervised_size = 1000;
  PropensityConfig propensity;
};

struct RunBlock {
  int num_seeds = 1;
  std::string out_dir = "out";
  bool emit_plots = false;
  bool dump_logs = false;
  bool checkpoints = true;
  bool wall_time = false;             // wall_ms makes traces non-reproducible
  double diagnose_u = 0.0;
};

struct ExperimentConfig {
  EnvBlock env;
  PolicyBlock policy;
  LearnerConfig learner;              // prior_policy is filled in per run
  std::vector<Algorithm> algorithms;  // sweep set; defaults to {learner.algorithm}
  RunBlock run;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace seqls
