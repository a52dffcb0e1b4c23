#pragma once

// Contextual-bandit environments built from a multiclass problem: the
// optimal action of a context is its class label, and playing action `a`
// yields cost -1 with probability eps + 1[a = a*(x)](1 - 2 eps), else 0.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace seqls {

/// One logged round of interaction.
struct LoggedInteraction {
  Eigen::VectorXd context;
  int action = 0;
  double cost = 0.0;
  double logged_propensity = 1.0;
  int round = 0;
};

/// Per-round translation of the context distribution. A default-constructed
/// schedule is the identity and is defined for every round.
class DriftSchedule {
 public:
  DriftSchedule() = default;

  /// Mean shift k * step at round k, defined on rounds [0, horizon).
  static DriftSchedule linear(Eigen::VectorXd step, int horizon);
  /// Explicit shift per round, defined on [0, shifts.size()).
  static DriftSchedule from_shifts(std::vector<Eigen::VectorXd> shifts);

  bool is_identity() const { return !bounded_ && shifts_.empty(); }
  /// Number of rounds the schedule covers; -1 when unbounded.
  int horizon() const { return bounded_ ? static_cast<int>(shifts_.size()) : -1; }

  /// Mean shift at `round` for contexts of dimension `dim`.
  /// Throws std::out_of_range outside the schedule's domain.
  Eigen::VectorXd shift(int round, int dim) const;

 private:
  bool bounded_ = false;
  std::vector<Eigen::VectorXd> shifts_;
};

/// Immutable environment. Copies share the label model.
class Environment {
 public:
  int dim() const { return dim_; }
  int num_actions() const { return num_actions_; }
  double noise() const { return eps_; }

  /// a*(x): the label of the context.
  int optimal_action(const Eigen::VectorXd& x) const;

  /// Draws a context from the round-`round` distribution.
  Eigen::VectorXd sample_context(std::mt19937_64& rng, int round = 0) const;

  /// Fixed held-out contexts used by every oracle (one per row).
  const Eigen::MatrixXd& eval_contexts() const { return eval_contexts_; }
  /// a*(x) for each eval context.
  std::span<const int> eval_optimal_actions() const { return eval_optimal_; }
  int num_eval() const { return static_cast<int>(eval_contexts_.rows()); }

  const DriftSchedule& drift() const { return drift_; }

  /// Anchor vectors of the linear label model (empty for file-backed envs).
  const Eigen::MatrixXd& anchors() const;

  struct LabelModel;

 private:
  friend Environment make_synthetic_env(int, int, double, std::uint64_t, int);
  friend Environment drift_context_sampler(const Environment&, DriftSchedule);
  friend Environment load_feature_label_env(const std::filesystem::path&, double, int, double,
                                            std::uint64_t);

  int dim_ = 0;
  int num_actions_ = 0;
  double eps_ = 0.0;
  std::shared_ptr<const LabelModel> labels_;
  Eigen::MatrixXd eval_contexts_;
  std::vector<int> eval_optimal_;
  DriftSchedule drift_;
};

inline constexpr int kDefaultEvalContexts = 2000;

/// Synthetic env: K random unit anchors in R^d, a*(x) = argmax anchor . x,
/// standard Gaussian contexts. Deterministic in `seed`.
Environment make_synthetic_env(int d, int k, double eps, std::uint64_t seed,
                               int num_eval = kDefaultEvalContexts);

/// -1 with probability eps + 1[a = a*(x)](1 - 2 eps), else 0.
double sample_cost(const Environment& env, const Eigen::VectorXd& x, int a, std::mt19937_64& rng);

/// c(a, x) in [-1, 0].
double expected_cost(const Environment& env, const Eigen::VectorXd& x, int a);

/// Same as expected_cost when the optimal action is already known.
inline double expected_cost_given_optimal(double eps, int optimal, int a) {
  return a == optimal ? -(1.0 - eps) : -eps;
}

/// R(pi) = mean over eval contexts of sum_a pi(a|x) c(a, x). `propensities`
/// has one row per eval context and one column per action; each row must sum
/// to one within `tol`.
double true_risk(const Environment& env, const Eigen::MatrixXd& propensities, double tol = 1e-6);

/// R(pi) from the mass each eval context puts on its optimal action. Exact for
/// the binary cost model: c(a,x) only takes two values.
double true_risk_from_optimal_mass(const Environment& env, std::span<const double> optimal_mass);

/// Copy of `env` whose context sampler follows `schedule`; cost model unchanged.
Environment drift_context_sampler(const Environment& env, DriftSchedule schedule);

/// Env backed by a "f_1,...,f_d,label" file (0-based integer labels).
/// `num_actions` = 0 infers K = max label + 1 (at least 2). A fraction
/// `eval_fraction` of the rows (rounded up) is held out for oracles.
Environment load_feature_label_env(const std::filesystem::path& path, double eps,
                                   int num_actions = 0, double eval_fraction = 0.2,
                                   std::uint64_t split_seed = 0);

/// Writes "f_1,...,f_d,label" rows.
void write_feature_label_file(const std::filesystem::path& path, const Eigen::MatrixXd& features,
                              std::span<const int> labels);

/// Logged-interaction dump: header row, then round,action,cost,logged_propensity,x_1..x_d.
void write_log_dump(std::ostream& out, std::span<const LoggedInteraction> records);
std::vector<LoggedInteraction> read_log_dump(std::istream& in);

}  // namespace seqls
