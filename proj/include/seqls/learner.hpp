#pragma once

// Sequential deploy / collect / retrain loops.
//
//   seq_ls      retrain on all data with the LS objective, prior fixed at pi_0
//   seq_adj_ls  same with the adjusted-LS objective (lambda < 1)
//   noniid_ls   latest batch only, prior chained to the previous posterior
//   scrm        geometric batch sizes, latest batch only, clipped IPS + variance penalty
//   batch_ls    one batch of N interactions from pi_0, one fit

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqls/env.hpp"
#include "seqls/estimators.hpp"
#include "seqls/objectives.hpp"
#include "seqls/optimizer.hpp"
#include "seqls/policy.hpp"

namespace seqls {

enum class Algorithm { seq_ls, seq_adj_ls, noniid_ls, scrm, batch_ls };

std::string to_string(Algorithm algorithm);
/// Throws std::invalid_argument for unknown names.
Algorithm parse_algorithm(const std::string& name);

enum class LambdaRuleKind { fixed, inv_sqrt_m, inv_sqrt_km, thm44, cor45 };

std::string to_string(LambdaRuleKind kind);
LambdaRuleKind parse_lambda_rule(const std::string& name);

struct LambdaRule {
  LambdaRuleKind kind = LambdaRuleKind::inv_sqrt_m;
  double value = 0.1;  // fixed rule
  double alpha = 0.0;  // rate exponent of the accelerated schedules, in [0, 1)
  // Problem constants of the accelerated schedules. gamma <= 0 asks the
  // learner to derive it from the environment oracle; beta1/beta2 <= 0 ask it
  // to derive them from the batch schedule.
  double gamma = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
};

struct LambdaAux {
  double gamma = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::size_t cumulative = 0;  // N_k; 0 means (k + 1) m
};

struct LambdaChoice {
  double lambda = 0.0;
  bool clamped = false;
};

inline constexpr double kAdjustedLambdaCap = 0.999;

/// Scheduled lambda for batch size m at round k (0-based). With `adjusted`
/// set, values >= 1 are clamped to kAdjustedLambdaCap and flagged.
LambdaChoice lambda_schedule(const LambdaRule& rule, std::size_t m, int k, const LambdaAux& aux = {},
                             bool adjusted = false);

/// n_0 = ceil(N / 2^k), n_j = n_0 2^j. The total can exceed N by less than 2^k.
std::vector<std::size_t> scrm_batch_sizes(std::size_t total, int rounds);

/// N split into `rounds` near-equal batches (earlier batches take the remainder).
std::vector<std::size_t> uniform_batch_sizes(std::size_t total, int rounds);

struct RoundRecord {
  static constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

  int round = 0;
  std::size_t n_j = 0;       // interactions collected by pi_j (0 for the final policy)
  std::size_t N_k = 0;       // size of the data pi_j was fitted on (0 for pi_0)
  double lambda = kNone;     // lambda used to fit pi_j
  double true_risk = 0.0;    // oracle R(pi_j)
  double emp_risk = kNone;   // training estimator of pi_j on its fitting data
  double kl = kNone;         // KL(Q_j || prior used to fit it)
  double bound = kNone;      // certified bound reported for pi_j
  double cstar = 0.0;        // min over eval contexts of pi_j(a*(x)|x)
  double wall_ms = 0.0;
  bool lambda_clamped = false;
};

/// Called after each fit with the data the posterior was fitted on.
struct RoundEvent {
  int round = 0;
  const LogDataset* data = nullptr;  // cumulative log of every interaction so far
  const GaussianPolicyParams* prior = nullptr;
  const GaussianPolicyParams* posterior = nullptr;
};
using RoundObserver = std::function<void(const RoundEvent&)>;

struct LearnerConfig {
  Algorithm algorithm = Algorithm::seq_ls;
  int rounds = 10;
  std::size_t total_budget = 20000;
  // Explicit n_j; overrides the uniform split when non-empty.
  std::vector<std::size_t> batch_sizes;
  LambdaRule lambda_rule;
  OptimizerConfig optimizer{.lr = 1e-3, .epochs = 10, .batch_size = 32};
  PropensityConfig propensity;
  int risk_nodes = 64;
  GaussianPolicyParams prior_policy;
  std::uint64_t seed = 0;
  bool warm_start = true;
  double delta = 0.05;
  double crm_max_weight = 10.0;
  bool evaluate_bounds = true;
  // Evaluates the objective at the initial point too and records a warning
  // when the fit ends more than 1e-3 above it.
  bool monitor_descent = false;
  bool record_wall_time = true;
  RoundObserver observer;

  void validate() const;
};

struct RunTrace {
  Algorithm algorithm = Algorithm::seq_ls;
  std::vector<RoundRecord> rounds;            // k_max + 1 records, pi_0 .. pi_kmax
  std::vector<GaussianPolicyParams> policies;  // pi_0 .. pi_kmax
  LogDataset data;                             // every logged interaction
  std::vector<std::string> warnings;

  double final_risk() const { return rounds.back().true_risk; }
};

/// Per-round batch sizes the algorithm will use.
std::vector<std::size_t> batch_schedule(const LearnerConfig& cfg);

RunTrace run_seq_ls(const Environment& env, const LearnerConfig& cfg);
RunTrace run_seq_adj_ls(const Environment& env, const LearnerConfig& cfg);
RunTrace run_noniid_ls(const Environment& env, const LearnerConfig& cfg);
RunTrace run_scrm(const Environment& env, const LearnerConfig& cfg);
RunTrace run_batch_ls(const Environment& env, const LearnerConfig& cfg);
/// Dispatches on cfg.algorithm.
RunTrace run_learner(const Environment& env, const LearnerConfig& cfg);

/// gamma = 3 / (Delta_u (1 - u) C*) with C* the coverage of `policy`.
double oracle_gamma(const Environment& env, const GaussianPolicyParams& policy, double u = 0.0,
                    int nodes = 64);

/// JSON lines: round, n_j, N_k, lambda, true_risk, emp_risk, kl, bound, cstar,
/// wall_ms, plus algorithm. Missing values are written as null.
void write_trace_jsonl(std::ostream& out, const RunTrace& trace);
struct TraceFile {
  std::string algorithm;
  std::vector<RoundRecord> rounds;
};
/// Throws std::runtime_error on malformed input.
TraceFile read_trace_jsonl(std::istream& in);

}  // namespace seqls
