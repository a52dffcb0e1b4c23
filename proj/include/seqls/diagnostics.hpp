#pragma once

// Simulation-only oracles for the theory quantities: pseudo-variance, the
// L term of the adjusted estimator, optimal-action coverage, the margin
// Delta_u and the acceleration constant gamma. Policies are given as
// propensity tables over the env's eval contexts (rows) and actions (cols).
// Costs are binary, so E[c^2 | x, a] = -c(a, x).

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seqls/env.hpp"
#include "seqls/policy.hpp"

namespace seqls {

/// pi*(a|x) = 1[a = a*(x)] over the eval contexts.
Eigen::MatrixXd optimal_policy_table(const Environment& env);
Eigen::MatrixXd uniform_policy_table(const Environment& env);

/// S(target) = E_x sum_a target(a|x) E[c^2|x,a] / behavior(a|x).
/// Throws std::domain_error if behavior is zero where target is positive.
double pseudo_variance(const Environment& env, const Eigen::MatrixXd& target, const Eigen::MatrixXd& behavior);

/// L(target, behavior) = E_x [ E_behavior[c^2] + E_target[c^2 (1/behavior(a|x) - 2)] ].
double l_term(const Environment& env, const Eigen::MatrixXd& target, const Eigen::MatrixXd& behavior);

/// C* = min over eval contexts of policy(a*(x)|x).
double coverage_cstar(const Environment& env, const Eigen::MatrixXd& policy);
double coverage_cstar(const Environment& env, std::span<const double> optimal_mass);

/// min_{a != a*(x)} c(a,x) - c(a*(x),x) for every eval context.
std::vector<double> min_gaps(const Environment& env);

/// Largest t with P(gap >= t) >= 1 - u under the empirical gap distribution.
double delta_u_from_gaps(std::span<const double> gaps, double u);
double delta_u(const Environment& env, double u);

struct GammaValue {
  double gamma_k = 0.0;   // 1 + (1/4 + 1/C*) / (Delta_u (1 - u))
  double uniform = 0.0;   // 3 / (Delta_u (1 - u) C*)
};

/// Throws std::domain_error when Delta_u or C* is zero.
GammaValue gamma_from(double cstar, double delta_u_value, double u);
GammaValue gamma_k(const Environment& env, const Eigen::MatrixXd& policy, double u);

struct LemmaReport {
  bool skipped = false;
  std::string reason;
  double lhs = 0.0;      // L(pi*, pi_k)
  double rhs = 0.0;      // gamma_k (R(pi_k) - R(pi*))
  double gamma = 0.0;
  double suboptimality = 0.0;
  double cstar = 0.0;
  double delta_u = 0.0;
  bool holds = false;
};

/// L(pi*, pi_k) <= gamma_k (R(pi_k) - R(pi*)); both sides from the oracles.
LemmaReport check_acceleration_lemma(const Environment& env, const Eigen::MatrixXd& policy, double u);

struct TheorySnapshot {
  int round = 0;
  double pseudo_variance = 0.0;  // S_j(pi*)
  double l_term = 0.0;           // L(pi*, pi_j)
  double cstar = 0.0;
  double delta_u = 0.0;
  double gamma = 0.0;
  double suboptimality = 0.0;    // R(pi_j) - R(pi*)
  double u = 0.0;
};

TheorySnapshot theory_snapshot(const Environment& env, const Eigen::MatrixXd& policy, int round, double u = 0.0);

/// One JSON object per line.
void write_snapshot_jsonl(std::ostream& out, const TheorySnapshot& snapshot);
void write_lemma_jsonl(std::ostream& out, int round, const LemmaReport& report);

}  // namespace seqls
