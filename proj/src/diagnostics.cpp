#include "seqls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace seqls {

namespace {

void check_table(const Environment& env, const Eigen::MatrixXd& table, const char* what) {
  if (table.rows() != env.num_eval() || table.cols() != env.num_actions()) {
    throw std::invalid_argument(std::string(what) + ": table must be num_eval x K");
  }
}

// E[c^2 | x, a] for binary costs.
inline double second_moment(double eps, int optimal, int a) {
  return -expected_cost_given_optimal(eps, optimal, a);
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

Eigen::MatrixXd optimal_policy_table(const Environment& env) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(env.num_eval(), env.num_actions());
  const auto optimal = env.eval_optimal_actions();
  for (int n = 0; n < env.num_eval(); ++n) t(n, optimal[n]) = 1.0;
  return t;
}

Eigen::MatrixXd uniform_policy_table(const Environment& env) {
  return Eigen::MatrixXd::Constant(env.num_eval(), env.num_actions(), 1.0 / env.num_actions());
}

double pseudo_variance(const Environment& env, const Eigen::MatrixXd& target, const Eigen::MatrixXd& behavior) {
  check_table(env, target, "pseudo_variance");
  check_table(env, behavior, "pseudo_variance");
  const auto optimal = env.eval_optimal_actions();
  double total = 0.0;
  for (int n = 0; n < env.num_eval(); ++n) {
    for (int a = 0; a < env.num_actions(); ++a) {
      const double p = target(n, a);
      if (p == 0.0) continue;
      if (!(behavior(n, a) > 0.0)) throw std::domain_error("pseudo_variance: behavior has no support on target");
      total += p * second_moment(env.noise(), optimal[n], a) / behavior(n, a);
    }
  }
  return total / env.num_eval();
}

double l_term(const Environment& env, const Eigen::MatrixXd& target, const Eigen::MatrixXd& behavior) {
  check_table(env, target, "l_term");
  check_table(env, behavior, "l_term");
  const auto optimal = env.eval_optimal_actions();
  double total = 0.0;
  for (int n = 0; n < env.num_eval(); ++n) {
    for (int a = 0; a < env.num_actions(); ++a) {
      const double m2 = second_moment(env.noise(), optimal[n], a);
      total += behavior(n, a) * m2;
      const double p = target(n, a);
      if (p == 0.0) continue;
      if (!(behavior(n, a) > 0.0)) throw std::domain_error("l_term: behavior has no support on target");
      total += p * m2 * (1.0 / behavior(n, a) - 2.0);
    }
  }
  return total / env.num_eval();
}

double coverage_cstar(const Environment& env, std::span<const double> optimal_mass) {
  if (static_cast<int>(optimal_mass.size()) != env.num_eval()) {
    throw std::invalid_argument("coverage_cstar: one value per eval context");
  }
  return *std::min_element(optimal_mass.begin(), optimal_mass.end());
}

double coverage_cstar(const Environment& env, const Eigen::MatrixXd& policy) {
  check_table(env, policy, "coverage_cstar");
  const auto optimal = env.eval_optimal_actions();
  double best = std::numeric_limits<double>::infinity();
  for (int n = 0; n < env.num_eval(); ++n) best = std::min(best, policy(n, optimal[n]));
  return best;
}

std::vector<double> min_gaps(const Environment& env) {
  const auto optimal = env.eval_optimal_actions();
  const double eps = env.noise();
  std::vector<double> gaps(env.num_eval());
  for (int n = 0; n < env.num_eval(); ++n) {
    const double best = expected_cost_given_optimal(eps, optimal[n], optimal[n]);
    double gap = std::numeric_limits<double>::infinity();
    for (int a = 0; a < env.num_actions(); ++a) {
      if (a != optimal[n]) gap = std::min(gap, expected_cost_given_optimal(eps, optimal[n], a) - best);
    }
    gaps[n] = gap;
  }
  return gaps;
}

double delta_u_from_gaps(std::span<const double> gaps, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("delta_u: u must lie in [0, 1)");
  if (gaps.empty()) throw std::invalid_argument("delta_u: no gaps");
  std::vector<double> sorted(gaps.begin(), gaps.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // The i-th largest gap t has P(gap >= t) >= (i + 1) / n; take the first
  // index reaching 1 - u.
  const double n = static_cast<double>(sorted.size());
  const auto need = static_cast<std::size_t>(std::ceil((1.0 - u) * n - 1e-9));
  const std::size_t idx = std::clamp<std::size_t>(need, 1, sorted.size()) - 1;
  return sorted[idx];
}

double delta_u(const Environment& env, double u) {
  const auto gaps = min_gaps(env);
  return delta_u_from_gaps(gaps, u);
}

GammaValue gamma_from(double cstar, double delta_u_value, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("gamma: u must lie in [0, 1)");
  if (!(delta_u_value > 0.0)) throw std::domain_error("gamma: Delta_u must be > 0");
  if (!(cstar > 0.0)) throw std::domain_error("gamma: C* must be > 0");
  const double margin = delta_u_value * (1.0 - u);
  return {1.0 + (0.25 + 1.0 / cstar) / margin, 3.0 / (margin * cstar)};
}

GammaValue gamma_k(const Environment& env, const Eigen::MatrixXd& policy, double u) {
  return gamma_from(coverage_cstar(env, policy), delta_u(env, u), u);
}

LemmaReport check_acceleration_lemma(const Environment& env, const Eigen::MatrixXd& policy, double u) {
  LemmaReport r;
  r.cstar = coverage_cstar(env, policy);
  r.delta_u = delta_u(env, u);
  if (!(r.delta_u > 0.0)) {
    r.skipped = true;
    r.reason = "Delta_u is zero";
    return r;
  }
  if (!(r.cstar > 0.0)) {
    r.skipped = true;
    r.reason = "policy does not cover the optimal actions (C* = 0)";
    return r;
  }
  const Eigen::MatrixXd star = optimal_policy_table(env);
  r.gamma = gamma_from(r.cstar, r.delta_u, u).gamma_k;
  r.lhs = l_term(env, star, policy);
  r.suboptimality = true_risk(env, policy, 1e-6) - true_risk(env, star);
  r.rhs = r.gamma * r.suboptimality;
  // Both sides vanish at the optimum; allow for rounding there.
  r.holds = r.lhs <= r.rhs + 1e-12 * std::max(1.0, std::abs(r.rhs));
  return r;
}

TheorySnapshot theory_snapshot(const Environment& env, const Eigen::MatrixXd& policy, int round, double u) {
  const Eigen::MatrixXd star = optimal_policy_table(env);
  TheorySnapshot s;
  s.round = round;
  s.u = u;
  s.cstar = coverage_cstar(env, policy);
  s.delta_u = delta_u(env, u);
  s.suboptimality = true_risk(env, policy, 1e-6) - true_risk(env, star);
  const bool covered = s.cstar > 0.0;
  s.pseudo_variance = covered ? pseudo_variance(env, star, policy) : std::numeric_limits<double>::infinity();
  s.l_term = covered ? l_term(env, star, policy) : std::numeric_limits<double>::infinity();
  s.gamma = covered && s.delta_u > 0.0 ? gamma_from(s.cstar, s.delta_u, u).gamma_k
                                       : std::numeric_limits<double>::infinity();
  return s;
}

void write_snapshot_jsonl(std::ostream& out, const TheorySnapshot& s) {
  nlohmann::json j;
  j["kind"] = "snapshot";
  j["round"] = s.round;
  j["pseudo_variance"] = number_or_null(s.pseudo_variance);
  j["l_term"] = number_or_null(s.l_term);
  j["cstar"] = number_or_null(s.cstar);
  j["delta_u"] = number_or_null(s.delta_u);
  j["u"] = s.u;
  j["gamma"] = number_or_null(s.gamma);
  j["suboptimality"] = number_or_null(s.suboptimality);
  out << j.dump() << '\n';
}

void write_lemma_jsonl(std::ostream& out, int round, const LemmaReport& r) {
  nlohmann::json j;
  j["kind"] = "lemma";
  j["round"] = round;
  j["skipped"] = r.skipped;
  if (r.skipped) j["reason"] = r.reason;
  j["lhs"] = number_or_null(r.lhs);
  j["rhs"] = number_or_null(r.rhs);
  j["margin"] = number_or_null(r.rhs - r.lhs);
  j["gamma"] = number_or_null(r.gamma);
  j["cstar"] = number_or_null(r.cstar);
  j["delta_u"] = number_or_null(r.delta_u);
  j["holds"] = r.holds;
  out << j.dump() << '\n';
}

}  // namespace seqls
