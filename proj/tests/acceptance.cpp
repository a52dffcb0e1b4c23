// Acceptance suite: one PASS/FAIL line per criterion. The exit status is 0
// when every criterion passes, 1 otherwise; ACCEPT_KNOWN_FAILURES names
// criteria (comma-separated numbers) whose failure is reported but tolerated.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seqls/diagnostics.hpp"
#include "seqls/estimators.hpp"
#include "seqls/learner.hpp"
#include "seqls/normal.hpp"
#include "seqls/objectives.hpp"
#include "seqls/policy.hpp"

using namespace seqls;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const PropensityConfig kQuad = PropensityConfig::quadrature();

GaussianPolicyParams random_params(int k, int d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  GaussianPolicyParams p = GaussianPolicyParams::zeros(k, d);
  for (Eigen::Index i = 0; i < p.mu.size(); ++i) p.mu.data()[i] = scale * n01(rng);
  return p;
}

// 1. pc/q <= h <= 0 on random tuples.
Outcome sandwich() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const double p = u(rng), q = std::max(1e-6, u(rng)), c = -u(rng), lambda = std::max(1e-6, 0.999 * u(rng));
    const double ips = p * c / q;
    for (const auto& s : {RegularizerSpec::ips(), RegularizerSpec::clipped_ips(10.0), RegularizerSpec::ls(lambda)}) {
      const double h = h_value(s, p, q, c);
      violations += !(ips <= h && h <= 0.0);
    }
    violations += !(h_value(RegularizerSpec::adj_ls(lambda), p, q, c) <= 0.0);
  }
  return {violations == 0, format("%d violations over 10^4 tuples", violations)};
}

// 2. Closed-form spot values against long double oracles.
Outcome spot_values() {
  const long double ln2 = std::log(2.0L);
  const double ls = h_value(RegularizerSpec::ls(0.5), 1.0, 0.5, -1.0);
  LogDataset single;
  LoggedInteraction r;
  r.context = Eigen::VectorXd::Ones(2);
  r.cost = -1.0;
  r.logged_propensity = 0.5;
  single.append_round({r});
  const double c_hat = c_hat_term(single, 0.5);
  GaussianPolicyParams p = GaussianPolicyParams::zeros(3, 4), q = p;
  q.mu(1, 2) = 1.0;
  const double kl = kl_gaussian(q, p);
  const double e1 = std::abs(static_cast<long double>(ls) + 2.0L * ln2);
  const double e2 = std::abs(static_cast<long double>(c_hat) - 2.0L * ln2);
  const double e3 = std::abs(kl - 0.5);
  const double worst = std::max({e1, e2, e3});
  return {worst <= 1e-12, format("h_LS err %.2e, C err %.2e, KL err %.2e", e1, e2, e3)};
}

// 3. Propensity correctness.
Outcome propensities_ok() {
  std::mt19937_64 rng(103);
  std::normal_distribution<double> n01;
  double worst_k2 = 0.0, worst_sum = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 5;
    const double sigma = 0.5 + 0.05 * t;
    GaussianPolicyParams p = random_params(2, d, rng);
    p.sigma = sigma;
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = n01(rng);
    const double gap = x.dot(p.mu.row(0).transpose() - p.mu.row(1).transpose());
    const double closed = normal_cdf(gap / (std::sqrt(2.0) * sigma * x.norm()));
    worst_k2 = std::max(worst_k2, std::abs(propensity(p, x, 0, kQuad) - closed));
  }
  int mc_ok = 0;
  const int instances = 100;
  for (int t = 0; t < instances; ++t) {
    const int k = 2 + t % 9, d = 2 + t % 4;
    const GaussianPolicyParams p = random_params(k, d, rng, 0.7);
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = n01(rng);
    const Eigen::VectorXd quad = propensities(p, x, kQuad);
    worst_sum = std::max(worst_sum, std::abs(quad.sum() - 1.0));
    PropensityConfig mc;
    mc.num_samples = 32;
    mc.shared_noise_seed = 7;
    const Eigen::VectorXd est = propensities(p, x, mc, static_cast<std::uint64_t>(t));
    mc_ok += (est - quad).cwiseAbs().maxCoeff() <= 3.0 * k / std::sqrt(32.0);
  }
  const bool pass = worst_k2 <= 1e-6 && worst_sum <= 1e-6 && mc_ok >= 0.95 * instances;
  return {pass, format("K=2 err %.2e, sum err %.2e, MC within 3K/sqrt(S) on %d/%d", worst_k2, worst_sum, mc_ok,
                       instances)};
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

// 4. Gradients against central differences.
Outcome gradients() {
  std::mt19937_64 rng(104);
  std::normal_distribution<double> n01;
  const double h = 1e-5;
  double worst_prop = 0.0, worst_obj = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + t % 5, d = 2 + t % 3;
    const GaussianPolicyParams p = random_params(k, d, rng, 0.5);
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = n01(rng);
    const int a = t % k;
    const Eigen::MatrixXd g = propensity_grad_mu(p, x, a, kQuad);
    Eigen::MatrixXd fd(k, d);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < d; ++c) {
        auto plus = p, minus = p;
        plus.mu(r, c) += h;
        minus.mu(r, c) -= h;
        fd(r, c) = (propensity(plus, x, a, kQuad) - propensity(minus, x, a, kQuad)) / (2 * h);
      }
    }
    worst_prop = std::max(worst_prop, relative_error(g, fd));
  }
  const Environment env = make_synthetic_env(3, 4, 0.2, 104, 100);
  for (int t = 0; t < 20; ++t) {
    const GaussianPolicyParams prior = random_params(4, 3, rng, 0.5), q = random_params(4, 3, rng, 0.5);
    std::vector<LoggedInteraction> recs(30);
    for (auto& r : recs) {
      r.context = env.sample_context(rng);
      r.action = sample_action(prior, r.context, rng);
      r.cost = sample_cost(env, r.context, r.action, rng);
      r.logged_propensity = propensity(prior, r.context, r.action, kQuad);
    }
    LogDataset data;
    data.append_round(std::move(recs));
    const ObjectiveSpec spec{t % 2 ? RegularizerSpec::adj_ls(0.3) : RegularizerSpec::ls(0.3), prior};
    const Eigen::MatrixXd g = objective_grad(data, q, spec, kQuad);
    Eigen::MatrixXd fd(4, 3);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 3; ++c) {
        auto plus = q, minus = q;
        plus.mu(r, c) += h;
        minus.mu(r, c) -= h;
        fd(r, c) = (evaluate_objective(data, plus, spec, kQuad).value -
                    evaluate_objective(data, minus, spec, kQuad).value) /
                   (2 * h);
      }
    }
    worst_obj = std::max(worst_obj, relative_error(g, fd));
  }
  return {worst_prop <= 1e-4 && worst_obj <= 1e-4,
          format("worst relative error: propensity %.2e, objective %.2e", worst_prop, worst_obj)};
}

// 5. LS and adjusted-LS bounds hold uniformly over a grid of posteriors.
Outcome bound_validity() {
  const int d = 20, k = 10, rounds = 5, per_round = 1000, draws = 50;
  const double delta = 0.05, lambda = 1.0 / std::sqrt(static_cast<double>(per_round));
  const Environment env = make_synthetic_env(d, k, 0.2, 105, 10000);
  const GaussianPolicyParams prior = GaussianPolicyParams::zeros(k, d);

  std::vector<GaussianPolicyParams> behavior(rounds, prior);
  std::vector<double> behavior_risk(rounds);
  for (int j = 0; j < rounds; ++j) {
    behavior[j].mu = 0.25 * j * env.anchors();
    behavior_risk[j] = policy_risk(env, behavior[j]);
  }
  std::vector<GaussianPolicyParams> grid;
  std::vector<double> grid_risk;
  for (const double s : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    GaussianPolicyParams q = prior;
    q.mu = s * env.anchors();
    grid.push_back(q);
    grid_risk.push_back(policy_risk(env, q));
  }

  const ObjectiveSpec ls{RegularizerSpec::ls(lambda), prior, delta};
  const ObjectiveSpec adj{RegularizerSpec::adj_ls(lambda), prior, delta};
  int violated_draws = 0, ls_violations = 0, adj_violations = 0;
  double tightest = INFINITY;
  for (int draw = 0; draw < draws; ++draw) {
    std::mt19937_64 rng(derive_seed(105, draw));
    LogDataset data;
    for (int j = 0; j < rounds; ++j) {
      std::vector<LoggedInteraction> recs(per_round);
      for (auto& r : recs) {
        r.context = env.sample_context(rng);
        r.action = sample_action(behavior[j], r.context, rng);
        r.cost = sample_cost(env, r.context, r.action, rng);
        r.logged_propensity = propensity(behavior[j], r.context, r.action, kQuad);
        r.round = j;
      }
      data.append_round(std::move(recs));
    }
    bool any = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double b_ls = bound_value(data, grid[g], ls, kQuad);
      const double b_adj = bound_value(data, grid[g], adj, kQuad, behavior_risk);
      tightest = std::min({tightest, b_ls - grid_risk[g], b_adj - grid_risk[g]});
      ls_violations += grid_risk[g] > b_ls;
      adj_violations += grid_risk[g] > b_adj;
      any = any || grid_risk[g] > b_ls || grid_risk[g] > b_adj;
    }
    violated_draws += any;
  }
  const double rate = static_cast<double>(violated_draws) / draws;
  return {rate <= 0.1, format("violating draws %d/%d (LS %d, adjusted %d pairs), smallest slack %.4f", violated_draws,
                              draws, ls_violations, adj_violations, tightest)};
}

// 6. Acceleration lemma on the worked instance and random policies.
Outcome lemma() {
  const Environment env = make_synthetic_env(20, 10, 0.2, 106, 2000);
  const auto uni = check_acceleration_lemma(env, uniform_policy_table(env), 0.0);
  bool pass = !uni.skipped && uni.holds && std::abs(uni.lhs - 6.66) <= 1e-9 && std::abs(uni.rhs - 9.765) <= 1e-2;
  std::mt19937_64 rng(106);
  int held = 0;
  for (int t = 0; t < 20; ++t) {
    const auto p = random_params(10, 20, rng, 0.1 * (t % 10));
    const auto r = check_acceleration_lemma(env, propensity_table(env, p, kQuad), 0.0);
    held += !r.skipped && r.holds;
  }
  pass = pass && held == 20;
  return {pass, format("uniform lhs %.6f <= rhs %.6f; random policies %d/20", uni.lhs, uni.rhs, held)};
}

LearnerConfig suite_config(Algorithm algorithm, int rounds, int k, int d, std::uint64_t seed) {
  LearnerConfig cfg;
  cfg.algorithm = algorithm;
  cfg.rounds = rounds;
  cfg.total_budget = 20000;
  cfg.prior_policy = GaussianPolicyParams::zeros(k, d);
  cfg.seed = seed;
  cfg.record_wall_time = false;
  cfg.evaluate_bounds = false;
  return cfg;
}

// Equal up to the algorithm label.
bool identical(const RunTrace& a, RunTrace b) {
  b.algorithm = a.algorithm;
  if (a.policies.size() != b.policies.size() || a.rounds.size() != b.rounds.size()) return false;
  for (std::size_t j = 0; j < a.policies.size(); ++j) {
    if (a.policies[j].mu != b.policies[j].mu) return false;
  }
  std::ostringstream sa, sb;
  write_trace_jsonl(sa, a);
  write_trace_jsonl(sb, b);
  return sa.str() == sb.str();
}

// 7. One round of seq_ls is the batch procedure.
Outcome batch_reduction() {
  const Environment env = make_synthetic_env(20, 10, 0.2, 107, 2000);
  auto seq = suite_config(Algorithm::seq_ls, 1, 10, 20, 7);
  seq.total_budget = 5000;
  seq.evaluate_bounds = true;
  auto batch = seq;
  batch.algorithm = Algorithm::batch_ls;
  const RunTrace a = run_learner(env, seq), b = run_learner(env, batch);
  const bool same = identical(a, b);
  return {same, same ? "policies and traces identical" : "outputs differ"};
}

struct Suite {
  std::vector<RunTrace> k10_sweep[3];  // seq_ls at k = 1, 5, 10
  std::vector<RunTrace> k100_ls, k100_adj, k100_scrm;
};

constexpr int kSeeds = 6;
constexpr int kSweep[3] = {1, 5, 10};

Suite& suite() {
  static Suite s = [] {
    Suite out;
    const Environment e10 = make_synthetic_env(20, 10, 0.2, 108, 2000);
    const Environment e100 = make_synthetic_env(20, 100, 0.2, 109, 2000);
    for (int seed = 0; seed < kSeeds; ++seed) {
      for (int i = 0; i < 3; ++i) {
        out.k10_sweep[i].push_back(run_learner(e10, suite_config(Algorithm::seq_ls, kSweep[i], 10, 20, seed)));
      }
      out.k100_ls.push_back(run_learner(e100, suite_config(Algorithm::seq_ls, 10, 100, 20, seed)));
      out.k100_adj.push_back(run_learner(e100, suite_config(Algorithm::seq_adj_ls, 10, 100, 20, seed)));
      out.k100_scrm.push_back(run_learner(e100, suite_config(Algorithm::scrm, 10, 100, 20, seed)));
    }
    return out;
  }();
  return s;
}

double mean_final(const std::vector<RunTrace>& traces) {
  double s = 0.0;
  for (const auto& t : traces) s += t.final_risk();
  return s / static_cast<double>(traces.size());
}

// 8. More rounds help at a fixed budget; adjusted LS is no worse on K = 100.
Outcome sequential_trend() {
  const Suite& s = suite();
  double means[3];
  for (int i = 0; i < 3; ++i) means[i] = mean_final(s.k10_sweep[i]);
  const bool monotone = means[1] < means[0] && means[2] < means[1];
  const double gain = means[0] - means[2];
  int adj_wins = 0;
  for (int seed = 0; seed < kSeeds; ++seed) adj_wins += s.k100_adj[seed].final_risk() <= s.k100_ls[seed].final_risk();
  const bool pass = monotone && gain >= 0.05 && adj_wins >= 4;
  return {pass, format("K=10 mean final risk k=1 %.4f, k=5 %.4f, k=10 %.4f (gain %.4f); K=100 adjusted <= LS on %d/6"
                       " (means %.4f vs %.4f)",
                       means[0], means[1], means[2], gain, adj_wins, mean_final(s.k100_adj), mean_final(s.k100_ls))};
}

// 9. SCRM schedule and ordering against adjusted LS.
Outcome scrm_baseline() {
  const Suite& s = suite();
  bool schedule_ok = true;
  for (const std::size_t n : {1024u, 20000u, 5000u}) {
    for (const int k : {1, 5, 10}) {
      const std::size_t n0 = (n + (std::size_t{1} << k) - 1) >> k;
      const auto sizes = scrm_batch_sizes(n, k);
      schedule_ok = schedule_ok && sizes.size() == static_cast<std::size_t>(k);
      for (int j = 0; schedule_ok && j < k; ++j) schedule_ok = sizes[j] == n0 << j;
    }
  }
  for (const auto& t : s.k100_scrm) {
    for (int j = 0; j < 10; ++j) schedule_ok = schedule_ok && t.rounds[j].n_j == (std::size_t{20} << j);
  }
  int adj_better = 0;
  for (int seed = 0; seed < kSeeds; ++seed) adj_better += s.k100_scrm[seed].final_risk() > s.k100_adj[seed].final_risk();
  return {schedule_ok && adj_better >= 4,
          format("schedule %s; SCRM worse than adjusted LS on %d/6 (means %.4f vs %.4f)", schedule_ok ? "exact" : "wrong",
                 adj_better, mean_final(s.k100_scrm), mean_final(s.k100_adj))};
}

// 10. Theory-driven lambda schedules.
Outcome lambda_schedules() {
  LambdaRule thm{LambdaRuleKind::thm44};
  thm.gamma = 5.0;
  LambdaRule cor{LambdaRuleKind::cor45};
  cor.gamma = 5.0;
  cor.beta1 = 1.0;
  cor.beta2 = 1.0;
  const double e1 = std::abs(lambda_schedule(thm, 100, 0).lambda - 0.0025);
  const double e2 = std::abs(lambda_schedule(cor, 100, 0).lambda - 1.0 / 21.0);
  bool in_range = true;
  double lo = INFINITY, hi = -INFINITY;
  const auto note = [&](const LambdaChoice& c) {
    in_range = in_range && c.lambda > 0.0 && c.lambda < 1.0 && !c.clamped;
    lo = std::min(lo, c.lambda);
    hi = std::max(hi, c.lambda);
  };
  // Accelerated schedules on the suite's environments and batch schedules.
  for (const int k : {10, 100}) {
    const Environment env = make_synthetic_env(20, k, 0.2, k == 10 ? 108 : 109, 2000);
    for (const int rounds : kSweep) {
      const auto sizes = uniform_batch_sizes(20000, rounds);
      LambdaAux aux;
      aux.gamma = oracle_gamma(env, GaussianPolicyParams::zeros(k, 20));
      std::size_t cumulative = 0;
      for (std::size_t j = 0; j < sizes.size(); ++j) {
        cumulative += sizes[j];
        aux.beta1 = std::max(aux.beta1, static_cast<double>(j + 1) / static_cast<double>(cumulative));
        aux.beta2 = std::max(aux.beta2, static_cast<double>(sizes[j]));
      }
      for (int j = 0; j < rounds; ++j) {
        for (const double alpha : {0.0, 0.5}) {
          LambdaRule a{LambdaRuleKind::thm44};
          a.alpha = alpha;
          LambdaRule b{LambdaRuleKind::cor45};
          b.alpha = alpha;
          note(lambda_schedule(a, sizes[j], j, aux, true));
          note(lambda_schedule(b, sizes[j], j, aux, true));
        }
      }
    }
  }
  // Lambdas the suite's runs actually used.
  const Suite& s = suite();
  for (const auto* group : {&s.k100_ls, &s.k100_adj, &s.k10_sweep[0], &s.k10_sweep[1], &s.k10_sweep[2]}) {
    for (const auto& t : *group) {
      for (const auto& r : t.rounds) {
        if (!std::isnan(r.lambda)) note({r.lambda, r.lambda_clamped});
      }
    }
  }
  const bool pass = e1 <= 1e-12 && e2 <= 1e-12 && in_range;
  return {pass, format("thm44 err %.1e, cor45 err %.1e; suite lambdas in [%.3g, %.3g]%s", e1, e2, lo, hi,
                       in_range ? ", none clamped" : ", out of range or clamped")};
}

// 11. Diagnostics oracles.
Outcome diagnostics() {
  const Environment env = make_synthetic_env(20, 10, 0.2, 111, 2000);
  const Eigen::MatrixXd unif = uniform_policy_table(env), star = optimal_policy_table(env);
  const double e1 = std::abs(pseudo_variance(env, unif, unif) - 2.6);
  const double e2 = std::abs(pseudo_variance(env, star, star) - 0.8);
  const double e3 = std::abs(l_term(env, star, star));
  const double e4 = std::abs(delta_u(env, 0.0) - 0.6);
  const double worst = std::max({e1, e2, e3, e4});
  return {worst <= 1e-9, format("S uniform err %.1e, S point-mass err %.1e, L(pi*,pi*) %.1e, Delta_u err %.1e", e1,
                                e2, e3, e4)};
}

std::set<int> known_failures() {
  std::set<int> out;
  if (const char* v = std::getenv("ACCEPT_KNOWN_FAILURES")) {
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) out.insert(std::stoi(item));
    }
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"estimator sandwich", sandwich},
      {"closed-form spot values", spot_values},
      {"propensity correctness", propensities_ok},
      {"gradient checks", gradients},
      {"bound validity", bound_validity},
      {"acceleration lemma", lemma},
      {"batch reduction", batch_reduction},
      {"sequential-beats-batch trend", sequential_trend},
      {"SCRM baseline", scrm_baseline},
      {"lambda schedules", lambda_schedules},
      {"diagnostics oracles", diagnostics},
  };
  const auto tolerated = known_failures();
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const int id = static_cast<int>(i) + 1;
    const bool known = !o.pass && tolerated.count(id);
    std::printf("%s %2d %s: %s [%.1fs]%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs,
                known ? " (known failure)" : "");
    std::fflush(stdout);
    unexpected += !o.pass && !known;
  }
  return unexpected == 0 ? 0 : 1;
}
