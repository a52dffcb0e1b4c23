#include "seqls/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "seqls/diagnostics.hpp"
#include "seqls/normal.hpp"

namespace seqls {

namespace {

// Stream tags for derive_seed; fixed so every run is reproducible.
constexpr std::uint64_t kCollectTag = 0xC011EC7;
constexpr std::uint64_t kLogNoiseTag = 0x106A015E;
constexpr std::uint64_t kTrainNoiseTag = 0x7A1A;
constexpr std::uint64_t kShuffleTag = 0x5AFF1E;
constexpr std::uint64_t kReportNoiseTag = 0x2E7027;

const char* const kAlgorithmNames[] = {"seq_ls", "seq_adj_ls", "noniid_ls", "scrm", "batch_ls"};
const char* const kLambdaRuleNames[] = {"fixed", "inv_sqrt_m", "inv_sqrt_km", "thm44", "cor45"};

using Clock = std::chrono::steady_clock;

}  // namespace

std::string to_string(Algorithm algorithm) { return kAlgorithmNames[static_cast<int>(algorithm)]; }

Algorithm parse_algorithm(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kAlgorithmNames[i]) return static_cast<Algorithm>(i);
  }
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string to_string(LambdaRuleKind kind) { return kLambdaRuleNames[static_cast<int>(kind)]; }

LambdaRuleKind parse_lambda_rule(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kLambdaRuleNames[i]) return static_cast<LambdaRuleKind>(i);
  }
  throw std::invalid_argument("unknown lambda rule '" + name + "'");
}

LambdaChoice lambda_schedule(const LambdaRule& rule, std::size_t m, int k, const LambdaAux& aux, bool adjusted) {
  if (m == 0) throw std::invalid_argument("lambda_schedule: batch size must be >= 1");
  if (k < 0) throw std::invalid_argument("lambda_schedule: negative round");
  double lambda = 0.0;
  switch (rule.kind) {
    case LambdaRuleKind::fixed:
      lambda = rule.value;
      break;
    case LambdaRuleKind::inv_sqrt_m:
      lambda = 1.0 / std::sqrt(static_cast<double>(m));
      break;
    case LambdaRuleKind::inv_sqrt_km: {
      const double n = aux.cumulative > 0 ? static_cast<double>(aux.cumulative)
                                          : static_cast<double>(k + 1) * static_cast<double>(m);
      lambda = 1.0 / std::sqrt(n);
      break;
    }
    case LambdaRuleKind::thm44:
    case LambdaRuleKind::cor45: {
      if (!(rule.alpha >= 0.0 && rule.alpha < 1.0)) {
        throw std::invalid_argument("lambda_schedule: alpha must lie in [0, 1)");
      }
      const double gamma = rule.gamma > 0.0 ? rule.gamma : aux.gamma;
      if (!(gamma > 0.0)) throw std::invalid_argument("lambda_schedule: gamma must be > 0");
      if (rule.kind == LambdaRuleKind::thm44) {
        lambda = (1.0 - rule.alpha) / (8.0 * gamma * std::sqrt(static_cast<double>(m)));
      } else {
        const double beta1 = rule.beta1 > 0.0 ? rule.beta1 : aux.beta1;
        const double beta2 = rule.beta2 > 0.0 ? rule.beta2 : aux.beta2;
        if (!(beta1 > 0.0) || !(beta2 > 0.0)) {
          throw std::invalid_argument("lambda_schedule: beta1 and beta2 must be > 0");
        }
        const double b_alpha = 1.0 / (1.0 - rule.alpha);
        lambda = 1.0 / (1.0 + std::pow(2.0, 2.0 + rule.alpha) * gamma * beta1 * beta2 * b_alpha);
      }
      break;
    }
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda_schedule: lambda must be > 0");
  LambdaChoice out{lambda, false};
  if (adjusted && lambda >= 1.0) {
    out.lambda = kAdjustedLambdaCap;
    out.clamped = true;
  }
  return out;
}

std::vector<std::size_t> scrm_batch_sizes(std::size_t total, int rounds) {
  if (rounds < 1 || rounds > 62) throw std::invalid_argument("scrm_batch_sizes: rounds must lie in [1, 62]");
  if (total == 0) throw std::invalid_argument("scrm_batch_sizes: empty budget");
  const std::size_t denom = std::size_t{1} << rounds;
  const std::size_t n0 = (total + denom - 1) / denom;
  std::vector<std::size_t> sizes;
  for (int j = 0; j < rounds; ++j) sizes.push_back(n0 << j);
  return sizes;
}

std::vector<std::size_t> uniform_batch_sizes(std::size_t total, int rounds) {
  if (rounds < 1) throw std::invalid_argument("uniform_batch_sizes: rounds must be >= 1");
  if (total < static_cast<std::size_t>(rounds)) {
    throw std::invalid_argument("uniform_batch_sizes: budget smaller than the number of rounds");
  }
  std::vector<std::size_t> sizes(rounds, total / rounds);
  for (std::size_t j = 0; j < total % rounds; ++j) ++sizes[j];
  return sizes;
}

void LearnerConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("learner: rounds must be >= 1");
  if (!batch_sizes.empty()) {
    if (static_cast<int>(batch_sizes.size()) != rounds) {
      throw std::invalid_argument("learner: batch_sizes must list one size per round");
    }
    for (const auto n : batch_sizes) {
      if (n == 0) throw std::invalid_argument("learner: every batch size must be >= 1");
    }
  } else if (total_budget == 0) {
    throw std::invalid_argument("learner: total budget must be >= 1");
  }
  optimizer.validate();
  propensity.validate();
  prior_policy.validate();
  if (risk_nodes < 8) throw std::invalid_argument("learner: risk_nodes must be >= 8");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("learner: delta must lie in (0, 1]");
}

std::vector<std::size_t> batch_schedule(const LearnerConfig& cfg) {
  if (cfg.algorithm == Algorithm::batch_ls) {
    const std::size_t n = cfg.batch_sizes.empty()
                              ? cfg.total_budget
                              : std::accumulate(cfg.batch_sizes.begin(), cfg.batch_sizes.end(), std::size_t{0});
    return {n};
  }
  if (cfg.algorithm == Algorithm::scrm && cfg.batch_sizes.empty()) {
    return scrm_batch_sizes(cfg.total_budget, cfg.rounds);
  }
  if (!cfg.batch_sizes.empty()) return cfg.batch_sizes;
  return uniform_batch_sizes(cfg.total_budget, cfg.rounds);
}

double oracle_gamma(const Environment& env, const GaussianPolicyParams& policy, double u, int nodes) {
  const auto mass = optimal_action_mass(env, policy, PropensityConfig::quadrature(nodes));
  return gamma_from(coverage_cstar(env, mass), delta_u(env, u), u).uniform;
}

namespace {

struct PolicyOracle {
  double risk = 0.0;
  double cstar = 0.0;
};

// Risk and coverage of a policy on the round-`round` context distribution.
PolicyOracle evaluate_policy(const Environment& env, const GaussianPolicyParams& params, int round, int nodes) {
  const PropensityConfig quad = PropensityConfig::quadrature(nodes);
  if (env.drift().is_identity()) {
    const auto mass = optimal_action_mass(env, params, quad);
    return {true_risk_from_optimal_mass(env, mass), coverage_cstar(env, mass)};
  }
  const int horizon = env.drift().horizon();
  const int r = horizon < 0 ? round : std::min(round, horizon - 1);
  const Eigen::VectorXd shift = env.drift().shift(r, env.dim());
  const auto& ctx = env.eval_contexts();
  double mass_sum = 0.0;
  double cstar = std::numeric_limits<double>::infinity();
  for (Eigen::Index n = 0; n < ctx.rows(); ++n) {
    const Eigen::VectorXd x = ctx.row(n).transpose() + shift;
    const double m = propensity(params, x, env.optimal_action(x), quad);
    mass_sum += m;
    cstar = std::min(cstar, m);
  }
  const double eps = env.noise();
  return {-eps - (1.0 - 2.0 * eps) * mass_sum / static_cast<double>(ctx.rows()), cstar};
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<LoggedInteraction> collect_batch(const Environment& env, const GaussianPolicyParams& policy,
                                             std::size_t n, int round, std::size_t first_id,
                                             const LearnerConfig& cfg) {
  std::mt19937_64 rng(derive_seed(cfg.seed, kCollectTag, static_cast<std::uint64_t>(round)));
  PropensityConfig pc = cfg.propensity;
  pc.shared_noise_seed = derive_seed(cfg.seed, kLogNoiseTag);
  std::vector<LoggedInteraction> batch(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = batch[i];
    r.round = round;
    r.context = env.sample_context(rng, round);
    r.action = sample_action(policy, r.context, rng);
    r.cost = sample_cost(env, r.context, r.action, rng);
    double q = propensity(policy, r.context, r.action, pc, first_id + i);
    // A Monte Carlo estimate can underflow for an action that was in fact
    // drawn; fall back to quadrature and keep common support.
    if (!(q > 0.0)) q = propensity(policy, r.context, r.action, PropensityConfig::quadrature(cfg.risk_nodes));
    r.logged_propensity = std::max(q, std::numeric_limits<double>::min());
  }
  return batch;
}

// Copy of the latest round renumbered as round 0, for the latest-batch learners.
LogDataset latest_batch_view(const LogDataset& data, int round) {
  const auto src = data.round(round);
  std::vector<LoggedInteraction> copy(src.begin(), src.end());
  for (auto& r : copy) r.round = 0;
  LogDataset out;
  out.append_round(std::move(copy));
  return out;
}

PropensityConfig noise_for(const LearnerConfig& cfg, std::uint64_t tag, int round, int epoch) {
  PropensityConfig pc = cfg.propensity;
  pc.shared_noise_seed = derive_seed(cfg.seed, derive_seed(tag, static_cast<std::uint64_t>(round)),
                                     static_cast<std::uint64_t>(epoch));
  return pc;
}

OptimizerConfig optimizer_for(const LearnerConfig& cfg, int round) {
  OptimizerConfig oc = cfg.optimizer;
  oc.seed = derive_seed(cfg.seed, kShuffleTag, static_cast<std::uint64_t>(round));
  return oc;
}

struct FitOutcome {
  GaussianPolicyParams posterior;
  ObjectiveBreakdown at_output;
  double objective_at_init = std::numeric_limits<double>::quiet_NaN();
};

FitOutcome fit_pac_bayes(const LogDataset& data, const GaussianPolicyParams& init, const ObjectiveSpec& spec,
                         const LearnerConfig& cfg, int round) {
  const double sigma = init.sigma;
  const BatchObjective objective = [&](const Eigen::MatrixXd& mu, const BatchRequest& batch, Eigen::MatrixXd& grad) {
    const GaussianPolicyParams q{mu, sigma};
    return objective_on_batch(data, q, spec, noise_for(cfg, kTrainNoiseTag, round, batch.epoch), batch.indices,
                              grad);
  };
  FitOutcome out;
  const PropensityConfig report = noise_for(cfg, kReportNoiseTag, round, 0);
  if (cfg.monitor_descent) out.objective_at_init = evaluate_objective(data, init, spec, report).value;
  const MinimizeResult fit = minimize(objective, init.mu, data.size(), optimizer_for(cfg, round));
  out.posterior = {fit.params, sigma};
  if (cfg.evaluate_bounds || cfg.monitor_descent) out.at_output = evaluate_objective(data, out.posterior, spec, report);
  return out;
}

LambdaAux lambda_aux(const Environment& env, const LearnerConfig& cfg, const std::vector<std::size_t>& sizes) {
  LambdaAux aux;
  const auto kind = cfg.lambda_rule.kind;
  if ((kind == LambdaRuleKind::thm44 || kind == LambdaRuleKind::cor45) && !(cfg.lambda_rule.gamma > 0.0)) {
    aux.gamma = oracle_gamma(env, cfg.prior_policy, 0.0, cfg.risk_nodes);
  }
  std::size_t cumulative = 0;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    cumulative += sizes[j];
    aux.beta1 = std::max(aux.beta1, static_cast<double>(j + 1) / static_cast<double>(cumulative));
    aux.beta2 = std::max(aux.beta2, static_cast<double>(sizes[j]));
  }
  return aux;
}

RoundRecord oracle_record(const Environment& env, const GaussianPolicyParams& policy, int round, int nodes) {
  RoundRecord rec;
  rec.round = round;
  const PolicyOracle o = evaluate_policy(env, policy, round, nodes);
  rec.true_risk = o.risk;
  rec.cstar = o.cstar;
  return rec;
}

void check_descent(RunTrace& trace, const FitOutcome& fit, int round) {
  if (std::isfinite(fit.objective_at_init) && fit.at_output.value > fit.objective_at_init + 1e-3) {
    trace.warnings.push_back("round " + std::to_string(round) + ": objective rose from " +
                             std::to_string(fit.objective_at_init) + " to " + std::to_string(fit.at_output.value));
  }
}

// Shared loop of the cumulative-data PAC-Bayes learners (seq_ls, seq_adj_ls, batch_ls).
RunTrace run_cumulative(const Environment& env, const LearnerConfig& cfg, Algorithm algorithm, bool adjusted,
                        const std::vector<std::size_t>& sizes) {
  cfg.validate();
  RunTrace trace;
  trace.algorithm = algorithm;
  const int rounds = static_cast<int>(sizes.size());
  const LambdaAux base_aux = lambda_aux(env, cfg, sizes);
  const GaussianPolicyParams& prior = cfg.prior_policy;

  GaussianPolicyParams current = prior;
  RoundRecord pending = oracle_record(env, current, 0, cfg.risk_nodes);
  pending.kl = 0.0;
  std::vector<double> behavior_risks;
  for (int j = 0; j < rounds; ++j) {
    const auto start = Clock::now();
    pending.n_j = sizes[j];
    behavior_risks.push_back(pending.true_risk);
    trace.data.append_round(collect_batch(env, current, sizes[j], j, trace.data.size(), cfg));
    trace.policies.push_back(current);

    LambdaAux aux = base_aux;
    aux.cumulative = trace.data.size();
    const LambdaChoice lc = lambda_schedule(cfg.lambda_rule, sizes[j], j, aux, adjusted);
    if (lc.clamped) {
      trace.warnings.push_back("round " + std::to_string(j) + ": lambda clamped to " +
                               std::to_string(kAdjustedLambdaCap));
    }
    ObjectiveSpec spec{adjusted ? RegularizerSpec::adj_ls(lc.lambda) : RegularizerSpec::ls(lc.lambda), prior,
                       cfg.delta, false};
    const GaussianPolicyParams& init = cfg.warm_start ? current : prior;
    const FitOutcome fit = fit_pac_bayes(trace.data, init, spec, cfg, j);
    check_descent(trace, fit, j);
    if (cfg.observer) cfg.observer({j, &trace.data, &prior, &fit.posterior});

    if (cfg.record_wall_time) pending.wall_ms = elapsed_ms(start);
    trace.rounds.push_back(pending);

    current = fit.posterior;
    pending = oracle_record(env, current, j + 1, cfg.risk_nodes);
    pending.N_k = trace.data.size();
    pending.lambda = lc.lambda;
    pending.lambda_clamped = lc.clamped;
    if (cfg.evaluate_bounds) {
      pending.emp_risk = fit.at_output.empirical_risk;
      pending.kl = fit.at_output.kl;
      const double n = static_cast<double>(trace.data.size());
      double bound = fit.at_output.value + std::log(1.0 / cfg.delta) / (lc.lambda * n);
      if (adjusted) {
        double weighted = 0.0;
        for (int r = 0; r <= j; ++r) weighted += static_cast<double>(sizes[r]) / n * behavior_risks[r];
        bound += weighted + c_hat_term(trace.data, lc.lambda);
      }
      pending.bound = bound;
    }
  }
  trace.rounds.push_back(pending);
  trace.policies.push_back(current);
  return trace;
}

}  // namespace

RunTrace run_seq_ls(const Environment& env, const LearnerConfig& cfg) {
  return run_cumulative(env, cfg, Algorithm::seq_ls, false, batch_schedule(cfg));
}

RunTrace run_seq_adj_ls(const Environment& env, const LearnerConfig& cfg) {
  return run_cumulative(env, cfg, Algorithm::seq_adj_ls, true, batch_schedule(cfg));
}

RunTrace run_batch_ls(const Environment& env, const LearnerConfig& cfg) {
  LearnerConfig one = cfg;
  one.algorithm = Algorithm::batch_ls;
  const auto sizes = batch_schedule(one);
  one.rounds = 1;
  one.batch_sizes.clear();
  one.total_budget = sizes.front();
  return run_cumulative(env, one, Algorithm::batch_ls, false, sizes);
}

RunTrace run_noniid_ls(const Environment& env, const LearnerConfig& cfg) {
  cfg.validate();
  const auto sizes = batch_schedule(cfg);
  RunTrace trace;
  trace.algorithm = Algorithm::noniid_ls;
  const LambdaAux base_aux = lambda_aux(env, cfg, sizes);

  GaussianPolicyParams current = cfg.prior_policy;
  RoundRecord pending = oracle_record(env, current, 0, cfg.risk_nodes);
  pending.kl = 0.0;
  for (int j = 0; j < static_cast<int>(sizes.size()); ++j) {
    const auto start = Clock::now();
    pending.n_j = sizes[j];
    trace.data.append_round(collect_batch(env, current, sizes[j], j, trace.data.size(), cfg));
    trace.policies.push_back(current);

    LambdaAux aux = base_aux;
    aux.cumulative = sizes[j];
    const LambdaChoice lc = lambda_schedule(cfg.lambda_rule, sizes[j], 0, aux, false);
    // Prior for this round is the posterior that collected the batch.
    const GaussianPolicyParams prior = current;
    const ObjectiveSpec spec{RegularizerSpec::ls(lc.lambda), prior, cfg.delta, false};
    const LogDataset batch = latest_batch_view(trace.data, j);
    const FitOutcome fit = fit_pac_bayes(batch, current, spec, cfg, j);
    check_descent(trace, fit, j);
    if (cfg.observer) cfg.observer({j, &trace.data, &prior, &fit.posterior});

    if (cfg.record_wall_time) pending.wall_ms = elapsed_ms(start);
    trace.rounds.push_back(pending);

    current = fit.posterior;
    pending = oracle_record(env, current, j + 1, cfg.risk_nodes);
    pending.N_k = sizes[j];
    pending.lambda = lc.lambda;
    if (cfg.evaluate_bounds) {
      pending.emp_risk = fit.at_output.empirical_risk;
      pending.kl = fit.at_output.kl;
      pending.bound = fit.at_output.value + std::log(1.0 / cfg.delta) / (lc.lambda * static_cast<double>(sizes[j]));
    }
  }
  trace.rounds.push_back(pending);
  trace.policies.push_back(current);
  return trace;
}

RunTrace run_scrm(const Environment& env, const LearnerConfig& cfg) {
  cfg.validate();
  LearnerConfig scfg = cfg;
  scfg.algorithm = Algorithm::scrm;
  const auto sizes = batch_schedule(scfg);
  RunTrace trace;
  trace.algorithm = Algorithm::scrm;

  GaussianPolicyParams current = cfg.prior_policy;
  RoundRecord pending = oracle_record(env, current, 0, cfg.risk_nodes);
  for (int j = 0; j < static_cast<int>(sizes.size()); ++j) {
    const auto start = Clock::now();
    pending.n_j = sizes[j];
    trace.data.append_round(collect_batch(env, current, sizes[j], j, trace.data.size(), cfg));
    trace.policies.push_back(current);

    const LogDataset batch = latest_batch_view(trace.data, j);
    const CrmSpec crm{cfg.crm_max_weight, std::sqrt(1.0 / static_cast<double>(sizes[j]))};
    const double sigma = current.sigma;
    const BatchObjective objective = [&](const Eigen::MatrixXd& mu, const BatchRequest& req, Eigen::MatrixXd& grad) {
      const GaussianPolicyParams q{mu, sigma};
      return crm_objective_on_batch(batch, q, crm, noise_for(cfg, kTrainNoiseTag, j, req.epoch), req.indices, grad);
    };
    const MinimizeResult fit = minimize(objective, current.mu, batch.size(), optimizer_for(cfg, j));
    const GaussianPolicyParams posterior{fit.params, sigma};
    if (cfg.observer) cfg.observer({j, &trace.data, &current, &posterior});

    if (cfg.record_wall_time) pending.wall_ms = elapsed_ms(start);
    trace.rounds.push_back(pending);

    double emp = RoundRecord::kNone;
    if (cfg.evaluate_bounds) {
      std::vector<std::size_t> all(batch.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      Eigen::MatrixXd scratch = Eigen::MatrixXd::Zero(posterior.mu.rows(), posterior.mu.cols());
      emp = crm_objective_on_batch(batch, posterior, crm, noise_for(cfg, kReportNoiseTag, j, 0), all, scratch);
    }
    current = posterior;
    pending = oracle_record(env, current, j + 1, cfg.risk_nodes);
    pending.N_k = sizes[j];
    pending.emp_risk = emp;
  }
  trace.rounds.push_back(pending);
  trace.policies.push_back(current);
  return trace;
}

RunTrace run_learner(const Environment& env, const LearnerConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::seq_ls:
      return run_seq_ls(env, cfg);
    case Algorithm::seq_adj_ls:
      return run_seq_adj_ls(env, cfg);
    case Algorithm::noniid_ls:
      return run_noniid_ls(env, cfg);
    case Algorithm::scrm:
      return run_scrm(env, cfg);
    case Algorithm::batch_ls:
      return run_batch_ls(env, cfg);
  }
  throw std::logic_error("run_learner: unknown algorithm");
}

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

double read_num(const nlohmann::json& j, const char* key, bool required) {
  if (!j.contains(key)) {
    if (required) throw std::runtime_error(std::string("trace record missing key '") + key + "'");
    return RoundRecord::kNone;
  }
  const auto& v = j.at(key);
  if (v.is_null()) return RoundRecord::kNone;
  if (!v.is_number()) throw std::runtime_error(std::string("trace key '") + key + "' is not a number");
  return v.get<double>();
}

}  // namespace

void write_trace_jsonl(std::ostream& out, const RunTrace& trace) {
  for (const auto& r : trace.rounds) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["n_j"] = r.n_j;
    j["N_k"] = r.N_k;
    j["lambda"] = num(r.lambda);
    j["true_risk"] = num(r.true_risk);
    j["emp_risk"] = num(r.emp_risk);
    j["kl"] = num(r.kl);
    j["bound"] = num(r.bound);
    j["cstar"] = num(r.cstar);
    j["wall_ms"] = num(r.wall_ms);
    j["algorithm"] = to_string(trace.algorithm);
    out << j.dump() << '\n';
  }
}

TraceFile read_trace_jsonl(std::istream& in) {
  TraceFile out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("trace line " + std::to_string(line_no) + ": not an object");
    RoundRecord r;
    try {
      r.round = static_cast<int>(read_num(j, "round", true));
      r.n_j = static_cast<std::size_t>(read_num(j, "n_j", true));
      r.N_k = static_cast<std::size_t>(read_num(j, "N_k", true));
      r.lambda = read_num(j, "lambda", true);
      r.true_risk = read_num(j, "true_risk", true);
      r.emp_risk = read_num(j, "emp_risk", true);
      r.kl = read_num(j, "kl", true);
      r.bound = read_num(j, "bound", true);
      r.cstar = read_num(j, "cstar", true);
      r.wall_ms = read_num(j, "wall_ms", false);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!std::isfinite(r.true_risk)) throw std::runtime_error("trace line " + std::to_string(line_no) + ": true_risk missing");
    if (r.round != static_cast<int>(out.rounds.size())) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": rounds out of order");
    }
    if (j.contains("algorithm") && j["algorithm"].is_string()) out.algorithm = j["algorithm"].get<std::string>();
    out.rounds.push_back(r);
  }
  if (out.rounds.empty()) throw std::runtime_error("trace: no records");
  return out;
}

}  // namespace seqls
