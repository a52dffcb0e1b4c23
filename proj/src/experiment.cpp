#include "seqls/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "seqls/diagnostics.hpp"
#include "seqls/normal.hpp"

namespace seqls {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSupervisedTag = 0x5E7B;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Thrown for unreadable or inconsistent stored traces and checkpoints.
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint64_t> seed_list(const CommandOptions& opts, const ExperimentConfig& cfg) {
  const std::uint64_t base = opts.seed_base.value_or(0);
  std::vector<std::uint64_t> seeds(cfg.run.num_seeds);
  std::iota(seeds.begin(), seeds.end(), base);
  return seeds;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

LearnerConfig learner_for(const ExperimentConfig& cfg, const Environment& env) {
  LearnerConfig lc = cfg.learner;
  lc.prior_policy = build_initial_policy(cfg, env);
  lc.record_wall_time = cfg.run.wall_time;
  return lc;
}

std::vector<double> final_risks(const std::vector<RunTrace>& traces) {
  std::vector<double> out;
  for (const auto& t : traces) out.push_back(t.final_risk());
  return out;
}

// Runs `body` and maps failures to exit codes.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const TraceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadTrace;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

fs::path resolve_out_dir(const CommandOptions& opts, const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SEQOPS_OUT"); env && *env) return fs::path(env);
  if (opts.out_dir) return *opts.out_dir;
  return fs::path(cfg.run.out_dir);
}

Environment build_environment(const ExperimentConfig& cfg) {
  const auto& e = cfg.env;
  Environment env = e.data_path.empty()
                        ? make_synthetic_env(e.d, e.num_actions, e.eps, e.seed, e.num_eval)
                        : load_feature_label_env(e.data_path, e.eps, e.num_actions, 0.2, e.seed);
  if (!e.drift_step.empty()) {
    if (static_cast<int>(e.drift_step.size()) != env.dim()) {
      throw ConfigError("env.drift", "needs one entry per context dimension");
    }
    const int horizon = e.drift_horizon > 0 ? e.drift_horizon : cfg.learner.rounds + 1;
    const Eigen::VectorXd step = Eigen::Map<const Eigen::VectorXd>(e.drift_step.data(), env.dim());
    env = drift_context_sampler(env, DriftSchedule::linear(step, horizon));
  }
  return env;
}

GaussianPolicyParams build_initial_policy(const ExperimentConfig& cfg, const Environment& env) {
  LoggingPolicyConfig lp;
  lp.sigma = cfg.policy.sigma;
  if (cfg.policy.alpha == 0.0) {
    return GaussianPolicyParams::zeros(env.num_actions(), env.dim(), lp.sigma);
  }
  const auto set = make_supervised_set(env, cfg.policy.supervised_size, derive_seed(cfg.env.seed, kSupervisedTag));
  return make_logging_policy(env, set, cfg.policy.alpha, lp);
}

std::vector<RunTrace> run_replicas(const Environment& env, const LearnerConfig& cfg,
                                   const std::vector<std::uint64_t>& seeds, int jobs) {
  std::vector<RunTrace> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        LearnerConfig c = cfg;
        c.seed = seeds[i];
        out[i] = run_learner(env, c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

std::string trace_file_name(std::uint64_t seed) { return "trace_seed" + std::to_string(seed) + ".jsonl"; }

std::string checkpoint_file_name(std::uint64_t seed, int round) {
  return "policy_seed" + std::to_string(seed) + "_round" + std::to_string(round) + ".csv";
}

int cmd_run(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment_config(opts.config_path);
    const fs::path out_dir = resolve_out_dir(opts, cfg);
    ensure_dir(out_dir);
    const Environment env = build_environment(cfg);
    const auto seeds = seed_list(opts, cfg);
    const auto traces = run_replicas(env, learner_for(cfg, env), seeds, opts.jobs);

    std::vector<PlotSeries> plot(1);
    plot[0].label = to_string(cfg.learner.algorithm);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& t = traces[i];
      auto out = open_out(out_dir / trace_file_name(seeds[i]));
      write_trace_jsonl(out, t);
      if (cfg.run.checkpoints) {
        for (std::size_t j = 0; j < t.policies.size(); ++j) {
          save_policy(out_dir / checkpoint_file_name(seeds[i], static_cast<int>(j)), t.policies[j]);
        }
      }
      if (cfg.run.dump_logs) {
        auto dump = open_out(out_dir / ("log_seed" + std::to_string(seeds[i]) + ".csv"));
        write_log_dump(dump, t.data.records());
      }
      for (const auto& w : t.warnings) log << "seed " << seeds[i] << ": " << w << '\n';
      std::vector<double> risks;
      for (const auto& r : t.rounds) risks.push_back(r.true_risk);
      plot[0].runs.push_back(std::move(risks));
    }

    const auto risks = final_risks(traces);
    const SummaryStats s = summarize(risks);
    auto summary = open_out(out_dir / "summary.csv");
    summary << "algorithm,num_seeds,mean_final_risk,std_final_risk\n";
    summary << to_string(cfg.learner.algorithm) << ',' << risks.size() << ',' << fmt(s.mean) << ',' << fmt(s.std)
            << '\n';
    if (cfg.run.emit_plots) {
      auto svg = open_out(out_dir / "risk.svg");
      svg << render_risk_chart(plot, "True risk per round");
    }
    log << to_string(cfg.learner.algorithm) << ": final risk " << s.mean << " +- " << s.std << " over "
        << risks.size() << " seed(s); output in " << out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const CommandOptions& opts, const std::string& axis, const std::vector<std::string>& values,
              std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (axis != "k" && axis != "alpha" && axis != "lambda" && axis != "algorithm") {
      throw ConfigError("", "sweep axis must be one of k, alpha, lambda, algorithm; got '" + axis + "'");
    }
    if (values.empty()) throw ConfigError("", "sweep needs at least one value");
    const ExperimentConfig base = load_experiment_config(opts.config_path);
    const fs::path out_dir = resolve_out_dir(opts, base);
    ensure_dir(out_dir);
    const Environment env = build_environment(base);
    const auto seeds = seed_list(opts, base);

    auto table = open_out(out_dir / ("sweep_" + axis + ".csv"));
    table << axis << ",algorithm,num_seeds,mean_final_risk,std_final_risk\n";
    for (const auto& value : values) {
      ExperimentConfig cfg = base;
      std::vector<Algorithm> algorithms = cfg.algorithms;
      try {
        if (axis == "k") {
          const long long k = std::stoll(value);
          if (k < 1) throw std::invalid_argument("k must be >= 1");
          cfg.learner.rounds = static_cast<int>(k);
          cfg.learner.batch_sizes.clear();
        } else if (axis == "alpha") {
          cfg.policy.alpha = std::stod(value);
          if (!(cfg.policy.alpha >= 0.0 && cfg.policy.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
        } else if (axis == "lambda") {
          cfg.learner.lambda_rule.kind = LambdaRuleKind::fixed;
          cfg.learner.lambda_rule.value = std::stod(value);
          if (!(cfg.learner.lambda_rule.value > 0.0)) throw std::invalid_argument("lambda must be > 0");
        } else {
          algorithms = {parse_algorithm(value)};
        }
      } catch (const std::exception& e) {
        throw ConfigError("", "bad sweep value '" + value + "' for axis " + axis + ": " + e.what());
      }
      const Environment& run_env = env;
      const LearnerConfig lc = learner_for(cfg, run_env);
      for (const Algorithm algorithm : algorithms) {
        LearnerConfig c = lc;
        c.algorithm = algorithm;
        const auto risks = final_risks(run_replicas(run_env, c, seeds, opts.jobs));
        const SummaryStats s = summarize(risks);
        table << value << ',' << to_string(algorithm) << ',' << risks.size() << ',' << fmt(s.mean) << ','
              << fmt(s.std) << '\n';
        log << axis << '=' << value << ' ' << to_string(algorithm) << ": " << s.mean << " +- " << s.std << '\n';
      }
    }
    return kExitOk;
  });
}

int cmd_diagnose(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment_config(opts.config_path);
    const fs::path out_dir = resolve_out_dir(opts, cfg);
    const Environment env = build_environment(cfg);
    const PropensityConfig quad = PropensityConfig::quadrature(cfg.learner.risk_nodes);
    const double u = cfg.run.diagnose_u;
    int failures = 0;
    int checks = 0;
    for (const std::uint64_t seed : seed_list(opts, cfg)) {
      const fs::path trace_path = out_dir / trace_file_name(seed);
      std::ifstream in(trace_path);
      if (!in) throw TraceError("missing trace '" + trace_path.string() + "'");
      TraceFile trace;
      try {
        trace = read_trace_jsonl(in);
      } catch (const std::exception& e) {
        throw TraceError("corrupted trace '" + trace_path.string() + "': " + e.what());
      }
      auto out = open_out(out_dir / ("diagnostics_seed" + std::to_string(seed) + ".jsonl"));
      for (const auto& rec : trace.rounds) {
        const fs::path ckpt = out_dir / checkpoint_file_name(seed, rec.round);
        GaussianPolicyParams policy;
        try {
          policy = load_policy(ckpt);
        } catch (const std::exception& e) {
          throw TraceError("cannot load checkpoint '" + ckpt.string() + "': " + e.what());
        }
        if (policy.num_actions() != env.num_actions() || policy.dim() != env.dim()) {
          throw TraceError("checkpoint '" + ckpt.string() + "' does not match the configured environment");
        }
        const Eigen::MatrixXd table = propensity_table(env, policy, quad);
        write_snapshot_jsonl(out, theory_snapshot(env, table, rec.round, u));
        const LemmaReport lemma = check_acceleration_lemma(env, table, u);
        write_lemma_jsonl(out, rec.round, lemma);
        if (!lemma.skipped) {
          ++checks;
          if (!lemma.holds) {
            ++failures;
            err << "seed " << seed << " round " << rec.round << ": lemma check failed (lhs " << lemma.lhs
                << " > rhs " << lemma.rhs << ")\n";
          }
        }
      }
    }
    log << checks - failures << " of " << checks << " lemma checks passed\n";
    return failures == 0 ? kExitOk : kExitFailure;
  });
}

int cmd_plot(const std::string& trace_glob, const fs::path& out_path, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto paths = match_traces(trace_glob);
    if (paths.empty()) throw TraceError("no trace files match '" + trace_glob + "'");
    std::vector<PlotSeries> series;
    for (const auto& p : paths) {
      std::ifstream in(p);
      if (!in) throw TraceError("cannot read trace '" + p.string() + "'");
      TraceFile trace;
      try {
        trace = read_trace_jsonl(in);
      } catch (const std::exception& e) {
        throw TraceError("corrupted trace '" + p.string() + "': " + e.what());
      }
      const std::string label = trace.algorithm.empty() ? "unknown" : trace.algorithm;
      auto it = std::find_if(series.begin(), series.end(), [&](const PlotSeries& s) { return s.label == label; });
      if (it == series.end()) {
        series.push_back({label, {}});
        it = series.end() - 1;
      }
      std::vector<double> risks;
      for (const auto& r : trace.rounds) risks.push_back(r.true_risk);
      it->runs.push_back(std::move(risks));
    }
    if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
    auto out = open_out(out_path);
    out << render_risk_chart(series, "True risk per round");
    log << "wrote " << out_path.string() << " from " << paths.size() << " trace(s)\n";
    return kExitOk;
  });
}

}  // namespace seqls
