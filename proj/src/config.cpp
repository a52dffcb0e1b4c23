#include "seqls/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace seqls {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find_first_of("#;");
  return pos == std::string::npos ? line : line.substr(0, pos);
}

bool is_identifier(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

double to_double(const std::string& key, const std::string& raw) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(raw, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + raw + "'");
  }
  if (used != raw.size()) throw ConfigError(key, "expected a number, got '" + raw + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& raw) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(raw, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + raw + "'");
  }
  if (used != raw.size()) throw ConfigError(key, "expected an integer, got '" + raw + "'");
  return v;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::istream& in) {
  ConfigDocument doc;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("", where + ": unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (!is_identifier(section)) throw ConfigError("", where + ": bad section name '" + section + "'");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("", where + ": expected 'key = value'");
    const std::string name = trim(body.substr(0, eq));
    if (!is_identifier(name)) throw ConfigError("", where + ": bad key name '" + name + "'");
    if (section.empty()) throw ConfigError(name, where + ": key outside any section");
    const std::string key = section + "." + name;
    if (doc.values_.count(key)) throw ConfigError(key, where + ": duplicate key");
    doc.values_[key] = trim(body.substr(eq + 1));
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  return parse(in);
}

std::optional<std::string> ConfigDocument::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::optional<std::vector<std::string>> ConfigDocument::list(const std::string& key) const {
  const auto raw = text(key);
  if (!raw) return std::nullopt;
  std::string body = *raw;
  if (body.empty() || body.front() != '[' || body.back() != ']') {
    // A bare scalar is a one-element list.
    return std::vector<std::string>{body};
  }
  body = trim(body.substr(1, body.size() - 2));
  std::vector<std::string> out;
  if (body.empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key, "empty list element");
    out.push_back(item);
  }
  return out;
}

double ConfigDocument::number(const std::string& key, double fallback) const {
  const auto raw = text(key);
  return raw ? to_double(key, *raw) : fallback;
}

long long ConfigDocument::integer(const std::string& key, long long fallback) const {
  const auto raw = text(key);
  return raw ? to_integer(key, *raw) : fallback;
}

bool ConfigDocument::boolean(const std::string& key, bool fallback) const {
  const auto raw = text(key);
  if (!raw) return fallback;
  if (*raw == "true" || *raw == "1" || *raw == "yes") return true;
  if (*raw == "false" || *raw == "0" || *raw == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + *raw + "'");
}

std::string ConfigDocument::string(const std::string& key, const std::string& fallback) const {
  const auto raw = text(key);
  if (!raw) return fallback;
  std::string v = *raw;
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

std::vector<double> ConfigDocument::numbers(const std::string& key) const {
  std::vector<double> out;
  if (const auto items = list(key)) {
    for (const auto& s : *items) out.push_back(to_double(key, s));
  }
  return out;
}

void ConfigDocument::reject_unused() const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) throw ConfigError(key, "unknown key");
  }
}

namespace {

template <class Fn>
auto checked(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

int positive_int(const ConfigDocument& doc, const std::string& key, long long fallback, long long min = 1) {
  const long long v = doc.integer(key, fallback);
  if (v < min || v > 1'000'000'000) throw ConfigError(key, "must be >= " + std::to_string(min));
  return static_cast<int>(v);
}

ExperimentConfig from_document(const ConfigDocument& doc) {
  ExperimentConfig cfg;

  auto& env = cfg.env;
  env.d = positive_int(doc, "env.d", env.d);
  env.num_actions = positive_int(doc, "env.K", env.num_actions, 2);
  env.eps = doc.number("env.eps", env.eps);
  if (!(env.eps >= 0.0 && env.eps < 0.5)) throw ConfigError("env.eps", "must lie in [0, 0.5)");
  env.seed = static_cast<std::uint64_t>(doc.integer("env.seed", 0));
  env.num_eval = positive_int(doc, "env.num_eval", env.num_eval);
  env.data_path = doc.string("env.data", "");
  env.drift_step = doc.numbers("env.drift");
  env.drift_horizon = positive_int(doc, "env.drift_horizon", 0, 0);
  if (!env.drift_step.empty() && env.data_path.empty() && static_cast<int>(env.drift_step.size()) != env.d) {
    throw ConfigError("env.drift", "needs one entry per context dimension");
  }

  auto& pol = cfg.policy;
  pol.sigma = doc.number("policy.sigma", pol.sigma);
  if (!(pol.sigma > 0.0)) throw ConfigError("policy.sigma", "must be > 0");
  pol.alpha = doc.number("policy.alpha", pol.alpha);
  if (!(pol.alpha >= 0.0 && pol.alpha <= 1.0)) throw ConfigError("policy.alpha", "must lie in [0, 1]");
  pol.supervised_size = static_cast<std::size_t>(positive_int(doc, "policy.supervised_size", 1000));
  const std::string method = doc.string("policy.propensity", "monte_carlo");
  if (method == "monte_carlo") {
    pol.propensity.method = PropensityMethod::monte_carlo;
  } else if (method == "quadrature") {
    pol.propensity.method = PropensityMethod::gauss_hermite;
  } else {
    throw ConfigError("policy.propensity", "expected monte_carlo or quadrature, got '" + method + "'");
  }
  pol.propensity.num_samples = positive_int(doc, "policy.samples", pol.propensity.num_samples);
  pol.propensity.num_nodes = positive_int(doc, "policy.nodes", pol.propensity.num_nodes, 8);

  auto& lc = cfg.learner;
  lc.algorithm = checked("learner.algorithm",
                         [&] { return parse_algorithm(doc.string("learner.algorithm", "seq_ls")); });
  lc.rounds = positive_int(doc, "learner.rounds", lc.rounds);
  lc.total_budget = static_cast<std::size_t>(positive_int(doc, "learner.total_budget", 20000));
  for (const double v : doc.numbers("learner.batch_sizes")) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("learner.batch_sizes", "entries must be integers >= 1");
    lc.batch_sizes.push_back(static_cast<std::size_t>(v));
  }
  if (!lc.batch_sizes.empty() && static_cast<int>(lc.batch_sizes.size()) != lc.rounds) {
    if (doc.has("learner.rounds")) throw ConfigError("learner.batch_sizes", "must list one size per round");
    lc.rounds = static_cast<int>(lc.batch_sizes.size());
  }
  auto& rule = lc.lambda_rule;
  rule.kind = checked("learner.lambda_rule",
                      [&] { return parse_lambda_rule(doc.string("learner.lambda_rule", "inv_sqrt_m")); });
  rule.value = doc.number("learner.lambda", rule.value);
  if (!(rule.value > 0.0)) throw ConfigError("learner.lambda", "must be > 0");
  rule.alpha = doc.number("learner.rate_alpha", rule.alpha);
  if (!(rule.alpha >= 0.0 && rule.alpha < 1.0)) throw ConfigError("learner.rate_alpha", "must lie in [0, 1)");
  rule.gamma = doc.number("learner.gamma", rule.gamma);
  rule.beta1 = doc.number("learner.beta1", rule.beta1);
  rule.beta2 = doc.number("learner.beta2", rule.beta2);
  lc.optimizer.lr = doc.number("learner.lr", lc.optimizer.lr);
  lc.optimizer.epochs = positive_int(doc, "learner.epochs", lc.optimizer.epochs, 0);
  lc.optimizer.batch_size = static_cast<std::size_t>(positive_int(doc, "learner.minibatch", 32, 0));
  checked("learner.lr", [&] { lc.optimizer.validate(); return 0; });
  lc.delta = doc.number("learner.delta", lc.delta);
  if (!(lc.delta > 0.0 && lc.delta <= 1.0)) throw ConfigError("learner.delta", "must lie in (0, 1]");
  lc.crm_max_weight = doc.number("learner.crm_max_weight", lc.crm_max_weight);
  if (!(lc.crm_max_weight >= 1.0)) throw ConfigError("learner.crm_max_weight", "must be >= 1");
  lc.warm_start = doc.boolean("learner.warm_start", lc.warm_start);
  lc.evaluate_bounds = doc.boolean("learner.evaluate_bounds", lc.evaluate_bounds);
  lc.risk_nodes = positive_int(doc, "learner.risk_nodes", lc.risk_nodes, 8);
  lc.propensity = pol.propensity;

  if (const auto names = doc.list("learner.algorithms")) {
    for (const auto& n : *names) {
      cfg.algorithms.push_back(checked("learner.algorithms", [&] { return parse_algorithm(n); }));
    }
  }
  if (cfg.algorithms.empty()) cfg.algorithms.push_back(lc.algorithm);

  auto& run = cfg.run;
  run.num_seeds = positive_int(doc, "run.num_seeds", run.num_seeds);
  run.out_dir = doc.string("run.out", run.out_dir);
  run.emit_plots = doc.boolean("run.emit_plots", run.emit_plots);
  run.dump_logs = doc.boolean("run.dump_logs", run.dump_logs);
  run.checkpoints = doc.boolean("run.checkpoints", run.checkpoints);
  run.wall_time = doc.boolean("run.wall_time", run.wall_time);
  run.diagnose_u = doc.number("run.diagnose_u", run.diagnose_u);
  if (!(run.diagnose_u >= 0.0 && run.diagnose_u < 1.0)) throw ConfigError("run.diagnose_u", "must lie in [0, 1)");

  doc.reject_unused();
  return cfg;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) { return from_document(ConfigDocument::parse(in)); }

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return from_document(ConfigDocument::load(path));
}

}  // namespace seqls
