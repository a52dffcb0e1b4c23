#include "seqls/policy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "seqls/normal.hpp"

namespace seqls {

void GaussianPolicyParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("policy: sigma must be > 0");
  if (mu.size() == 0) throw std::invalid_argument("policy: empty mean matrix");
  if (!mu.allFinite()) throw std::invalid_argument("policy: non-finite means");
}

void PropensityConfig::validate() const {
  if (num_samples < 1) throw std::invalid_argument("propensity config: num_samples must be >= 1");
  if (num_nodes < 8) throw std::invalid_argument("propensity config: num_nodes must be >= 8");
}

Eigen::VectorXd scores(const GaussianPolicyParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.dim()) throw std::invalid_argument("scores: dimension mismatch");
  return params.mu * x;
}

int deterministic_action(const Eigen::VectorXd& score_vector) {
  int best = 0;
  for (int a = 1; a < score_vector.size(); ++a) {
    if (score_vector[a] > score_vector[best]) best = a;
  }
  return best;
}

int deterministic_action(const Eigen::MatrixXd& mu, const Eigen::VectorXd& x) {
  if (x.size() != mu.cols()) throw std::invalid_argument("deterministic_action: dimension mismatch");
  return deterministic_action(Eigen::VectorXd(mu * x));
}

int sample_action(const GaussianPolicyParams& params, const Eigen::VectorXd& x, std::mt19937_64& rng) {
  const Eigen::VectorXd s = scores(params, x);
  const int k = params.num_actions();
  const double scale = params.sigma * x.norm();
  if (scale == 0.0) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    return pick(rng);
  }
  std::normal_distribution<double> normal;
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a) {
    const double v = s[a] + scale * normal(rng);
    if (v > best_score) {
      best_score = v;
      best = a;
    }
  }
  return best;
}

namespace {

// Phi saturates to exactly 1 (0) in double precision beyond these points.
constexpr double kPhiOne = 8.3;
constexpr double kPhiZero = -38.5;

inline double fast_cdf(double z) {
  if (z > kPhiOne) return 1.0;
  if (z < kPhiZero) return 0.0;
  return normal_cdf(z);
}

struct NoisePoints {
  const double* nodes;
  const double* weights;  // nullptr means uniform 1/count
  int count;
};

NoisePoints noise_points(const PropensityConfig& cfg, std::uint64_t key, std::vector<double>& buffer) {
  if (cfg.method == PropensityMethod::gauss_hermite) {
    const auto& rule = gauss_hermite_rule(cfg.num_nodes);
    return {rule.nodes.data(), rule.weights.data(), cfg.num_nodes};
  }
  buffer.resize(cfg.num_samples);
  counter_normals(cfg.shared_noise_seed, key, buffer);
  return {buffer.data(), nullptr, cfg.num_samples};
}

// Integrates prod_{b != a} Phi(e + delta_b) over the noise points and, when
// `coeff` is given, g_b = E[phi(e + delta_b) prod_{b' != a, b} Phi(e + delta_b')].
double integrate(const Eigen::VectorXd& delta, int a, const NoisePoints& pts, double* coeff) {
  const int k = static_cast<int>(delta.size());
  thread_local std::vector<double> cdf, prefix, suffix;
  cdf.resize(k);
  prefix.resize(k + 1);
  suffix.resize(k + 1);
  if (coeff) std::fill(coeff, coeff + k, 0.0);
  double value = 0.0;
  const double uniform_w = 1.0 / pts.count;
  for (int s = 0; s < pts.count; ++s) {
    const double e = pts.nodes[s];
    const double w = pts.weights ? pts.weights[s] : uniform_w;
    if (!coeff) {
      double prod = 1.0;
      for (int b = 0; b < k && prod != 0.0; ++b) {
        if (b != a) prod *= fast_cdf(e + delta[b]);
      }
      value += w * prod;
      continue;
    }
    for (int b = 0; b < k; ++b) cdf[b] = b == a ? 1.0 : fast_cdf(e + delta[b]);
    prefix[0] = 1.0;
    for (int b = 0; b < k; ++b) prefix[b + 1] = prefix[b] * cdf[b];
    suffix[k] = 1.0;
    for (int b = k - 1; b >= 0; --b) suffix[b] = suffix[b + 1] * cdf[b];
    value += w * prefix[k];
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      const double others = prefix[b] * suffix[b + 1];
      if (others != 0.0) coeff[b] += w * normal_pdf(e + delta[b]) * others;
    }
  }
  return value;
}

}  // namespace

PropensityEval propensity_eval(const GaussianPolicyParams& params, const Eigen::VectorXd& x, int a,
                               const PropensityConfig& cfg, std::uint64_t noise_key, bool with_grad) {
  const int k = params.num_actions();
  if (a < 0 || a >= k) throw std::out_of_range("propensity: action out of range");
  if (x.size() != params.dim()) throw std::invalid_argument("propensity: dimension mismatch");
  PropensityEval out;
  if (with_grad) out.row_coeff = Eigen::VectorXd::Zero(k);
  const double norm = x.norm();
  if (norm == 0.0) {
    out.value = 1.0 / k;
    return out;
  }
  out.inv_scale = 1.0 / (params.sigma * norm);
  const Eigen::VectorXd s = params.mu * x;
  const Eigen::VectorXd delta = (s[a] - s.array()) * out.inv_scale;

  // All scores tied: the actions are exchangeable and the mass is exactly 1/K.
  const bool tied = (delta.array() == 0.0).all();

  thread_local std::vector<double> buffer;
  const NoisePoints pts = noise_points(cfg, noise_key, buffer);
  if (!with_grad) {
    out.value = tied ? 1.0 / k : integrate(delta, a, pts, nullptr);
    return out;
  }
  out.value = integrate(delta, a, pts, out.row_coeff.data());
  if (tied) out.value = 1.0 / k;
  // d delta_b / d mu_a = +x/(sigma|x|), d delta_b / d mu_b = -x/(sigma|x|).
  const double total = out.row_coeff.sum();
  out.row_coeff = -out.row_coeff;
  out.row_coeff[a] = total;
  return out;
}

double propensity(const GaussianPolicyParams& params, const Eigen::VectorXd& x, int a,
                  const PropensityConfig& cfg, std::uint64_t noise_key) {
  return propensity_eval(params, x, a, cfg, noise_key, false).value;
}

Eigen::MatrixXd propensity_grad_mu(const GaussianPolicyParams& params, const Eigen::VectorXd& x,
                                   int a, const PropensityConfig& cfg, std::uint64_t noise_key) {
  const PropensityEval e = propensity_eval(params, x, a, cfg, noise_key, true);
  return e.inv_scale * e.row_coeff * x.transpose();
}

Eigen::VectorXd propensities(const GaussianPolicyParams& params, const Eigen::VectorXd& x,
                             const PropensityConfig& cfg, std::uint64_t noise_key) {
  const int k = params.num_actions();
  Eigen::VectorXd out(k);
  for (int a = 0; a < k; ++a) out[a] = propensity(params, x, a, cfg, noise_key);
  return out;
}

Eigen::MatrixXd propensity_table(const Environment& env, const GaussianPolicyParams& params,
                                 const PropensityConfig& cfg) {
  const auto& ctx = env.eval_contexts();
  Eigen::MatrixXd table(ctx.rows(), params.num_actions());
  for (Eigen::Index n = 0; n < ctx.rows(); ++n) {
    table.row(n) = propensities(params, ctx.row(n).transpose(), cfg, static_cast<std::uint64_t>(n)).transpose();
  }
  return table;
}

std::vector<double> optimal_action_mass(const Environment& env, const GaussianPolicyParams& params,
                                        const PropensityConfig& cfg) {
  const auto& ctx = env.eval_contexts();
  const auto optimal = env.eval_optimal_actions();
  std::vector<double> mass(ctx.rows());
  for (Eigen::Index n = 0; n < ctx.rows(); ++n) {
    mass[n] = propensity(params, ctx.row(n).transpose(), optimal[n], cfg, static_cast<std::uint64_t>(n));
  }
  return mass;
}

double policy_risk(const Environment& env, const GaussianPolicyParams& params, const PropensityConfig& cfg) {
  return true_risk_from_optimal_mass(env, optimal_action_mass(env, params, cfg));
}

double kl_gaussian(const GaussianPolicyParams& q, const GaussianPolicyParams& p) {
  if (q.mu.rows() != p.mu.rows() || q.mu.cols() != p.mu.cols()) {
    throw std::invalid_argument("kl_gaussian: dimension mismatch");
  }
  if (!(p.sigma > 0.0) || !(q.sigma > 0.0)) throw std::invalid_argument("kl_gaussian: sigma must be > 0");
  const double n = static_cast<double>(q.mu.size());
  const double ratio = (q.sigma * q.sigma) / (p.sigma * p.sigma);
  const double scale_term = q.sigma == p.sigma ? 0.0 : 0.5 * n * (ratio - 1.0 - std::log(ratio));
  return scale_term + (q.mu - p.mu).squaredNorm() / (2.0 * p.sigma * p.sigma);
}

std::vector<SupervisedExample> make_supervised_set(const Environment& env, std::size_t n,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0x5E7));
  std::vector<SupervisedExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SupervisedExample ex;
    ex.x = env.sample_context(rng);
    ex.label = env.optimal_action(ex.x);
    out.push_back(std::move(ex));
  }
  return out;
}

GaussianPolicyParams make_logging_policy(const Environment& env,
                                         std::span<const SupervisedExample> supervised_set,
                                         double alpha, const LoggingPolicyConfig& cfg) {
  if (supervised_set.empty()) throw std::invalid_argument("make_logging_policy: empty supervised set");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("make_logging_policy: alpha must lie in [0, 1]");
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("make_logging_policy: sigma must be > 0");
  const int k = env.num_actions();
  const int d = env.dim();
  GaussianPolicyParams out = GaussianPolicyParams::zeros(k, d, cfg.sigma);
  if (alpha == 0.0) return out;

  // Mean cross-entropy of softmax(scores) plus (l2/2)|mu|^2.
  const BatchObjective loss = [&](const Eigen::MatrixXd& mu, const BatchRequest& batch, Eigen::MatrixXd& grad) {
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.indices.size());
    for (const std::size_t i : batch.indices) {
      const auto& ex = supervised_set[i];
      const Eigen::VectorXd s = mu * ex.x;
      const double top = s.maxCoeff();
      const Eigen::VectorXd e = (s.array() - top).exp();
      const double z = e.sum();
      total += -(s[ex.label] - top - std::log(z));
      Eigen::VectorXd dlogit = e / z;
      dlogit[ex.label] -= 1.0;
      grad.noalias() += inv_n * dlogit * ex.x.transpose();
    }
    grad += cfg.l2 * mu;
    return total * inv_n + 0.5 * cfg.l2 * mu.squaredNorm();
  };
  const MinimizeResult fit = minimize(loss, out.mu, supervised_set.size(), cfg.optimizer);
  out.mu = alpha * fit.params;
  return out;
}

void write_policy_checkpoint(std::ostream& out, const GaussianPolicyParams& params) {
  out << std::setprecision(17);
  out << params.num_actions() << ',' << params.dim() << ',' << params.sigma << '\n';
  for (int a = 0; a < params.num_actions(); ++a) {
    for (int i = 0; i < params.dim(); ++i) out << (i ? "," : "") << params.mu(a, i);
    out << '\n';
  }
}

GaussianPolicyParams read_policy_checkpoint(std::istream& in) {
  auto fields = [](const std::string& line) {
    std::vector<double> v;
    std::istringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      std::size_t used = 0;
      v.push_back(std::stod(f, &used));
      if (used != f.size()) throw std::runtime_error("policy checkpoint: malformed number '" + f + "'");
    }
    return v;
  };
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("policy checkpoint: missing header");
  const auto header = fields(line);
  if (header.size() != 3) throw std::runtime_error("policy checkpoint: header must be K,d,sigma");
  const int k = static_cast<int>(header[0]);
  const int d = static_cast<int>(header[1]);
  if (k < 1 || d < 1) throw std::runtime_error("policy checkpoint: bad dimensions");
  GaussianPolicyParams out{Eigen::MatrixXd(k, d), header[2]};
  for (int a = 0; a < k; ++a) {
    if (!std::getline(in, line)) throw std::runtime_error("policy checkpoint: truncated");
    const auto row = fields(line);
    if (static_cast<int>(row.size()) != d) throw std::runtime_error("policy checkpoint: wrong row width");
    for (int i = 0; i < d; ++i) out.mu(a, i) = row[i];
  }
  out.validate();
  return out;
}

void save_policy(const std::filesystem::path& path, const GaussianPolicyParams& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_policy: cannot open " + path.string());
  write_policy_checkpoint(out, params);
}

GaussianPolicyParams load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_policy: cannot open " + path.string());
  return read_policy_checkpoint(in);
}

}  // namespace seqls
