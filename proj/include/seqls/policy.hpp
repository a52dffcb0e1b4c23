#pragma once

// Linear Gaussian policies. A posterior Q = N(mu, sigma^2 I) over per-action
// weight vectors induces the policy pi_Q(a|x) = P_{theta~Q}(a = argmax_b x.theta_b).
// Conditioning on x leaves K independent normal scores with common scale
// sigma*|x|, so the propensity reduces to a one-dimensional Gaussian integral
//
//   pi(a|x) = E_{e~N(0,1)} prod_{b != a} Phi(e + x.(mu_a - mu_b) / (sigma |x|)).
//
// Monte Carlo evaluates it with S shared draws per context (common random
// numbers keyed by a context id); Gauss-Hermite evaluates it deterministically.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "seqls/env.hpp"
#include "seqls/optimizer.hpp"

namespace seqls {

struct GaussianPolicyParams {
  Eigen::MatrixXd mu;  // K x d, row a is the mean weight vector of action a
  double sigma = 1.0;

  int num_actions() const { return static_cast<int>(mu.rows()); }
  int dim() const { return static_cast<int>(mu.cols()); }

  /// Throws std::invalid_argument unless sigma > 0 and mu is finite and non-empty.
  void validate() const;

  static GaussianPolicyParams zeros(int k, int d, double sigma = 1.0) {
    return {Eigen::MatrixXd::Zero(k, d), sigma};
  }
};

enum class PropensityMethod { monte_carlo, gauss_hermite };

struct PropensityConfig {
  PropensityMethod method = PropensityMethod::monte_carlo;
  int num_samples = 32;
  int num_nodes = 64;
  std::uint64_t shared_noise_seed = 0;

  void validate() const;

  static PropensityConfig quadrature(int nodes = 64) {
    PropensityConfig c;
    c.method = PropensityMethod::gauss_hermite;
    c.num_nodes = nodes;
    return c;
  }
};

/// (x . mu_a)_a.
Eigen::VectorXd scores(const GaussianPolicyParams& params, const Eigen::VectorXd& x);

/// argmax of `score_vector`, lowest index on ties.
int deterministic_action(const Eigen::VectorXd& score_vector);
int deterministic_action(const Eigen::MatrixXd& mu, const Eigen::VectorXd& x);

/// Draws from pi_Q(.|x): argmax_a x.mu_a + sigma |x| e_a with e_a iid N(0,1).
/// A zero context makes every action exchangeable: uniform draw.
int sample_action(const GaussianPolicyParams& params, const Eigen::VectorXd& x, std::mt19937_64& rng);

/// pi(a|x). `noise_key` identifies the context for common random numbers in
/// Monte Carlo mode and is ignored by quadrature.
double propensity(const GaussianPolicyParams& params, const Eigen::VectorXd& x, int a,
                  const PropensityConfig& cfg, std::uint64_t noise_key = 0);

/// Propensity together with its gradient in compact form: the gradient with
/// respect to mu_b is row_coeff[b] * x^T / (sigma |x|). row_coeff sums to zero.
struct PropensityEval {
  double value = 0.0;
  Eigen::VectorXd row_coeff;
  double inv_scale = 0.0;  // 1 / (sigma |x|); 0 for a zero context
};

PropensityEval propensity_eval(const GaussianPolicyParams& params, const Eigen::VectorXd& x, int a,
                               const PropensityConfig& cfg, std::uint64_t noise_key = 0,
                               bool with_grad = true);

/// d pi(a|x) / d mu, a K x d matrix. Same noise as `propensity` for equal keys.
Eigen::MatrixXd propensity_grad_mu(const GaussianPolicyParams& params, const Eigen::VectorXd& x,
                                   int a, const PropensityConfig& cfg, std::uint64_t noise_key = 0);

/// pi(.|x) for every action, sharing one set of noise draws.
Eigen::VectorXd propensities(const GaussianPolicyParams& params, const Eigen::VectorXd& x,
                             const PropensityConfig& cfg, std::uint64_t noise_key = 0);

/// Full propensity table over the env's eval contexts (rows) and actions (cols).
Eigen::MatrixXd propensity_table(const Environment& env, const GaussianPolicyParams& params,
                                 const PropensityConfig& cfg);

/// pi(a*(x)|x) for every eval context. O(K) per context instead of O(K^2).
std::vector<double> optimal_action_mass(const Environment& env, const GaussianPolicyParams& params,
                                        const PropensityConfig& cfg);

/// R(pi_Q) over the env's eval contexts.
double policy_risk(const Environment& env, const GaussianPolicyParams& params,
                   const PropensityConfig& cfg = PropensityConfig::quadrature());

/// KL(q || p) for isotropic Gaussians with shared scales.
double kl_gaussian(const GaussianPolicyParams& q, const GaussianPolicyParams& p);

struct SupervisedExample {
  Eigen::VectorXd x;
  int label = 0;
};

/// Draws `n` contexts from `env` labelled with their optimal action.
std::vector<SupervisedExample> make_supervised_set(const Environment& env, std::size_t n,
                                                   std::uint64_t seed);

struct LoggingPolicyConfig {
  double l2 = 1e-4;
  double sigma = 1.0;
  OptimizerConfig optimizer{.lr = 1e-1, .epochs = 10, .batch_size = 32};
};

/// Multinomial logistic regression on the supervised set, then mu <- alpha mu.
/// alpha = 0 gives the uniform policy exactly.
GaussianPolicyParams make_logging_policy(const Environment& env,
                                         std::span<const SupervisedExample> supervised_set,
                                         double alpha, const LoggingPolicyConfig& cfg = {});

/// Checkpoint: "K,d,sigma" header line, then K rows of d comma-separated means.
void write_policy_checkpoint(std::ostream& out, const GaussianPolicyParams& params);
GaussianPolicyParams read_policy_checkpoint(std::istream& in);
void save_policy(const std::filesystem::path& path, const GaussianPolicyParams& params);
GaussianPolicyParams load_policy(const std::filesystem::path& path);

}  // namespace seqls
