#include "seqls/objectives.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace seqls {

void ObjectiveSpec::validate() const {
  const auto kind = estimator.kind();
  if (kind != RegularizerKind::ls && kind != RegularizerKind::adj_ls) {
    throw std::invalid_argument("objective: estimator must be ls or adj_ls");
  }
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("objective: delta must lie in (0, 1]");
  prior.validate();
}

namespace {

void check_inputs(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec) {
  spec.validate();
  q.validate();
  if (dataset.empty()) throw std::invalid_argument("objective: empty dataset");
  if (q.mu.rows() != spec.prior.mu.rows() || q.mu.cols() != spec.prior.mu.cols()) {
    throw std::invalid_argument("objective: posterior and prior shapes differ");
  }
}

// d KL / d mu_q for shared-scale isotropic Gaussians.
Eigen::MatrixXd kl_grad(const GaussianPolicyParams& q, const GaussianPolicyParams& p) {
  return (q.mu - p.mu) / (p.sigma * p.sigma);
}

}  // namespace

std::vector<double> target_propensities(const LogDataset& dataset, const GaussianPolicyParams& q,
                                        const PropensityConfig& cfg) {
  std::vector<double> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out[i] = propensity(q, dataset[i].context, dataset[i].action, cfg, i);
  }
  return out;
}

ObjectiveBreakdown evaluate_objective(const LogDataset& dataset, const GaussianPolicyParams& q,
                                      const ObjectiveSpec& spec, const PropensityConfig& cfg) {
  check_inputs(dataset, q, spec);
  ObjectiveBreakdown out;
  out.empirical_risk = empirical_risk(spec.estimator, dataset, target_propensities(dataset, q, cfg));
  out.kl = kl_gaussian(q, spec.prior);
  out.value = out.empirical_risk + out.kl / (spec.estimator.lambda() * static_cast<double>(dataset.size()));
  return out;
}

double ls_objective(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                    const PropensityConfig& cfg) {
  if (spec.estimator.kind() != RegularizerKind::ls) throw std::invalid_argument("ls_objective: estimator must be ls");
  return evaluate_objective(dataset, q, spec, cfg).value;
}

double adj_objective(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                     const PropensityConfig& cfg) {
  if (spec.estimator.kind() != RegularizerKind::adj_ls) {
    throw std::invalid_argument("adj_objective: estimator must be adj_ls");
  }
  return evaluate_objective(dataset, q, spec, cfg).value;
}

double bound_value(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                   const PropensityConfig& cfg, std::span<const double> behavior_risks) {
  const ObjectiveBreakdown obj = evaluate_objective(dataset, q, spec, cfg);
  const double lambda = spec.estimator.lambda();
  const double n = static_cast<double>(dataset.size());
  double bound = obj.value + std::log(1.0 / spec.delta) / (lambda * n);
  if (spec.estimator.kind() == RegularizerKind::adj_ls) {
    if (static_cast<int>(behavior_risks.size()) != dataset.num_rounds()) {
      throw std::invalid_argument("bound_value: adj_ls needs one behavior risk per round");
    }
    double weighted = 0.0;
    for (int j = 0; j < dataset.num_rounds(); ++j) {
      weighted += static_cast<double>(dataset.round_size(j)) / n * behavior_risks[j];
    }
    bound += weighted + c_hat_term(dataset, lambda);
  }
  return bound;
}

double objective_on_batch(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                          const PropensityConfig& cfg, std::span<const std::size_t> batch, Eigen::MatrixXd& grad) {
  const double lambda = spec.estimator.lambda();
  const double n = static_cast<double>(dataset.size());
  double emp = 0.0;
  if (!batch.empty()) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Eigen::VectorXd coeff_x(q.dim());
    for (const std::size_t i : batch) {
      const auto& r = dataset[i];
      const double slope = h_slope(spec.estimator, r.logged_propensity, r.cost);
      if (slope == 0.0) continue;  // zero cost: h and its gradient vanish
      const PropensityEval e = propensity_eval(q, r.context, r.action, cfg, i, true);
      emp += slope * e.value;
      if (e.inv_scale != 0.0) grad.noalias() += (inv_b * slope * e.inv_scale) * e.row_coeff * r.context.transpose();
    }
    emp *= inv_b;
  }
  const double kl = kl_gaussian(q, spec.prior);
  grad += kl_grad(q, spec.prior) / (lambda * n);
  return emp + kl / (lambda * n);
}

Eigen::MatrixXd objective_grad(const LogDataset& dataset, const GaussianPolicyParams& q,
                               const ObjectiveSpec& spec, const PropensityConfig& cfg) {
  check_inputs(dataset, q, spec);
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.mu.rows(), q.mu.cols());
  objective_on_batch(dataset, q, spec, cfg, all, grad);
  return grad;
}

double crm_objective_on_batch(const LogDataset& dataset, const GaussianPolicyParams& q, const CrmSpec& spec,
                              const PropensityConfig& cfg, std::span<const std::size_t> batch,
                              Eigen::MatrixXd& grad) {
  if (batch.empty()) return 0.0;
  const auto clip = RegularizerSpec::clipped_ips(spec.max_weight);
  const std::size_t b = batch.size();
  std::vector<double> u(b);
  std::vector<PropensityEval> evals(b);
  for (std::size_t t = 0; t < b; ++t) {
    const auto& r = dataset[batch[t]];
    evals[t] = propensity_eval(q, r.context, r.action, cfg, batch[t], true);
    u[t] = h_value(clip, evals[t].value, r.logged_propensity, r.cost);
  }
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(b);
  double var = 0.0;
  if (b > 1) {
    for (const double v : u) var += (v - mean) * (v - mean);
    var /= static_cast<double>(b - 1);
  }
  const double sd = std::sqrt(var);
  for (std::size_t t = 0; t < b; ++t) {
    const auto& r = dataset[batch[t]];
    double du = 1.0 / static_cast<double>(b);
    if (sd > 0.0) du += spec.variance_coeff * (u[t] - mean) / (static_cast<double>(b - 1) * sd);
    const double slope = h_slope(clip, r.logged_propensity, r.cost);
    const double w = du * slope * evals[t].inv_scale;
    if (w != 0.0) grad.noalias() += w * evals[t].row_coeff * r.context.transpose();
  }
  return mean + spec.variance_coeff * sd;
}

}  // namespace seqls
