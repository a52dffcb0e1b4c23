#pragma once

// PAC-Bayes learning objectives and certified bounds over Gaussian posteriors.
//
//   training objective:  R^h_{0:k}(pi_Q) + KL(Q||P) / (lambda N_k)
//   LS bound:            R^LS_{0:k}(pi_Q) + (KL(Q||P) + log(1/delta)) / (lambda N_k)
//   adjusted-LS bound:   sum_j (n_j/N_k) R(pi_j) + R^adj_{0:k}(pi_Q) + C_{0,k}(lambda)
//                        + (KL(Q||P) + log(1/delta)) / (lambda N_k)
//
// log(1/delta), C and the behavior-risk term do not depend on Q and are only
// part of the reported bound, never of the optimized objective.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "seqls/estimators.hpp"
#include "seqls/policy.hpp"

namespace seqls {

struct ObjectiveSpec {
  RegularizerSpec estimator = RegularizerSpec::ls(0.1);
  GaussianPolicyParams prior;
  double delta = 0.05;
  // Reporting flag only; the optimized objective never includes C.
  bool include_c_hat = false;

  void validate() const;
};

struct ObjectiveBreakdown {
  double empirical_risk = 0.0;
  double kl = 0.0;
  double value = 0.0;  // empirical_risk + kl / (lambda N)
};

/// p_i = pi_Q(a_i|x_i) for every record, keyed by record position.
std::vector<double> target_propensities(const LogDataset& dataset, const GaussianPolicyParams& q,
                                        const PropensityConfig& cfg);

ObjectiveBreakdown evaluate_objective(const LogDataset& dataset, const GaussianPolicyParams& q,
                                      const ObjectiveSpec& spec, const PropensityConfig& cfg);

/// Requires an ls estimator.
double ls_objective(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                    const PropensityConfig& cfg);
/// Requires an adj_ls estimator.
double adj_objective(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                     const PropensityConfig& cfg);

/// Upper bound on R(pi_Q) holding with probability 1 - delta. For adj_ls,
/// `behavior_risks[j]` must hold R(pi_j) for every round of the dataset.
double bound_value(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                   const PropensityConfig& cfg, std::span<const double> behavior_risks = {});

/// Gradient of evaluate_objective(...).value with respect to mu.
Eigen::MatrixXd objective_grad(const LogDataset& dataset, const GaussianPolicyParams& q,
                               const ObjectiveSpec& spec, const PropensityConfig& cfg);

/// Minibatch estimate of the objective: batch mean of h plus the full
/// KL / (lambda N). Adds the matching gradient into `grad`.
double objective_on_batch(const LogDataset& dataset, const GaussianPolicyParams& q, const ObjectiveSpec& spec,
                          const PropensityConfig& cfg, std::span<const std::size_t> batch, Eigen::MatrixXd& grad);

/// CRM-style objective used by the sequential CRM baseline: mean of clipped
/// IPS terms u_i plus variance_coeff * sqrt(sample variance of u).
struct CrmSpec {
  double max_weight = 10.0;
  double variance_coeff = 0.0;
};

double crm_objective_on_batch(const LogDataset& dataset, const GaussianPolicyParams& q, const CrmSpec& spec,
                              const PropensityConfig& cfg, std::span<const std::size_t> batch,
                              Eigen::MatrixXd& grad);

}  // namespace seqls
