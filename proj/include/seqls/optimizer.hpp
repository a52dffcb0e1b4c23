#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace seqls {

struct OptimizerConfig {
  double lr = 1e-3;
  int epochs = 10;
  // Minibatch size; 0 means full batch (one step per epoch).
  std::size_t batch_size = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  long t = 0;

  AdamState() = default;
  AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}
};

/// One bias-corrected Adam update. Returns the parameter delta to add.
Eigen::MatrixXd adam_step(AdamState& state, const Eigen::MatrixXd& grad, const OptimizerConfig& cfg);

/// A minibatch request handed to the objective: which items, and which epoch
/// (objectives key their Monte Carlo noise on it).
struct BatchRequest {
  int epoch = 0;
  std::span<const std::size_t> indices;
};

/// Returns the objective on the batch and writes its gradient into `grad`
/// (already sized like the parameters).
using BatchObjective =
    std::function<double(const Eigen::MatrixXd& params, const BatchRequest& batch, Eigen::MatrixXd& grad)>;

struct MinimizeResult {
  Eigen::MatrixXd params;
  // Mean minibatch objective seen during each epoch.
  std::vector<double> epoch_objectives;
  long steps = 0;
};

/// Adam over `num_items` data items split into shuffled minibatches. With
/// num_items = 0 every epoch is a single step on an empty batch. Throws
/// std::runtime_error on a non-finite objective, gradient or parameter.
MinimizeResult minimize(const BatchObjective& objective, Eigen::MatrixXd init, std::size_t num_items,
                        const OptimizerConfig& cfg);

}  // namespace seqls
