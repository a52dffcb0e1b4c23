#include "seqls/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "seqls/normal.hpp"

namespace seqls {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("optimizer: lr must be > 0");
  if (epochs < 0) throw std::invalid_argument("optimizer: epochs must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("optimizer: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("optimizer: beta2 must lie in [0, 1)");
  if (!(eps_adam > 0.0)) throw std::invalid_argument("optimizer: eps_adam must be > 0");
}

Eigen::MatrixXd adam_step(AdamState& state, const Eigen::MatrixXd& grad, const OptimizerConfig& cfg) {
  if (state.m.size() == 0) state = AdamState(grad.rows(), grad.cols());
  if (state.m.rows() != grad.rows() || state.m.cols() != grad.cols()) {
    throw std::invalid_argument("adam_step: gradient shape does not match state");
  }
  ++state.t;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  return -cfg.lr * (state.m / c1).array() / ((state.v / c2).array().sqrt() + cfg.eps_adam);
}

MinimizeResult minimize(const BatchObjective& objective, Eigen::MatrixXd init, std::size_t num_items,
                        const OptimizerConfig& cfg) {
  cfg.validate();
  MinimizeResult result;
  result.params = std::move(init);
  if (cfg.epochs == 0) return result;

  std::vector<std::size_t> order(num_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= num_items;
  const std::size_t batch = full_batch ? std::max<std::size_t>(num_items, 1) : cfg.batch_size;

  AdamState state(result.params.rows(), result.params.cols());
  Eigen::MatrixXd grad(result.params.rows(), result.params.cols());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!full_batch) {
      std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
      std::shuffle(order.begin(), order.end(), rng);
    }
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < std::max<std::size_t>(num_items, 1); start += batch) {
      const std::size_t end = std::min(start + batch, num_items);
      const BatchRequest request{epoch, std::span<const std::size_t>(order).subspan(
                                            std::min(start, num_items), end - std::min(start, num_items))};
      grad.setZero();
      const double value = objective(result.params, request, grad);
      if (!std::isfinite(value) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "minimize: non-finite objective or gradient at epoch " << epoch << ", step "
            << result.steps << " (objective " << value << ")";
        throw std::runtime_error(msg.str());
      }
      result.params += adam_step(state, grad, cfg);
      if (!result.params.allFinite()) {
        throw std::runtime_error("minimize: parameters became non-finite at step " +
                                 std::to_string(result.steps));
      }
      ++result.steps;
      total += value;
      ++batches;
    }
    result.epoch_objectives.push_back(total / batches);
  }
  return result;
}

}  // namespace seqls
