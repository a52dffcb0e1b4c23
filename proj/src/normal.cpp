#include "seqls/normal.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace seqls {

namespace {

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
// polynomials: off-diagonal sqrt(k), zero diagonal. The squared first
// components of the eigenvectors are the weights of the N(0,1) measure.
GaussHermiteRule build_rule(int n) {
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
    return rule;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("gauss_hermite_rule: eigen decomposition failed");
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = v * v;
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  // Symmetrize to kill the O(eps) asymmetry of the eigensolver.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_rule: n must be >= 1");
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

void counter_normals(std::uint64_t seed, std::uint64_t key, std::vector<double>& out) {
  const std::uint64_t base = derive_seed(seed, key);
  std::uint64_t counter = 0;
  auto uniform = [&] {
    // 53-bit uniform in (0, 1).
    const std::uint64_t bits = mix64(base + 0x9e3779b97f4a7c15ULL * ++counter) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  };
  const std::size_t n = out.size();
  std::size_t i = 0;
  while (i < n) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    out[i++] = r * std::cos(t);
    if (i < n) out[i++] = r * std::sin(t);
  }
}

}  // namespace seqls
