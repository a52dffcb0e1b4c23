#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "seqls/env.hpp"
#include "seqls/objectives.hpp"

using namespace seqls;

namespace {

GaussianPolicyParams random_params(int k, int d, std::mt19937_64& rng, double scale = 0.7) {
  std::normal_distribution<double> n(0.0, scale);
  GaussianPolicyParams p = GaussianPolicyParams::zeros(k, d);
  for (int a = 0; a < k; ++a)
    for (int i = 0; i < d; ++i) p.mu(a, i) = n(rng);
  return p;
}

// Interactions logged by `behavior` on `env`, propensities from quadrature.
LogDataset logged_data(const Environment& env, const GaussianPolicyParams& behavior, std::size_t n, int rounds,
                       std::mt19937_64& rng, bool zero_costs = false) {
  LogDataset data;
  const auto quad = PropensityConfig::quadrature();
  for (int j = 0; j < rounds; ++j) {
    std::vector<LoggedInteraction> batch(n);
    for (auto& r : batch) {
      r.round = j;
      r.context = env.sample_context(rng);
      r.action = sample_action(behavior, r.context, rng);
      r.cost = zero_costs ? 0.0 : sample_cost(env, r.context, r.action, rng);
      r.logged_propensity = propensity(behavior, r.context, r.action, quad);
    }
    data.append_round(std::move(batch));
  }
  return data;
}

}  // namespace

TEST_SUITE("objectives") {
  const auto quad = PropensityConfig::quadrature();

  TEST_CASE("Q = P") {
    const Environment env = make_synthetic_env(4, 3, 0.2, 1, 100);
    std::mt19937_64 rng(1);
    const auto p = random_params(3, 4, rng);
    for (const auto est : {RegularizerSpec::ls(0.1), RegularizerSpec::adj_ls(0.1)}) {
      const ObjectiveSpec spec{est, p};
      const LogDataset zero = logged_data(env, p, 50, 1, rng, true);
      CHECK(evaluate_objective(zero, p, spec, quad).value == 0.0);
      CHECK(objective_grad(zero, p, spec, quad).isZero());
      const LogDataset data = logged_data(env, p, 50, 2, rng);
      const auto b = evaluate_objective(data, p, spec, quad);
      CHECK(b.kl == 0.0);
      CHECK(b.value == empirical_risk(est, data, target_propensities(data, p, quad)));
    }
  }

  TEST_CASE("objective decomposes and duplicating data halves the KL share") {
    const Environment env = make_synthetic_env(4, 3, 0.2, 2, 100);
    std::mt19937_64 rng(2);
    const auto prior = random_params(3, 4, rng);
    const auto q = random_params(3, 4, rng);
    const LogDataset data = logged_data(env, prior, 40, 1, rng);
    std::vector<LoggedInteraction> doubled(data.records().begin(), data.records().end());
    doubled.insert(doubled.end(), data.records().begin(), data.records().end());
    LogDataset twice;
    twice.append_round(doubled);
    const ObjectiveSpec spec{RegularizerSpec::ls(0.2), prior};
    const auto one = evaluate_objective(data, q, spec, quad);
    const auto two = evaluate_objective(twice, q, spec, quad);
    CHECK(one.value == doctest::Approx(one.empirical_risk + one.kl / (0.2 * 40)).epsilon(1e-15));
    CHECK(two.empirical_risk == doctest::Approx(one.empirical_risk).epsilon(1e-13));
    CHECK(two.value - two.empirical_risk == doctest::Approx(0.5 * (one.value - one.empirical_risk)).epsilon(1e-13));
  }

  TEST_CASE("adjusted and plain objectives agree as lambda -> 0") {
    const Environment env = make_synthetic_env(4, 3, 0.2, 3, 100);
    std::mt19937_64 rng(3);
    const auto prior = random_params(3, 4, rng);
    const auto q = random_params(3, 4, rng);
    const LogDataset data = logged_data(env, prior, 60, 1, rng);
    double last = 1e9;
    for (const double lambda : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const ObjectiveSpec ls{RegularizerSpec::ls(lambda), prior};
      const ObjectiveSpec adj{RegularizerSpec::adj_ls(lambda), prior};
      const double gap = std::abs(adj_objective(data, q, adj, quad) - ls_objective(data, q, ls, quad));
      CHECK(gap <= last);
      last = gap;
    }
    CHECK(last < 1e-3);
    const ObjectiveSpec ls{RegularizerSpec::ls(0.1), prior};
    CHECK_THROWS(adj_objective(data, q, ls, quad));
    CHECK_THROWS(ls_objective(data, q, ObjectiveSpec{RegularizerSpec::adj_ls(0.1), prior}, quad));
    CHECK_THROWS(evaluate_objective(data, q, ObjectiveSpec{RegularizerSpec::ips(), prior}, quad));
  }

  TEST_CASE("the correction flag never enters the objective") {
    const Environment env = make_synthetic_env(4, 3, 0.2, 4, 100);
    std::mt19937_64 rng(4);
    const auto prior = random_params(3, 4, rng);
    const auto q = random_params(3, 4, rng);
    const LogDataset data = logged_data(env, prior, 30, 1, rng);
    ObjectiveSpec a{RegularizerSpec::adj_ls(0.3), prior};
    ObjectiveSpec b = a;
    b.include_c_hat = true;
    CHECK(adj_objective(data, q, a, quad) == adj_objective(data, q, b, quad));
  }

  TEST_CASE("bound bookkeeping") {
    const Environment env = make_synthetic_env(4, 3, 0.2, 5, 100);
    std::mt19937_64 rng(5);
    const auto prior = random_params(3, 4, rng);
    const auto q = random_params(3, 4, rng);
    const LogDataset data = logged_data(env, prior, 25, 2, rng);
    const double n = 50.0;
    ObjectiveSpec ls{RegularizerSpec::ls(0.2), prior, 1.0};
    CHECK(bound_value(data, q, ls, quad) == evaluate_objective(data, q, ls, quad).value);
    ls.delta = 0.05;
    CHECK(bound_value(data, q, ls, quad) - evaluate_objective(data, q, ls, quad).value ==
          doctest::Approx(std::log(20.0) / (0.2 * n)).epsilon(1e-12));

    ObjectiveSpec adj{RegularizerSpec::adj_ls(0.2), prior, 1.0};
    const std::vector<double> risks{-0.3, -0.5};
    const double expected = evaluate_objective(data, q, adj, quad).value + 0.5 * -0.3 + 0.5 * -0.5 +
                            c_hat_term(data, 0.2);
    CHECK(bound_value(data, q, adj, quad, risks) == doctest::Approx(expected).epsilon(1e-13));
    CHECK_THROWS(bound_value(data, q, adj, quad));
    CHECK_THROWS(bound_value(data, q, adj, quad, std::vector<double>{-0.3}));
  }

  TEST_CASE("LS bound covers the on-policy risk of the uniform policy") {
    // Q = P = uniform, on-policy uniform data, K = 10, eps = 0.2, lambda = 0.1,
    // N = 10^4, delta = 0.05; R(uniform) = -0.26.
    const Environment env = make_synthetic_env(5, 10, 0.2, 6, 100);
    const auto uniform = GaussianPolicyParams::zeros(10, 5);
    const ObjectiveSpec spec{RegularizerSpec::ls(0.1), uniform, 0.05};
    int covered = 0;
    for (int rep = 0; rep < 100; ++rep) {
      std::mt19937_64 rng(1000 + rep);
      std::uniform_int_distribution<int> pick(0, 9);
      std::vector<LoggedInteraction> batch(10000);
      for (auto& r : batch) {
        r.context = env.sample_context(rng);
        r.action = pick(rng);
        r.cost = sample_cost(env, r.context, r.action, rng);
        r.logged_propensity = 0.1;
      }
      LogDataset data;
      data.append_round(std::move(batch));
      covered += bound_value(data, uniform, spec, quad) >= -0.26;
    }
    CHECK(covered >= 95);
  }

  TEST_CASE("objective gradient matches central differences") {
    const Environment env = make_synthetic_env(3, 4, 0.2, 7, 100);
    std::mt19937_64 rng(7);
    for (int t = 0; t < 10; ++t) {
      const auto prior = random_params(4, 3, rng);
      const auto q = random_params(4, 3, rng);
      const LogDataset data = logged_data(env, prior, 15, 1 + t % 2, rng);
      const ObjectiveSpec spec{t % 2 ? RegularizerSpec::adj_ls(0.4) : RegularizerSpec::ls(0.4), prior};
      const Eigen::MatrixXd g = objective_grad(data, q, spec, quad);
      Eigen::MatrixXd fd(4, 3);
      const double h = 1e-5;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) {
          auto plus = q, minus = q;
          plus.mu(r, c) += h;
          minus.mu(r, c) -= h;
          fd(r, c) = (evaluate_objective(data, plus, spec, quad).value -
                      evaluate_objective(data, minus, spec, quad).value) /
                     (2 * h);
        }
      }
      CHECK((g - fd).norm() <= 1e-4 * fd.norm());
    }
  }

  TEST_CASE("KL-only gradient has the closed form") {
    const Environment env = make_synthetic_env(3, 4, 0.2, 8, 100);
    std::mt19937_64 rng(8);
    const auto prior = random_params(4, 3, rng);
    const auto q = random_params(4, 3, rng);
    const LogDataset data = logged_data(env, prior, 20, 1, rng, true);
    const ObjectiveSpec spec{RegularizerSpec::ls(0.25), prior};
    const Eigen::MatrixXd g = objective_grad(data, q, spec, quad);
    CHECK(g.isApprox((q.mu - prior.mu) / (prior.sigma * prior.sigma * 0.25 * 20), 1e-15));
  }

  TEST_CASE("minibatch objective: batch mean plus full KL share") {
    const Environment env = make_synthetic_env(3, 4, 0.2, 9, 100);
    std::mt19937_64 rng(9);
    const auto prior = random_params(4, 3, rng);
    const auto q = random_params(4, 3, rng);
    const LogDataset data = logged_data(env, prior, 30, 1, rng);
    const ObjectiveSpec spec{RegularizerSpec::ls(0.3), prior};
    std::vector<std::size_t> all(30);
    std::iota(all.begin(), all.end(), std::size_t{0});
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 3);
    CHECK(objective_on_batch(data, q, spec, quad, all, g) ==
          doctest::Approx(evaluate_objective(data, q, spec, quad).value).epsilon(1e-13));
    const std::vector<std::size_t> first{0, 1, 2};
    const LogDataset head = [&] {
      LogDataset d;
      d.append_round({data[0], data[1], data[2]});
      return d;
    }();
    g.setZero();
    const double batch_value = objective_on_batch(data, q, spec, quad, first, g);
    const double expected = empirical_risk(spec.estimator, head, target_propensities(head, q, quad)) +
                            kl_gaussian(q, prior) / (0.3 * 30);
    CHECK(batch_value == doctest::Approx(expected).epsilon(1e-13));
  }

  TEST_CASE("CRM objective gradient matches central differences") {
    const Environment env = make_synthetic_env(3, 4, 0.2, 10, 100);
    std::mt19937_64 rng(10);
    const auto behavior = random_params(4, 3, rng);
    const LogDataset data = logged_data(env, behavior, 40, 1, rng);
    std::vector<std::size_t> all(40);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const CrmSpec crm{10.0, std::sqrt(1.0 / 40.0)};
    for (int t = 0; t < 5; ++t) {
      const auto q = random_params(4, 3, rng);
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 3), scratch = g;
      crm_objective_on_batch(data, q, crm, quad, all, g);
      Eigen::MatrixXd fd(4, 3);
      const double h = 1e-5;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) {
          auto plus = q, minus = q;
          plus.mu(r, c) += h;
          minus.mu(r, c) -= h;
          fd(r, c) = (crm_objective_on_batch(data, plus, crm, quad, all, scratch) -
                      crm_objective_on_batch(data, minus, crm, quad, all, scratch)) /
                     (2 * h);
        }
      }
      CHECK((g - fd).norm() <= 1e-4 * fd.norm());
    }
  }
}
