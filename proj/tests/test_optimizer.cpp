#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "seqls/optimizer.hpp"

using namespace seqls;

TEST_SUITE("optimizer") {
  TEST_CASE("zero gradient at t = 1 gives zero delta") {
    AdamState s(2, 3);
    OptimizerConfig cfg;
    CHECK(adam_step(s, Eigen::MatrixXd::Zero(2, 3), cfg).isZero());
    CHECK(s.t == 1);
  }

  TEST_CASE("constant gradient: delta tends to -lr sign(g)") {
    AdamState s(1, 3);
    OptimizerConfig cfg;
    cfg.lr = 0.01;
    Eigen::MatrixXd g(1, 3);
    g << 2.0, -0.5, 1e-3;
    Eigen::MatrixXd delta;
    for (int t = 0; t < 5000; ++t) delta = adam_step(s, g, cfg);
    CHECK(delta(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(delta(0, 1) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(delta(0, 2) == doctest::Approx(-0.01).epsilon(1e-4));
  }

  TEST_CASE("identical inputs give identical states") {
    AdamState a(2, 2), b(2, 2);
    OptimizerConfig cfg;
    Eigen::MatrixXd g(2, 2);
    g << 0.3, -1.0, 2.0, 0.1;
    for (int t = 0; t < 10; ++t) {
      CHECK(adam_step(a, g * t, cfg) == adam_step(b, g * t, cfg));
    }
    CHECK(a.m == b.m);
    CHECK(a.v == b.v);
    CHECK_THROWS(adam_step(a, Eigen::MatrixXd::Zero(3, 3), cfg));
  }

  TEST_CASE("config validation") {
    OptimizerConfig c;
    c.lr = 0.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.beta1 = 1.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.beta2 = -0.1;
    CHECK_THROWS(c.validate());
    c = {};
    c.epochs = -1;
    CHECK_THROWS(c.validate());
  }

  TEST_CASE("quadratic converges within 2000 steps at lr 1e-2") {
    Eigen::MatrixXd target(2, 3);
    target << 1.0, -2.0, 0.5, 3.0, 0.0, -1.5;
    const BatchObjective f = [&](const Eigen::MatrixXd& x, const BatchRequest&, Eigen::MatrixXd& g) {
      g = 2.0 * (x - target);
      return (x - target).squaredNorm();
    };
    OptimizerConfig cfg;
    cfg.lr = 1e-2;
    cfg.epochs = 2000;
    const auto r = minimize(f, Eigen::MatrixXd::Zero(2, 3), 0, cfg);
    CHECK(r.steps == 2000);
    CHECK((r.params - target).norm() <= 1e-2);
    CHECK(r.epoch_objectives.size() == 2000);
  }

  TEST_CASE("zero epochs returns init") {
    Eigen::MatrixXd init = Eigen::MatrixXd::Constant(2, 2, 0.7);
    OptimizerConfig cfg;
    cfg.epochs = 0;
    int calls = 0;
    const BatchObjective f = [&](const Eigen::MatrixXd&, const BatchRequest&, Eigen::MatrixXd&) {
      ++calls;
      return 0.0;
    };
    const auto r = minimize(f, init, 10, cfg);
    CHECK(r.params == init);
    CHECK(calls == 0);
  }

  TEST_CASE("minibatches cover every item once per epoch, shuffled by seed") {
    OptimizerConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.seed = 9;
    std::vector<std::vector<std::size_t>> seen(3);
    const BatchObjective f = [&](const Eigen::MatrixXd&, const BatchRequest& b, Eigen::MatrixXd&) {
      CHECK(b.indices.size() <= 4);
      for (const auto i : b.indices) seen[b.epoch].push_back(i);
      return 1.0;
    };
    const auto r = minimize(f, Eigen::MatrixXd::Zero(1, 1), 10, cfg);
    CHECK(r.steps == 9);
    for (const auto& e : seen) {
      CHECK(e.size() == 10);
      CHECK(std::set<std::size_t>(e.begin(), e.end()).size() == 10);
    }
    CHECK(seen[0] != seen[1]);

    std::vector<std::vector<std::size_t>> again(3);
    const BatchObjective g = [&](const Eigen::MatrixXd&, const BatchRequest& b, Eigen::MatrixXd&) {
      for (const auto i : b.indices) again[b.epoch].push_back(i);
      return 1.0;
    };
    minimize(g, Eigen::MatrixXd::Zero(1, 1), 10, cfg);
    CHECK(again == seen);
  }

  TEST_CASE("non-finite objective aborts") {
    OptimizerConfig cfg;
    const BatchObjective f = [](const Eigen::MatrixXd&, const BatchRequest&, Eigen::MatrixXd&) {
      return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(minimize(f, Eigen::MatrixXd::Zero(1, 1), 5, cfg), std::runtime_error);
    const BatchObjective g = [](const Eigen::MatrixXd&, const BatchRequest&, Eigen::MatrixXd& grad) {
      grad(0, 0) = std::numeric_limits<double>::infinity();
      return 0.0;
    };
    CHECK_THROWS_AS(minimize(g, Eigen::MatrixXd::Zero(1, 1), 5, cfg), std::runtime_error);
  }
}
