#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "seqls/normal.hpp"

using namespace seqls;

TEST_SUITE("normal") {
  TEST_CASE("cdf and pdf reference values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.0 / std::sqrt(2.0)) == doctest::Approx(0.760249938906523268841).epsilon(1e-14));
    CHECK(normal_cdf(-1.959963984540054) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(normal_pdf(0.0) == doctest::Approx(0.398942280401432677940).epsilon(1e-15));
    for (double z = -5.0; z <= 5.0; z += 0.25) CHECK(normal_cdf(z) + normal_cdf(-z) == doctest::Approx(1.0));
  }

  TEST_CASE("Gauss-Hermite rule integrates Gaussian moments") {
    for (const int n : {8, 16, 64}) {
      const auto& rule = gauss_hermite_rule(n);
      REQUIRE(rule.nodes.size() == static_cast<std::size_t>(n));
      double w = 0.0, m1 = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = rule.nodes[i];
        w += rule.weights[i];
        m1 += rule.weights[i] * x;
        m2 += rule.weights[i] * x * x;
        m4 += rule.weights[i] * std::pow(x, 4);
        m6 += rule.weights[i] * std::pow(x, 6);
        CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[n - 1 - i]).epsilon(1e-12));
      }
      CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(m1) < 1e-13);
      CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(m6 == doctest::Approx(15.0).epsilon(1e-11));
    }
  }

  TEST_CASE("Gauss-Hermite expectation of Phi squared") {
    // E[Phi(Z)^2] = 1/3 for Z ~ N(0,1).
    const auto& rule = gauss_hermite_rule(64);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(normal_cdf(rule.nodes[i]), 2);
    CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  }

  TEST_CASE("rule cache returns the same object") {
    CHECK(&gauss_hermite_rule(32) == &gauss_hermite_rule(32));
    CHECK_THROWS(gauss_hermite_rule(0));
  }

  TEST_CASE("counter normals are keyed and roughly standard") {
    std::vector<double> a(4096), b(4096), c(4096);
    counter_normals(7, 3, a);
    counter_normals(7, 3, b);
    counter_normals(7, 4, c);
    CHECK(a == b);
    CHECK(a != c);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    double var = 0.0;
    for (const double v : a) var += (v - mean) * (v - mean);
    var /= a.size() - 1;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(4096.0));
    CHECK(var == doctest::Approx(1.0).epsilon(0.08));
  }

  TEST_CASE("derived seeds differ across streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 100; ++a) seen.insert(derive_seed(1, a));
    CHECK(seen.size() == 100);
    CHECK(derive_seed(1, 2, 3) == derive_seed(derive_seed(1, 2), 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  }
}
