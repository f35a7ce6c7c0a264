#include <doctest.h>

#include <cmath>
#include <random>

#include "dirkwso/analysis.hpp"

using namespace dirkwso;

namespace {

ButcherTableau implicit_midpoint() {
  Mat A(1, 1);
  A << 0.5;
  Vec b(1);
  b << 1.0;
  return make_tableau(A, b, "implicit-midpoint");
}

ButcherTableau explicit_euler_tableau() {
  Mat A(1, 1);
  A << 0.0;
  Vec b(1);
  b << 1.0;
  return make_tableau(A, b, "explicit-euler");
}

}  // namespace

TEST_CASE("stage order vectors") {
  const auto t = registry_get("wso2-p3");
  const auto tau1 = stage_order_vector(t, 1);
  CHECK(tau1.tau.lpNorm<Eigen::Infinity>() < 1e-15);

  // first component of tau^(2) equals a11^2/2 for any lower-triangular tableau
  const auto tau2 = stage_order_vector(t, 2);
  CHECK(tau2.tau(0) == doctest::Approx(0.5 * t.A(0, 0) * t.A(0, 0)).epsilon(1e-14));
  CHECK(tau2.tau(0) == doctest::Approx(1.80514e-4).epsilon(1e-5));

  const auto be = registry_get("backward-euler");
  CHECK(stage_order_vector(be, 2).tau(0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(stage_order_vector(t, 0), std::invalid_argument);
}

TEST_CASE("stage and quadrature order") {
  CHECK(stage_order(registry_get("wso3-p3")) == 1);
  CHECK(stage_order(registry_get("backward-euler")) == 1);
  CHECK(stage_order(registry_get("edirk-so2-p3")) == 2);  // explicit first stage, tau2 = 0
  CHECK(quadrature_order(registry_get("wso2-p3")) == 3);
  CHECK(quadrature_order(registry_get("wso3-p4")) == 4);
}

TEST_CASE("weak stage order of the built-in schemes") {
  CHECK(wso(registry_get("wso2-p3")) == 2);
  CHECK(wso(registry_get("wso3-p3")) == 3);
  CHECK(wso(registry_get("wso3-p4")) == 3);
  CHECK(wso(registry_get("wso1-p3")) == 1);
  for (const auto& e : registry()) {
    INFO(e.name);
    CHECK(wso(e.tableau) >= stage_order(e.tableau));
  }
}

TEST_CASE("eigenvector criterion order") {
  CHECK(wso_eigenvector_order(registry_get("wso3-p3")) == 3);
  CHECK(wso_eigenvector_order(registry_get("wso2-p3")) == 2);
  // backward Euler: tau^(2) = [1/2] is trivially an eigenvector of A = [1],
  // but b^T tau^(2) = 1/2 stops the criterion at 1.
  CHECK(wso_eigenvector_order(registry_get("backward-euler"), 2) == 1);
}

TEST_CASE("equal-time tableau with b orthogonal to e passes all eigenvector orders") {
  Mat A(2, 2);
  A << 0.5, 0.0, 0.25, 0.25;  // c = (1/2, 1/2)
  Vec b(2);
  b << 1.0, -1.0;  // b^T e = 0, so b^T tau^(j) = 0 for every j
  const auto t = make_tableau(A, b);
  REQUIRE(t.is_equal_time());
  CHECK(wso_eigenvector_order(t, 6) == 6);
  CHECK(wso(t, 6) == 6);
}

TEST_CASE("order condition residuals") {
  const auto r3 = order_condition_residuals(registry_get("wso3-p3"));
  REQUIRE(r3.size() == 8);
  double max_low = 0, max_p4 = 0;
  for (const auto& [label, v] : r3) {
    if (label == "e" || label == "c" || label == "c2" || label == "Ac")
      max_low = std::max(max_low, std::abs(v));
    else
      max_p4 = std::max(max_p4, std::abs(v));
  }
  CHECK(max_low < 1e-9);
  CHECK(max_p4 > 1e-3);

  for (const auto& [label, v] : order_condition_residuals(registry_get("wso3-p4")))
    CHECK(std::abs(v) < 1e-9);

  for (const auto& [label, v] : order_condition_residuals(registry_get("backward-euler")))
    if (label == "c") CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("classical order detection") {
  CHECK(classical_order(registry_get("wso2-p3")) == 3);
  CHECK(classical_order(registry_get("wso3-p4")) == 4);
  CHECK(classical_order(registry_get("backward-euler")) == 1);
  CHECK(classical_order(registry_get("wso1-p4")) == 4);
  CHECK(classical_order(registry_get("edirk-so2-p3")) == 3);
}

TEST_CASE("stability function values") {
  for (const char* name : {"wso2-p3", "wso3-p4", "backward-euler"})
    CHECK(std::abs(stability_function(registry_get(name), {0.0, 0.0}) - 1.0) < 1e-14);

  CHECK(stability_function(registry_get("backward-euler"), {-1.0, 0.0}).real() ==
        doctest::Approx(0.5));
  CHECK(std::abs(stability_function(registry_get("wso2-p3"), {-1e6, 0.0})) < 1e-4);

  // pole of backward Euler at zeta = 1
  CHECK_THROWS_AS(stability_function(registry_get("backward-euler"), {1.0, 0.0}),
                  SingularStabilityMatrix);
}

TEST_CASE("r_at_infinity") {
  for (const char* name : {"wso2-p3", "wso3-p3", "wso3-p4", "wso1-p3", "wso1-p4"}) {
    INFO(name);
    CHECK(std::abs(r_at_infinity(registry_get(name))) < 1e-12);
  }
  CHECK(r_at_infinity(registry_get("backward-euler")) == doctest::Approx(0.0));
  CHECK(r_at_infinity(implicit_midpoint()) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(r_at_infinity(registry_get("edirk-so2-p3")), SingularStabilityMatrix);
}

TEST_CASE("imaginary-axis stability sampling") {
  for (const char* name : {"wso2-p3", "wso3-p3", "wso3-p4", "backward-euler"}) {
    const auto res = is_a_stable(registry_get(name));
    INFO(name);
    CHECK(res.a_stable);
    CHECK(res.max_abs_r <= 1.0 + 1e-12);
  }
  CHECK_FALSE(is_a_stable(explicit_euler_tableau()).a_stable);
  CHECK_THROWS_AS(is_a_stable(registry_get("backward-euler"), AxisSampling{0, 1, 10}),
                  std::invalid_argument);
}

TEST_CASE("transfer term cancels identically below the weak stage order") {
  // g^(j)(zeta) = zeta b^T (I - zeta A)^{-1} tau^(j) vanishes for every zeta
  // when j is at most the weak stage order; measured relative to the
  // cancellation-free magnitude of the same contraction it sits at the
  // coefficient rounding level.
  std::vector<Complex> zetas;
  for (int k = 0; k < 40; ++k) {
    const double m = std::pow(10.0, -2.0 + 10.0 * k / 39.0);
    zetas.emplace_back(-m, 0.0);
    zetas.emplace_back(0.0, m);
  }
  for (const auto& e : registry()) {
    const auto& t = e.tableau;
    const int q = wso(t);
    for (int j = 2; j <= q; ++j) {
      const Vec tau = stage_order_vector(t, j).tau;
      if (tau.lpNorm<Eigen::Infinity>() < 1e-13) continue;  // vanishes outright
      for (const auto z : zetas) {
        Eigen::MatrixXcd M =
            Eigen::MatrixXcd::Identity(t.s, t.s) - z * t.A.cast<Complex>();
        const Eigen::VectorXcd x = M.partialPivLu().solve(tau.cast<Complex>());
        const Vec x_abs = x.cwiseAbs();
        const double no_cancel = std::abs(z) * t.b.cwiseAbs().dot(x_abs);
        INFO(e.name << " j=" << j);
        CHECK(std::abs(g_residual(t, j, z)) <= 1e-8 * no_cancel);
      }
    }
  }
}

TEST_CASE("g residual values") {
  const auto t2 = registry_get("wso2-p3");
  // below the weak stage order the transfer term vanishes to coefficient noise
  for (double x : {-0.1, -10.0, -1e4}) {
    CHECK(std::abs(g_residual(t2, 2, {x, 0.0})) < 1e-8);
  }
  // one order past it the term is O(1)
  CHECK(std::abs(g_residual(t2, 3, {-100.0, 0.0})) == doctest::Approx(2.050189394e-3).epsilon(1e-6));
  CHECK(std::abs(g_residual(t2, 3, {-1.0, 0.0})) > 1e-3);

  // tau^(1) = 0 makes g^(1) identically zero
  CHECK(std::abs(g_residual(registry_get("wso3-p3"), 1, {-7.0, 0.0})) < 1e-14);

  const auto t3 = registry_get("wso3-p3");
  for (double x : {-0.5, -50.0}) CHECK(std::abs(g_residual(t3, 3, {x, 0.0})) < 1e-8);
}

TEST_CASE("2x2 eigenvector-condition residual") {
  const double s2 = std::sqrt(2.0);
  const Wso2x2Point p1{-4 + 3 * s2, s2 - 1};
  const Wso2x2Point p2{-(s2 + 1) * (s2 + 2), -(s2 + 1)};
  for (int j : {2, 3}) {
    CHECK(std::abs(wso2x2_residual(p1, j)) < 1e-12);
    CHECK(std::abs(wso2x2_residual(p2, j)) < 1e-12);
  }
  CHECK(std::abs(wso2x2_residual(p1, 4)) > 1e-3);
  CHECK(std::abs(wso2x2_residual(p2, 4)) > 1e-3);

  // the equal-time family y = x - 1 satisfies the condition for every j
  for (int k = 0; k < 50; ++k) {
    const double x = -2.0 + 4.0 * k / 49.0;
    for (int j : {2, 3, 4}) CHECK(std::abs(wso2x2_residual({x, x - 1.0}, j)) < 1e-12);
  }
  CHECK_THROWS_AS(wso2x2_residual(p1, 1), std::invalid_argument);
}

TEST_CASE("2x2 residual scales like mu^j under coefficient rescaling") {
  // the unnormalized second-row condition, before dividing out a21
  auto raw = [](double a11, double a21, double a22, int j) {
    return (1.0 - 1.0 / j) * std::pow(a11, j) * a21 +
           (a22 - a11) * (std::pow(a11, j - 1) * a21 + std::pow(a21 + a22, j - 1) * a22 -
                          std::pow(a21 + a22, j) / j);
  };
  // each term carries j powers of the coefficients times one factor of a21,
  // so the condition is homogeneous of degree j+1
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const double a11 = dist(rng), a21 = dist(rng), a22 = dist(rng), mu = dist(rng);
    for (int j : {2, 3, 4}) {
      const double lhs = raw(mu * a11, mu * a21, mu * a22, j);
      const double rhs = std::pow(mu, j + 1) * raw(a11, a21, a22, j);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
      if (std::abs(a21) > 1e-6) {
        CHECK(raw(a11, a21, a22, j) ==
              doctest::Approx(std::pow(a21, j + 1) * wso2x2_residual({a11 / a21, a22 / a21}, j))
                  .epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("truncation error norms") {
  CHECK(truncation_error_norm(registry_get("wso3-p4"), 3) < 1e-9);
  CHECK(truncation_error_norm(registry_get("backward-euler"), 1) == doctest::Approx(0.5));
  CHECK(truncation_error_norm(registry_get("wso2-p3"), 3) ==
        doctest::Approx(7.434514187e-2).epsilon(1e-6));
  CHECK_THROWS_AS(truncation_error_norm(registry_get("wso2-p3"), 4), std::invalid_argument);
}

TEST_CASE("analyze fills the report") {
  const auto r2 = analyze(registry_get("wso2-p3"));
  CHECK(r2.classical_order == 3);
  CHECK(r2.stage_order == 1);
  CHECK(r2.wso == 2);
  CHECK(r2.wso_eigenvector == 2);
  CHECK(r2.a_stable);
  CHECK(std::abs(r2.r_at_infinity) < 1e-10);
  CHECK(r2.stiffly_accurate);

  const auto r4 = analyze(registry_get("wso3-p4"));
  CHECK(r4.classical_order == 4);
  CHECK(r4.stage_order == 1);
  CHECK(r4.wso == 3);
  CHECK(r4.wso_eigenvector == 3);

  const auto rb = analyze(registry_get("backward-euler"));
  CHECK(rb.classical_order == 1);
  CHECK(rb.stage_order == 1);
  CHECK(rb.wso == 1);

  const auto redirk = analyze(registry_get("edirk-so2-p3"));
  CHECK(redirk.classical_order == 3);
  CHECK(redirk.stage_order == 2);
  CHECK(std::isnan(redirk.r_at_infinity));  // singular A

  const std::string text = format_report(r2);
  CHECK(text.find("weak stage order") != std::string::npos);
  const std::string kvtext = format_report_kv(r2);
  CHECK(kvtext.find("wso = 2") != std::string::npos);
}

TEST_CASE("stiffly accurate invertible tableaux have vanishing R at infinity") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> low(-1.0, 1.0), diag(0.1, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int s = 2 + static_cast<int>(rng() % 5);
    Mat A = Mat::Zero(s, s);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < i; ++j) A(i, j) = low(rng);
      A(i, i) = diag(rng);
    }
    const auto t = make_tableau(A, A.row(s - 1).transpose());
    REQUIRE(t.is_stiffly_accurate());
    CHECK(std::abs(r_at_infinity(t)) < 1e-12);
  }
}

TEST_CASE("random invertible dirk tableaux never report eigenvector order 4") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> low(-1.0, 1.0), diag(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int s = 3 + static_cast<int>(rng() % 4);
    Mat A = Mat::Zero(s, s);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < i; ++j) A(i, j) = low(rng);
      A(i, i) = diag(rng);
    }
    Vec b(s);
    for (int i = 0; i < s; ++i) b(i) = low(rng);
    const auto t = make_tableau(A, b);
    if (t.is_equal_time()) continue;
    CHECK(wso_eigenvector_order(t, 6) <= 3);
  }
}
