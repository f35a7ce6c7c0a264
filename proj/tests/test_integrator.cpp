#include <doctest.h>

#include <cmath>

#include "dirkwso/integrator.hpp"
#include "dirkwso/problems.hpp"

using namespace dirkwso;

namespace {

Vec scalar(double v) {
  Vec u(1);
  u(0) = v;
  return u;
}

// One DIRK step on the linear scalar problem u' = lambda u + gamma(t) by a
// dense solve of the full s x s stage system; independent of the stagewise
// Newton path it checks.
double linear_step_oracle(const ButcherTableau& t, double lambda, const std::function<double(double)>& gamma,
                          double tn, double un, double dt) {
  const double zeta = lambda * dt;
  Vec gvec(t.s);
  for (int i = 0; i < t.s; ++i) gvec(i) = gamma(tn + t.c(i) * dt);
  const Mat M = Mat::Identity(t.s, t.s) - zeta * t.A;
  const Vec U = M.partialPivLu().solve(Vec::Constant(t.s, un) + dt * t.A * gvec);
  return un + dt * t.b.dot(lambda * U + gvec);
}

}  // namespace

TEST_CASE("backward Euler on exponential decay") {
  const auto be = registry_get("backward-euler");
  const auto sys = decay(-1.0);
  const Vec u1 = dirk_step(be, sys, 0.0, scalar(1.0), 1.0);
  CHECK(u1(0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("any scheme leaves a constant field unchanged on u' = 0") {
  ODESystem sys;
  sys.dim = 2;
  sys.rhs = [](double, const Vec&, Vec& f) { f.setZero(); };
  sys.jacobian = [](double, const Vec&, Mat& J) { J.setZero(); };
  Vec u0(2);
  u0 << 3.25, -1.5;
  for (const char* name : {"wso2-p3", "wso3-p4", "edirk-so2-p3"}) {
    const Vec u1 = dirk_step(registry_get(name), sys, 0.3, u0, 0.7);
    CHECK((u1 - u0).lpNorm<Eigen::Infinity>() < 1e-13);
  }
}

TEST_CASE("one step matches the dense stage-system oracle on the stiff linear problem") {
  const double lambda = -1e4;
  const auto sys = prothero_robinson(lambda);
  auto gamma = [lambda](double t) { return -lambda * pr_phi(t) + pr_phi_derivative(t, 1); };
  const double tn = 0.3, dt = 1e-2, un = 0.9;
  for (const char* name : {"wso2-p3", "wso3-p3", "wso3-p4", "wso1-p3"}) {
    const auto t = registry_get(name);
    const double expected = linear_step_oracle(t, lambda, gamma, tn, un, dt);
    const Vec got = dirk_step(t, sys, tn, scalar(un), dt);
    INFO(name);
    CHECK(got(0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("integrate reproduces (1+dt)^-n on decay") {
  const auto be = registry_get("backward-euler");
  const auto sys = decay(-1.0);
  const int n = 64;
  const double dt = 1.0 / n;
  const auto res = integrate(be, sys, 0.0, scalar(1.0), 1.0, dt);
  CHECK(res.steps == n);
  CHECK_FALSE(res.shortened_final);
  CHECK(res.u(0) == doctest::Approx(std::pow(1.0 + dt, -n)).epsilon(1e-13));
}

TEST_CASE("integrate achieves small stiff error on the linear test problem") {
  const auto res = integrate(registry_get("wso3-p3"), prothero_robinson(-1e4), 0.0,
                             scalar(pr_phi(0.0)), 10.0, 1e-2);
  CHECK(std::abs(res.u(0) - pr_phi(10.0)) < 1e-4);
}

TEST_CASE("final partial step is shortened and recorded") {
  const auto sys = decay(-1.0);
  const auto res = integrate(registry_get("wso1-p3"), sys, 0.0, scalar(1.0), 1.0, 0.3);
  CHECK(res.steps == 4);
  CHECK(res.shortened_final);
  CHECK(res.final_dt == doctest::Approx(0.1));
  CHECK(res.u(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-2));
}

TEST_CASE("a single Newton iteration suffices on linear systems") {
  const auto t = registry_get("wso3-p3");
  // scalar linear stiff problem
  {
    DirkStepper stepper(t, prothero_robinson(-50.0));
    stepper.step(0.0, scalar(pr_phi(0.0)), 0.1);
    const auto& hist = stepper.stats().last_residual_history;
    REQUIRE(hist.size() == 2);  // entry residual + residual after one update
    CHECK(hist[1] < 1e-14);
  }
  // linear grid problem
  {
    GridSpec grid; grid.n_cells = 32;
    grid.bc = GridSpec::Boundary::dirichlet;
    const auto sys = schrodinger_mol(2 * 3.14159265358979323846, 5.0, grid);
    DirkStepper stepper(t, sys);
    stepper.step(0.0, sys.exact(0.0), 1e-3);
    const auto& hist = stepper.stats().last_residual_history;
    REQUIRE(hist.size() == 2);
    CHECK(hist[1] < 1e-13);
  }
}

TEST_CASE("constant-Jacobian systems reuse stage factorizations across steps") {
  const auto t = registry_get("wso3-p3");
  DirkStepper stepper(t, prothero_robinson(-50.0));
  Vec u = scalar(pr_phi(0.0));
  for (int k = 0; k < 10; ++k) u = stepper.step(0.1 * k, u, 0.1);
  CHECK(stepper.stats().factorizations == t.s);  // one per distinct diagonal entry
}

TEST_CASE("newton failure carries the residual history and step index") {
  // stage equation U = 1 + dt U^2 with dt = 1 has no real root near 1
  ODESystem sys;
  sys.dim = 1;
  sys.rhs = [](double, const Vec& u, Vec& f) { f(0) = u(0) * u(0); };
  sys.jacobian = [](double, const Vec& u, Mat& J) { J(0, 0) = 2.0 * u(0); };
  try {
    integrate(registry_get("backward-euler"), sys, 0.0, scalar(1.0), 2.0, 1.0);
    FAIL("expected a throw");
  } catch (const IntegrationError& e) {
    CHECK(e.step == 0);
    CHECK(std::string(e.what()).find("Newton") != std::string::npos);
  }
  try {
    dirk_step(registry_get("backward-euler"), sys, 0.0, scalar(1.0), 1.0);
    FAIL("expected a throw");
  } catch (const NewtonFailure& e) {
    CHECK(e.residual_history.size() > 3);
    CHECK(e.stage == 0);
  }
}

TEST_CASE("singular iteration matrix is reported as a stage failure") {
  ODESystem sys;
  sys.dim = 1;
  sys.rhs = [](double, const Vec& u, Vec& f) { f(0) = 0.5 * u(0) * u(0); };
  sys.jacobian = [](double, const Vec& u, Mat& J) { J(0, 0) = u(0); };
  // backward Euler with dt = 1 at u = 1: I - dt J = 0
  try {
    dirk_step(registry_get("backward-euler"), sys, 0.0, scalar(1.0), 1.0);
    FAIL("expected a throw");
  } catch (const NewtonFailure& e) {
    CHECK(std::string(e.what()).find("singular") != std::string::npos);
  }
}

TEST_CASE("banded and dense jacobian paths agree") {
  GridSpec grid;
  grid.n_cells = 64;
  grid.bc = GridSpec::Boundary::neumann;
  auto banded_sys = burgers_mol(0.1, grid);
  REQUIRE(banded_sys.banded());

  // dense twin of the same system
  ODESystem dense_sys = banded_sys;
  dense_sys.kl = dense_sys.ku = -1;
  auto banded_jac = banded_sys.jacobian_banded;
  const int kl = banded_sys.kl, ku = banded_sys.ku, dim = banded_sys.dim;
  dense_sys.jacobian = [banded_jac, kl, ku, dim](double t, const Vec& u, Mat& J) {
    BandedMatrix B(dim, kl, ku);
    banded_jac(t, u, B);
    J = B.dense();
  };
  const Vec u0 = banded_sys.exact(0.0);
  const auto tab = registry_get("wso2-p3");
  const Vec a = dirk_step(tab, banded_sys, 0.0, u0, 1.0 / 64);
  const Vec d = dirk_step(tab, dense_sys, 0.0, u0, 1.0 / 64);
  CHECK((a - d).lpNorm<Eigen::Infinity>() < 1e-11);
}

TEST_CASE("argument validation") {
  const auto sys = decay(-1.0);
  CHECK_THROWS_AS(dirk_step(registry_get("backward-euler"), sys, 0.0, scalar(1.0), -0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate(registry_get("backward-euler"), sys, 0.0, scalar(1.0), -1.0, 0.1),
                  std::invalid_argument);
  Mat A(2, 2);
  A << 0.5, 0.5, 0.0, 0.5;  // upper triangular: not DIRK
  CHECK_THROWS_AS(dirk_step(make_tableau(A, Vec::Ones(2)), sys, 0.0, scalar(1.0), 0.1),
                  std::invalid_argument);
}
