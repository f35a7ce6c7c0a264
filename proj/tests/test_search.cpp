#include <doctest.h>

#include <cmath>
#include <random>

#include "dirkwso/search.hpp"

using namespace dirkwso;

TEST_CASE("parameter packing round-trips") {
  const auto t = registry_get("wso3-p3");
  const Vec x = parameters_from_tableau(t);
  const auto back = tableau_from_parameters(x, t.s);
  CHECK((back.A - t.A).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.b - t.b).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("published high-wso schemes are near-zeros of their own constraint sets") {
  {
    SearchSpec spec;
    spec.stages = 4;
    spec.order = 3;
    spec.qe = 3;
    const Vec x = parameters_from_tableau(registry_get("wso3-p3"));
    for (const auto& [label, r] : constraint_residuals(x, spec)) {
      INFO(label);
      CHECK(std::abs(r) < 1e-9);
    }
  }
  {
    SearchSpec spec;
    spec.stages = 4;
    spec.order = 3;
    spec.qe = 2;
    const Vec x = parameters_from_tableau(registry_get("wso2-p3"));
    for (const auto& [label, r] : constraint_residuals(x, spec)) {
      INFO(label);
      CHECK(std::abs(r) < 1e-9);
    }
  }
  {
    SearchSpec spec;
    spec.stages = 6;
    spec.order = 4;
    spec.qe = 3;
    const Vec x = parameters_from_tableau(registry_get("wso3-p4"));
    for (const auto& [label, r] : constraint_residuals(x, spec)) {
      INFO(label);
      CHECK(std::abs(r) < 1e-9);
    }
  }
}

TEST_CASE("backward Euler satisfies the one-stage first-order constraints exactly") {
  SearchSpec spec;
  spec.stages = 1;
  spec.order = 1;
  spec.qe = 1;
  const Vec x = parameters_from_tableau(registry_get("backward-euler"));
  for (const auto& [label, r] : constraint_residuals(x, spec)) CHECK(std::abs(r) < 1e-15);
}

TEST_CASE("constraint residuals stay finite on random parameter vectors") {
  SearchSpec spec;
  spec.stages = 4;
  spec.order = 3;
  spec.qe = 2;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x(10);
    for (int i = 0; i < 10; ++i) x(i) = dist(rng);
    for (const auto& [label, r] : constraint_residuals(x, spec)) CHECK(std::isfinite(r));
  }
}

TEST_CASE("eigenvector orders beyond 3 are rejected before searching") {
  SearchSpec spec;
  spec.stages = 5;
  spec.order = 3;
  spec.qe = 4;
  try {
    search(spec);
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("infeasible one-stage order-3 request reports failure") {
  SearchSpec spec;
  spec.stages = 1;
  spec.order = 3;
  spec.qe = 1;
  spec.multistarts = 4;
  spec.iterations = 400;
  const auto res = search(spec);
  CHECK_FALSE(res.success);
  CHECK_FALSE(res.failure_reason.empty());
}

TEST_CASE("search finds a verified 4-stage order-3 scheme with eigenvector order 2") {
  SearchSpec spec;
  spec.stages = 4;
  spec.order = 3;
  spec.qe = 2;
  spec.seed = 3;
  spec.multistarts = 12;
  spec.iterations = 2000;
  const auto res = search(spec);
  REQUIRE(res.success);
  const auto rep = analyze(*res.tableau);
  CHECK(rep.classical_order >= 3);
  CHECK(rep.wso_eigenvector >= 2);
  CHECK(rep.a_stable);
  CHECK(res.tableau->A.diagonal().minCoeff() >= 1e-3 * (1 - 1e-9));
}

TEST_CASE("search is deterministic for a fixed seed") {
  SearchSpec spec;
  spec.stages = 3;
  spec.order = 2;
  spec.qe = 2;
  spec.seed = 11;
  spec.multistarts = 6;
  spec.iterations = 800;
  const auto a = search(spec);
  const auto b = search(spec);
  REQUIRE(a.success == b.success);
  if (a.success) {
    CHECK(a.winning_start == b.winning_start);
    CHECK((a.tableau->A - b.tableau->A).lpNorm<Eigen::Infinity>() == 0.0);
  }
}
