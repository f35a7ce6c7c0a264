#include "dirkwso/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

namespace dirkwso {

ButcherTableau tableau_from_parameters(const Vec& x, int stages) {
  if (x.size() != stages * (stages + 1) / 2)
    throw std::invalid_argument("tableau_from_parameters: wrong parameter count");
  Mat A = Mat::Zero(stages, stages);
  int k = 0;
  for (int i = 0; i < stages; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = x(k++);
  return make_tableau(A, A.row(stages - 1).transpose(), "search-candidate");
}

Vec parameters_from_tableau(const ButcherTableau& t) {
  Vec x(t.s * (t.s + 1) / 2);
  int k = 0;
  for (int i = 0; i < t.s; ++i)
    for (int j = 0; j <= i; ++j) x(k++) = t.A(i, j);
  return x;
}

std::vector<std::pair<std::string, double>> constraint_residuals(const Vec& x,
                                                                 const SearchSpec& spec) {
  const ButcherTableau t = tableau_from_parameters(x, spec.stages);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [label, r] : order_condition_residuals(t, spec.order)) {
    // order_condition_residuals lists trees through order 4; keep those the
    // target order requires
    const int ord = (label == "e") ? 1 : (label == "c") ? 2
                    : (label == "c2" || label == "Ac") ? 3 : 4;
    if (ord <= spec.order) out.emplace_back("order:" + label, r);
  }
  for (int j = 2; j <= spec.qe; ++j) {
    const Vec tau = stage_order_vector(t, j).tau;
    const double nrm = tau.lpNorm<Eigen::Infinity>();
    double eig = 0.0;
    if (nrm > 0) {
      const Vec Atau = t.A * tau;
      const double mu = tau.dot(Atau) / tau.squaredNorm();
      eig = (Atau - mu * tau).lpNorm<Eigen::Infinity>();
    }
    out.emplace_back("eig" + std::to_string(j), eig);
    out.emplace_back("btau" + std::to_string(j), t.b.dot(tau));
  }
  return out;
}

namespace {

double coarse_stability_violation(const ButcherTableau& t, int samples) {
  // max(|R(iy)| - 1, 0) over a log grid; poles of R sit on the positive real
  // axis for positive-diagonal DIRK, so the imaginary axis is safe to sample.
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double y = std::pow(10.0, -2.0 + 8.0 * k / (samples - 1));
    const Complex r = stability_function(t, Complex(0.0, y));
    worst = std::max(worst, std::abs(r) - 1.0);
  }
  return worst;
}

struct PenaltyEval {
  double value = 0.0;
  double max_eq = 0.0;
};

PenaltyEval penalized_objective(const Vec& x, const SearchSpec& spec, double w_eq, double w_ineq,
                                bool include_objective = true) {
  PenaltyEval ev;
  ButcherTableau t;
  try {
    t = tableau_from_parameters(x, spec.stages);
  } catch (...) {
    ev.value = 1e30;
    return ev;
  }
  double pen = 0.0;
  for (const auto& [label, r] : constraint_residuals(x, spec)) {
    pen += w_eq * r * r;
    ev.max_eq = std::max(ev.max_eq, std::abs(r));
  }
  for (int i = 0; i < spec.stages; ++i) {
    const double v = std::max(0.0, spec.diag_min - t.A(i, i));
    pen += w_ineq * v * v;
  }
  double stab = 0.0;
  if (t.A.diagonal().minCoeff() > 0.0) {
    stab = coarse_stability_violation(t, spec.stability_samples);
  } else {
    stab = 1.0;  // poles off the right half axis not guaranteed; penalize
  }
  pen += w_ineq * stab * stab;
  ev.value = pen;
  if (include_objective) ev.value += truncation_error_norm(t, std::min(spec.order, 3));
  if (!std::isfinite(ev.value)) ev.value = 1e30;
  return ev;
}

// Standard Nelder-Mead on f, starting from x0 with the given initial spread.
Vec nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, double spread,
                int max_iters, std::mt19937_64& rng) {
  const int n = static_cast<int>(x0.size());
  std::vector<Vec> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  for (int k = 1; k <= n; ++k) xs[k](k - 1) += spread * jitter(rng);
  for (int k = 0; k <= n; ++k) fs[k] = f(xs[k]);

  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int k = 0; k <= n; ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Vec> xs2(n + 1);
    std::vector<double> fs2(n + 1);
    for (int k = 0; k <= n; ++k) {
      xs2[k] = xs[idx[k]];
      fs2[k] = fs[idx[k]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  order();
  for (int it = 0; it < max_iters; ++it) {
    if (fs[n] - fs[0] < 1e-15 * (1.0 + std::abs(fs[0]))) break;
    Vec centroid = Vec::Zero(n);
    for (int k = 0; k < n; ++k) centroid += xs[k];
    centroid /= n;
    const Vec xr = centroid + (centroid - xs[n]);
    const double fr = f(xr);
    if (fr < fs[0]) {
      const Vec xe = centroid + 2.0 * (centroid - xs[n]);
      const double fe = f(xe);
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
    } else {
      const Vec xc = centroid + 0.5 * ((fr < fs[n] ? xr : xs[n]) - centroid);
      const double fc = f(xc);
      if (fc < std::min(fr, fs[n])) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        for (int k = 1; k <= n; ++k) {
          xs[k] = xs[0] + 0.5 * (xs[k] - xs[0]);
          fs[k] = f(xs[k]);
        }
      }
    }
    order();
  }
  return xs[0];
}

bool verify_candidate(const ButcherTableau& t, const SearchSpec& spec, SchemeReport& report) {
  AnalysisOptions opt;
  opt.tol = spec.verify_tol;
  report = analyze(t, opt);
  if (report.classical_order < spec.order) return false;
  if (report.wso_eigenvector < spec.qe) return false;
  // the eigenvector criterion implies this much weak stage order; a candidate
  // where the two detectors disagree is too marginal to emit
  if (report.wso < spec.qe) return false;
  if (!report.a_stable) return false;
  for (int i = 0; i < t.s; ++i)
    if (t.A(i, i) < spec.diag_min * (1 - 1e-9)) return false;
  return true;
}

}  // namespace

SearchResult search(const SearchSpec& spec) {
  if (spec.stages < 1 || spec.order < 1 || spec.order > 4)
    throw std::invalid_argument("search: need 1 <= order <= 4 and at least one stage");
  if (spec.qe > 3)
    throw std::invalid_argument(
        "search: the eigenvector criterion is limited to order 3 for DIRK schemes with "
        "invertible A; qe = " + std::to_string(spec.qe) + " is infeasible");
  if (spec.qe < 1) throw std::invalid_argument("search: qe must be >= 1");

  const int n = spec.stages * (spec.stages + 1) / 2;
  SearchResult result;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_eq_seen = std::numeric_limits<double>::infinity();

  for (int start = 0; start < spec.multistarts; ++start) {
    std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + start + 1);
    std::uniform_real_distribution<double> coeff(-spec.coeff_bound, spec.coeff_bound);
    std::uniform_real_distribution<double> diag(spec.diag_min, 1.0);
    Vec x(n);
    int k = 0;
    for (int i = 0; i < spec.stages; ++i)
      for (int j = 0; j <= i; ++j) x(k++) = (j == i) ? diag(rng) : coeff(rng);

    double w_eq = spec.eq_weight, w_ineq = spec.ineq_weight;
    for (int round = 0; round < spec.penalty_rounds; ++round) {
      auto f = [&](const Vec& p) { return penalized_objective(p, spec, w_eq, w_ineq).value; };
      x = nelder_mead(f, x, round == 0 ? 0.3 : 0.03, spec.iterations, rng);
      w_eq *= 100.0;
      w_ineq *= 100.0;
    }
    // feasibility polish: drive the constraint violation alone to zero so
    // the verification pass has headroom below its tolerance; the square
    // root keeps the objective well above the simplex stopping threshold
    // while residuals still sit near 1e-8
    auto fv = [&](const Vec& p) {
      return std::sqrt(penalized_objective(p, spec, 1.0, 1.0, false).value);
    };
    x = nelder_mead(fv, x, 1e-3, spec.iterations, rng);

    const PenaltyEval ev = penalized_objective(x, spec, 0.0, 0.0);  // objective only
    best_eq_seen = std::min(best_eq_seen,
                            penalized_objective(x, spec, 1.0, 0.0).max_eq);
    ButcherTableau cand;
    try {
      cand = tableau_from_parameters(x, spec.stages);
    } catch (...) {
      continue;
    }
    SchemeReport rep;
    if (!verify_candidate(cand, spec, rep)) continue;
    if (ev.value < best_obj) {
      best_obj = ev.value;
      cand.name = "searched-s" + std::to_string(spec.stages) + "-p" + std::to_string(spec.order) +
                  "-qe" + std::to_string(spec.qe);
      cand.claimed_order = spec.order;
      cand.claimed_wso = spec.qe;
      result.tableau = make_tableau(cand.A, cand.b, cand.name, cand.claimed_order,
                                    cand.claimed_wso);
      result.report = rep;
      result.objective = ev.value;
      result.winning_start = start;
      result.success = true;
    }
  }

  result.best_constraint_residual = best_eq_seen;
  if (!result.success) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", best_eq_seen);
    result.failure_reason = "no verified point found in " + std::to_string(spec.multistarts) +
                            " starts; best equality residual seen = " + buf;
  }
  return result;
}

}  // namespace dirkwso
