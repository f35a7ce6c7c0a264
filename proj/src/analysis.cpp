#include "dirkwso/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dirkwso {

namespace {

// Elementwise power with the 0^0 = 1 convention, so EDIRK first rows
// (c_1 = 0) produce c^0 = e rather than NaN.
Vec elem_pow(const Vec& v, int k) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = (k == 0) ? 1.0 : std::pow(v(i), k);
  return out;
}

}  // namespace

StageOrderVector stage_order_vector(const ButcherTableau& t, int j) {
  if (j < 1) throw std::invalid_argument("stage_order_vector: j must be >= 1");
  StageOrderVector out;
  out.j = j;
  out.tau = t.A * elem_pow(t.c, j - 1) - elem_pow(t.c, j) / static_cast<double>(j);
  return out;
}

int quadrature_order(const ButcherTableau& t, double tol, int jmax) {
  int p = 0;
  for (int j = 1; j <= jmax; ++j) {
    double res = t.b.dot(elem_pow(t.c, j - 1)) - 1.0 / j;
    if (std::abs(res) >= tol) break;
    p = j;
  }
  return p;
}

int stage_order(const ButcherTableau& t, double tol, int jmax) {
  int qhat = 0;
  for (int j = 1; j <= jmax; ++j) {
    if (stage_order_vector(t, j).tau.lpNorm<Eigen::Infinity>() >= tol) break;
    qhat = j;
  }
  return std::min(quadrature_order(t, tol, jmax), qhat);
}

int wso(const ButcherTableau& t, int jmax, double tol) {
  int q = 0;
  for (int j = 1; j <= jmax; ++j) {
    Vec v = stage_order_vector(t, j).tau;
    for (int l = 0; l < t.s; ++l) {
      if (std::abs(t.b.dot(v)) >= tol) {
        // never below the stage order: vanishing tau lie in any admissible
        // subspace, so threshold effects must not undercut it
        return std::max(q, std::min(stage_order(t, tol, jmax), jmax));
      }
      v = t.A * v;
    }
    q = j;
  }
  return q;
}

int wso_eigenvector_order(const ButcherTableau& t, int jmax, double tol) {
  int q = 0;
  for (int j = 1; j <= jmax; ++j) {
    const Vec tau = stage_order_vector(t, j).tau;
    const double norm = tau.lpNorm<Eigen::Infinity>();
    // a tau at rounding level counts as the zero vector (always the case for
    // j = 1, where c = A e makes it vanish identically)
    const double zero_floor =
        1e-13 * std::max(1.0, (t.A * t.c.array().pow(j - 1).matrix()).lpNorm<Eigen::Infinity>());
    if (norm > zero_floor) {
      const Vec Atau = t.A * tau;
      const double mu = tau.dot(Atau) / tau.squaredNorm();  // least squares
      if ((Atau - mu * tau).lpNorm<Eigen::Infinity>() >= tol * norm) return q;
      if (std::abs(t.b.dot(tau)) >= tol) return q;
    }
    q = j;
  }
  return q;
}

std::vector<std::pair<std::string, double>> order_condition_residuals(const ButcherTableau& t,
                                                                      int p) {
  if (p > 4) throw std::invalid_argument("order_condition_residuals: implemented through order 4");
  const Vec e = Vec::Ones(t.s);
  const Vec c2 = elem_pow(t.c, 2), c3 = elem_pow(t.c, 3);
  const Vec Ac = t.A * t.c;
  std::vector<std::pair<std::string, double>> out;
  out.emplace_back("e", t.b.dot(e) - 1.0);
  if (p >= 2) out.emplace_back("c", t.b.dot(t.c) - 0.5);
  if (p >= 3) {
    out.emplace_back("c2", t.b.dot(c2) - 1.0 / 3.0);
    out.emplace_back("Ac", t.b.dot(Ac) - 1.0 / 6.0);
  }
  if (p >= 4) {
    out.emplace_back("c3", t.b.dot(c3) - 0.25);
    out.emplace_back("cAc", t.b.dot(t.c.cwiseProduct(Ac)) - 0.125);
    out.emplace_back("Ac2", t.b.dot(t.A * c2) - 1.0 / 12.0);
    out.emplace_back("A2c", t.b.dot(t.A * Ac) - 1.0 / 24.0);
  }
  return out;
}

namespace {

int tree_order(const std::string& label) {
  if (label == "e") return 1;
  if (label == "c") return 2;
  if (label == "c2" || label == "Ac") return 3;
  return 4;
}

}  // namespace

int classical_order(const ButcherTableau& t, double tol) {
  const auto res = order_condition_residuals(t, 4);
  int p = 0;
  for (int order = 1; order <= 4; ++order) {
    for (const auto& [label, r] : res)
      if (tree_order(label) == order && std::abs(r) >= tol) return p;
    p = order;
  }
  return p;
}

Complex stability_function(const ButcherTableau& t, Complex zeta) {
  using CMat = Eigen::MatrixXcd;
  using CVec = Eigen::VectorXcd;
  CMat M = CMat::Identity(t.s, t.s) - zeta * t.A.cast<Complex>();
  Eigen::PartialPivLU<CMat> lu(M);
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < 1e-14 * scale) {
    std::ostringstream os;
    os << "stability_function: I - zeta A is singular at zeta = (" << zeta.real() << ", "
       << zeta.imag() << "); poles sit at zeta = 1/a_ii";
    throw SingularStabilityMatrix(os.str());
  }
  CVec x = lu.solve(CVec::Ones(t.s));
  return 1.0 + zeta * t.b.cast<Complex>().dot(x);
}

double r_at_infinity(const ButcherTableau& t) {
  if (!t.is_invertible())
    throw SingularStabilityMatrix("r_at_infinity: A is singular, R(inf) needs invertible A");
  Vec x = t.A.partialPivLu().solve(Vec::Ones(t.s));
  return 1.0 - t.b.dot(x);
}

AStabilityResult is_a_stable(const ButcherTableau& t, const AxisSampling& sampling) {
  if (sampling.count < 1) throw std::invalid_argument("is_a_stable: empty sampling spec");
  AStabilityResult res{true, 1.0, 0.0};  // R(0) = 1 always
  const double lo = std::log10(sampling.y_min), hi = std::log10(sampling.y_max);
  for (int k = 0; k < sampling.count; ++k) {
    const double y =
        std::pow(10.0, lo + (hi - lo) * (sampling.count == 1 ? 0.0
                                                             : static_cast<double>(k) /
                                                                   (sampling.count - 1)));
    for (double sign : {1.0, -1.0}) {
      const double a = std::abs(stability_function(t, Complex(0.0, sign * y)));
      if (a > res.max_abs_r) {
        res.max_abs_r = a;
        res.argmax_y = sign * y;
      }
    }
  }
  res.a_stable = res.max_abs_r <= 1.0 + 1e-12;
  return res;
}

Complex g_residual(const ButcherTableau& t, int j, Complex zeta) {
  using CMat = Eigen::MatrixXcd;
  using CVec = Eigen::VectorXcd;
  const Vec tau = stage_order_vector(t, j).tau;
  CMat M = CMat::Identity(t.s, t.s) - zeta * t.A.cast<Complex>();
  Eigen::PartialPivLU<CMat> lu(M);
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < 1e-14 * scale) {
    std::ostringstream os;
    os << "g_residual: I - zeta A is singular at zeta = (" << zeta.real() << ", " << zeta.imag()
       << "); poles sit at zeta = 1/a_ii";
    throw SingularStabilityMatrix(os.str());
  }
  CVec x = lu.solve(tau.cast<Complex>());
  return zeta * t.b.cast<Complex>().dot(x);
}

double wso2x2_residual(const Wso2x2Point& p, int j) {
  if (j < 2) throw std::invalid_argument("wso2x2_residual: j must be >= 2");
  const double x = p.x, y = p.y;
  return (1.0 - 1.0 / j) * std::pow(x, j) +
         (y - x) * (std::pow(x, j - 1) + std::pow(1.0 + y, j - 1) * y -
                    std::pow(1.0 + y, j) / j);
}

double truncation_error_norm(const ButcherTableau& t, int p) {
  if (p < 1 || p > 3)
    throw std::invalid_argument("truncation_error_norm: p must be in 1..3");
  double sq = 0.0;
  for (const auto& [label, r] : order_condition_residuals(t, p + 1))
    if (tree_order(label) == p + 1) sq += r * r;
  return std::sqrt(sq);
}

SchemeReport analyze(const ButcherTableau& t, const AnalysisOptions& opt) {
  SchemeReport r;
  r.name = t.name;
  r.stages = t.s;
  r.classical_order = classical_order(t, opt.tol);
  r.quadrature_order = quadrature_order(t, opt.tol);
  r.stage_order = stage_order(t, opt.tol);
  r.wso = wso(t, opt.jmax, opt.tol);
  r.wso_eigenvector = wso_eigenvector_order(t, opt.jmax, opt.tol);
  r.dirk = t.is_dirk();
  r.stiffly_accurate = t.is_stiffly_accurate();
  const auto st = is_a_stable(t);
  r.a_stable = st.a_stable;
  r.max_abs_r_imaginary_axis = st.max_abs_r;
  if (t.is_invertible()) r.r_at_infinity = r_at_infinity(t);
  r.order_condition_residuals = order_condition_residuals(t, opt.order_cap);
  for (int j = 1; j <= opt.jmax; ++j)
    r.stage_order_residual_norms.emplace_back(
        j, stage_order_vector(t, j).tau.lpNorm<Eigen::Infinity>());
  return r;
}

std::string format_report(const SchemeReport& r) {
  std::ostringstream os;
  os << "scheme            " << (r.name.empty() ? "(unnamed)" : r.name) << "\n"
     << "stages            " << r.stages << "\n"
     << "classical order   " << r.classical_order << "\n"
     << "quadrature order  " << r.quadrature_order << "\n"
     << "stage order       " << r.stage_order << "\n"
     << "weak stage order  " << r.wso << "\n"
     << "wso (eigenvector) " << r.wso_eigenvector << "\n"
     << "dirk              " << (r.dirk ? "yes" : "no") << "\n"
     << "stiffly accurate  " << (r.stiffly_accurate ? "yes" : "no") << "\n"
     << "A-stable          " << (r.a_stable ? "yes" : "no")
     << "  (max sampled |R(iy)| = " << r.max_abs_r_imaginary_axis << ")\n"
     << "R(inf)            ";
  if (std::isnan(r.r_at_infinity))
    os << "n/a (singular A)";
  else
    os << r.r_at_infinity;
  os << "\norder-condition residuals:\n";
  for (const auto& [label, v] : r.order_condition_residuals)
    os << "  " << label << std::string(label.size() < 4 ? 4 - label.size() : 1, ' ') << v << "\n";
  os << "stage-order residual norms ||tau^(j)||inf:\n";
  for (const auto& [j, v] : r.stage_order_residual_norms) os << "  j=" << j << "  " << v << "\n";
  return os.str();
}

std::string format_report_kv(const SchemeReport& r) {
  std::ostringstream os;
  os << "name = " << r.name << "\n"
     << "stages = " << r.stages << "\n"
     << "classical_order = " << r.classical_order << "\n"
     << "quadrature_order = " << r.quadrature_order << "\n"
     << "stage_order = " << r.stage_order << "\n"
     << "wso = " << r.wso << "\n"
     << "wso_eigenvector = " << r.wso_eigenvector << "\n"
     << "dirk = " << r.dirk << "\n"
     << "stiffly_accurate = " << r.stiffly_accurate << "\n"
     << "a_stable = " << r.a_stable << "\n"
     << "max_abs_r_imaginary_axis = " << r.max_abs_r_imaginary_axis << "\n"
     << "r_at_infinity = " << r.r_at_infinity << "\n";
  for (const auto& [label, v] : r.order_condition_residuals)
    os << "residual_" << label << " = " << v << "\n";
  for (const auto& [j, v] : r.stage_order_residual_norms)
    os << "tau_norm_" << j << " = " << v << "\n";
  return os.str();
}

}  // namespace dirkwso
