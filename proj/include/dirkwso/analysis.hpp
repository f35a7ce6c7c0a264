#pragma once

#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "dirkwso/tableau.hpp"

namespace dirkwso {

using Complex = std::complex<double>;

/// tau^(j) = A c^(j-1) - c^j / j with elementwise powers (0^0 = 1).
/// tau^(1) vanishes identically because c = A e.
struct StageOrderVector {
  int j;
  Vec tau;
};

StageOrderVector stage_order_vector(const ButcherTableau& t, int j);

struct AnalysisOptions {
  double tol = 1e-8;   // order / weak-stage-order detection threshold
  int jmax = 6;        // cap on stage-order style searches
  int order_cap = 4;   // rooted-tree order conditions implemented through order 4
};

/// Stage order q = min(quadrature order, largest j with tau^(i) = 0 for i <= j).
int stage_order(const ButcherTableau& t, double tol = 1e-8, int jmax = 12);
/// Quadrature order: largest j with |b^T c^(i-1) - 1/i| < tol for all i <= j.
int quadrature_order(const ButcherTableau& t, double tol = 1e-8, int jmax = 12);

/// Weak stage order: largest q <= jmax with b^T A^l tau^(j) = 0 (below tol)
/// for all 1 <= j <= q, 0 <= l <= s-1. At least the stage order.
int wso(const ButcherTableau& t, int jmax = 6, double tol = 1e-8);

/// Eigenvector criterion order: largest q <= jmax such that for each j <= q
/// there is mu_j with ||A tau^(j) - mu_j tau^(j)||inf < tol ||tau^(j)||inf
/// (mu_j by least squares; tau^(j) = 0 passes trivially) and |b^T tau^(j)| < tol.
int wso_eigenvector_order(const ButcherTableau& t, int jmax = 6, double tol = 1e-8);

/// Residuals of the eight rooted-tree order conditions through order 4:
/// b^Te-1, b^Tc-1/2, b^Tc^2-1/3, b^TAc-1/6, b^Tc^3-1/4, b^T(c.Ac)-1/8,
/// b^TAc^2-1/12, b^TA^2c-1/24. Labels name the tree contraction.
std::vector<std::pair<std::string, double>> order_condition_residuals(const ButcherTableau& t,
                                                                      int p = 4);

/// Largest p <= 4 with all residuals of order <= p below tol.
int classical_order(const ButcherTableau& t, double tol = 1e-8);

/// R(zeta) = 1 + zeta b^T (I - zeta A)^{-1} e via one linear solve.
/// Throws SingularStabilityMatrix at poles (zeta = 1/a_ii for DIRK).
Complex stability_function(const ButcherTableau& t, Complex zeta);

struct SingularStabilityMatrix : std::runtime_error {
  explicit SingularStabilityMatrix(const std::string& w) : std::runtime_error(w) {}
};

/// R at infinity = 1 - b^T A^{-1} e. Requires invertible A.
double r_at_infinity(const ButcherTableau& t);

/// Imaginary-axis sampling used to certify A-stability.
struct AxisSampling {
  int count = 4001;       // log-spaced magnitudes, both signs, plus y = 0
  double y_min = 1e-4;
  double y_max = 1e8;
};

struct AStabilityResult {
  bool a_stable;
  double max_abs_r;   // max sampled |R(iy)|
  double argmax_y;
};

AStabilityResult is_a_stable(const ButcherTableau& t, const AxisSampling& sampling = {});

/// g^(j)(zeta) = zeta b^T (I - zeta A)^{-1} tau^(j): the stage-error transfer
/// term. Vanishes identically for all j up to the weak stage order.
Complex g_residual(const ButcherTableau& t, int j, Complex zeta);

/// Rescaled coordinates (x, y) = (a11/a21, a22/a21) of the leading 2x2 block
/// of a DIRK tableau; the eigenvector condition for that block depends only
/// on these two ratios.
struct Wso2x2Point {
  double x;
  double y;
};

/// Residual of the second-row eigenvector condition for the 2x2 block at
/// (x, y), normalized to a21 = 1:
///   (1 - 1/j) x^j + (y - x) (x^(j-1) + (1+y)^(j-1) y - (1+y)^j / j).
/// Zero along the equal-time line y = x - 1 for every j.
double wso2x2_residual(const Wso2x2Point& p, int j);

/// Euclidean norm of the order-(p+1) rooted-tree residuals, p <= 3.
double truncation_error_norm(const ButcherTableau& t, int p);

struct SchemeReport {
  std::string name;
  int stages = 0;
  int classical_order = 0;       // p
  int quadrature_order = 0;      // p-hat
  int stage_order = 0;           // q = min(p-hat, q-hat)
  int wso = 0;                   // q-tilde
  int wso_eigenvector = 0;       // q-tilde_e
  bool dirk = false;
  bool stiffly_accurate = false;
  bool a_stable = false;
  double max_abs_r_imaginary_axis = 0.0;
  double r_at_infinity = std::numeric_limits<double>::quiet_NaN();  // NaN if A singular
  std::vector<std::pair<std::string, double>> order_condition_residuals;
  std::vector<std::pair<int, double>> stage_order_residual_norms;  // (j, ||tau^(j)||inf)
};

SchemeReport analyze(const ButcherTableau& t, const AnalysisOptions& opt = {});

/// Aligned human-readable rendering.
std::string format_report(const SchemeReport& r);
/// Machine-readable key-value rendering, one `key = value` per line.
std::string format_report_kv(const SchemeReport& r);

}  // namespace dirkwso
