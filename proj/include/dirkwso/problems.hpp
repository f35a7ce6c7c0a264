#pragma once

#include <string>

#include "dirkwso/integrator.hpp"
#include "dirkwso/tableau.hpp"

namespace dirkwso {

/// phi(t) = sin(t + pi/4) and its j-th derivative.
double pr_phi(double t);
double pr_phi_derivative(double t, int j);

/// Stiff scalar test problem u' = lambda (u - phi(t)) + phi'(t) with exact
/// solution phi when u(0) = phi(0). Requires Re(lambda) <= 0.
ODESystem prothero_robinson(double lambda);

/// u' = lambda u with exact solution e^(lambda t); trivial demo problem.
ODESystem decay(double lambda);

struct GridSpec {
  enum class Boundary { dirichlet, neumann };
  int n_cells = 0;          // cells on (0,1); spacing h = 1/n_cells
  Boundary bc = Boundary::dirichlet;
  double h() const { return 1.0 / n_cells; }
};

/// Dispersive equation u_t = (i omega / k^2) u_xx on (0,1) with Dirichlet
/// data from the travelling wave u(x,t) = exp(i(kx - omega t)), discretized
/// with 4th-order centered differences (4th-order biased closures at the
/// first and last interior node). The complex grid function is carried as an
/// interleaved real system of dimension 2(N-1). Observables: u, u_x, u_xx.
ODESystem schrodinger_mol(double omega, double k, const GridSpec& grid);

/// Viscous Burgers equation u_t + u u_x = nu u_xx + f on (0,1) with Neumann
/// data and the manufactured solution u(x,t) = cos(2+10t) sin(0.2+20x).
/// Advective-form nonlinearity; Neumann closure by ghost values from
/// 4th-order one-sided relations. Observables: u, u_x, u_xx.
ODESystem burgers_mol(double nu, const GridSpec& grid);

struct VdpReferenceOptions {
  double t_end = 10.0;
  double dt = 1e-6;             // RK4 reference step
  double checkpoint_dt = 0.01;  // stored sample spacing
  std::string cache_dir = ".";  // reference table cached here after first run
};

/// Van der Pol oscillator x' = y, y' = mu (1 - x^2) y - x with initial state
/// (2, 0). The exact() evaluator returns the cached explicit-RK4 reference at
/// checkpoint times (and t = 0).
ODESystem van_der_pol(double mu, const VdpReferenceOptions& ref = {});

/// Path of the reference table used by van_der_pol for these parameters.
std::string vdp_reference_path(double mu, const VdpReferenceOptions& ref);

/// Scalar error recursion for the Prothero-Robinson problem: the one-step
/// error map err -> R(z) err + stage-error transfer + quadrature error,
/// with both series truncated at jmax. Exact for the linear problem up to
/// the truncation tail (phi = sin has unit-bounded derivatives).
class RecursionOracle {
 public:
  RecursionOracle(const ButcherTableau& t, double lambda, int jmax = 12);

  /// err^{n+1} from err^n; advances and returns the stored error.
  double step(double tn, double dt);

  double err() const { return err_; }
  void reset(double err0 = 0.0) { err_ = err0; }

  /// Per-step bound on the dropped series tail (the next extra_terms terms),
  /// uniform in tn.
  double step_tail_bound(double dt, int extra_terms = 20) const;

 private:
  void prepare(double dt) const;

  ButcherTableau tab_;
  double lambda_;
  int jmax_;
  double err_ = 0.0;
  mutable double cached_dt_ = -1.0;
  mutable double R_ = 0.0;
  mutable std::vector<double> stage_coef_;  // dt^j/(j-1)! zeta b^T (I - zeta A)^{-1} tau^(j)
  mutable std::vector<double> quad_coef_;   // dt^j/(j-1)! (b^T c^(j-1) - 1/j)
};

}  // namespace dirkwso
