#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dirkwso/linalg.hpp"
#include "dirkwso/tableau.hpp"

namespace dirkwso {

/// A named derived quantity of the solution error: maps the state-space
/// error vector to a per-node error profile whose max norm is reported
/// (e.g. discrete u_x of a grid-function error).
struct Observable {
  std::string name;
  std::function<Vec(const Vec&)> error_profile;
};

/// An initial-value problem in first-order form. Evaluators must be safe
/// for concurrent invocation from different runs.
struct ODESystem {
  int dim = 0;
  std::function<void(double t, const Vec& u, Vec& f)> rhs;

  // Jacobian of rhs in u. Exactly one of the two forms is set; the banded
  // form is used when kl, ku >= 0.
  int kl = -1, ku = -1;
  std::function<void(double t, const Vec& u, Mat& J)> jacobian;
  std::function<void(double t, const Vec& u, BandedMatrix& J)> jacobian_banded;

  // J independent of (t, u); lets the stepper reuse stage factorizations.
  bool constant_jacobian = false;

  std::function<Vec(double t)> exact;  // optional reference solution
  std::vector<Observable> observables; // optional derived error profiles

  bool banded() const { return kl >= 0 && ku >= 0; }
};

struct NewtonSettings {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  int max_iters = 25;
};

struct NewtonFailure : std::runtime_error {
  NewtonFailure(const std::string& what, int stage_, double t_, std::vector<double> history)
      : std::runtime_error(what), stage(stage_), t(t_), residual_history(std::move(history)) {}
  int stage;
  double t;
  std::vector<double> residual_history;
};

struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& what, long step_) : std::runtime_error(what), step(step_) {}
  long step;
};

struct StepStats {
  long newton_iterations = 0;
  long factorizations = 0;
  std::vector<double> last_residual_history;  // residuals of the last stage solve
};

/// Advances one DIRK step, solving each stage implicit equation by Newton
/// iteration on G(U) = U - dt a_ii f(t + c_i dt, U) - known with iteration
/// matrix I - dt a_ii J. Holds per-run factorization caches for systems
/// with constant Jacobian.
class DirkStepper {
 public:
  DirkStepper(const ButcherTableau& t, const ODESystem& sys, NewtonSettings ns = {});

  Vec step(double tn, const Vec& un, double dt);

  const StepStats& stats() const { return stats_; }

 private:
  struct StageFactor;
  Vec solve_stage(int stage, double t_stage, double gamma_dt, const Vec& known);

  ButcherTableau tab_;
  const ODESystem& sys_;
  NewtonSettings ns_;
  bool stiffly_accurate_;
  StepStats stats_;
  std::map<double, std::shared_ptr<StageFactor>> const_jac_cache_;  // keyed by dt * a_ii
  Vec f_work_;
  std::vector<Vec> stage_f_;
};

/// One-shot convenience wrapper around DirkStepper.
Vec dirk_step(const ButcherTableau& t, const ODESystem& sys, double tn, const Vec& un, double dt,
              const NewtonSettings& ns = {});

struct IntegrateResult {
  Vec u;
  long steps = 0;
  bool shortened_final = false;  // last step was a partial step
  double final_dt = 0.0;
};

/// Repeated dirk_step from t0 to t_end. (t_end - t0)/dt should be an integer
/// within rounding; otherwise the final step is shortened and flagged.
/// The observer, when set, is called after every step with (t, u).
IntegrateResult integrate(const ButcherTableau& t, const ODESystem& sys, double t0, const Vec& u0,
                          double t_end, double dt, const NewtonSettings& ns = {},
                          const std::function<void(double, const Vec&)>& observer = nullptr);

/// Max elementwise mismatch between the declared Jacobian and a central
/// finite-difference Jacobian at (t, u); test support for rhs/Jacobian
/// consistency.
double jacobian_fd_mismatch(const ODESystem& sys, double t, const Vec& u);

}  // namespace dirkwso
