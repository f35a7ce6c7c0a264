#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dirkwso/integrator.hpp"
#include "dirkwso/tableau.hpp"

namespace dirkwso {

struct SlopeWindow {
  double dt_lo = 0.0;
  double dt_hi = 0.0;
};

/// A problem instance packaged for a convergence run; params_desc is echoed
/// into CSV headers so results are self-describing.
struct StudyProblem {
  std::string name;
  std::string params_desc;
  ODESystem system;
  double t0 = 0.0;
  double t_end = 1.0;
  Vec u0;
};

struct StudySpec {
  ButcherTableau scheme;
  StudyProblem problem;
  std::vector<double> dts;          // descending
  SlopeWindow window;
  NewtonSettings newton;
  std::vector<std::string> observables;  // subset of the problem's; empty = all
  int jobs = 1;
};

struct StudyRow {
  double dt = 0.0;
  bool failed = false;
  std::string fail_reason;
  std::vector<double> errors;  // max-norm at final time, one per observable
};

struct SlopeFit {
  double slope = 0.0;
  double fit_residual = 0.0;  // rms residual of the log-log least squares fit
  int points = 0;
};

struct ConvergenceTable {
  std::string scheme_name;
  std::string problem_name;
  std::string params_desc;
  double t0 = 0.0, t_end = 0.0;
  SlopeWindow window;
  NewtonSettings newton;
  std::vector<std::string> observables;
  std::vector<StudyRow> rows;                       // ordered by descending dt
  std::vector<std::optional<SlopeFit>> slopes;      // one per observable
};

/// Least-squares slope of log(err) vs log(dt) over rows with dt inside the
/// window; rows with non-finite or non-positive error are excluded. Returns
/// nothing when fewer than 3 usable rows fall in the window.
std::optional<SlopeFit> fit_slope(const std::vector<std::pair<double, double>>& rows,
                                  const SlopeWindow& window);

/// Integrates the problem for every dt, measures max-norm errors of the
/// requested observables at the final time, and fits slopes in the window.
/// Rows run concurrently when spec.jobs > 1; ordering is by dt regardless.
/// Throws when every row fails.
ConvergenceTable run_study(const StudySpec& spec);

/// CSV with '#' header comments (scheme, problem, parameters, window,
/// slopes), then one `dt,err_u[,...]` row per study row; 17 significant
/// digits. Failed rows carry nan errors.
void emit_csv(const ConvergenceTable& table, std::ostream& os);

/// dt values of the form span/n closest to `count` log-spaced targets in
/// [lo, hi], deduplicated, descending; every value divides span exactly.
std::vector<double> log_spaced_divisors(double span, double lo, double hi, int count);

/// Dyadic dt list span/2^k for k in [k_lo, k_hi], descending.
std::vector<double> dyadic_dts(double span, int k_lo, int k_hi);

}  // namespace dirkwso
