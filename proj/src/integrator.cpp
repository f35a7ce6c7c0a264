#include "dirkwso/integrator.hpp"

#include <cmath>
#include <sstream>

namespace dirkwso {

struct DirkStepper::StageFactor {
  std::optional<Eigen::PartialPivLU<Mat>> dense;
  std::optional<BandedLU> banded;

  Vec solve(const Vec& r) const { return dense ? dense->solve(r) : banded->solve(r); }
};

namespace {

void check_system(const ODESystem& sys) {
  if (sys.dim <= 0) throw std::invalid_argument("ODESystem: dim must be positive");
  if (!sys.rhs) throw std::invalid_argument("ODESystem: rhs evaluator not set");
}

}  // namespace

DirkStepper::DirkStepper(const ButcherTableau& t, const ODESystem& sys, NewtonSettings ns)
    : tab_(t), sys_(sys), ns_(ns) {
  check_system(sys);
  if (!t.is_dirk()) throw std::invalid_argument("DirkStepper: tableau is not lower triangular");
  if (ns.rel_tol <= 0 || ns.abs_tol <= 0)
    throw std::invalid_argument("DirkStepper: Newton tolerances must be positive");
  stiffly_accurate_ = t.is_stiffly_accurate();
  f_work_ = Vec::Zero(sys.dim);
  stage_f_.assign(t.s, Vec::Zero(sys.dim));
}

Vec DirkStepper::solve_stage(int stage, double t_stage, double gamma_dt, const Vec& known) {
  Vec u = known;  // predictor: the explicit part of the stage equation
  std::vector<double> history;
  std::shared_ptr<StageFactor> cached;
  if (sys_.constant_jacobian) {
    auto it = const_jac_cache_.find(gamma_dt);
    if (it != const_jac_cache_.end()) cached = it->second;
  }

  for (int it = 0; it <= ns_.max_iters; ++it) {
    sys_.rhs(t_stage, u, f_work_);
    Vec g = u - gamma_dt * f_work_ - known;
    const double res = g.lpNorm<Eigen::Infinity>();
    history.push_back(res);
    const double scale = u.lpNorm<Eigen::Infinity>() +
                         std::abs(gamma_dt) * f_work_.lpNorm<Eigen::Infinity>() +
                         known.lpNorm<Eigen::Infinity>();
    // converged, or stalled at the rounding floor of the residual evaluation
    // (stiff grid operators cancel to O(eps/h^2) inside f, which the scale
    // estimate cannot see)
    const bool below_tol = res <= ns_.abs_tol + ns_.rel_tol * scale;
    const bool stagnated = it >= 2 && res >= 0.25 * history[history.size() - 2] &&
                           res <= 1e-8 * scale;
    if (below_tol || stagnated) {
      stage_f_[stage] = f_work_;
      stats_.last_residual_history = std::move(history);
      return u;
    }
    if (it == ns_.max_iters) break;

    std::shared_ptr<StageFactor> fac = cached;
    if (!fac) {
      fac = std::make_shared<StageFactor>();
      try {
        if (sys_.banded()) {
          BandedMatrix J(sys_.dim, sys_.kl, sys_.ku);
          sys_.jacobian_banded(t_stage, u, J);
          // M = I - gamma_dt J assembled in band storage
          BandedMatrix M(sys_.dim, sys_.kl, sys_.ku);
          M.storage() = -gamma_dt * J.storage();
          for (int i = 0; i < sys_.dim; ++i) M.at(i, i) += 1.0;
          fac->banded.emplace(M);
        } else {
          Mat J(sys_.dim, sys_.dim);
          sys_.jacobian(t_stage, u, J);
          Mat M = Mat::Identity(sys_.dim, sys_.dim) - gamma_dt * J;
          Eigen::PartialPivLU<Mat> lu(M);
          const double sc = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
          int k;
          if (lu.matrixLU().diagonal().cwiseAbs().minCoeff(&k) < 1e-14 * sc)
            throw SingularMatrixError("negligible pivot at index " + std::to_string(k), k);
          fac->dense.emplace(std::move(lu));
        }
      } catch (const SingularMatrixError& e) {
        throw NewtonFailure(
            std::string("singular iteration matrix in stage solve: ") + e.what(), stage, t_stage,
            history);
      }
      ++stats_.factorizations;
      if (sys_.constant_jacobian) const_jac_cache_[gamma_dt] = fac;
      cached = sys_.constant_jacobian ? fac : nullptr;
    }
    u -= fac->solve(g);
    ++stats_.newton_iterations;
    if (!u.allFinite())
      throw NewtonFailure("Newton iterate diverged to non-finite values", stage, t_stage, history);
  }
  std::ostringstream os;
  os << "Newton did not converge in " << ns_.max_iters << " iterations at stage " << stage + 1
     << ", t = " << t_stage << " (last residual " << history.back() << ")";
  throw NewtonFailure(os.str(), stage, t_stage, std::move(history));
}

Vec DirkStepper::step(double tn, const Vec& un, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("DirkStepper::step: dt must be positive");
  const int s = tab_.s;
  Vec u_stage;
  for (int i = 0; i < s; ++i) {
    Vec known = un;
    for (int j = 0; j < i; ++j)
      if (tab_.A(i, j) != 0.0) known += dt * tab_.A(i, j) * stage_f_[j];
    const double t_stage = tn + tab_.c(i) * dt;
    const double gamma_dt = dt * tab_.A(i, i);
    if (gamma_dt == 0.0) {
      u_stage = known;  // explicit stage
      sys_.rhs(t_stage, u_stage, f_work_);
      stage_f_[i] = f_work_;
    } else {
      u_stage = solve_stage(i, t_stage, gamma_dt, known);
    }
  }
  Vec out = un;
  for (int j = 0; j < s; ++j)
    if (tab_.b(j) != 0.0) out += dt * tab_.b(j) * stage_f_[j];
  if (stiffly_accurate_) {
    const double diff = (out - u_stage).lpNorm<Eigen::Infinity>();
    const double scale = 1.0 + u_stage.lpNorm<Eigen::Infinity>();
    if (diff > 1e-10 * scale)
      throw IntegrationError("stiffly accurate step does not match its last stage (diff = " +
                                 std::to_string(diff) + ")",
                             -1);
  }
  return out;
}

Vec dirk_step(const ButcherTableau& t, const ODESystem& sys, double tn, const Vec& un, double dt,
              const NewtonSettings& ns) {
  DirkStepper stepper(t, sys, ns);
  return stepper.step(tn, un, dt);
}

IntegrateResult integrate(const ButcherTableau& t, const ODESystem& sys, double t0, const Vec& u0,
                          double t_end, double dt, const NewtonSettings& ns,
                          const std::function<void(double, const Vec&)>& observer) {
  if (!(dt > 0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(t_end > t0)) throw std::invalid_argument("integrate: t_end must exceed t0");
  const double span = t_end - t0;
  long n = std::lround(span / dt);
  const bool exact_division = n >= 1 && std::abs(n * dt - span) <= 1e-9 * span;
  if (!exact_division) n = static_cast<long>(span / dt);

  DirkStepper stepper(t, sys, ns);
  IntegrateResult res;
  res.u = u0;
  double tn = t0;
  for (long k = 0; k < n; ++k) {
    try {
      res.u = stepper.step(tn, res.u, dt);
    } catch (const NewtonFailure& e) {
      throw IntegrationError("step " + std::to_string(k) + " failed: " + e.what(), k);
    }
    tn = t0 + (k + 1) * dt;
    ++res.steps;
    res.final_dt = dt;
    if (observer) observer(tn, res.u);
  }
  if (!exact_division) {
    const double rest = t_end - tn;
    if (rest > 1e-12 * span) {
      try {
        res.u = stepper.step(tn, res.u, rest);
      } catch (const NewtonFailure& e) {
        throw IntegrationError("final partial step failed: " + std::string(e.what()), n);
      }
      ++res.steps;
      res.shortened_final = true;
      res.final_dt = rest;
      if (observer) observer(t_end, res.u);
    }
  }
  return res;
}

double jacobian_fd_mismatch(const ODESystem& sys, double t, const Vec& u) {
  check_system(sys);
  Mat J(sys.dim, sys.dim);
  if (sys.banded()) {
    BandedMatrix B(sys.dim, sys.kl, sys.ku);
    sys.jacobian_banded(t, u, B);
    J = B.dense();
  } else {
    sys.jacobian(t, u, J);
  }
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  Vec fp(sys.dim), fm(sys.dim);
  double worst = 0.0;
  for (int j = 0; j < sys.dim; ++j) {
    const double h = eps * std::max(1.0, std::abs(u(j)));
    Vec up = u, um = u;
    up(j) += h;
    um(j) -= h;
    sys.rhs(t, up, fp);
    sys.rhs(t, um, fm);
    worst = std::max(worst, ((fp - fm) / (2 * h) - J.col(j)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace dirkwso
