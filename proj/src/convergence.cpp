#include "dirkwso/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

namespace dirkwso {

std::optional<SlopeFit> fit_slope(const std::vector<std::pair<double, double>>& rows,
                                  const SlopeWindow& window) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [dt, err] : rows) {
    if (dt < window.dt_lo * (1 - 1e-9) || dt > window.dt_hi * (1 + 1e-9)) continue;
    if (!std::isfinite(err) || err <= 0.0) continue;
    pts.emplace_back(std::log(dt), std::log(err));
  }
  if (pts.size() < 3) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double denom = n * sxx - sx * sx;
  SlopeFit fit;
  fit.points = static_cast<int>(pts.size());
  fit.slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.slope * sx) / n;
  double rss = 0;
  for (const auto& [x, y] : pts) {
    const double r = y - (intercept + fit.slope * x);
    rss += r * r;
  }
  fit.fit_residual = std::sqrt(rss / n);
  return fit;
}

namespace {

std::vector<std::string> select_observables(const StudySpec& spec) {
  std::vector<std::string> names;
  if (spec.problem.system.observables.empty()) {
    names.push_back("u");
  } else if (spec.observables.empty()) {
    for (const auto& o : spec.problem.system.observables) names.push_back(o.name);
  } else {
    for (const auto& want : spec.observables) {
      bool found = false;
      for (const auto& o : spec.problem.system.observables)
        if (o.name == want) found = true;
      if (!found)
        throw std::invalid_argument("run_study: problem has no observable named '" + want + "'");
      names.push_back(want);
    }
  }
  return names;
}

StudyRow run_row(const StudySpec& spec, const std::vector<std::string>& names, double dt) {
  StudyRow row;
  row.dt = dt;
  try {
    const auto res = integrate(spec.scheme, spec.problem.system, spec.problem.t0, spec.problem.u0,
                               spec.problem.t_end, dt, spec.newton);
    const Vec err = res.u - spec.problem.system.exact(spec.problem.t_end);
    for (const auto& name : names) {
      const Observable* obs = nullptr;
      for (const auto& o : spec.problem.system.observables)
        if (o.name == name) obs = &o;
      row.errors.push_back(obs ? obs->error_profile(err).lpNorm<Eigen::Infinity>()
                                : err.lpNorm<Eigen::Infinity>());
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.fail_reason = e.what();
    row.errors.assign(names.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return row;
}

}  // namespace

ConvergenceTable run_study(const StudySpec& spec) {
  if (spec.dts.empty()) throw std::invalid_argument("run_study: empty dt list");
  if (!spec.problem.system.exact)
    throw std::invalid_argument("run_study: problem provides no reference solution");

  const auto names = select_observables(spec);
  std::vector<double> dts = spec.dts;
  std::sort(dts.begin(), dts.end(), std::greater<>());

  std::vector<StudyRow> rows(dts.size());
  const int jobs = std::max(1, spec.jobs);
  if (jobs == 1 || dts.size() == 1) {
    for (size_t i = 0; i < dts.size(); ++i) rows[i] = run_row(spec, names, dts[i]);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= dts.size()) return;
        rows[i] = run_row(spec, names, dts[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < std::min<int>(jobs, static_cast<int>(dts.size())); ++k)
      pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (std::all_of(rows.begin(), rows.end(), [](const StudyRow& r) { return r.failed; }))
    throw std::runtime_error("run_study: every dt failed; first failure: " + rows.front().fail_reason);

  ConvergenceTable table;
  table.scheme_name = spec.scheme.name;
  table.problem_name = spec.problem.name;
  table.params_desc = spec.problem.params_desc;
  table.t0 = spec.problem.t0;
  table.t_end = spec.problem.t_end;
  table.window = spec.window;
  table.newton = spec.newton;
  table.observables = names;
  table.rows = std::move(rows);
  for (size_t k = 0; k < names.size(); ++k) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : table.rows)
      if (!r.failed) pts.emplace_back(r.dt, r.errors[k]);
    table.slopes.push_back(fit_slope(pts, spec.window));
  }
  return table;
}

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void emit_csv(const ConvergenceTable& table, std::ostream& os) {
  os << "# scheme: " << table.scheme_name << "\n";
  os << "# problem: " << table.problem_name;
  if (!table.params_desc.empty()) os << " " << table.params_desc;
  os << "\n# t0: " << num17(table.t0) << "\n# t_end: " << num17(table.t_end) << "\n";
  os << "# slope_window: [" << num17(table.window.dt_lo) << ", " << num17(table.window.dt_hi)
     << "]\n";
  os << "# newton: rel_tol=" << table.newton.rel_tol << " abs_tol=" << table.newton.abs_tol
     << " max_iters=" << table.newton.max_iters << "\n";
  for (size_t k = 0; k < table.observables.size(); ++k) {
    os << "# slope_" << table.observables[k] << ": ";
    if (table.slopes[k])
      os << num17(table.slopes[k]->slope) << " (fit residual "
         << num17(table.slopes[k]->fit_residual) << ", " << table.slopes[k]->points << " points)";
    else
      os << "n/a (fewer than 3 usable rows in window)";
    os << "\n";
  }
  for (const auto& r : table.rows)
    if (r.failed) os << "# row_failed dt=" << num17(r.dt) << ": " << r.fail_reason << "\n";
  os << "dt";
  for (const auto& name : table.observables) os << ",err_" << name;
  os << "\n";
  for (const auto& r : table.rows) {
    os << num17(r.dt);
    for (double e : r.errors) os << "," << num17(e);
    os << "\n";
  }
}

std::vector<double> log_spaced_divisors(double span, double lo, double hi, int count) {
  if (!(span > 0) || !(lo > 0) || !(hi > lo) || count < 1)
    throw std::invalid_argument("log_spaced_divisors: bad arguments");
  std::set<long, std::greater<>> ns;
  for (int k = 0; k < count; ++k) {
    const double target =
        std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                    (count == 1 ? 0.0 : static_cast<double>(k) / (count - 1)));
    const long n = std::max(1L, std::lround(span / target));
    ns.insert(n);
  }
  std::vector<double> dts;
  for (long n : ns) dts.push_back(span / static_cast<double>(n));  // ascending n: descending dt
  std::sort(dts.begin(), dts.end(), std::greater<>());
  return dts;
}

std::vector<double> dyadic_dts(double span, int k_lo, int k_hi) {
  std::vector<double> dts;
  for (int k = k_lo; k <= k_hi; ++k) dts.push_back(span / std::pow(2.0, k));
  std::sort(dts.begin(), dts.end(), std::greater<>());
  return dts;
}

}  // namespace dirkwso
