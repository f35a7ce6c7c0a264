#include "dirkwso/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace dirkwso {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double pr_phi(double t) { return std::sin(t + kPi / 4); }

double pr_phi_derivative(double t, int j) { return std::sin(t + kPi / 4 + j * kPi / 2); }

ODESystem prothero_robinson(double lambda) {
  if (lambda > 0) throw std::invalid_argument("prothero_robinson: need Re(lambda) <= 0");
  ODESystem sys;
  sys.dim = 1;
  sys.rhs = [lambda](double t, const Vec& u, Vec& f) {
    f(0) = lambda * (u(0) - pr_phi(t)) + pr_phi_derivative(t, 1);
  };
  sys.jacobian = [lambda](double, const Vec&, Mat& J) { J(0, 0) = lambda; };
  sys.constant_jacobian = true;
  sys.exact = [](double t) {
    Vec u(1);
    u(0) = pr_phi(t);
    return u;
  };
  return sys;
}

ODESystem decay(double lambda) {
  ODESystem sys;
  sys.dim = 1;
  sys.rhs = [lambda](double, const Vec& u, Vec& f) { f(0) = lambda * u(0); };
  sys.jacobian = [lambda](double, const Vec&, Mat& J) { J(0, 0) = lambda; };
  sys.constant_jacobian = true;
  sys.exact = [lambda](double t) {
    Vec u(1);
    u(0) = std::exp(lambda * t);
    return u;
  };
  return sys;
}

namespace {

// ---------------------------------------------------------------------------
// Finite-difference machinery shared by the PDE problems.

struct RowStencil {
  int start = 0;
  std::vector<double> w;
};

using StencilOp = std::vector<RowStencil>;

Vec apply_stencil(const StencilOp& op, const Vec& u) {
  Vec out(static_cast<Eigen::Index>(op.size()));
  for (size_t r = 0; r < op.size(); ++r) {
    double s = 0.0;
    const auto& row = op[r];
    for (size_t k = 0; k < row.w.size(); ++k) s += row.w[k] * u(row.start + k);
    out(static_cast<Eigen::Index>(r)) = s;
  }
  return out;
}

/// Weights of the `der`-th derivative at offset 0 from nodes at the given
/// integer offsets (unit spacing); exact for polynomials of degree < #offsets.
std::vector<double> fd_weights(const std::vector<double>& offsets, int der) {
  const int n = static_cast<int>(offsets.size());
  Mat V(n, n);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) V(m, k) = std::pow(offsets[k], m);
  Vec rhs = Vec::Zero(n);
  double fact = 1.0;
  for (int m = 2; m <= der; ++m) fact *= m;
  rhs(der) = fact;
  Vec w = V.fullPivLu().solve(rhs);
  return {w.data(), w.data() + n};
}

/// 4th-order derivative operator over a full grid of n nodes (one-sided and
/// biased closures at the ends). Weights carry the 1/h^der scale.
StencilOp full_grid_derivative(int n, int der, double h) {
  const double scale = 1.0 / std::pow(h, der);
  const int width = (der == 1) ? 5 : 6;  // points needed for 4th order
  StencilOp op(n);
  auto row = [&](std::vector<double> offs, int start) {
    std::vector<double> w = fd_weights(offs, der);
    for (auto& v : w) v *= scale;
    return RowStencil{start, std::move(w)};
  };
  for (int i = 0; i < n; ++i) {
    if (i < 2) {
      std::vector<double> offs(width);
      for (int k = 0; k < width; ++k) offs[k] = k - i;
      op[i] = row(std::move(offs), 0);
    } else if (i > n - 3) {
      std::vector<double> offs(width);
      const int start = n - width;
      for (int k = 0; k < width; ++k) offs[k] = start + k - i;
      op[i] = row(std::move(offs), start);
    } else {
      op[i] = row({-2, -1, 0, 1, 2}, i - 2);
    }
  }
  return op;
}

void check_grid(const GridSpec& grid, GridSpec::Boundary expected, const char* who) {
  if (grid.n_cells < 16)
    throw std::invalid_argument(std::string(who) + ": grid needs at least 16 cells");
  if (grid.bc != expected)
    throw std::invalid_argument(std::string(who) + ": wrong boundary handling flag");
}

// ---------------------------------------------------------------------------
// Dispersive problem.

struct SchrodingerDisc {
  int n = 0;       // cells
  int m = 0;       // interior nodes
  double h = 0;
  double alpha = 0;  // omega / k^2
  double omega = 0, k = 0;
  StencilOp d2;             // interior-to-interior couplings
  Vec s0, s1;               // boundary-data coefficients (left, right)
  StencilOp full_d1, full_d2;  // observables, on the full grid incl. boundaries
};

std::shared_ptr<SchrodingerDisc> build_schrodinger(double omega, double k, const GridSpec& grid) {
  auto d = std::make_shared<SchrodingerDisc>();
  d->n = grid.n_cells;
  d->m = grid.n_cells - 1;
  d->h = grid.h();
  d->omega = omega;
  d->k = k;
  d->alpha = omega / (k * k);
  const double s2 = 1.0 / (d->h * d->h);
  d->s0 = Vec::Zero(d->m);
  d->s1 = Vec::Zero(d->m);
  d->d2.resize(d->m);

  const std::vector<double> centered = fd_weights({-2, -1, 0, 1, 2}, 2);
  const std::vector<double> biased = fd_weights({-1, 0, 1, 2, 3, 4}, 2);

  auto scaled = [&](const std::vector<double>& w, size_t from, size_t to) {
    std::vector<double> out(w.begin() + from, w.begin() + to);
    for (auto& v : out) v *= s2;
    return out;
  };

  for (int r = 0; r < d->m; ++r) {
    if (r == 0) {  // first interior node: biased stencil reaching the left boundary
      d->s0(0) = biased[0] * s2;
      d->d2[0] = {0, scaled(biased, 1, 6)};
    } else if (r == 1) {
      d->s0(1) = centered[0] * s2;
      d->d2[1] = {0, scaled(centered, 1, 5)};
    } else if (r < d->m - 2) {
      d->d2[r] = {r - 2, scaled(centered, 0, 5)};
    } else if (r == d->m - 2) {
      d->s1(r) = centered[4] * s2;
      d->d2[r] = {r - 2, scaled(centered, 0, 4)};
    } else {  // last interior node: mirrored biased stencil
      std::vector<double> rev(biased.rbegin(), biased.rend());
      d->s1(r) = rev[5] * s2;
      rev.resize(5);
      for (auto& v : rev) v *= s2;
      d->d2[r] = {r - 4, std::move(rev)};
    }
  }
  d->full_d1 = full_grid_derivative(d->n + 1, 1, d->h);
  d->full_d2 = full_grid_derivative(d->n + 1, 2, d->h);
  return d;
}

ODESystem make_schrodinger_system(std::shared_ptr<SchrodingerDisc> d) {
  ODESystem sys;
  sys.dim = 2 * d->m;
  sys.kl = sys.ku = 9;  // biased closure couples nodes four apart, interleaved re/im
  sys.constant_jacobian = true;

  auto trace = [d](double x, double t) {
    return std::complex<double>(std::cos(d->k * x - d->omega * t),
                                std::sin(d->k * x - d->omega * t));
  };

  sys.rhs = [d, trace](double t, const Vec& u, Vec& f) {
    const int m = d->m;
    Vec v(m), w(m);
    for (int r = 0; r < m; ++r) {
      v(r) = u(2 * r);
      w(r) = u(2 * r + 1);
    }
    const auto g0 = trace(0.0, t), g1 = trace(1.0, t);
    Vec X = apply_stencil(d->d2, v) + d->s0 * g0.real() + d->s1 * g1.real();
    Vec Y = apply_stencil(d->d2, w) + d->s0 * g0.imag() + d->s1 * g1.imag();
    for (int r = 0; r < m; ++r) {
      f(2 * r) = -d->alpha * Y(r);
      f(2 * r + 1) = d->alpha * X(r);
    }
  };

  sys.jacobian_banded = [d](double, const Vec&, BandedMatrix& J) {
    J.set_zero();
    for (int r = 0; r < d->m; ++r) {
      const auto& row = d->d2[r];
      for (size_t kk = 0; kk < row.w.size(); ++kk) {
        const int q = row.start + static_cast<int>(kk);
        J.at(2 * r, 2 * q + 1) += -d->alpha * row.w[kk];
        J.at(2 * r + 1, 2 * q) += d->alpha * row.w[kk];
      }
    }
  };

  sys.exact = [d, trace](double t) {
    Vec u(2 * d->m);
    for (int r = 0; r < d->m; ++r) {
      const auto z = trace((r + 1) * d->h, t);
      u(2 * r) = z.real();
      u(2 * r + 1) = z.imag();
    }
    return u;
  };

  // Error profiles act on the complex grid error with zero boundary values
  // (both the numerical and the exact solution carry the Dirichlet data).
  auto pad = [d](const Vec& err) {
    Vec re = Vec::Zero(d->n + 1), im = Vec::Zero(d->n + 1);
    for (int r = 0; r < d->m; ++r) {
      re(r + 1) = err(2 * r);
      im(r + 1) = err(2 * r + 1);
    }
    return std::make_pair(re, im);
  };
  auto modulus = [](const Vec& re, const Vec& im) {
    return (re.array().square() + im.array().square()).sqrt().matrix().eval();
  };
  sys.observables.push_back({"u", [pad, modulus](const Vec& e) {
                               auto [re, im] = pad(e);
                               return modulus(re, im);
                             }});
  sys.observables.push_back({"ux", [d, pad, modulus](const Vec& e) {
                               auto [re, im] = pad(e);
                               return modulus(apply_stencil(d->full_d1, re), apply_stencil(d->full_d1, im));
                             }});
  sys.observables.push_back({"uxx", [d, pad, modulus](const Vec& e) {
                               auto [re, im] = pad(e);
                               return modulus(apply_stencil(d->full_d2, re), apply_stencil(d->full_d2, im));
                             }});
  return sys;
}

}  // namespace

ODESystem schrodinger_mol(double omega, double k, const GridSpec& grid) {
  check_grid(grid, GridSpec::Boundary::dirichlet, "schrodinger_mol");
  return make_schrodinger_system(build_schrodinger(omega, k, grid));
}

namespace {

// ---------------------------------------------------------------------------
// Burgers problem.

struct BurgersDisc {
  int n = 0;     // cells; unknowns at nodes 0..n
  int m = 0;     // n + 1
  double h = 0;
  double nu = 0;
  StencilOp d1, d2;              // ghost-eliminated derivative couplings
  Vec d1L, d1R, d2L, d2R;        // Neumann-data coefficients
};

// Ghost value at signed offset `ghost_xi` (units of h, relative to the wall
// node) from a degree-5 interpolant through five wall-side values and the
// prescribed first derivative at the wall. Returns the five value weights
// (nearest-the-wall first) plus the h*g weight.
std::pair<std::vector<double>, double> ghost_closure(double ghost_xi, bool left) {
  Mat M(6, 6);
  for (int row = 0; row < 5; ++row) {
    const double xi = left ? row : -row;  // value nodes march into the domain
    for (int mm = 0; mm < 6; ++mm) M(row, mm) = std::pow(xi, mm);
  }
  for (int mm = 0; mm < 6; ++mm) M(5, mm) = (mm == 1) ? 1.0 : 0.0;  // p'(wall) = h g
  Vec xg(6);
  for (int mm = 0; mm < 6; ++mm) xg(mm) = std::pow(ghost_xi, mm);
  // p(ghost) = xg^T M^{-1} [values, h g]; the weight row solves M^T w = xg.
  Mat Mt = M.transpose();
  Vec wts = Mt.fullPivLu().solve(xg);
  std::vector<double> uw(wts.data(), wts.data() + 5);
  return {uw, wts(5)};
}

std::shared_ptr<BurgersDisc> build_burgers(double nu, const GridSpec& grid) {
  auto d = std::make_shared<BurgersDisc>();
  d->n = grid.n_cells;
  d->m = d->n + 1;
  d->h = grid.h();
  d->nu = nu;
  const int m = d->m;
  d->d1L = Vec::Zero(m);
  d->d1R = Vec::Zero(m);
  d->d2L = Vec::Zero(m);
  d->d2R = Vec::Zero(m);
  d->d1.resize(m);
  d->d2.resize(m);

  const std::vector<double> c1 = fd_weights({-2, -1, 0, 1, 2}, 1);
  const std::vector<double> c2 = fd_weights({-2, -1, 0, 1, 2}, 2);
  const auto [gl1_u, gl1_g] = ghost_closure(-1, true);
  const auto [gl2_u, gl2_g] = ghost_closure(-2, true);
  const auto [gr1_u, gr1_g] = ghost_closure(1, false);   // weights on u_n .. u_{n-4}
  const auto [gr2_u, gr2_g] = ghost_closure(2, false);

  auto build = [&](const std::vector<double>& cw, int der, StencilOp& op, Vec& dataL,
                   Vec& dataR) {
    const double scale = 1.0 / std::pow(d->h, der);
    for (int i = 0; i < m; ++i) {
      if (i <= 1) {
        // centered stencil with ghost substitution at the left wall
        std::vector<double> w(5, 0.0);  // couplings on u_0..u_4
        double dg = 0.0;
        for (int off = -2; off <= 2; ++off) {
          const double cv = cw[off + 2];
          const int pos = i + off;
          if (pos == -1) {
            for (int kk = 0; kk < 5; ++kk) w[kk] += cv * gl1_u[kk];
            dg += cv * gl1_g;
          } else if (pos == -2) {
            for (int kk = 0; kk < 5; ++kk) w[kk] += cv * gl2_u[kk];
            dg += cv * gl2_g;
          } else {
            w[pos] += cv;
          }
        }
        for (auto& v : w) v *= scale;
        op[i] = {0, std::move(w)};
        dataL(i) = dg * scale * d->h;  // ghost weights multiply h * g
      } else if (i >= m - 2) {
        std::vector<double> w(5, 0.0);  // couplings on u_{n-4}..u_n
        double dg = 0.0;
        for (int off = -2; off <= 2; ++off) {
          const double cv = cw[off + 2];
          const int pos = i + off;
          if (pos == m) {
            for (int kk = 0; kk < 5; ++kk) w[4 - kk] += cv * gr1_u[kk];
            dg += cv * gr1_g;
          } else if (pos == m + 1) {
            for (int kk = 0; kk < 5; ++kk) w[4 - kk] += cv * gr2_u[kk];
            dg += cv * gr2_g;
          } else {
            w[pos - (m - 5)] += cv;
          }
        }
        for (auto& v : w) v *= scale;
        op[i] = {m - 5, std::move(w)};
        dataR(i) = dg * scale * d->h;
      } else {
        std::vector<double> w = cw;
        for (auto& v : w) v *= scale;
        op[i] = {i - 2, std::move(w)};
      }
    }
  };
  build(c1, 1, d->d1, d->d1L, d->d1R);
  build(c2, 2, d->d2, d->d2L, d->d2R);
  return d;
}

// Manufactured solution and the data derived from it.
double burgers_exact(double x, double t) { return std::cos(2 + 10 * t) * std::sin(0.2 + 20 * x); }
double burgers_exact_x(double x, double t) {
  return 20 * std::cos(2 + 10 * t) * std::cos(0.2 + 20 * x);
}
double burgers_exact_t(double x, double t) {
  return -10 * std::sin(2 + 10 * t) * std::sin(0.2 + 20 * x);
}
double burgers_forcing(double nu, double x, double t) {
  const double u = burgers_exact(x, t);
  return burgers_exact_t(x, t) + u * burgers_exact_x(x, t) - nu * (-400.0 * u);
}

ODESystem make_burgers_system(std::shared_ptr<BurgersDisc> d) {
  ODESystem sys;
  sys.dim = d->m;
  sys.kl = sys.ku = 4;  // wall rows couple nodes up to four apart

  sys.rhs = [d](double t, const Vec& u, Vec& f) {
    const double gL = burgers_exact_x(0.0, t), gR = burgers_exact_x(1.0, t);
    Vec ux = apply_stencil(d->d1, u) + d->d1L * gL + d->d1R * gR;
    Vec uxx = apply_stencil(d->d2, u) + d->d2L * gL + d->d2R * gR;
    for (int i = 0; i < d->m; ++i)
      f(i) = -u(i) * ux(i) + d->nu * uxx(i) + burgers_forcing(d->nu, i * d->h, t);
  };

  sys.jacobian_banded = [d](double t, const Vec& u, BandedMatrix& J) {
    const double gL = burgers_exact_x(0.0, t), gR = burgers_exact_x(1.0, t);
    Vec ux = apply_stencil(d->d1, u) + d->d1L * gL + d->d1R * gR;
    J.set_zero();
    for (int i = 0; i < d->m; ++i) {
      J.at(i, i) += -ux(i);
      const auto& r1 = d->d1[i];
      for (size_t kk = 0; kk < r1.w.size(); ++kk)
        J.at(i, r1.start + static_cast<int>(kk)) += -u(i) * r1.w[kk];
      const auto& r2 = d->d2[i];
      for (size_t kk = 0; kk < r2.w.size(); ++kk)
        J.at(i, r2.start + static_cast<int>(kk)) += d->nu * r2.w[kk];
    }
  };

  sys.exact = [d](double t) {
    Vec u(d->m);
    for (int i = 0; i < d->m; ++i) u(i) = burgers_exact(i * d->h, t);
    return u;
  };

  // Neumann data cancels in solution differences, so the error profiles
  // apply the coupling stencils alone
  sys.observables.push_back({"u", [](const Vec& e) { return e.cwiseAbs().eval(); }});
  sys.observables.push_back(
      {"ux", [d](const Vec& e) { return apply_stencil(d->d1, e).cwiseAbs().eval(); }});
  sys.observables.push_back(
      {"uxx", [d](const Vec& e) { return apply_stencil(d->d2, e).cwiseAbs().eval(); }});
  return sys;
}

}  // namespace

ODESystem burgers_mol(double nu, const GridSpec& grid) {
  check_grid(grid, GridSpec::Boundary::neumann, "burgers_mol");
  return make_burgers_system(build_burgers(nu, grid));
}

// ---------------------------------------------------------------------------
// Van der Pol problem.

namespace {

void vdp_rhs(double mu, const double* u, double* f) {
  f[0] = u[1];
  f[1] = mu * (1.0 - u[0] * u[0]) * u[1] - u[0];
}

struct VdpReference {
  double mu, t_end, dt, checkpoint_dt;
  std::vector<double> t, x, y;
};

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

VdpReference generate_vdp_reference(double mu, const VdpReferenceOptions& opt) {
  VdpReference ref{mu, opt.t_end, opt.dt, opt.checkpoint_dt, {}, {}, {}};
  const long n = std::lround(opt.t_end / opt.dt);
  const long stride = std::max(1L, std::lround(opt.checkpoint_dt / opt.dt));
  double u[2] = {2.0, 0.0};
  ref.t.push_back(0.0);
  ref.x.push_back(u[0]);
  ref.y.push_back(u[1]);
  double k1[2], k2[2], k3[2], k4[2], tmp[2];
  for (long step = 0; step < n; ++step) {
    const double hh = opt.dt;
    vdp_rhs(mu, u, k1);
    tmp[0] = u[0] + 0.5 * hh * k1[0];
    tmp[1] = u[1] + 0.5 * hh * k1[1];
    vdp_rhs(mu, tmp, k2);
    tmp[0] = u[0] + 0.5 * hh * k2[0];
    tmp[1] = u[1] + 0.5 * hh * k2[1];
    vdp_rhs(mu, tmp, k3);
    tmp[0] = u[0] + hh * k3[0];
    tmp[1] = u[1] + hh * k3[1];
    vdp_rhs(mu, tmp, k4);
    u[0] += hh / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    u[1] += hh / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    if ((step + 1) % stride == 0 || step + 1 == n) {
      ref.t.push_back((step + 1) * opt.dt);
      ref.x.push_back(u[0]);
      ref.y.push_back(u[1]);
    }
  }
  return ref;
}

void save_vdp_reference(const VdpReference& ref, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write reference table to " + path);
  os.precision(17);
  os << "# van der Pol reference trajectory (explicit RK4, fixed step)\n"
     << "# mu = " << ref.mu << "\n# t_end = " << ref.t_end << "\n# dt = " << ref.dt
     << "\n# checkpoint_dt = " << ref.checkpoint_dt << "\n# columns: t x y\n";
  for (size_t i = 0; i < ref.t.size(); ++i)
    os << ref.t[i] << " " << ref.x[i] << " " << ref.y[i] << "\n";
}

bool load_vdp_reference(const std::string& path, double mu, const VdpReferenceOptions& opt,
                        VdpReference& out) {
  std::ifstream is(path);
  if (!is) return false;
  out = VdpReference{0, 0, 0, 0, {}, {}, {}};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key, eq;
      double v;
      if (ls >> key >> eq >> v && eq == "=") {
        if (key == "mu") out.mu = v;
        else if (key == "t_end") out.t_end = v;
        else if (key == "dt") out.dt = v;
        else if (key == "checkpoint_dt") out.checkpoint_dt = v;
      }
      continue;
    }
    std::istringstream ls(line);
    double t, x, y;
    if (ls >> t >> x >> y) {
      out.t.push_back(t);
      out.x.push_back(x);
      out.y.push_back(y);
    }
  }
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1.0}); };
  return close(out.mu, mu) && close(out.t_end, opt.t_end) && close(out.dt, opt.dt) &&
         close(out.checkpoint_dt, opt.checkpoint_dt) && !out.t.empty();
}

}  // namespace

std::string vdp_reference_path(double mu, const VdpReferenceOptions& ref) {
  return ref.cache_dir + "/vdp_ref_mu" + fmt_g(mu) + "_T" + fmt_g(ref.t_end) + "_dt" +
         fmt_g(ref.dt) + ".txt";
}

ODESystem van_der_pol(double mu, const VdpReferenceOptions& opt) {
  if (!(mu > 0)) throw std::invalid_argument("van_der_pol: mu must be positive");
  ODESystem sys;
  sys.dim = 2;
  sys.rhs = [mu](double, const Vec& u, Vec& f) { vdp_rhs(mu, u.data(), f.data()); };
  sys.jacobian = [mu](double, const Vec& u, Mat& J) {
    J(0, 0) = 0.0;
    J(0, 1) = 1.0;
    J(1, 0) = -2.0 * mu * u(0) * u(1) - 1.0;
    J(1, 1) = mu * (1.0 - u(0) * u(0));
  };

  auto ref = std::make_shared<VdpReference>();
  const std::string path = vdp_reference_path(mu, opt);
  if (!load_vdp_reference(path, mu, opt, *ref)) {
    *ref = generate_vdp_reference(mu, opt);
    std::filesystem::create_directories(opt.cache_dir);
    save_vdp_reference(*ref, path);
  }
  sys.exact = [ref](double t) {
    // checkpoint lookup; the reference grid is uniform
    const double cp = ref->checkpoint_dt;
    const long idx = std::lround(t / cp);
    if (t == 0.0 || (idx >= 0 && static_cast<size_t>(idx) < ref->t.size() &&
                     std::abs(ref->t[idx] - t) <= 1e-9 * std::max(1.0, std::abs(t)))) {
      Vec u(2);
      u(0) = ref->x[idx];
      u(1) = ref->y[idx];
      return u;
    }
    throw std::invalid_argument("van_der_pol reference available only at checkpoint times");
  };
  return sys;
}

// ---------------------------------------------------------------------------
// Error recursion for the Prothero-Robinson problem.

RecursionOracle::RecursionOracle(const ButcherTableau& t, double lambda, int jmax)
    : tab_(t), lambda_(lambda), jmax_(jmax) {
  if (jmax < 2) throw std::invalid_argument("RecursionOracle: jmax must be >= 2");
}

namespace {

Vec tau_vec(const ButcherTableau& t, int j) {
  Vec cj1(t.s), cj(t.s);
  for (int i = 0; i < t.s; ++i) {
    cj1(i) = (j == 1) ? 1.0 : std::pow(t.c(i), j - 1);
    cj(i) = std::pow(t.c(i), j);
  }
  return t.A * cj1 - cj / j;
}

}  // namespace

void RecursionOracle::prepare(double dt) const {
  if (dt == cached_dt_) return;
  const double zeta = lambda_ * dt;
  Mat M = Mat::Identity(tab_.s, tab_.s) - zeta * tab_.A;
  Eigen::PartialPivLU<Mat> lu(M);
  if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < 1e-14 * std::max(1.0, M.cwiseAbs().maxCoeff()))
    throw SingularMatrixError("recursion oracle: I - zeta A is singular", 0);
  R_ = 1.0 + zeta * tab_.b.dot(lu.solve(Vec::Ones(tab_.s)));
  stage_coef_.assign(jmax_ + 1, 0.0);
  quad_coef_.assign(jmax_ + 1, 0.0);
  double dtj = dt;      // dt^j
  double fact = 1.0;    // (j-1)!
  for (int j = 1; j <= jmax_; ++j) {
    if (j > 1) {
      dtj *= dt;
      fact *= (j - 1);
    }
    const double w = dtj / fact;
    if (j >= 2) stage_coef_[j] = w * zeta * tab_.b.dot(lu.solve(tau_vec(tab_, j)));
    double bc = 0.0;
    for (int i = 0; i < tab_.s; ++i) bc += tab_.b(i) * ((j == 1) ? 1.0 : std::pow(tab_.c(i), j - 1));
    quad_coef_[j] = w * (bc - 1.0 / j);
  }
  cached_dt_ = dt;
}

double RecursionOracle::step(double tn, double dt) {
  prepare(dt);
  double e = R_ * err_;
  for (int j = 2; j <= jmax_; ++j) e += stage_coef_[j] * pr_phi_derivative(tn, j);
  for (int j = 1; j <= jmax_; ++j) e += quad_coef_[j] * pr_phi_derivative(tn, j);
  err_ = e;
  return err_;
}

double RecursionOracle::step_tail_bound(double dt, int extra_terms) const {
  const double zeta = lambda_ * dt;
  Mat M = Mat::Identity(tab_.s, tab_.s) - zeta * tab_.A;
  Eigen::PartialPivLU<Mat> lu(M);
  double bound = 0.0;
  double dtj = std::pow(dt, jmax_);
  double fact = 1.0;
  for (int j = 2; j <= jmax_; ++j) fact *= (j - 1);
  for (int j = jmax_ + 1; j <= jmax_ + extra_terms; ++j) {
    dtj *= dt;
    fact *= (j - 1);
    const double w = dtj / fact;
    if (!std::isfinite(w) || w == 0.0) break;
    const double sc = std::abs(zeta * tab_.b.dot(lu.solve(tau_vec(tab_, j))));
    double bc = 0.0;
    for (int i = 0; i < tab_.s; ++i) bc += tab_.b(i) * std::pow(tab_.c(i), j - 1);
    bound += w * (sc + std::abs(bc - 1.0 / j));
  }
  return bound;
}

}  // namespace dirkwso
