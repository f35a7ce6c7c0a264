// Command-line front end: inspect schemes, analyze tableaux, run
// integrations, convergence studies, and coefficient searches.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dirkwso/analysis.hpp"
#include "dirkwso/convergence.hpp"
#include "dirkwso/problems.hpp"
#include "dirkwso/search.hpp"
#include "dirkwso/tableau.hpp"

namespace {

using namespace dirkwso;

struct ProblemFlags {
  std::string name = "pr";
  double lambda = -1e4;
  double mu = 500.0;
  double nu = 0.1;
  double omega = 2 * 3.14159265358979323846;
  double wavenumber = 5.0;
  int grid_n = 0;       // 0: per-problem default
  double t_final = 0;   // 0: per-problem default
  std::string cache_dir = ".";
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& pf) {
  cmd->add_option("--problem", pf.name, "problem: pr | decay | schrodinger | burgers | vdp")
      ->required();
  cmd->add_option("--lambda", pf.lambda, "stiffness parameter (pr, decay)");
  cmd->add_option("--mu", pf.mu, "van der Pol stiffness parameter");
  cmd->add_option("--nu", pf.nu, "Burgers viscosity");
  cmd->add_option("--omega", pf.omega, "dispersive problem frequency");
  cmd->add_option("--wavenumber", pf.wavenumber, "dispersive problem wavenumber");
  cmd->add_option("--grid-n", pf.grid_n, "cell count for PDE problems");
  cmd->add_option("--t-final", pf.t_final, "final time");
  cmd->add_option("--cache-dir", pf.cache_dir, "cache directory for the vdp reference table");
}

StudyProblem build_problem(const ProblemFlags& pf) {
  StudyProblem p;
  p.name = pf.name;
  std::ostringstream desc;
  if (pf.name == "pr") {
    p.system = prothero_robinson(pf.lambda);
    p.t_end = pf.t_final > 0 ? pf.t_final : 10.0;
    desc << "lambda=" << pf.lambda;
  } else if (pf.name == "decay") {
    p.system = decay(pf.lambda);
    p.t_end = pf.t_final > 0 ? pf.t_final : 1.0;
    desc << "lambda=" << pf.lambda;
  } else if (pf.name == "schrodinger") {
    GridSpec grid;
    grid.n_cells = pf.grid_n > 0 ? pf.grid_n : 2000;
    grid.bc = GridSpec::Boundary::dirichlet;
    p.system = schrodinger_mol(pf.omega, pf.wavenumber, grid);
    p.t_end = pf.t_final > 0 ? pf.t_final : 1.2;
    desc << "omega=" << pf.omega << " k=" << pf.wavenumber << " N=" << grid.n_cells;
  } else if (pf.name == "burgers") {
    GridSpec grid;
    grid.n_cells = pf.grid_n > 0 ? pf.grid_n : 2048;
    grid.bc = GridSpec::Boundary::neumann;
    p.system = burgers_mol(pf.nu, grid);
    p.t_end = pf.t_final > 0 ? pf.t_final : 1.0;
    desc << "nu=" << pf.nu << " N=" << grid.n_cells;
  } else if (pf.name == "vdp") {
    VdpReferenceOptions opt;
    opt.cache_dir = pf.cache_dir;
    p.system = van_der_pol(pf.mu, opt);
    p.t_end = pf.t_final > 0 ? pf.t_final : 10.0;
    desc << "mu=" << pf.mu;
    p.u0 = Vec(2);
    p.u0 << 2.0, 0.0;
  } else {
    throw CLI::ValidationError("--problem", "unknown problem '" + pf.name + "'");
  }
  p.params_desc = desc.str();
  if (p.u0.size() == 0) p.u0 = p.system.exact(0.0);
  return p;
}

std::vector<double> default_dts(const std::string& problem, double t_end) {
  if (problem == "pr") return log_spaced_divisors(t_end, 1e-5, 1.0, 24);
  if (problem == "schrodinger") return dyadic_dts(t_end, 4, 15);
  if (problem == "burgers") return dyadic_dts(t_end, 4, 15);
  if (problem == "vdp") return log_spaced_divisors(t_end, 1e-4, 1e-1, 16);
  return log_spaced_divisors(t_end, 1e-4, 1e-1, 12);
}

SlopeWindow default_window(const std::string& problem, double t_end) {
  if (problem == "pr") return {1e-3, 1e-1};
  if (problem == "schrodinger") return {t_end / 2048.0, t_end / 16.0};
  if (problem == "burgers") return {t_end / 2048.0, t_end / 32.0};
  if (problem == "vdp") return {3e-3, 3e-2};
  return {1e-4, 1e-1};
}

ButcherTableau resolve_scheme(const std::string& scheme, const std::string& file) {
  if (!scheme.empty()) return registry_get(scheme);
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open tableau file " + file);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_tableau(buf.str());
}

int cmd_list() {
  std::printf("%-14s %2s %2s %2s %3s  %s\n", "name", "s", "p", "q", "wso", "description");
  for (const auto& e : registry()) {
    const auto rep = analyze(e.tableau);
    std::printf("%-14s %2d %2d %2d %3d  %s\n", e.name.c_str(), rep.stages, rep.classical_order,
                rep.stage_order, rep.wso, e.description.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DIRK scheme analysis, stiff integration, and order-reduction studies"};
  app.require_subcommand(1);
  // key=value file with one [subcommand] section, e.g. [converge];
  // usage: dirkwso --config study.conf converge
  app.set_config("--config", "", "read options from a key=value file");

  auto* list_cmd = app.add_subcommand("list", "list built-in schemes with computed labels");

  std::string scheme, tableau_file;
  auto add_scheme_flags = [&](CLI::App* cmd) {
    auto* s = cmd->add_option("--scheme", scheme, "name of a built-in scheme");
    auto* f = cmd->add_option("--tableau-file", tableau_file, "path of a tableau text file");
    s->excludes(f);
    f->excludes(s);
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "compute scheme diagnostics");
  add_scheme_flags(analyze_cmd);
  bool kv = false;
  double tol = 1e-8;
  analyze_cmd->add_flag("--kv", kv, "machine-readable key = value output");
  analyze_cmd->add_option("--tol", tol, "order-detection tolerance");

  auto* integrate_cmd = app.add_subcommand("integrate", "advance a problem and print the result");
  ProblemFlags ipf;
  add_problem_flags(integrate_cmd, ipf);
  add_scheme_flags(integrate_cmd);
  double int_dt = 0.0;
  std::string trajectory_path;
  integrate_cmd->add_option("--dt", int_dt, "time step")->required();
  integrate_cmd->add_option("--trajectory", trajectory_path, "write t,u CSV to this path");

  auto* converge_cmd = app.add_subcommand("converge", "run a convergence study, emit CSV");
  ProblemFlags cpf;
  add_problem_flags(converge_cmd, cpf);
  add_scheme_flags(converge_cmd);
  std::vector<double> dt_list;
  double dt_min = 0, dt_max = 0;
  int dt_count = 0;
  std::string window_str, output_path, observables_str;
  int jobs = 1;
  converge_cmd->add_option("--dt-list", dt_list, "explicit dt values")->delimiter(',');
  converge_cmd->add_option("--dt-min", dt_min, "smallest dt of a log-spaced list");
  converge_cmd->add_option("--dt-max", dt_max, "largest dt of a log-spaced list");
  converge_cmd->add_option("--dt-count", dt_count, "number of log-spaced dt values");
  converge_cmd->add_option("--window", window_str, "slope-fit window lo:hi (default per problem)");
  converge_cmd->add_option("--observables", observables_str, "comma list, e.g. u,ux,uxx");
  converge_cmd->add_option("--output", output_path, "CSV destination (default stdout)");
  converge_cmd->add_option("--jobs", jobs, "concurrent study rows");

  auto* search_cmd = app.add_subcommand("search", "search DIRK coefficient space");
  SearchSpec sspec;
  std::string search_out;
  search_cmd->add_option("--stages", sspec.stages, "stage count")->required();
  search_cmd->add_option("--order", sspec.order, "target classical order")->required();
  search_cmd->add_option("--qe", sspec.qe, "target eigenvector-criterion order")->required();
  search_cmd->add_option("--seed", sspec.seed, "random seed");
  search_cmd->add_option("--multistarts", sspec.multistarts, "number of random starts");
  search_cmd->add_option("--iterations", sspec.iterations, "local iterations per penalty round");
  search_cmd->add_option("--out", search_out, "write the found tableau here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) return cmd_list();

    if (analyze_cmd->parsed()) {
      if (scheme.empty() && tableau_file.empty())
        throw std::runtime_error("analyze: give --scheme or --tableau-file");
      AnalysisOptions opt;
      opt.tol = tol;
      const auto rep = analyze(resolve_scheme(scheme, tableau_file), opt);
      std::cout << (kv ? format_report_kv(rep) : format_report(rep));
      return 0;
    }

    if (integrate_cmd->parsed()) {
      if (scheme.empty() && tableau_file.empty())
        throw std::runtime_error("integrate: give --scheme or --tableau-file");
      if (!(int_dt > 0)) throw std::runtime_error("integrate: --dt must be positive");
      const auto tab = resolve_scheme(scheme, tableau_file);
      const auto prob = build_problem(ipf);
      std::ofstream traj;
      std::function<void(double, const Vec&)> observer;
      if (!trajectory_path.empty()) {
        traj.open(trajectory_path);
        if (!traj) throw std::runtime_error("cannot open " + trajectory_path);
        traj.precision(17);
        traj << "t";
        for (int i = 0; i < prob.system.dim; ++i) traj << ",u" << i;
        traj << "\n";
        observer = [&traj](double t, const Vec& u) {
          traj << t;
          for (int i = 0; i < u.size(); ++i) traj << "," << u(i);
          traj << "\n";
        };
      }
      const auto res =
          integrate(tab, prob.system, prob.t0, prob.u0, prob.t_end, int_dt, {}, observer);
      std::cout.precision(17);
      std::cout << "t_final " << prob.t_end << "\n";
      std::cout << "steps " << res.steps << (res.shortened_final ? " (final step shortened)" : "")
                << "\n";
      std::cout << "u";
      for (int i = 0; i < res.u.size(); ++i) std::cout << " " << res.u(i);
      std::cout << "\n";
      if (prob.system.exact) {
        try {
          const Vec err = res.u - prob.system.exact(prob.t_end);
          std::cout << "max_error " << err.lpNorm<Eigen::Infinity>() << "\n";
        } catch (const std::invalid_argument&) {
          // reference not available at this time (vdp checkpoints only)
        }
      }
      return 0;
    }

    if (converge_cmd->parsed()) {
      if (scheme.empty() && tableau_file.empty())
        throw std::runtime_error("converge: give --scheme or --tableau-file");
      StudySpec spec;
      spec.scheme = resolve_scheme(scheme, tableau_file);
      spec.problem = build_problem(cpf);
      spec.jobs = jobs;
      if (!dt_list.empty()) {
        spec.dts = dt_list;
      } else if (dt_count > 0) {
        if (!(dt_min > 0) || !(dt_max > dt_min))
          throw std::runtime_error("converge: need 0 < --dt-min < --dt-max with --dt-count");
        spec.dts = log_spaced_divisors(spec.problem.t_end - spec.problem.t0, dt_min, dt_max,
                                       dt_count);
      } else {
        spec.dts = default_dts(cpf.name, spec.problem.t_end);
      }
      if (!window_str.empty()) {
        const auto colon = window_str.find(':');
        if (colon == std::string::npos)
          throw std::runtime_error("converge: --window expects lo:hi");
        spec.window.dt_lo = std::stod(window_str.substr(0, colon));
        spec.window.dt_hi = std::stod(window_str.substr(colon + 1));
      } else {
        spec.window = default_window(cpf.name, spec.problem.t_end);
      }
      if (!observables_str.empty()) {
        std::istringstream ss(observables_str);
        std::string item;
        while (std::getline(ss, item, ',')) spec.observables.push_back(item);
      }
      const auto table = run_study(spec);
      if (output_path.empty()) {
        emit_csv(table, std::cout);
      } else {
        std::ofstream os(output_path);
        if (!os) throw std::runtime_error("cannot open " + output_path);
        emit_csv(table, os);
        std::cerr << "wrote " << output_path << "\n";
      }
      return 0;
    }

    if (search_cmd->parsed()) {
      const auto res = search(sspec);
      if (!res.success) {
        std::cerr << "search failed: " << res.failure_reason << "\n";
        return 1;
      }
      const std::string text = serialize(*res.tableau);
      if (!search_out.empty()) {
        std::ofstream os(search_out);
        if (!os) throw std::runtime_error("cannot open " + search_out);
        os << text;
        std::cerr << "wrote " << search_out << "\n";
      } else {
        std::cout << text;
      }
      std::cerr << "verified: order " << res.report.classical_order << ", eigenvector order "
                << res.report.wso_eigenvector << ", A-stable, objective " << res.objective
                << " (start " << res.winning_start << ")\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
