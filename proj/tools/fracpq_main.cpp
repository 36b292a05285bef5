#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracpq/cli_io.hpp"

namespace {

using namespace fracpq;
using namespace fracpq::io;

void add_interval_option(CLI::App* app, std::vector<double>& interval) {
  app->add_option("--interval", interval, "domain endpoints A B")->expected(2);
}

void add_problem_options(CLI::App* app, PQConfig& cfg, std::vector<double>& interval, int& n) {
  app->add_option("--s1", cfg.s1, "fractional order of the p-operator");
  app->add_option("--p", cfg.p, "leading exponent p");
  app->add_option("--s2", cfg.s2, "fractional order of the q-operator");
  app->add_option("--q", cfg.q, "trailing exponent q");
  add_interval_option(app, interval);
  app->add_option("--n", n, "number of grid cells");
}

void add_solver_options(CLI::App* app, SolverOptions& opt) {
  app->add_option("--seed", opt.seed, "random seed");
  app->add_option("--multistart", opt.multistart, "number of solver starts");
  app->add_option("--max-iterations", opt.max_iterations, "iteration cap per start");
  app->add_option("--tol,--residual-tol", opt.residual_tol, "residual tolerance");
  app->add_option("--descent-tol", opt.descent_tol, "relative decrease stop tolerance");
  app->add_option("--threads", opt.threads, "worker cap (0 = FRACPQ_THREADS or hardware)");
}

void add_emit_options(CLI::App* app, std::string& emit, std::string& out) {
  app->add_option("--emit", emit, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--out", out, "output file path");
}

void apply_interval(const std::vector<double>& raw, Interval& iv) {
  if (raw.size() == 2) {
    iv.a = raw[0];
    iv.b = raw[1];
  }
}

void print_summary(const ResultRecord& rec) {
  std::cout << rec.command << ": " << rec.outputs.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracpq: fractional (p,q)-Laplacian eigenpairs, threshold curve and existence regions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fracpq::io::kToolkitVersion);
  // flat key=value lines, keys prefixed by the subcommand: eigen.s = 0.5;
  // command-line flags override the file
  app.set_config("--config", "", "flat key=value configuration file (keys like eigen.s)");

  // eigen
  EigenCmd eigen;
  std::vector<double> eigen_interval;
  auto* eigen_app = app.add_subcommand("eigen", "first Dirichlet eigenpair of one operator");
  eigen_app->add_option("--s", eigen.s, "fractional order")->required();
  eigen_app->add_option("--r", eigen.r, "integrability exponent")->required();
  add_interval_option(eigen_app, eigen_interval);
  eigen_app->add_option("--n", eigen.n, "number of grid cells");
  add_solver_options(eigen_app, eigen.solver);
  add_emit_options(eigen_app, eigen.emit, eigen.out_path);

  // solve
  SolveCmd solve;
  std::vector<double> solve_interval;
  double solve_mu = 0.0;
  auto* solve_app = app.add_subcommand("solve", "solve (EV; alpha, beta) and certify the outcome");
  add_problem_options(solve_app, solve.problem, solve_interval, solve.n);
  solve_app->add_option("--alpha", solve.alpha, "alpha parameter")->required();
  solve_app->add_option("--beta", solve.beta, "beta parameter")->required();
  solve_app->add_option("--method", solve.method, "auto | nehari | global | truncation");
  auto* mu_opt = solve_app->add_option("--mu", solve_mu, "supersolution level for --method truncation");
  add_solver_options(solve_app, solve.solver);
  add_emit_options(solve_app, solve.emit, solve.out_path);

  // curve
  CurveCmd curve;
  std::vector<double> curve_interval;
  auto* curve_app = app.add_subcommand("curve", "trace the threshold curve lambda*(theta)");
  add_problem_options(curve_app, curve.problem, curve_interval, curve.n);
  curve_app->add_option("--theta-min", curve.theta_min, "left end of the theta range")->required();
  curve_app->add_option("--theta-max", curve.theta_max, "right end of the theta range")->required();
  curve_app->add_option("--steps", curve.steps, "number of theta samples");
  curve_app->add_option("--curve-tol", curve.curve.tol_scale, "bracket tolerance scale");
  add_solver_options(curve_app, curve.curve.solver);
  add_emit_options(curve_app, curve.emit, curve.out_path);

  // region
  RegionCmd region;
  std::vector<double> region_interval;
  std::string alpha_grid_spec, beta_grid_spec;
  auto* region_app = app.add_subcommand("region", "classify an (alpha, beta) lattice");
  add_problem_options(region_app, region.problem, region_interval, region.n);
  region_app->add_option("--alpha-grid", alpha_grid_spec,
                         "alpha values: v1,v2,... or min:max:count")->required();
  region_app->add_option("--beta-grid", beta_grid_spec,
                         "beta values: v1,v2,... or min:max:count")->required();
  region_app->add_option("--curve-tol", region.curve.tol_scale, "bracket tolerance scale");
  add_solver_options(region_app, region.curve.solver);
  add_emit_options(region_app, region.emit, region.out_path);

  // proptest
  ProptestCmd prop;
  auto* prop_app = app.add_subcommand("proptest", "run the seeded inequality suites");
  prop_app->add_option("--seed", prop.seed, "random seed");
  prop_app->add_option("--cases", prop.cases, "cases per inequality variant");
  add_emit_options(prop_app, prop.emit, prop.out_path);

  // li-check
  LiCheckCmd li;
  std::vector<double> li_interval;
  auto* li_app = app.add_subcommand("li-check", "linear-independence window and numeric distance");
  add_problem_options(li_app, li.problem, li_interval, li.n);
  add_solver_options(li_app, li.solver);
  add_emit_options(li_app, li.emit, li.out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    CmdResult result;
    if (*eigen_app) {
      apply_interval(eigen_interval, eigen.interval);
      result = cmd_eigen(eigen);
    } else if (*solve_app) {
      apply_interval(solve_interval, solve.problem.interval);
      if (mu_opt->count() > 0) solve.mu = solve_mu;
      result = cmd_solve(solve);
    } else if (*curve_app) {
      apply_interval(curve_interval, curve.problem.interval);
      result = cmd_curve(curve);
    } else if (*region_app) {
      region.alpha_grid = fracpq::io::parse_grid_spec(alpha_grid_spec);
      region.beta_grid = fracpq::io::parse_grid_spec(beta_grid_spec);
      apply_interval(region_interval, region.problem.interval);
      result = cmd_region(region);
    } else if (*prop_app) {
      result = cmd_proptest(prop);
    } else if (*li_app) {
      apply_interval(li_interval, li.problem.interval);
      result = cmd_li_check(li);
    }
    print_summary(result.record);
    return result.exit_code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNonConvergence;
  }
}
