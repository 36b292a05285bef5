#include "fracpq/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dense_linear.hpp"
#include "fracpq/threading.hpp"

namespace fracpq {

namespace {

/// Second derivative of |t|^r / r, capped so near-coincident values for
/// r < 2 stay solvable.
double curvature_pow(double t, double rm2) {
  const double c = abs_pow(t, rm2);
  if (!std::isfinite(c)) return 1e14;
  return std::min(c, 1e14);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  // distinct, reproducible streams per (seed, stream) pair
  return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL + stream * 0xD1B54A32D192ED03ULL + 1ULL);
}

/// Scales u in place to ||u||_r = 1. Returns false when u is numerically zero.
bool normalize_lr(const Grid& grid, GridFunction& u, double r) {
  const double nr = lp_norm_pow(grid, u, r);
  if (!(nr > 0.0) || !std::isfinite(nr)) return false;
  const double c = std::pow(nr, -1.0 / r);
  for (double& x : u.values) x *= c;
  return true;
}

/// Symmetry classes for the Newton reduction: the first eigenfunction is
/// mirror symmetric (reflection invariance plus simplicity), and in the
/// reduced subspace the kernel curvature singularities of r < 2 at equal
/// mirror values cancel exactly. Returns one representative class per node;
/// identity classes when the iterate is visibly asymmetric.
std::vector<int> polish_classes(const GridFunction& u, bool& reduced) {
  const int n = u.size();
  std::vector<int> cls(static_cast<std::size_t>(n));
  double sup = 0.0, defect = 0.0;
  for (int i = 0; i < n; ++i) {
    sup = std::max(sup, std::abs(u[i]));
    defect = std::max(defect, std::abs(u[i] - u[n - 1 - i]));
  }
  reduced = defect <= 0.05 * (sup > 0.0 ? sup : 1.0);
  for (int i = 0; i < n; ++i) {
    cls[static_cast<std::size_t>(i)] = reduced ? std::min(i, n - 1 - i) : i;
  }
  return cls;
}

/// Bordered Newton refinement of the eigen-system
///   g(u) - lambda h |u|^{r-2} u = 0,  ||u||_r^r = 1,
/// in the unknowns (u, lambda). First-order descent plateaus once energy
/// decreases fall under rounding; this stage pushes the residual to the
/// solver tolerance and beyond.
void newton_polish(const EnergyAssembly& asm_, GridFunction& u, double& lambda,
                   const SolverOptions& opt) {
  const Grid& grid = *asm_.grid;
  const int n = grid.n;
  const double r = asm_.params.r;
  const double rm1 = r - 1.0;
  const double rm2 = r - 2.0;
  const double h = grid.h;

  bool reduced = false;
  const std::vector<int> cls = polish_classes(u, reduced);
  if (reduced) {
    for (int i = 0; i < n / 2; ++i) {
      const double avg = 0.5 * (u[i] + u[n - 1 - i]);
      u[i] = avg;
      u[n - 1 - i] = avg;
    }
  }
  const int m = reduced ? (n + 1) / 2 : n;
  const int dim = m + 1;

  std::vector<double> g;
  std::vector<double> full_jac(static_cast<std::size_t>(n) * n);
  std::vector<double> jac(static_cast<std::size_t>(dim) * dim);
  std::vector<double> rhs(static_cast<std::size_t>(dim));
  GridFunction trial(u.grid);

  auto residual_norms = [&](const GridFunction& v, double lam, std::vector<double>& res,
                            double& inf, double& sq) {
    operator_apply_into(asm_, v, g);
    inf = 0.0;
    sq = 0.0;
    res.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      const double ri = g[static_cast<std::size_t>(i)] - lam * h * signed_pow(v[i], rm1);
      res[static_cast<std::size_t>(i)] = ri;
      inf = std::max(inf, std::abs(ri));
      sq += ri * ri;
    }
    const double norm_defect = lp_norm_pow(grid, v, r) - 1.0;
    res[static_cast<std::size_t>(n)] = norm_defect;
    sq += norm_defect * norm_defect;
  };

  std::vector<double> res;
  double res_inf = 0.0, res_sq = 0.0;
  residual_norms(u, lambda, res, res_inf, res_sq);

  for (int it = 0; it < 40; ++it) {
    if (res_inf < 1e-3 * opt.residual_tol * (1.0 + std::abs(lambda))) break;

    // full Jacobian of the eigen-residual in u
    std::fill(full_jac.begin(), full_jac.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      double diag = asm_.exterior_weights[static_cast<std::size_t>(i)] * rm1 *
                    curvature_pow(u[i], rm2);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double c = 2.0 * asm_.w(i, j) * rm1 * curvature_pow(u[i] - u[j], rm2);
        full_jac[static_cast<std::size_t>(i) * n + j] = -c;
        diag += c;
      }
      full_jac[static_cast<std::size_t>(i) * n + i] =
          diag - lambda * h * rm1 * curvature_pow(u[i], rm2);
    }

    // accumulate into the (reduced) bordered system
    std::fill(jac.begin(), jac.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const int k = cls[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        jac[static_cast<std::size_t>(k) * dim + cls[static_cast<std::size_t>(j)]] +=
            full_jac[static_cast<std::size_t>(i) * n + j];
      }
      jac[static_cast<std::size_t>(k) * dim + m] += -h * signed_pow(u[i], rm1);
      jac[static_cast<std::size_t>(m) * dim + k] += r * h * signed_pow(u[i], rm1);
      rhs[static_cast<std::size_t>(k)] += -res[static_cast<std::size_t>(i)];
    }
    rhs[static_cast<std::size_t>(m)] = -res[static_cast<std::size_t>(n)];
    if (!detail::solve_dense(jac, rhs, dim)) break;

    // damped step, accepted only on residual decrease
    bool accepted = false;
    for (double t : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
      for (int i = 0; i < n; ++i) {
        trial[i] = u[i] + t * rhs[static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])];
      }
      const double lam_trial = lambda + t * rhs[static_cast<std::size_t>(m)];
      std::vector<double> res_t;
      double inf_t = 0.0, sq_t = 0.0;
      residual_norms(trial, lam_trial, res_t, inf_t, sq_t);
      if (std::isfinite(sq_t) && sq_t < res_sq) {
        u.values = trial.values;
        lambda = lam_trial;
        res = std::move(res_t);
        res_inf = inf_t;
        res_sq = sq_t;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
}

/// Projected descent on the unit L^r sphere from one start. The Rayleigh
/// quotient equals the energy on the sphere; the accept rule keeps it
/// non-increasing.
Eigenpair descend_from(const EnergyAssembly& asm_, GridFunction u, const SolverOptions& opt) {
  const Grid& grid = *asm_.grid;
  const double r = asm_.params.r;
  const double rm1 = r - 1.0;
  const int n = grid.n;

  Eigenpair out;
  out.phi = u;
  if (!normalize_lr(grid, u, r)) {
    out.converged = false;
    return out;
  }

  std::vector<double> g, resid(static_cast<std::size_t>(n));
  GridFunction trial(u.grid);
  double e = energy(asm_, u);
  double step = 1.0;
  int stall = 0;

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (opt.record_trace) out.quotient_trace.push_back(e);
    operator_apply_into(asm_, u, g);
    double res_inf = 0.0;
    double res_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ri = g[static_cast<std::size_t>(i)] -
                        e * grid.h * signed_pow(u[i], rm1);
      resid[static_cast<std::size_t>(i)] = ri;
      res_inf = std::max(res_inf, std::abs(ri));
      res_sq += ri * ri;
    }
    out.iterations = it;
    out.residual = res_inf;
    // hand off to the Newton polish once the basin is good enough
    if (res_inf < std::max(opt.residual_tol, 1e-4) * (1.0 + std::abs(e))) {
      out.converged = true;
      break;
    }

    // Armijo backtracking along the negative eigen-residual, then renormalize.
    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 60; ++bt) {
      for (int i = 0; i < n; ++i) trial[i] = u[i] - t * resid[static_cast<std::size_t>(i)];
      if (!normalize_lr(grid, trial, r)) {
        t *= opt.armijo_contraction;
        continue;
      }
      const double et = energy(asm_, trial);
      if (std::isfinite(et) && et <= e - opt.armijo_slope * t * res_sq) {
        u.values.swap(trial.values);
        const double decrease = e - et;
        e = et;
        step = std::min(t * 2.0, 1e8);
        accepted = true;
        stall = (decrease <= opt.descent_tol * (1.0 + std::abs(e))) ? stall + 1 : 0;
        break;
      }
      t *= opt.armijo_contraction;
    }
    // Give up when the line search cannot move or relative decreases stayed
    // below descent_tol for a long stretch; the residual test above decides
    // convergence on the final iterate either way.
    if (!accepted || stall > opt.stall_patience) {
      break;
    }
  }

  // Newton refinement of the descent output, then one exact renormalization.
  double lambda = e;
  newton_polish(asm_, u, lambda, opt);
  if (normalize_lr(grid, u, r)) {
    lambda = energy(asm_, u);
    operator_apply_into(asm_, u, g);
    double res_inf = 0.0;
    for (int i = 0; i < n; ++i) {
      res_inf = std::max(res_inf, std::abs(g[static_cast<std::size_t>(i)] -
                                           lambda * grid.h * signed_pow(u[i], rm1)));
    }
    out.residual = res_inf;
    out.converged = res_inf < opt.residual_tol * (1.0 + std::abs(lambda));
  }

  out.lambda = lambda;
  out.phi = u;
  return out;
}

GridFunction make_seed(const GridPtr& grid, int k, const SolverOptions& opt) {
  GridFunction u(grid, 1.0);
  if (k == 0) return u;  // constant-1 start
  auto rng = make_rng(opt.seed, static_cast<std::uint64_t>(k));
  if (k % 2 == 1) {
    std::uniform_real_distribution<double> dist(0.25, 1.25);  // positive start
    for (double& x : u.values) x = dist(rng);
  } else {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);  // sign-mixed start
    for (double& x : u.values) x = dist(rng);
  }
  return u;
}

void orient_nonnegative(GridFunction& phi) {
  for (double v : phi.values) {
    if (v > 0.0) return;
    if (v < 0.0) break;
  }
  for (double& v : phi.values) v = -v;
}

Eigenpair pick_best(std::vector<Eigenpair> runs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k) {
    const auto& a = runs[k];
    const auto& b = runs[best];
    if (!std::isfinite(a.lambda)) continue;
    if (!std::isfinite(b.lambda)) {
      best = k;
      continue;
    }
    if (a.converged != b.converged) {
      if (a.converged) best = k;
      continue;
    }
    if (a.lambda < b.lambda) best = k;  // ties keep the lower seed index
  }
  Eigenpair out = std::move(runs[best]);
  orient_nonnegative(out.phi);
  return out;
}

}  // namespace

double rayleigh_quotient(const EnergyAssembly& asm_, const GridFunction& u) {
  const double nr = lp_norm_pow(*asm_.grid, u, asm_.params.r);
  if (!(nr > 0.0)) {
    throw std::invalid_argument("rayleigh_quotient: zero function");
  }
  return energy(asm_, u) / nr;
}

Eigenpair first_eigenpair(const EnergyAssembly& asm_, const SolverOptions& options) {
  const int starts = std::max(1, options.multistart);
  auto runs = run_indexed<Eigenpair>(starts, options.threads, [&](int k) {
    return descend_from(asm_, make_seed(asm_.grid, k, options), options);
  });
  return pick_best(std::move(runs));
}

SimplicityReport simplicity_check(const EnergyAssembly& asm_, const Eigenpair& pair,
                                  const SolverOptions& options) {
  const Grid& grid = *asm_.grid;
  const int reruns = std::max(1, options.multistart);
  auto runs = run_indexed<Eigenpair>(reruns, options.threads, [&](int k) {
    GridFunction u0(asm_.grid);
    auto rng = make_rng(options.seed, 0x51u + static_cast<std::uint64_t>(k));
    if (k % 2 == 0) {
      std::uniform_real_distribution<double> dist(0.25, 1.25);
      for (double& x : u0.values) x = dist(rng);
    } else {
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (double& x : u0.values) x = dist(rng);
    }
    return descend_from(asm_, u0, options);
  });

  // normalized, sign-aligned L2 distances over all result pairs
  auto l2_normalized = [&grid](const GridFunction& f) {
    GridFunction g = f;
    double n2 = 0.0;
    for (double v : g.values) n2 += v * v;
    n2 = std::sqrt(n2 * grid.h);
    if (n2 > 0.0) {
      for (double& v : g.values) v /= n2;
    }
    return g;
  };
  std::vector<GridFunction> phis;
  phis.push_back(l2_normalized(pair.phi));
  SimplicityReport rep;
  rep.runs = reruns;
  for (auto& run : runs) {
    orient_nonnegative(run.phi);
    phis.push_back(l2_normalized(run.phi));
    rep.lambdas.push_back(run.lambda);
  }
  for (std::size_t a = 0; a < phis.size(); ++a) {
    for (std::size_t b = a + 1; b < phis.size(); ++b) {
      double dot = 0.0;
      for (int i = 0; i < grid.n; ++i) dot += phis[a][i] * phis[b][i];
      const double sign = dot >= 0.0 ? 1.0 : -1.0;
      double d2 = 0.0;
      for (int i = 0; i < grid.n; ++i) {
        const double d = phis[a][i] - sign * phis[b][i];
        d2 += d * d;
      }
      rep.max_distance = std::max(rep.max_distance, std::sqrt(d2 * grid.h));
    }
  }
  rep.pass = rep.max_distance < 1e-6;
  return rep;
}

bool li_condition(const PQConfig& config) {
  validate(config);
  const double p_conj = config.p / (config.p - 1.0);
  const double q_conj = config.q / (config.q - 1.0);
  const double lower = config.s1 * p_conj / q_conj;
  return lower < config.s2 && config.s2 < config.s1;
}

double li_distance(const Eigenpair& pair1, const Eigenpair& pair2) {
  if (!pair1.phi.grid || !pair2.phi.grid || !same_grid(*pair1.phi.grid, *pair2.phi.grid)) {
    throw std::invalid_argument("li_distance: eigenfunctions live on different grids");
  }
  const Grid& grid = *pair1.phi.grid;
  auto normalized = [&grid](const GridFunction& f) {
    GridFunction g = f;
    double n2 = 0.0;
    for (double v : g.values) n2 += v * v;
    n2 = std::sqrt(n2 * grid.h);
    if (n2 > 0.0) {
      for (double& v : g.values) v /= n2;
    }
    return g;
  };
  GridFunction a = normalized(pair1.phi);
  GridFunction b = normalized(pair2.phi);
  double dot = 0.0;
  for (int i = 0; i < grid.n; ++i) dot += a[i] * b[i];
  const double sign = dot >= 0.0 ? 1.0 : -1.0;
  double d2 = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    const double d = a[i] - sign * b[i];
    d2 += d * d;
  }
  return std::sqrt(d2 * grid.h);
}

}  // namespace fracpq
