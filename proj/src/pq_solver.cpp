#include "fracpq/pq_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "dense_linear.hpp"
#include "fracpq/threading.hpp"

namespace fracpq {

namespace {

double curvature_pow(double t, double em2) {
  const double c = abs_pow(t, em2);
  if (!std::isfinite(c)) return 1e14;
  return std::min(c, 1e14);
}

/// Hessian of E_p/p + E_q/q at u, written into the row-major buffer.
void energy_hessian(const Functionals& f, const GridFunction& u, std::vector<double>& jac) {
  const int n = u.size();
  const double pm1 = f.config.p - 1.0, pm2 = f.config.p - 2.0;
  const double qm1 = f.config.q - 1.0, qm2 = f.config.q - 2.0;
  jac.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double diag = f.asm_p.exterior_weights[static_cast<std::size_t>(i)] * pm1 *
                      curvature_pow(u[i], pm2) +
                  f.asm_q.exterior_weights[static_cast<std::size_t>(i)] * qm1 *
                      curvature_pow(u[i], qm2);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double c = 2.0 * f.asm_p.w(i, j) * pm1 * curvature_pow(u[i] - u[j], pm2) +
                       2.0 * f.asm_q.w(i, j) * qm1 * curvature_pow(u[i] - u[j], qm2);
      jac[static_cast<std::size_t>(i) * n + j] = -c;
      diag += c;
    }
    jac[static_cast<std::size_t>(i) * n + i] = diag;
  }
}

/// Damped Newton on grad(objective) = 0, accepting only residual decreases.
/// `grad` fills the gradient, `reaction_diag` the pointwise second derivative
/// of the non-energy part (subtracted from the Hessian diagonal). When the
/// iterate is mirror symmetric, the step is taken in the symmetric subspace;
/// there the curvature singularities of exponents below 2 cancel exactly in
/// the accumulated Hessian.
template <typename GradFn, typename ReactionFn>
void polish_stationary(const Functionals& f, GridFunction& u, const GradFn& grad,
                       const ReactionFn& reaction_diag, const SolverOptions& opt) {
  const int n = u.size();

  double sup = 0.0, defect = 0.0;
  for (int i = 0; i < n; ++i) {
    sup = std::max(sup, std::abs(u[i]));
    defect = std::max(defect, std::abs(u[i] - u[n - 1 - i]));
  }
  const bool reduced = defect <= 0.05 * (sup > 0.0 ? sup : 1.0);
  if (reduced) {
    for (int i = 0; i < n / 2; ++i) {
      const double avg = 0.5 * (u[i] + u[n - 1 - i]);
      u[i] = avg;
      u[n - 1 - i] = avg;
    }
  }
  std::vector<int> cls(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cls[static_cast<std::size_t>(i)] = reduced ? std::min(i, n - 1 - i) : i;
  const int m = reduced ? (n + 1) / 2 : n;

  std::vector<double> full_jac, res, jac(static_cast<std::size_t>(m) * m),
      rhs(static_cast<std::size_t>(m));
  GridFunction trial(u.grid);

  grad(u, res);
  double res_sq = 0.0, res_inf = 0.0;
  for (double v : res) {
    res_sq += v * v;
    res_inf = std::max(res_inf, std::abs(v));
  }
  for (int it = 0; it < 40; ++it) {
    if (!(res_inf > 1e-3 * opt.residual_tol) || !std::isfinite(res_sq)) break;
    energy_hessian(f, u, full_jac);
    for (int i = 0; i < n; ++i) {
      full_jac[static_cast<std::size_t>(i) * n + i] -= reaction_diag(u[i], i);
    }
    std::fill(jac.begin(), jac.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const int k = cls[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        jac[static_cast<std::size_t>(k) * m + cls[static_cast<std::size_t>(j)]] +=
            full_jac[static_cast<std::size_t>(i) * n + j];
      }
      rhs[static_cast<std::size_t>(k)] += -res[static_cast<std::size_t>(i)];
    }
    if (!detail::solve_dense(jac, rhs, m)) break;
    bool accepted = false;
    for (double t : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
      for (int i = 0; i < n; ++i) {
        trial[i] = u[i] + t * rhs[static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])];
      }
      std::vector<double> res_t;
      grad(trial, res_t);
      double sq = 0.0, inf = 0.0;
      for (double v : res_t) {
        sq += v * v;
        inf = std::max(inf, std::abs(v));
      }
      if (std::isfinite(sq) && sq < res_sq) {
        u.values = trial.values;
        res = std::move(res_t);
        res_sq = sq;
        res_inf = inf;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
}

/// Newton refinement toward a free critical point of I_+.
void polish_I_plus(const Functionals& f, GridFunction& u, const SolverOptions& opt) {
  const Grid& grid = *f.grid();
  const double p = f.config.p, q = f.config.q;
  auto grad = [&](const GridFunction& v, std::vector<double>& out) {
    std::vector<double> gp, gq;
    operator_apply_into(f.asm_p, v, gp);
    operator_apply_into(f.asm_q, v, gq);
    out.resize(v.values.size());
    for (int i = 0; i < v.size(); ++i) {
      const double up = v[i] > 0.0 ? v[i] : 0.0;
      out[static_cast<std::size_t>(i)] = gp[static_cast<std::size_t>(i)] +
                                         gq[static_cast<std::size_t>(i)] -
                                         f.alpha * grid.h * abs_pow(up, p - 1.0) -
                                         f.beta * grid.h * abs_pow(up, q - 1.0);
    }
  };
  auto reaction = [&](double ui, int) {
    if (!(ui > 0.0)) return 0.0;
    return f.alpha * grid.h * (p - 1.0) * curvature_pow(ui, p - 2.0) +
           f.beta * grid.h * (q - 1.0) * curvature_pow(ui, q - 2.0);
  };
  polish_stationary(f, u, grad, reaction, opt);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL + stream * 0xBF58476D1CE4E5B9ULL + 17ULL);
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double min_value(const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, x);
  return m;
}

double pos_part_norm_pow(const Grid& grid, const GridFunction& u, double gamma) {
  double acc = 0.0;
  for (double v : u.values) {
    if (v > 0.0) acc += abs_pow(v, gamma);
  }
  return acc * grid.h;
}

void check_grid(const Functionals& f, const GridFunction& u, const char* where) {
  if (!u.grid || !same_grid(*f.grid(), *u.grid)) {
    throw std::invalid_argument(std::string(where) + ": grid mismatch");
  }
}

/// Values and gradients of the pieces of I_+ at one point.
struct PQPoint {
  double H = 0.0, G = 0.0, I = 0.0;
  std::vector<double> grad_I;  // of I_+
  std::vector<double> grad_C;  // of the Nehari constraint H + G
};

PQPoint eval_point(const Functionals& f, const GridFunction& u, std::vector<double>& gp,
                   std::vector<double>& gq) {
  const Grid& grid = *f.grid();
  const double p = f.config.p, q = f.config.q;
  const int n = grid.n;
  operator_apply_into(f.asm_p, u, gp);
  operator_apply_into(f.asm_q, u, gq);
  const double ep = energy(f.asm_p, u);
  const double eq = energy(f.asm_q, u);
  const double np = pos_part_norm_pow(grid, u, p);
  const double nq = pos_part_norm_pow(grid, u, q);

  PQPoint pt;
  pt.H = ep - f.alpha * np;
  pt.G = eq - f.beta * nq;
  pt.I = ep / p + eq / q - f.alpha * np / p - f.beta * nq / q;
  pt.grad_I.resize(static_cast<std::size_t>(n));
  pt.grad_C.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double up = u[i] > 0.0 ? u[i] : 0.0;
    const double fp = f.alpha * grid.h * abs_pow(up, p - 1.0);
    const double fq = f.beta * grid.h * abs_pow(up, q - 1.0);
    const double a = gp[static_cast<std::size_t>(i)];
    const double b = gq[static_cast<std::size_t>(i)];
    pt.grad_I[static_cast<std::size_t>(i)] = a + b - fp - fq;
    pt.grad_C[static_cast<std::size_t>(i)] = p * (a - fp) + q * (b - fq);
  }
  return pt;
}

enum class SeedKind { found, nonsolution, trivial, stalled, maxiter, invalid, diverged };

struct SeedOutcome {
  SeedKind kind = SeedKind::invalid;
  GridFunction u;
  double I = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  double min_int = 0.0;
  double supn = 0.0;
  NehariDiagnostics diag;
  int iterations = 0;
};

SeedOutcome classify_converged(const Functionals& f, GridFunction u, const PQPoint& pt,
                               double residual, int iterations, const SolverOptions& opt,
                               std::optional<double> t_scale) {
  SeedOutcome out;
  out.u = std::move(u);
  out.I = pt.I;
  out.residual = residual;
  out.supn = sup_norm(out.u.values);
  out.min_int = min_value(out.u.values);
  out.diag = {pt.H, pt.G, pt.I, t_scale};
  out.iterations = iterations;
  (void)f;
  if (out.supn <= opt.trivial_tol) {
    out.kind = SeedKind::trivial;
  } else if (out.min_int > opt.positivity_tol * out.supn) {
    out.kind = SeedKind::found;
  } else {
    out.kind = SeedKind::nonsolution;
  }
  return out;
}

bool finite(const GridFunction& u) {
  for (double v : u.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

/// Rescales u onto the Nehari manifold when H and G permit.
bool project_nehari(const Functionals& f, GridFunction& u, double& t_out) {
  const double h = H_alpha(f, u);
  const double g = G_beta(f, u);
  if (!(h != 0.0) || !(g != 0.0) || !(-g / h > 0.0)) return false;
  const double t = std::pow(-g / h, 1.0 / (f.config.p - f.config.q));
  if (!std::isfinite(t) || !(t > 0.0)) return false;
  for (double& v : u.values) v *= t;
  t_out = t;
  return finite(u);
}

void sup_normalize(GridFunction& u) {
  const double s = sup_norm(u.values);
  if (s > 0.0) {
    for (double& v : u.values) v /= s;
  }
}

/// Seeds that the sign conditions reject are nudged toward an anchor with a
/// known H/G sign pattern until the Nehari scaling applies.
bool fix_onto_nehari(const Functionals& f, GridFunction& u,
                     const std::vector<const GridFunction*>& anchors, double& t_out) {
  GridFunction candidate = u;
  if (project_nehari(f, candidate, t_out)) {
    u = std::move(candidate);
    return true;
  }
  sup_normalize(u);
  for (const GridFunction* anchor : anchors) {
    if (!anchor) continue;
    GridFunction a = *anchor;
    sup_normalize(a);
    for (double w : {1.0, 0.7, 0.4, 0.15}) {
      GridFunction mix(u.grid);
      for (int i = 0; i < u.size(); ++i) mix[i] = w * a[i] + (1.0 - w) * u[i];
      if (project_nehari(f, mix, t_out)) {
        u = std::move(mix);
        return true;
      }
    }
  }
  return false;
}

/// Newton-refines the iterate toward a free critical point, then classifies.
/// When the refined residual still exceeds tolerance the fallback kind wins
/// (constrained-only stationary points stay stalled).
SeedOutcome finish_with_polish(const Functionals& f, GridFunction u, const SolverOptions& opt,
                               int iterations, SeedKind fallback,
                               std::optional<double> t_scale) {
  if (sup_norm(u.values) < 1e10) {
    polish_I_plus(f, u, opt);
  }
  std::vector<double> gp, gq;
  PQPoint pt = eval_point(f, u, gp, gq);
  const double res_inf = sup_norm(pt.grad_I);
  SeedOutcome out = classify_converged(f, std::move(u), pt, res_inf, iterations, opt, t_scale);
  if (!(res_inf < opt.residual_tol)) out.kind = fallback;
  return out;
}

SeedOutcome nehari_descent(const Functionals& f, GridFunction u, const SolverOptions& opt,
                           const std::vector<const GridFunction*>& anchors) {
  const int n = u.size();
  double t_proj = 1.0;
  if (!fix_onto_nehari(f, u, anchors, t_proj)) {
    SeedOutcome out;
    out.kind = SeedKind::invalid;
    return out;
  }

  std::vector<double> gp, gq, gt(static_cast<std::size_t>(n));
  GridFunction trial(u.grid);
  double step = 1.0;
  PQPoint pt = eval_point(f, u, gp, gq);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const double res_inf = sup_norm(pt.grad_I);
    if (res_inf < opt.residual_tol) {
      return classify_converged(f, std::move(u), pt, res_inf, it, opt, t_proj);
    }
    if (!std::isfinite(res_inf) || sup_norm(u.values) > 1e12) {
      SeedOutcome out;
      out.kind = SeedKind::diverged;
      out.iterations = it;
      return out;
    }

    // tangential part of grad I_+ along the Nehari constraint
    double gc2 = 0.0, gdotc = 0.0;
    for (int i = 0; i < n; ++i) {
      gc2 += pt.grad_C[static_cast<std::size_t>(i)] * pt.grad_C[static_cast<std::size_t>(i)];
      gdotc += pt.grad_I[static_cast<std::size_t>(i)] * pt.grad_C[static_cast<std::size_t>(i)];
    }
    const double proj = gc2 > 0.0 ? gdotc / gc2 : 0.0;
    double gt2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = pt.grad_I[static_cast<std::size_t>(i)] - proj * pt.grad_C[static_cast<std::size_t>(i)];
      gt[static_cast<std::size_t>(i)] = v;
      gt2 += v * v;
    }
    // stationary on the manifold: either a free critical point lies nearby
    // (the polish reaches it) or the constrained minimum is not a solution
    if (std::sqrt(gt2) < 0.01 * opt.residual_tol) {
      return finish_with_polish(f, std::move(u), opt, it, SeedKind::stalled, t_proj);
    }

    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 60 && !accepted; ++bt) {
      for (int i = 0; i < n; ++i) {
        trial[i] = u[i] - t * gt[static_cast<std::size_t>(i)];
      }
      double t_new = 1.0;
      GridFunction candidate = trial;
      if (project_nehari(f, candidate, t_new)) {
        const double i_cand = I_plus(f, candidate);
        if (std::isfinite(i_cand) && i_cand <= pt.I - opt.armijo_slope * t * gt2) {
          u = std::move(candidate);
          t_proj = t_new;
          step = std::min(t * 2.0, 1e8);
          accepted = true;
          break;
        }
      }
      t *= opt.armijo_contraction;
    }
    if (!accepted) {
      return finish_with_polish(f, std::move(u), opt, it, SeedKind::stalled, t_proj);
    }
    pt = eval_point(f, u, gp, gq);
  }
  return finish_with_polish(f, std::move(u), opt, it, SeedKind::maxiter, t_proj);
}

SeedOutcome free_descent(const Functionals& f, GridFunction u, const SolverOptions& opt) {
  const int n = u.size();
  std::vector<double> gp, gq;
  GridFunction trial(u.grid);
  double step = 1.0;
  PQPoint pt = eval_point(f, u, gp, gq);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const double res_inf = sup_norm(pt.grad_I);
    if (res_inf < opt.residual_tol) {
      return finish_with_polish(f, std::move(u), opt, it, SeedKind::stalled, std::nullopt);
    }
    if (!std::isfinite(pt.I) || pt.I < -1e14 || sup_norm(u.values) > 1e10) {
      SeedOutcome out;
      out.kind = SeedKind::diverged;
      out.iterations = it;
      return out;
    }
    double g2 = 0.0;
    for (double v : pt.grad_I) g2 += v * v;
    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 60 && !accepted; ++bt) {
      for (int i = 0; i < n; ++i) trial[i] = u[i] - t * pt.grad_I[static_cast<std::size_t>(i)];
      const double i_trial = I_plus(f, trial);
      if (std::isfinite(i_trial) && i_trial <= pt.I - opt.armijo_slope * t * g2) {
        u.values.swap(trial.values);
        step = std::min(t * 2.0, 1e8);
        accepted = true;
      } else {
        t *= opt.armijo_contraction;
      }
    }
    if (!accepted) {
      return finish_with_polish(f, std::move(u), opt, it, SeedKind::stalled, std::nullopt);
    }
    pt = eval_point(f, u, gp, gq);
  }
  return finish_with_polish(f, std::move(u), opt, it, SeedKind::maxiter, std::nullopt);
}

/// Deterministic merge: found runs win (lowest I_+, then seed order), a
/// stalled or diverged run without any find means inconclusive, otherwise
/// every start conclusively ended at a non-solution.
SolutionReport merge_outcomes(std::vector<SeedOutcome> outcomes, SolveMethod method,
                              bool trivial_is_inconclusive) {
  SolutionReport rep;
  rep.method = method;
  rep.seeds_tried = static_cast<int>(outcomes.size());

  int best_found = -1;
  for (int k = 0; k < static_cast<int>(outcomes.size()); ++k) {
    const auto& o = outcomes[static_cast<std::size_t>(k)];
    if (o.kind != SeedKind::found) continue;
    if (best_found < 0 || o.I < outcomes[static_cast<std::size_t>(best_found)].I) best_found = k;
  }
  if (best_found >= 0) {
    auto& o = outcomes[static_cast<std::size_t>(best_found)];
    rep.status = SolveStatus::found;
    rep.u = std::move(o.u);
    rep.residual = o.residual;
    rep.min_interior = o.min_int;
    rep.sup_norm = o.supn;
    rep.diagnostics = o.diag;
    rep.iterations = o.iterations;
    return rep;
  }

  bool any_unresolved = false;
  bool any_trivial = false;
  int best = -1;
  for (int k = 0; k < static_cast<int>(outcomes.size()); ++k) {
    const auto& o = outcomes[static_cast<std::size_t>(k)];
    if (o.kind == SeedKind::stalled || o.kind == SeedKind::maxiter || o.kind == SeedKind::diverged) {
      any_unresolved = true;
    }
    if (o.kind == SeedKind::trivial) any_trivial = true;
    if (o.kind == SeedKind::invalid) continue;
    if (best < 0 || o.residual < outcomes[static_cast<std::size_t>(best)].residual) best = k;
  }
  rep.status = any_unresolved || (trivial_is_inconclusive && any_trivial)
                   ? SolveStatus::inconclusive
                   : SolveStatus::none_found;
  if (best >= 0) {
    const auto& o = outcomes[static_cast<std::size_t>(best)];
    rep.residual = o.residual;
    rep.min_interior = o.min_int;
    rep.sup_norm = o.supn;
    rep.diagnostics = o.diag;
    rep.iterations = o.iterations;
  }
  if (rep.status == SolveStatus::inconclusive) {
    rep.note = any_unresolved ? "descent stalled above residual tolerance"
                              : "only the trivial minimizer was found";
  } else {
    rep.note = "multistarts exhausted without a certified positive solution";
  }
  return rep;
}

GridFunction random_positive(const GridPtr& grid, std::mt19937_64& rng, double lo, double hi) {
  GridFunction u(grid);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : u.values) v = dist(rng);
  return u;
}

/// The (s2, q) eigenfunction used to seed every solver; computed on demand
/// when the caller has none at hand.
GridFunction ensure_phi_q(const Functionals& f, const SeedHints& hints,
                          const SolverOptions& opt) {
  if (hints.phi_q) return *hints.phi_q;
  SolverOptions eig = opt;
  eig.multistart = 2;
  eig.record_trace = false;
  return first_eigenpair(f.asm_q, eig).phi;
}

GridFunction ensure_phi_p(const Functionals& f, const SeedHints& hints,
                          const SolverOptions& opt) {
  if (hints.phi_p) return *hints.phi_p;
  SolverOptions eig = opt;
  eig.multistart = 2;
  eig.record_trace = false;
  return first_eigenpair(f.asm_p, eig).phi;
}

}  // namespace

Functionals make_functionals(const GridPtr& grid, const PQConfig& config, double alpha,
                             double beta) {
  validate(config);
  Functionals f;
  f.config = config;
  f.asm_p = assemble(grid, config.p_params());
  f.asm_q = assemble(grid, config.q_params());
  f.alpha = alpha;
  f.beta = beta;
  return f;
}

double I_plus(const Functionals& f, const GridFunction& u) {
  check_grid(f, u, "I_plus");
  const Grid& grid = *f.grid();
  return energy(f.asm_p, u) / f.config.p + energy(f.asm_q, u) / f.config.q -
         f.alpha * pos_part_norm_pow(grid, u, f.config.p) / f.config.p -
         f.beta * pos_part_norm_pow(grid, u, f.config.q) / f.config.q;
}

double H_alpha(const Functionals& f, const GridFunction& u) {
  check_grid(f, u, "H_alpha");
  return energy(f.asm_p, u) - f.alpha * pos_part_norm_pow(*f.grid(), u, f.config.p);
}

double G_beta(const Functionals& f, const GridFunction& u) {
  check_grid(f, u, "G_beta");
  return energy(f.asm_q, u) - f.beta * pos_part_norm_pow(*f.grid(), u, f.config.q);
}

GridFunction grad_I_plus(const Functionals& f, const GridFunction& u) {
  check_grid(f, u, "grad_I_plus");
  std::vector<double> gp, gq;
  PQPoint pt = eval_point(f, u, gp, gq);
  return GridFunction(u.grid, std::move(pt.grad_I));
}

double nehari_scale(const Functionals& f, const GridFunction& u) {
  check_grid(f, u, "nehari_scale");
  const double h = H_alpha(f, u);
  const double g = G_beta(f, u);
  if (h == 0.0 || g == 0.0 || !(-g / h > 0.0)) {
    throw std::domain_error("nehari_scale: H and G must be nonzero with opposite signs");
  }
  return std::pow(-g / h, 1.0 / (f.config.p - f.config.q));
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::found: return "found";
    case SolveStatus::none_found: return "none_found";
    case SolveStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

const char* to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::nehari: return "nehari";
    case SolveMethod::global_min: return "global_min";
    case SolveMethod::truncation: return "truncation";
  }
  return "unknown";
}

SolutionReport solve_nehari_min(const Functionals& f, const SolverOptions& options,
                                const SeedHints& hints) {
  const GridFunction phi_q = ensure_phi_q(f, hints, options);
  const GridFunction phi_p = ensure_phi_p(f, hints, options);
  const std::vector<const GridFunction*> anchors = {&phi_q, &phi_p};

  const int starts = std::max(2, options.multistart);
  auto outcomes = run_indexed<SeedOutcome>(starts, options.threads, [&](int k) {
    GridFunction u0(f.grid());
    if (k == 0) {
      u0 = phi_q;
    } else if (k == 1) {
      u0 = GridFunction(f.grid(), 1.0);
    } else {
      auto rng = make_rng(options.seed, static_cast<std::uint64_t>(k));
      u0 = random_positive(f.grid(), rng, 0.2, 1.2);
    }
    return nehari_descent(f, std::move(u0), options, anchors);
  });
  return merge_outcomes(std::move(outcomes), SolveMethod::nehari, false);
}

SolutionReport solve_global_min(const Functionals& f, const SolverOptions& options,
                                const SeedHints& hints) {
  const GridFunction phi_q = ensure_phi_q(f, hints, options);

  const int starts = std::max(2, options.multistart);
  auto outcomes = run_indexed<SeedOutcome>(starts, options.threads, [&](int k) {
    GridFunction u0 = phi_q;
    if (k == 0) {
      sup_normalize(u0);
      for (double& v : u0.values) v *= 0.5;  // small multiple of phi_q
      if (G_beta(f, phi_q) < 0.0 && H_alpha(f, phi_q) > 0.0) {
        double t = 1.0;
        GridFunction scaled = phi_q;
        if (project_nehari(f, scaled, t)) u0 = std::move(scaled);  // ray minimum
      }
    } else if (k == 1) {
      sup_normalize(u0);
      for (double& v : u0.values) v *= 0.05;
    } else {
      auto rng = make_rng(options.seed, 0x9000u + static_cast<std::uint64_t>(k));
      u0 = random_positive(f.grid(), rng, k % 2 == 0 ? 0.05 : -0.5, 1.0);
    }
    return free_descent(f, std::move(u0), options);
  });
  return merge_outcomes(std::move(outcomes), SolveMethod::global_min, false);
}

double truncated_force(double t, int i, const GridFunction& ubar, const GridFunction& ulow,
                       double alpha, double beta, double p, double q) {
  if (i < 0 || i >= ubar.size() || ubar.size() != ulow.size()) {
    throw std::invalid_argument("truncated_force: bad node index");
  }
  const double lo = ulow[i];
  const double hi = ubar[i];
  if (lo > hi) {
    throw std::invalid_argument("truncated_force: ordering violation, ulow > ubar at node " +
                                std::to_string(i));
  }
  const double c = std::clamp(t, lo, hi);
  return alpha * signed_pow(c, p - 1.0) + beta * signed_pow(c, q - 1.0);
}

namespace {

double plain_force(double t, double alpha, double beta, double p, double q) {
  return alpha * signed_pow(t, p - 1.0) + beta * signed_pow(t, q - 1.0);
}

double force_primitive(double t, double alpha, double beta, double p, double q) {
  return alpha * abs_pow(t, p) / p + beta * abs_pow(t, q) / q;
}

/// Antiderivative of the truncated force; F~(x_i, t) = phi(t) - phi(0).
double truncated_primitive(double t, double lo, double hi, double alpha, double beta, double p,
                           double q) {
  auto phi = [&](double x) {
    if (x < lo) return force_primitive(lo, alpha, beta, p, q) + plain_force(lo, alpha, beta, p, q) * (x - lo);
    if (x > hi) return force_primitive(hi, alpha, beta, p, q) + plain_force(hi, alpha, beta, p, q) * (x - hi);
    return force_primitive(x, alpha, beta, p, q);
  };
  return phi(t) - phi(0.0);
}

void check_band(const GridFunction& ubar, const GridFunction& ulow) {
  if (ubar.size() != ulow.size()) {
    throw std::invalid_argument("truncation: ubar and ulow live on different grids");
  }
  for (int i = 0; i < ubar.size(); ++i) {
    if (ulow[i] > ubar[i]) {
      throw std::invalid_argument("truncation: ordering violation, ulow > ubar at node " +
                                  std::to_string(i));
    }
  }
}

}  // namespace

double truncated_energy(const Functionals& f, const GridFunction& u, const GridFunction& ubar,
                        const GridFunction& ulow) {
  check_grid(f, u, "truncated_energy");
  check_band(ubar, ulow);
  const Grid& grid = *f.grid();
  double forcing = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    forcing += truncated_primitive(u[i], ulow[i], ubar[i], f.alpha, f.beta, f.config.p, f.config.q);
  }
  return energy(f.asm_p, u) / f.config.p + energy(f.asm_q, u) / f.config.q - forcing * grid.h;
}

GridFunction truncated_energy_grad(const Functionals& f, const GridFunction& u,
                                   const GridFunction& ubar, const GridFunction& ulow) {
  check_grid(f, u, "truncated_energy_grad");
  check_band(ubar, ulow);
  const Grid& grid = *f.grid();
  std::vector<double> gp, gq;
  operator_apply_into(f.asm_p, u, gp);
  operator_apply_into(f.asm_q, u, gq);
  GridFunction g(u.grid);
  for (int i = 0; i < grid.n; ++i) {
    g[i] = gp[static_cast<std::size_t>(i)] + gq[static_cast<std::size_t>(i)] -
           grid.h * truncated_force(u[i], i, ubar, ulow, f.alpha, f.beta, f.config.p, f.config.q);
  }
  return g;
}

SupersolutionCertificate certify_supersolution(const Functionals& f, const GridFunction& ubar,
                                               double tol) {
  check_grid(f, ubar, "certify_supersolution");
  const Grid& grid = *f.grid();
  std::vector<double> gp, gq;
  operator_apply_into(f.asm_p, ubar, gp);
  operator_apply_into(f.asm_q, ubar, gq);
  SupersolutionCertificate cert;
  cert.min_residual = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (int i = 0; i < grid.n; ++i) {
    const double lhs = gp[static_cast<std::size_t>(i)] + gq[static_cast<std::size_t>(i)];
    const double rhs = grid.h * plain_force(ubar[i], f.alpha, f.beta, f.config.p, f.config.q);
    cert.min_residual = std::min(cert.min_residual, lhs - rhs);
    scale = std::max(scale, std::abs(lhs));
  }
  cert.certified = cert.min_residual >= -tol * scale;
  return cert;
}

SolutionReport solve_by_truncation(const Functionals& f, const GridFunction& ubar,
                                   const SolverOptions& options, const SeedHints& hints) {
  check_grid(f, ubar, "solve_by_truncation");
  const auto cert = certify_supersolution(f, ubar, options.supersolution_tol);
  if (!cert.certified) {
    throw std::invalid_argument(
        "solve_by_truncation: ubar failed the supersolution certificate (min residual " +
        std::to_string(cert.min_residual) + ")");
  }
  const GridFunction ulow(f.grid(), 0.0);
  check_band(ubar, ulow);
  const Grid& grid = *f.grid();
  const double ubar_sup = sup_norm(ubar.values);
  const GridFunction phi_q = ensure_phi_q(f, hints, options);

  auto polish_truncated = [&](GridFunction& u) {
    auto grad = [&](const GridFunction& v, std::vector<double>& out) {
      out = truncated_energy_grad(f, v, ubar, ulow).values;
    };
    auto reaction = [&](double ui, int i) {
      if (!(ui > ulow[i]) || !(ui < ubar[i])) return 0.0;
      return grid.h * (f.alpha * (f.config.p - 1.0) * curvature_pow(ui, f.config.p - 2.0) +
                       f.beta * (f.config.q - 1.0) * curvature_pow(ui, f.config.q - 2.0));
    };
    polish_stationary(f, u, grad, reaction, options);
  };

  auto descend = [&](GridFunction u) {
    const int n = grid.n;
    GridFunction trial(u.grid);
    double step = 1.0;
    double value = truncated_energy(f, u, ubar, ulow);
    GridFunction g = truncated_energy_grad(f, u, ubar, ulow);
    SeedOutcome out;
    int it = 0;
    bool moving = true;
    for (; it < options.max_iterations && moving; ++it) {
      if (sup_norm(g.values) < options.residual_tol) break;
      double g2 = 0.0;
      for (double v : g.values) g2 += v * v;
      bool accepted = false;
      double t = step;
      for (int bt = 0; bt < 60 && !accepted; ++bt) {
        for (int i = 0; i < n; ++i) trial[i] = u[i] - t * g[i];
        const double v_trial = truncated_energy(f, trial, ubar, ulow);
        if (std::isfinite(v_trial) && v_trial <= value - options.armijo_slope * t * g2) {
          u.values.swap(trial.values);
          value = v_trial;
          step = std::min(t * 2.0, 1e8);
          accepted = true;
        } else {
          t *= options.armijo_contraction;
        }
      }
      if (!accepted) moving = false;
      if (accepted) g = truncated_energy_grad(f, u, ubar, ulow);
    }
    polish_truncated(u);
    out.iterations = it;
    out.residual = sup_norm(truncated_energy_grad(f, u, ubar, ulow).values);
    out.kind = out.residual < options.residual_tol
                   ? SeedKind::found
                   : (it >= options.max_iterations ? SeedKind::maxiter : SeedKind::stalled);
    out.u = std::move(u);
    out.I = truncated_energy(f, out.u, ubar, ulow);
    return out;
  };

  const int starts = std::max(2, options.multistart);
  auto outcomes = run_indexed<SeedOutcome>(starts, options.threads, [&](int k) {
    GridFunction u0 = phi_q;
    sup_normalize(u0);
    if (k == 0) {
      for (double& v : u0.values) v *= 0.1 * std::max(ubar_sup, 1e-6);
    } else if (k == 1) {
      u0 = ubar;
      for (double& v : u0.values) v *= 0.5;
    } else {
      auto rng = make_rng(options.seed, 0x7000u + static_cast<std::uint64_t>(k));
      std::uniform_real_distribution<double> dist(0.1, 0.9);
      for (int i = 0; i < u0.size(); ++i) u0[i] = dist(rng) * ubar[i];
    }
    SeedOutcome out = descend(std::move(u0));
    if (out.kind != SeedKind::found) return out;

    // ordering check, then exact clamp into [0, ubar]
    double viol = 0.0;
    for (int i = 0; i < out.u.size(); ++i) {
      viol = std::max({viol, -out.u[i], out.u[i] - ubar[i]});
    }
    if (viol > 1e-6 * std::max(1.0, ubar_sup)) {
      throw std::logic_error("solve_by_truncation: critical point escaped [0, ubar], violation " +
                             std::to_string(viol));
    }
    for (int i = 0; i < out.u.size(); ++i) out.u[i] = std::clamp(out.u[i], 0.0, ubar[i]);
    out.residual = sup_norm(truncated_energy_grad(f, out.u, ubar, ulow).values);
    out.I = truncated_energy(f, out.u, ubar, ulow);
    out.supn = sup_norm(out.u.values);
    out.min_int = min_value(out.u.values);
    out.diag = {H_alpha(f, out.u), G_beta(f, out.u), out.I, std::nullopt};
    if (out.supn <= options.trivial_tol) {
      out.kind = SeedKind::trivial;
    } else if (!(out.min_int > options.positivity_tol * out.supn)) {
      out.kind = SeedKind::nonsolution;
    }
    return out;
  });
  return merge_outcomes(std::move(outcomes), SolveMethod::truncation, true);
}

}  // namespace fracpq
