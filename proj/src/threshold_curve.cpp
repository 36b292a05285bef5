#include "fracpq/threshold_curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace fracpq {

namespace {

bool normalize_lq(const Grid& grid, GridFunction& u, double q) {
  const double nq = lp_norm_pow(grid, u, q);
  if (!(nq > 0.0) || !std::isfinite(nq)) return false;
  const double c = std::pow(nq, -1.0 / q);
  for (double& x : u.values) x *= c;
  return true;
}

Functionals functionals_from(const ThresholdContext& ctx, double alpha, double beta) {
  Functionals f;
  f.config = ctx.config;
  f.asm_p = ctx.asm_p;
  f.asm_q = ctx.asm_q;
  f.alpha = alpha;
  f.beta = beta;
  return f;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL + stream * 0x94D049BB133111EBULL + 29ULL);
}

}  // namespace

ThresholdContext build_context(const PQConfig& config, const GridPtr& grid,
                               const SolverOptions& options) {
  validate(config);
  ThresholdContext ctx;
  ctx.config = config;
  ctx.grid = grid;
  ctx.asm_p = assemble(grid, config.p_params());
  ctx.asm_q = assemble(grid, config.q_params());
  ctx.pair_p = first_eigenpair(ctx.asm_p, options);
  ctx.pair_q = first_eigenpair(ctx.asm_q, options);
  if (!ctx.pair_p.converged || !ctx.pair_q.converged) {
    throw std::runtime_error("build_context: eigensolver did not converge for (s1,p) or (s2,q)");
  }
  ctx.lambda1_p = ctx.pair_p.lambda;
  ctx.lambda1_q = ctx.pair_q.lambda;
  ctx.alpha_star = energy(ctx.asm_p, ctx.pair_q.phi) /
                   lp_norm_pow(*grid, ctx.pair_q.phi, config.p);
  ctx.theta_star = ctx.lambda1_p - ctx.lambda1_q;
  ctx.theta_star_plus = ctx.alpha_star - ctx.lambda1_q;
  return ctx;
}

double lambda_star_upper_bound(const ThresholdContext& ctx, double theta,
                               const GridFunction& v) {
  if (!v.grid || !same_grid(*ctx.grid, *v.grid)) {
    throw std::invalid_argument("lambda_star_upper_bound: grid mismatch");
  }
  for (double x : v.values) {
    if (!(x > 0.0)) {
      throw std::invalid_argument("lambda_star_upper_bound: v must be strictly positive");
    }
  }
  const double pq_ratio = ctx.config.p / ctx.config.q;
  GridFunction v_pq(v.grid);
  for (int i = 0; i < v.size(); ++i) v_pq[i] = std::pow(v[i], pq_ratio);
  const double np = lp_norm_pow(*ctx.grid, v, ctx.config.p);
  const double ep = energy(ctx.asm_p, v);
  const double eq = energy(ctx.asm_q, v_pq);
  return (ep + eq - std::min(0.0, theta * np)) / np;
}

double beta_star_penalty(const ThresholdContext& ctx, double alpha, double rho,
                         const GridFunction& u) {
  const Functionals f = functionals_from(ctx, alpha, 0.0);
  const double nq = lp_norm_pow(*ctx.grid, u, ctx.config.q);
  if (!(nq > 0.0)) {
    throw std::invalid_argument("beta_star_penalty: zero function");
  }
  const double h = H_alpha(f, u);
  const double viol = std::max(0.0, h);
  return energy(ctx.asm_q, u) / nq + rho * viol * viol;
}

GridFunction beta_star_penalty_grad(const ThresholdContext& ctx, double alpha, double rho,
                                    const GridFunction& u) {
  const Functionals f = functionals_from(ctx, alpha, 0.0);
  const Grid& grid = *ctx.grid;
  const double p = ctx.config.p, q = ctx.config.q;
  const double nq = lp_norm_pow(grid, u, q);
  if (!(nq > 0.0)) {
    throw std::invalid_argument("beta_star_penalty_grad: zero function");
  }
  const double eq = energy(ctx.asm_q, u);
  const double h = H_alpha(f, u);
  const double viol = std::max(0.0, h);
  std::vector<double> gp, gq;
  operator_apply_into(ctx.asm_p, u, gp);
  operator_apply_into(ctx.asm_q, u, gq);
  GridFunction g(u.grid);
  for (int i = 0; i < grid.n; ++i) {
    const double up = u[i] > 0.0 ? u[i] : 0.0;
    const double d_quotient =
        (q * gq[static_cast<std::size_t>(i)] * nq -
         eq * q * grid.h * signed_pow(u[i], q - 1.0)) /
        (nq * nq);
    const double dH = p * gp[static_cast<std::size_t>(i)] -
                      alpha * p * grid.h * abs_pow(up, p - 1.0);
    g[i] = d_quotient + 2.0 * rho * viol * dH;
  }
  return g;
}

BetaStarResult beta_star(const ThresholdContext& ctx, double alpha, const SolverOptions& options) {
  const double scale_p = 1.0 + std::abs(ctx.lambda1_p);
  if (alpha < ctx.lambda1_p - 1e-12 * scale_p) {
    throw std::domain_error("beta_star: constraint set {H_alpha <= 0} is empty for alpha < lambda1_p");
  }
  const Grid& grid = *ctx.grid;
  const double q = ctx.config.q;
  const Functionals f = functionals_from(ctx, alpha, 0.0);

  auto feasibility_scale = [&](const GridFunction& u) {
    return 1.0 + energy(ctx.asm_p, u) + std::abs(alpha) * lp_norm_pow(grid, u, ctx.config.p);
  };

  // penalized descent on the unit L^q sphere for one rho stage
  auto descend_stage = [&](GridFunction u, double rho) {
    normalize_lq(grid, u, q);
    double value = energy(ctx.asm_q, u);
    {
      const double h = H_alpha(f, u);
      const double v = std::max(0.0, h);
      value += rho * v * v;
    }
    std::vector<double> gp, gq, gt(static_cast<std::size_t>(grid.n));
    GridFunction trial(u.grid);
    double step = 1.0;
    for (int it = 0; it < options.max_iterations; ++it) {
      operator_apply_into(ctx.asm_p, u, gp);
      operator_apply_into(ctx.asm_q, u, gq);
      const double h = H_alpha(f, u);
      const double viol = std::max(0.0, h);
      double gt2 = 0.0, gdotn = 0.0, n2 = 0.0;
      std::vector<double> ns(static_cast<std::size_t>(grid.n));
      for (int i = 0; i < grid.n; ++i) {
        const double up = u[i] > 0.0 ? u[i] : 0.0;
        const double gfree = q * gq[static_cast<std::size_t>(i)] +
                             2.0 * rho * viol *
                                 (ctx.config.p * gp[static_cast<std::size_t>(i)] -
                                  alpha * ctx.config.p * grid.h * abs_pow(up, ctx.config.p - 1.0));
        const double nsi = q * grid.h * signed_pow(u[i], q - 1.0);
        ns[static_cast<std::size_t>(i)] = nsi;
        gt[static_cast<std::size_t>(i)] = gfree;
        gdotn += gfree * nsi;
        n2 += nsi * nsi;
      }
      const double proj = n2 > 0.0 ? gdotn / n2 : 0.0;
      double res_inf = 0.0;
      for (int i = 0; i < grid.n; ++i) {
        gt[static_cast<std::size_t>(i)] -= proj * ns[static_cast<std::size_t>(i)];
        gt2 += gt[static_cast<std::size_t>(i)] * gt[static_cast<std::size_t>(i)];
        res_inf = std::max(res_inf, std::abs(gt[static_cast<std::size_t>(i)]));
      }
      if (res_inf < options.residual_tol * (1.0 + std::abs(value))) break;

      bool accepted = false;
      double t = step;
      for (int bt = 0; bt < 60 && !accepted; ++bt) {
        for (int i = 0; i < grid.n; ++i) trial[i] = u[i] - t * gt[static_cast<std::size_t>(i)];
        if (normalize_lq(grid, trial, q)) {
          double v_trial = energy(ctx.asm_q, trial);
          const double ht = H_alpha(f, trial);
          const double vt = std::max(0.0, ht);
          v_trial += rho * vt * vt;
          if (std::isfinite(v_trial) && v_trial <= value - options.armijo_slope * t * gt2) {
            u.values.swap(trial.values);
            value = v_trial;
            step = std::min(t * 2.0, 1e6);
            accepted = true;
          }
        }
        if (!accepted) t *= options.armijo_contraction;
      }
      if (!accepted) break;
    }
    return u;
  };

  auto solve_from = [&](GridFunction u0) {
    BetaStarResult res;
    double rho = 1.0;
    GridFunction u = std::move(u0);
    for (int stage = 0; stage < 14; ++stage) {
      u = descend_stage(std::move(u), rho);
      const double h = H_alpha(f, u);
      if (h <= 1e-8 * feasibility_scale(u)) {
        res.converged = true;
        break;
      }
      rho *= 10.0;
    }
    res.minimizer = u;
    res.value = energy(ctx.asm_q, u) / lp_norm_pow(grid, u, q);
    res.constraint = H_alpha(f, u);
    return res;
  };

  const int starts = std::max(2, options.multistart);
  BetaStarResult best;
  bool have_best = false;
  for (int k = 0; k < starts; ++k) {
    GridFunction u0(ctx.grid);
    if (k == 0) {
      u0 = ctx.pair_p.phi;
    } else if (k == 1) {
      for (int i = 0; i < grid.n; ++i) u0[i] = 0.5 * ctx.pair_p.phi[i] + 0.5 * ctx.pair_q.phi[i];
    } else {
      auto rng = make_rng(options.seed, 0xB5A0u + static_cast<std::uint64_t>(k));
      std::uniform_real_distribution<double> dist(0.1, 1.1);
      for (double& v : u0.values) v = dist(rng);
    }
    BetaStarResult cand = solve_from(std::move(u0));
    if (!cand.converged) continue;
    if (!have_best || cand.value < best.value) {
      best = std::move(cand);
      have_best = true;
    }
  }
  if (!have_best) {
    throw std::runtime_error("beta_star: penalty escalation never reached feasibility");
  }
  return best;
}

namespace {

struct PredicateEval {
  double lambda = 0.0;
  bool solvable = false;
  SolutionReport report;
};

class ExistencePredicate {
 public:
  ExistencePredicate(const ThresholdContext& ctx, double theta, const CurveOptions& opt)
      : ctx_(ctx), theta_(theta), opt_(opt) {}

  PredicateEval operator()(double lambda) {
    Functionals f = functionals_from(ctx_, lambda + theta_, lambda);
    SolverOptions sopt = opt_.solver;
    sopt.multistart = opt_.predicate_multistart;
    sopt.max_iterations = opt_.predicate_max_iterations;
    const SeedHints hints{&ctx_.pair_p.phi, &ctx_.pair_q.phi};
    SolutionReport rep = solve_nehari_min(f, sopt, hints);
    if (!rep.found() && lambda + theta_ < ctx_.lambda1_p) {
      SolutionReport rep2 = solve_global_min(f, sopt, hints);
      if (rep2.found()) rep = std::move(rep2);
    }
    PredicateEval eval;
    eval.lambda = lambda;
    eval.solvable = rep.found();
    eval.report = std::move(rep);
    history_.push_back({eval.lambda, eval.solvable});
    return eval;
  }

  /// A solvable lambda above an unsolvable one (past tolerance) means the
  /// predicate looked non-monotone in the probed range above lambda1_q.
  bool saw_inversion(double lambda1_q, double tol) const {
    for (const auto& [lf, okf] : history_) {
      if (okf || lf <= lambda1_q + tol) continue;
      for (const auto& [lt, okt] : history_) {
        if (okt && lt > lf + tol) return true;
      }
    }
    return false;
  }

 private:
  const ThresholdContext& ctx_;
  double theta_;
  const CurveOptions& opt_;
  std::vector<std::pair<double, bool>> history_;
};

CurveSample bisect_lambda_star(const ThresholdContext& ctx, double theta,
                               const CurveOptions& opt, const CurveSample* warm) {
  const double tol = opt.tolerance(ctx.lambda1_q);
  const double margin = opt.margin_scale * tol;
  const double lo = ctx.lambda1_q - margin;
  const double ub = lambda_star_upper_bound(ctx, theta, ctx.pair_q.phi) + tol;

  ExistencePredicate predicate(ctx, theta, opt);
  CurveSample sample;
  sample.theta = theta;

  std::optional<PredicateEval> last_true;
  std::optional<PredicateEval> first_false;

  // Warm path: the previous bracket localizes this one (lambda* decreasing).
  if (warm && !warm->inconclusive) {
    const double anchor = warm->lambda_star;
    PredicateEval above = predicate(std::min(anchor + 2.0 * tol, ub));
    if (!above.solvable) {
      first_false = above;
      double offset = 2.0 * tol;
      for (int j = 0; j < 8 && !last_true; ++j) {
        const double cand = anchor - offset + 2.0 * tol;
        if (cand <= lo) break;
        PredicateEval eval = predicate(cand);
        if (eval.solvable) {
          last_true = eval;
        } else {
          first_false = eval;
        }
        offset *= 4.0;
      }
    }
  }

  // Cold path: probe the lower margin, then a descending ladder.
  if (!last_true) {
    first_false.reset();
    PredicateEval at_lo = predicate(lo);
    if (at_lo.solvable) {
      last_true = at_lo;
      PredicateEval at_ub = predicate(ub);
      if (at_ub.solvable) {
        // the certified upper bound should exclude ub; extend once, then give up
        PredicateEval wider = predicate(ub + (ub - lo));
        if (wider.solvable) {
          sample.inconclusive = true;
          sample.note = "predicate still solvable above the certified upper bound";
          last_true = wider;
          first_false = PredicateEval{wider.lambda + tol, false, {}};
        } else {
          last_true = at_ub;
          first_false = wider;
        }
      } else {
        first_false = at_ub;
      }
    } else {
      const int rungs = std::max(2, opt.coarse_points);
      for (int k = rungs - 1; k >= 1 && !last_true; --k) {
        const double cand = ctx.lambda1_q + (ub - ctx.lambda1_q) * k / rungs;
        PredicateEval eval = predicate(cand);
        if (eval.solvable) {
          last_true = eval;
        } else {
          first_false = eval;
        }
      }
      if (!last_true) {
        PredicateEval near = predicate(ctx.lambda1_q + tol);
        if (near.solvable) {
          last_true = near;
        } else {
          first_false = near;
        }
      }
    }
  }

  if (!last_true) {
    // No solvable lambda located anywhere: the flat-tail value lambda1_q is
    // the only admissible answer (lambda* >= lambda1_q holds structurally).
    sample.lambda_star = ctx.lambda1_q;
    sample.bracket_width = margin + tol;
    if (first_false) sample.nonexistence_evidence.push_back(first_false->report);
    sample.note = sample.note.empty()
                      ? "no solvable lambda located; reporting the lambda1_q floor"
                      : sample.note;
    return sample;
  }
  if (!first_false) {
    PredicateEval at_ub = predicate(ub);
    if (at_ub.solvable) {
      sample.inconclusive = true;
      sample.note = "upper bound did not bracket the curve";
      last_true = at_ub;
      first_false = PredicateEval{ub + tol, false, {}};
    } else {
      first_false = at_ub;
    }
  }

  double lt = last_true->lambda;
  double lf = first_false->lambda;
  for (int it = 0; it < 200 && lf - lt > tol; ++it) {
    const double mid = 0.5 * (lt + lf);
    PredicateEval eval = predicate(mid);
    if (eval.solvable) {
      lt = mid;
      last_true = eval;
    } else {
      lf = mid;
      first_false = eval;
    }
  }

  sample.lambda_star = 0.5 * (lt + lf);
  sample.bracket_width = lf - lt;
  sample.existence_certificate = last_true->report;
  sample.nonexistence_evidence.push_back(first_false->report);
  if (predicate.saw_inversion(ctx.lambda1_q, tol)) {
    sample.inconclusive = true;
    sample.note = "existence predicate non-monotone within the probed range";
  }
  return sample;
}

}  // namespace

CurveSample lambda_star(const ThresholdContext& ctx, double theta, const CurveOptions& options) {
  return bisect_lambda_star(ctx, theta, options, nullptr);
}

CurveTrace trace_curve(const ThresholdContext& ctx, double theta_min, double theta_max,
                       int steps, const CurveOptions& options, const CurveObserver& observer) {
  if (!(theta_min < theta_max) || steps < 2) {
    throw std::invalid_argument("trace_curve: require theta_min < theta_max and steps >= 2");
  }
  CurveTrace trace;
  trace.samples.reserve(static_cast<std::size_t>(steps));
  const CurveSample* warm = nullptr;
  for (int k = 0; k < steps; ++k) {
    const double theta = theta_min + (theta_max - theta_min) * k / (steps - 1);
    trace.samples.push_back(bisect_lambda_star(ctx, theta, options, warm));
    warm = &trace.samples.back();
    if (observer) observer(trace.samples.back());
  }

  const double tol = options.tolerance(ctx.lambda1_q);
  auto& rep = trace.monotonicity;
  for (std::size_t k = 1; k < trace.samples.size(); ++k) {
    const auto& prev = trace.samples[k - 1];
    const auto& cur = trace.samples[k];
    const double rise = cur.lambda_star - prev.lambda_star;  // must not exceed 2 tol
    if (rise > 2.0 * tol) {
      ++rep.lambda_violations;
      rep.max_violation = std::max(rep.max_violation, rise);
    }
    const double shifted_drop = (prev.lambda_star + prev.theta) - (cur.lambda_star + cur.theta);
    if (shifted_drop > 2.0 * tol) {
      ++rep.shifted_violations;
      rep.max_violation = std::max(rep.max_violation, shifted_drop);
    }
  }
  rep.pass = rep.lambda_violations == 0 && rep.shifted_violations == 0;
  return trace;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::exists: return "exists";
    case Verdict::not_exists: return "not_exists";
    case Verdict::boundary: return "boundary";
    case Verdict::unknown: return "unknown";
  }
  return "unknown";
}

RegionVerdict region_classify(const ThresholdContext& ctx, double alpha, double beta,
                              const CurveOptions& options) {
  RegionVerdict out;
  out.alpha = alpha;
  out.beta = beta;

  const double ep = options.eq_rel_tol;
  auto eq = [&](double x, double y) { return std::abs(x - y) <= ep * std::max({1.0, std::abs(x), std::abs(y)}); };
  const double lp = ctx.lambda1_p;
  const double lq = ctx.lambda1_q;
  const bool alpha_eq = eq(alpha, lp);
  const bool beta_eq = eq(beta, lq);
  const bool li_holds = li_distance(ctx.pair_p, ctx.pair_q) > options.li_threshold;

  if (beta_eq && alpha_eq) {
    out.verdict = li_holds ? Verdict::not_exists : Verdict::exists;
    out.theorem_ref = "eigenvalue corner: solvable exactly when the first eigenfunctions are dependent";
    return out;
  }
  if (beta < lq && !beta_eq) {
    if (alpha < lp && !alpha_eq) {
      out.verdict = Verdict::not_exists;
      out.theorem_ref = "both parameters below the first eigenvalues";
      return out;
    }
    if (alpha_eq) {
      out.verdict = Verdict::not_exists;
      out.theorem_ref = "alpha at lambda1_p with beta below lambda1_q";
      return out;
    }
    out.verdict = Verdict::exists;
    out.theorem_ref = "alpha above lambda1_p with beta below lambda1_q";
    return out;
  }
  if (beta_eq) {
    if (alpha < lp) {
      out.verdict = Verdict::not_exists;
      out.theorem_ref = "alpha below lambda1_p with beta at lambda1_q";
      return out;
    }
    const double gap_tol = options.eq_rel_tol * std::max(1.0, std::abs(ctx.alpha_star));
    if (std::abs(alpha - ctx.alpha_star) <= gap_tol) {
      out.verdict = Verdict::boundary;
      out.theorem_ref = "alpha at alpha_star: no ground-state minimizer on this line";
      return out;
    }
    if (alpha < ctx.alpha_star) {
      out.verdict = Verdict::exists;
      out.theorem_ref = "beta at lambda1_q with alpha between lambda1_p and alpha_star";
      return out;
    }
    out.verdict = Verdict::not_exists;
    out.theorem_ref = "beta at lambda1_q with alpha above alpha_star";
    return out;
  }
  // beta > lq from here
  if (alpha < lp && !alpha_eq) {
    out.verdict = Verdict::exists;
    out.theorem_ref = "alpha below lambda1_p with beta above lambda1_q";
    return out;
  }
  // alpha >= lambda1_p, beta > lambda1_q: compare beta with the curve
  const double theta = alpha - beta;
  const CurveSample sample = lambda_star(ctx, theta, options);
  if (sample.inconclusive) {
    out.verdict = Verdict::unknown;
    out.theorem_ref = "curve sample inconclusive at theta = alpha - beta";
    return out;
  }
  const double band = 2.5 * std::max(sample.bracket_width, options.tolerance(ctx.lambda1_q));
  if (beta < sample.lambda_star - band) {
    out.verdict = Verdict::exists;
    out.theorem_ref = "beta below lambda*(theta)";
    return out;
  }
  if (beta > sample.lambda_star + band) {
    out.verdict = Verdict::not_exists;
    out.theorem_ref = "beta above lambda*(theta)";
    return out;
  }
  const double theta_tol = 2.0 * options.tolerance(ctx.lambda1_q);
  if (theta < ctx.theta_star_plus - theta_tol) {
    out.verdict = Verdict::exists;
    out.theorem_ref = "on the curve with theta below theta_star_plus";
    return out;
  }
  if (theta > ctx.theta_star_plus + theta_tol) {
    out.verdict = Verdict::not_exists;
    out.theorem_ref = "on the curve with theta above theta_star_plus";
    return out;
  }
  out.verdict = Verdict::boundary;
  out.theorem_ref = "on the curve at theta = theta_star_plus: no ground-state minimizer";
  return out;
}

}  // namespace fracpq
