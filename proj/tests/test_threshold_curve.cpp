#include <doctest.h>

#include <cmath>
#include <random>

#include "fracpq/threshold_curve.hpp"

using namespace fracpq;

namespace {

const ThresholdContext& ctx16() {
  static const ThresholdContext ctx = [] {
    PQConfig cfg;
    cfg.s1 = 0.7;
    cfg.s2 = 0.5;
    cfg.p = 3.0;
    cfg.q = 2.0;
    SolverOptions opt;
    opt.multistart = 3;
    return build_context(cfg, build_grid({0.0, 1.0}, 16), opt);
  }();
  return ctx;
}

CurveOptions fast_curve_options() {
  CurveOptions opt;
  opt.solver.multistart = 2;
  opt.predicate_multistart = 2;
  opt.predicate_max_iterations = 15000;
  opt.tol_scale = 3e-3;
  return opt;
}

}  // namespace

TEST_CASE("context identities") {
  const auto& ctx = ctx16();
  CHECK(ctx.theta_star == ctx.lambda1_p - ctx.lambda1_q);
  CHECK(ctx.theta_star_plus == ctx.alpha_star - ctx.lambda1_q);
  CHECK(ctx.theta_star_plus - ctx.theta_star ==
        doctest::Approx(ctx.alpha_star - ctx.lambda1_p).epsilon(1e-12));
  // alpha_star dominates the infimum of the (s1, p) quotient
  CHECK(ctx.alpha_star >= ctx.lambda1_p);
  CHECK(ctx.theta_star <= ctx.theta_star_plus);
}

TEST_CASE("LI-window context has a strict alpha_star gap") {
  PQConfig cfg;
  cfg.s1 = 0.8;
  cfg.s2 = 0.7;
  cfg.p = 3.0;
  cfg.q = 2.0;
  REQUIRE(li_condition(cfg));
  SolverOptions opt;
  opt.multistart = 3;
  const auto ctx = build_context(cfg, build_grid({0.0, 1.0}, 24), opt);
  CHECK(ctx.alpha_star - ctx.lambda1_p > 1e-6);
}

TEST_CASE("lambda_star_upper_bound arithmetic") {
  const auto& ctx = ctx16();
  const GridFunction& v = ctx.pair_q.phi;
  const double at_zero = lambda_star_upper_bound(ctx, 0.0, v);
  CHECK(std::isfinite(at_zero));
  CHECK(at_zero > 0.0);
  // positive theta does not change the bound
  CHECK(lambda_star_upper_bound(ctx, 2.5, v) == doctest::Approx(at_zero).epsilon(1e-14));
  // theta = -1 raises it by exactly one
  CHECK(lambda_star_upper_bound(ctx, -1.0, v) == doctest::Approx(at_zero + 1.0).epsilon(1e-12));
  // nonpositive v rejected
  GridFunction bad = v;
  bad[3] = 0.0;
  CHECK_THROWS_AS(lambda_star_upper_bound(ctx, 0.0, bad), std::invalid_argument);
}

TEST_CASE("beta_star") {
  const auto& ctx = ctx16();
  SolverOptions opt;
  opt.multistart = 3;

  SUBCASE("infeasible below lambda1_p") {
    CHECK_THROWS_AS(beta_star(ctx, ctx.lambda1_p - 0.5, opt), std::domain_error);
  }
  SUBCASE("dominates lambda1_q and satisfies the constraint") {
    const double alpha = 0.5 * (ctx.lambda1_p + ctx.alpha_star);
    const auto res = beta_star(ctx, alpha, opt);
    CHECK(res.converged);
    CHECK(res.value >= ctx.lambda1_q - 1e-9 * std::max(1.0, ctx.lambda1_q));
    const Functionals f = make_functionals(ctx.grid, ctx.config, alpha, 0.0);
    const double scale = 1.0 + energy(ctx.asm_p, res.minimizer) +
                         std::abs(alpha) * lp_norm_pow(*ctx.grid, res.minimizer, ctx.config.p);
    CHECK(H_alpha(f, res.minimizer) <= 1e-8 * scale);
    // inside the LI-gap window the constrained value sits strictly above lambda1_q
    if (ctx.alpha_star - ctx.lambda1_p > 1e-6) {
      CHECK(res.value > ctx.lambda1_q);
    }
  }
  SUBCASE("non-increasing in alpha") {
    const double gap = std::max(ctx.alpha_star - ctx.lambda1_p, 1e-3);
    const double a1 = ctx.lambda1_p + 0.25 * gap;
    const double a2 = ctx.lambda1_p + 0.75 * gap;
    const double a3 = ctx.lambda1_p + 2.0 * gap;
    const double b1 = beta_star(ctx, a1, opt).value;
    const double b2 = beta_star(ctx, a2, opt).value;
    const double b3 = beta_star(ctx, a3, opt).value;
    const double slack = 1e-6 * std::max(1.0, b1);
    CHECK(b2 <= b1 + slack);
    CHECK(b3 <= b2 + slack);
  }
}

TEST_CASE("beta_star penalty gradient matches central differences") {
  PQConfig cfg;
  cfg.s1 = 0.7;
  cfg.s2 = 0.5;
  cfg.p = 3.0;
  cfg.q = 2.0;
  SolverOptions opt;
  opt.multistart = 2;
  const auto ctx = build_context(cfg, build_grid({0.0, 1.0}, 9), opt);
  const double alpha = ctx.lambda1_p + 0.5;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> dist(0.2, 1.2);
  for (const double rho : {0.0, 2.5}) {
    for (int rep = 0; rep < 6; ++rep) {
      GridFunction u(ctx.grid);
      for (double& v : u.values) v = dist(rng);
      const auto g = beta_star_penalty_grad(ctx, alpha, rho, u);
      for (int i = 0; i < u.size(); ++i) {
        const double step = 1e-6 * (1.0 + std::abs(u[i]));
        GridFunction up = u, dn = u;
        up[i] += step;
        dn[i] -= step;
        const double fd = (beta_star_penalty(ctx, alpha, rho, up) -
                           beta_star_penalty(ctx, alpha, rho, dn)) /
                          (2.0 * step);
        CHECK(std::abs(fd - g[i]) < 1e-6 * (1.0 + std::abs(g[i])));
      }
    }
  }
}

TEST_CASE("region classification quadrants") {
  const auto& ctx = ctx16();
  const auto opt = fast_curve_options();
  const double dp = 0.5 * std::min(ctx.lambda1_p, ctx.lambda1_q);

  const auto low_low = region_classify(ctx, ctx.lambda1_p - dp, ctx.lambda1_q - dp, opt);
  CHECK(low_low.verdict == Verdict::not_exists);

  const auto hi_low = region_classify(ctx, ctx.lambda1_p + dp, ctx.lambda1_q - dp, opt);
  CHECK(hi_low.verdict == Verdict::exists);

  const auto low_hi = region_classify(ctx, ctx.lambda1_p - dp, ctx.lambda1_q + dp, opt);
  CHECK(low_hi.verdict == Verdict::exists);

  // boundary lines below the eigenvalues
  const auto on_alpha = region_classify(ctx, ctx.lambda1_p, ctx.lambda1_q - dp, opt);
  CHECK(on_alpha.verdict == Verdict::not_exists);
  const auto on_beta = region_classify(ctx, ctx.lambda1_p - dp, ctx.lambda1_q, opt);
  CHECK(on_beta.verdict == Verdict::not_exists);

  // corner verdict follows the numeric LI decision
  const auto corner = region_classify(ctx, ctx.lambda1_p, ctx.lambda1_q, opt);
  const bool li_numeric = li_distance(ctx.pair_p, ctx.pair_q) > opt.li_threshold;
  CHECK(corner.verdict == (li_numeric ? Verdict::not_exists : Verdict::exists));

  // beta at lambda1_q with alpha beyond alpha_star
  const auto past_star = region_classify(ctx, ctx.alpha_star + 1.0, ctx.lambda1_q, opt);
  CHECK(past_star.verdict == Verdict::not_exists);
}

TEST_CASE("lambda_star flat tail beyond theta_star_plus") {
  const auto& ctx = ctx16();
  const auto opt = fast_curve_options();
  const double theta = ctx.theta_star_plus + 1.0;
  const auto sample = lambda_star(ctx, theta, opt);
  const double tol = opt.tolerance(ctx.lambda1_q);
  CHECK(!sample.inconclusive);
  CHECK(sample.lambda_star >= ctx.lambda1_q - tol);
  CHECK(sample.lambda_star - ctx.lambda1_q < 2.0 * tol);
  CHECK(sample.lambda_star <=
        lambda_star_upper_bound(ctx, theta, ctx.pair_q.phi) + tol);
}

TEST_CASE("warm-started trace agrees with cold samples") {
  PQConfig cfg;
  cfg.s1 = 0.7;
  cfg.s2 = 0.5;
  cfg.p = 3.0;
  cfg.q = 2.0;
  SolverOptions sopt;
  sopt.multistart = 2;
  const auto ctx = build_context(cfg, build_grid({0.0, 1.0}, 10), sopt);
  auto opt = fast_curve_options();
  const double tol = opt.tolerance(ctx.lambda1_q);

  const double lo = ctx.theta_star - 0.5;
  const double hi = ctx.theta_star_plus + 0.5;
  const auto trace = trace_curve(ctx, lo, hi, 4, opt);
  REQUIRE(trace.samples.size() == 4);
  for (const auto& warm : trace.samples) {
    const auto cold = lambda_star(ctx, warm.theta, opt);
    CHECK(std::abs(cold.lambda_star - warm.lambda_star) <=
          2.0 * std::max({tol, cold.bracket_width, warm.bracket_width}));
  }
}

TEST_CASE("lambda_star gap at theta_star in the LI window, and region consistency") {
  PQConfig cfg;
  cfg.s1 = 0.8;
  cfg.s2 = 0.7;
  cfg.p = 3.0;
  cfg.q = 2.0;
  REQUIRE(li_condition(cfg));
  SolverOptions sopt;
  sopt.multistart = 3;
  const auto ctx = build_context(cfg, build_grid({0.0, 1.0}, 16), sopt);
  auto opt = fast_curve_options();
  opt.solver = sopt;
  const double tol = opt.tolerance(ctx.lambda1_q);

  const auto sample = lambda_star(ctx, ctx.theta_star, opt);
  CHECK(!sample.inconclusive);
  // the strict gap over lambda1_q that characterizes (LI)
  CHECK(sample.lambda_star > ctx.lambda1_q + 2.0 * tol);
  // the shifted coordinate dominates lambda1_p
  CHECK(sample.lambda_star + ctx.theta_star >= ctx.lambda1_p - tol);
  REQUIRE(sample.existence_certificate.has_value());
  CHECK(sample.existence_certificate->found());
  CHECK(!sample.nonexistence_evidence.empty());
  CHECK(sample.lambda_star >= ctx.lambda1_q - tol);
  CHECK(sample.lambda_star <=
        lambda_star_upper_bound(ctx, ctx.theta_star, ctx.pair_q.phi) + tol);

  // region_classify agrees with the traced curve on either side of it
  const double off = 3.0 * std::max(sample.bracket_width, tol);
  const double alpha_below = sample.lambda_star - off + ctx.theta_star;
  const auto below = region_classify(ctx, alpha_below, sample.lambda_star - off, opt);
  CHECK(below.verdict == Verdict::exists);
  const double alpha_above = sample.lambda_star + off + ctx.theta_star;
  const auto above = region_classify(ctx, alpha_above, sample.lambda_star + off, opt);
  CHECK(above.verdict == Verdict::not_exists);
}
