#pragma once

#include "fracpq/pq_solver.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace fracpq {

/// Everything the threshold machinery derives from one configuration:
/// both first eigenpairs and the derived constants
///   theta_star      = lambda1_p - lambda1_q,
///   alpha_star      = E_p(phi_q) / ||phi_q||_p^p,
///   theta_star_plus = alpha_star - lambda1_q.
struct ThresholdContext {
  PQConfig config;
  GridPtr grid;
  EnergyAssembly asm_p;
  EnergyAssembly asm_q;
  Eigenpair pair_p;
  Eigenpair pair_q;
  double lambda1_p = 0.0;
  double lambda1_q = 0.0;
  double alpha_star = 0.0;
  double theta_star = 0.0;
  double theta_star_plus = 0.0;
};

ThresholdContext build_context(const PQConfig& config, const GridPtr& grid,
                               const SolverOptions& options);

/// Options for the curve tracer and the region classifier.
struct CurveOptions {
  SolverOptions solver;            // template for the existence-predicate solves
  double tol_scale = 1e-3;         // bracket tolerance = tol_scale * max(1, lambda1_q)
  double margin_scale = 10.0;      // lower bisection margin, in bracket tolerances
  int coarse_points = 8;           // ladder used to locate a solvable lambda
  int predicate_multistart = 3;
  int predicate_max_iterations = 20000;
  double li_threshold = 1e-3;      // li_distance above this counts as (LI)
  double eq_rel_tol = 1e-9;        // relative tolerance for "=" in the region table

  double tolerance(double lambda1_q) const { return tol_scale * std::max(1.0, lambda1_q); }
};

/// One sample of the threshold curve with its certificates.
struct CurveSample {
  double theta = 0.0;
  double lambda_star = 0.0;
  double bracket_width = 0.0;
  bool inconclusive = false;  // predicate looked non-monotone or unbracketed
  std::optional<SolutionReport> existence_certificate;     // at the last solvable lambda
  std::vector<SolutionReport> nonexistence_evidence;       // failed attempts just above
  std::string note;
};

/// Certified upper bound for lambda*(theta) from any positive v:
/// ( E_p(v) + E_q(v^{p/q}) - min{0, theta ||v||_p^p} ) / ||v||_p^p.
double lambda_star_upper_bound(const ThresholdContext& ctx, double theta,
                               const GridFunction& v);

/// beta_star(alpha) = inf { E_q(u) / ||u||_q^q : H_alpha(u) <= 0 }, computed
/// by penalized, renormalized descent with penalty escalation.
struct BetaStarResult {
  double value = 0.0;
  GridFunction minimizer;
  double constraint = 0.0;  // H_alpha at the minimizer
  bool converged = false;
};

BetaStarResult beta_star(const ThresholdContext& ctx, double alpha, const SolverOptions& options);

/// Free penalty objective E_q(u)/||u||_q^q + rho max(0, H_alpha(u))^2 and its
/// gradient, exposed for derivative checks.
double beta_star_penalty(const ThresholdContext& ctx, double alpha, double rho,
                         const GridFunction& u);
GridFunction beta_star_penalty_grad(const ThresholdContext& ctx, double alpha, double rho,
                                    const GridFunction& u);

/// Bisection for lambda*(theta): the predicate at lambda is "a certified
/// positive solution of (EV; lambda + theta, lambda) was found".
CurveSample lambda_star(const ThresholdContext& ctx, double theta, const CurveOptions& options);

struct MonotonicityReport {
  int lambda_violations = 0;        // lambda* must be non-increasing
  int shifted_violations = 0;       // lambda* + theta must be non-decreasing
  double max_violation = 0.0;
  bool pass = true;
};

struct CurveTrace {
  std::vector<CurveSample> samples;
  MonotonicityReport monotonicity;
};

using CurveObserver = std::function<void(const CurveSample&)>;

/// Samples lambda* over a theta range, warm-starting each bisection from the
/// previous bracket. Warm starts are an optimization only; results agree with
/// cold runs within the bracket tolerance. The observer, when set, sees each
/// sample as soon as it is finished.
CurveTrace trace_curve(const ThresholdContext& ctx, double theta_min, double theta_max,
                       int steps, const CurveOptions& options,
                       const CurveObserver& observer = {});

enum class Verdict { exists, not_exists, boundary, unknown };

const char* to_string(Verdict v);

struct RegionVerdict {
  double alpha = 0.0;
  double beta = 0.0;
  Verdict verdict = Verdict::unknown;
  std::string theorem_ref;
};

/// Classifies one (alpha, beta) point against the decision table assembled
/// from the existence and non-existence statements. `unknown` is a valid
/// verdict for anything the table does not resolve.
RegionVerdict region_classify(const ThresholdContext& ctx, double alpha, double beta,
                              const CurveOptions& options);

}  // namespace fracpq
