#pragma once

#include "fracpq/eigensolver.hpp"

#include <optional>
#include <string>

namespace fracpq {

/// Both energy assemblies of problem (EV; alpha, beta) over one grid, plus
/// the parameter pair.
struct Functionals {
  PQConfig config;
  EnergyAssembly asm_p;  // (s1, p)
  EnergyAssembly asm_q;  // (s2, q)
  double alpha = 0.0;
  double beta = 0.0;

  const GridPtr& grid() const { return asm_p.grid; }
};

Functionals make_functionals(const GridPtr& grid, const PQConfig& config, double alpha,
                             double beta);

/// I_+(u) = E_p(u)/p + E_q(u)/q - alpha ||u+||_p^p / p - beta ||u+||_q^q / q.
double I_plus(const Functionals& f, const GridFunction& u);

/// H_alpha(u) = E_p(u) - alpha ||u+||_p^p.
double H_alpha(const Functionals& f, const GridFunction& u);

/// G_beta(u) = E_q(u) - beta ||u+||_q^q.  <I_+'(u), u> = H + G.
double G_beta(const Functionals& f, const GridFunction& u);

/// Gradient of I_+ in the nodal coordinates.
GridFunction grad_I_plus(const Functionals& f, const GridFunction& u);

/// Nehari scaling t = (-G/H)^{1/(p-q)}; t u lies on the Nehari manifold.
/// Throws std::domain_error unless H and G are nonzero with opposite signs.
double nehari_scale(const Functionals& f, const GridFunction& u);

struct NehariDiagnostics {
  double H = 0.0;
  double G = 0.0;
  double I = 0.0;
  std::optional<double> t_scale;
};

enum class SolveStatus { found, none_found, inconclusive };
enum class SolveMethod { nehari, global_min, truncation };

const char* to_string(SolveStatus status);
const char* to_string(SolveMethod method);

/// Outcome of one solve attempt. status == found certifies a positive
/// solution numerically: residual below tolerance, min_interior strictly
/// positive relative to the sup norm, and the iterate nontrivial. A
/// none_found verdict is a bounded-effort statement (multistarts exhausted),
/// never a proof.
struct SolutionReport {
  SolveStatus status = SolveStatus::none_found;
  std::optional<GridFunction> u;
  double residual = 0.0;      // sup-norm of grad I_+ (or grad of the truncated energy)
  double min_interior = 0.0;  // min_i u_i of the reported iterate
  double sup_norm = 0.0;      // ||u||_inf, finite for every found solution
  NehariDiagnostics diagnostics;
  SolveMethod method = SolveMethod::nehari;
  int iterations = 0;
  int seeds_tried = 0;
  std::string note;

  bool found() const { return status == SolveStatus::found; }
};

/// Optional precomputed eigenfunctions used to seed the solvers.
struct SeedHints {
  const GridFunction* phi_p = nullptr;
  const GridFunction* phi_q = nullptr;
};

/// Minimizes I_+ over the Nehari manifold: free descent steps re-projected
/// through the Nehari scaling, multistarted (the scaled (s2, q)
/// eigenfunction is always among the seeds).
SolutionReport solve_nehari_min(const Functionals& f, const SolverOptions& options,
                                const SeedHints& hints = {});

/// Unconstrained minimization of I_+; meaningful for alpha < lambda1_{s1,p}
/// where I_+ is coercive. Reports none_found when every start collapses to
/// the trivial minimizer.
SolutionReport solve_global_min(const Functionals& f, const SolverOptions& options,
                                const SeedHints& hints = {});

/// Truncation of the force f(t) = alpha |t|^{p-2} t + beta |t|^{q-2} t to the
/// band [ulow_i, ubar_i]; continuous in t, frozen outside the band.
double truncated_force(double t, int i, const GridFunction& ubar, const GridFunction& ulow,
                       double alpha, double beta, double p, double q);

/// Truncated functional I~(u) = E_p/p + E_q/q - sum_i F~(x_i, u_i) h, where
/// F~ integrates the truncated force from 0. Coercive and bounded below for
/// any bounded ordered pair (ulow, ubar).
double truncated_energy(const Functionals& f, const GridFunction& u, const GridFunction& ubar,
                        const GridFunction& ulow);

GridFunction truncated_energy_grad(const Functionals& f, const GridFunction& u,
                                   const GridFunction& ubar, const GridFunction& ulow);

struct SupersolutionCertificate {
  double min_residual = 0.0;  // min over coordinate test directions
  bool certified = false;
};

/// Checks the weak supersolution inequality of (EV; alpha, beta) against the
/// nonnegative coordinate test directions.
SupersolutionCertificate certify_supersolution(const Functionals& f, const GridFunction& ubar,
                                               double tol);

/// Minimizes the truncated functional between the subsolution 0 and a
/// certified supersolution ubar. The output is clamped into [0, ubar]
/// nodewise; a material ordering violation at the critical point throws.
SolutionReport solve_by_truncation(const Functionals& f, const GridFunction& ubar,
                                   const SolverOptions& options, const SeedHints& hints = {});

}  // namespace fracpq
