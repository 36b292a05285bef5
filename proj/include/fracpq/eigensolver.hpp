#pragma once

#include "fracpq/nonlocal_energy.hpp"

#include <cstdint>
#include <vector>

namespace fracpq {

/// Shared options for the descent-based solvers.
struct SolverOptions {
  int max_iterations = 50000;
  double descent_tol = 1e-12;       // relative objective decrease considered a stall
  double residual_tol = 1e-8;       // sup-norm stationarity tolerance
  double armijo_contraction = 0.5;
  double armijo_slope = 1e-4;       // sufficient-decrease constant
  int multistart = 5;
  std::uint64_t seed = 42;
  bool record_trace = false;        // store the per-iteration quotient/objective
  int stall_patience = 3000;        // consecutive sub-descent_tol decreases before stopping
  // pq_solver specifics
  double positivity_tol = 1e-8;     // min_interior > positivity_tol * ||u||_inf declares positive
  double trivial_tol = 1e-6;        // ||u||_inf at or below this is the trivial solution
  double supersolution_tol = 1e-6;  // slack allowed in the supersolution certificate
  int threads = 0;                  // 0 = FRACPQ_THREADS or hardware concurrency
};

/// First Dirichlet eigenpair candidate: lambda with its normalized
/// (||phi||_r = 1), nonnegatively oriented eigenfunction.
struct Eigenpair {
  double lambda = 0.0;
  GridFunction phi;
  double residual = 0.0;  // sup-norm of operator_apply(phi) - lambda h |phi|^{r-2} phi
  int iterations = 0;
  bool converged = false;
  std::vector<double> quotient_trace;  // filled when options.record_trace
};

/// Rayleigh quotient E(u) / ||u||_r^r; scale invariant, errors on u = 0.
double rayleigh_quotient(const EnergyAssembly& asm_, const GridFunction& u);

/// Minimizes the Rayleigh quotient by normalized projected descent with
/// Armijo backtracking, multistarted from the constant function plus random
/// positive and sign-mixed seeds. Returns the best run (quotient, then seed
/// order); converged = false carries the best iterate anyway.
Eigenpair first_eigenpair(const EnergyAssembly& asm_, const SolverOptions& options);

struct SimplicityReport {
  double max_distance = 0.0;  // max pairwise normalized L2 distance across reruns
  bool pass = false;
  int runs = 0;
  std::vector<double> lambdas;
};

/// Reruns the minimization from `options.multistart` fresh random seeds and
/// reports the maximum normalized L2 distance between the resulting
/// eigenfunctions (threshold 1e-6), mirroring simplicity of the first
/// eigenvalue.
SimplicityReport simplicity_check(const EnergyAssembly& asm_, const Eigenpair& pair,
                                  const SolverOptions& options);

/// Exponent window s1 p'/q' < s2 < s1 under which the first eigenfunctions
/// of the two operators are provably linearly independent.
bool li_condition(const PQConfig& config);

/// L2 distance between the L2-normalized, sign-aligned eigenfunctions.
/// Distances above 1e-3 count as numerical linear independence.
double li_distance(const Eigenpair& pair1, const Eigenpair& pair2);

}  // namespace fracpq
