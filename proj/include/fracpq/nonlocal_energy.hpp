#pragma once

#include "fracpq/domain_grid.hpp"

namespace fracpq {

/// |t|^e with the exact special cases e = 2, 3 short-circuited.
double abs_pow(double t, double e);

/// |t|^e * sign(t) with the convention 0 -> 0 (covers e < 1).
double signed_pow(double t, double e);

/// Quadrature weights of the discrete Gagliardo energy for one (s, r) pair.
/// Pairwise part w_ij = h^2 / |x_i - x_j|^{1+sr} (zero diagonal), exterior
/// part e_i = 2 h k_i with k_i the exact tail integral. The diagonal is
/// excluded: a cell-constant function has no within-cell contribution.
struct EnergyAssembly {
  GridPtr grid;
  FractionalParams params;
  std::vector<double> pair_weights;      // dense n x n, row-major, symmetric
  std::vector<double> exterior_weights;  // size n, strictly positive

  int n() const { return grid ? grid->n : 0; }
  double w(int i, int j) const {
    return pair_weights[static_cast<std::size_t>(i) * static_cast<std::size_t>(n()) +
                        static_cast<std::size_t>(j)];
  }
};

EnergyAssembly assemble(const GridPtr& grid, const FractionalParams& params);

/// Discrete Gagliardo energy E(u) = sum_{i != j} |u_i - u_j|^r w_ij
/// + sum_i |u_i|^r e_i. Nonnegative, zero exactly on u = 0.
double energy(const EnergyAssembly& asm_, const GridFunction& u);

/// Gradient of E(u)/r: g_i = sum_{j != i} 2 w_ij |u_i-u_j|^{r-2}(u_i-u_j)
/// + e_i |u_i|^{r-2} u_i. Satisfies <g(u), u> = E(u).
GridFunction operator_apply(const EnergyAssembly& asm_, const GridFunction& u);
void operator_apply_into(const EnergyAssembly& asm_, const GridFunction& u,
                         std::vector<double>& out);

/// Discrete ||u||_gamma^gamma = sum_i |u_i|^gamma h.
double lp_norm_pow(const Grid& grid, const GridFunction& u, double gamma);

/// Scale-relative slack tolerance used by the inequality checkers.
inline constexpr double kSlackTol = 1e-12;

/// One evaluated inequality; slack is oriented so that slack >= 0 means the
/// inequality holds. A violation is slack < -kSlackTol * max(|lhs|, |rhs|, 1).
struct MarginReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool violated = false;
};

enum class ElemVariant { i, ii, iii };

/// Pointwise elementary inequalities for (a, b, gamma):
///   i   (gamma > 1):  |a-b|^{g-2}(a-b)(a+ - b+) >= |a+ - b+|^g  (and the
///                     mirrored negative-part inequality; slack is the min)
///   ii  (gamma >= 2): |a-b|^{g-2}(a-b) <= 2^{g-2} (|a|^{g-2}a - |b|^{g-2}b),
///                     oriented with a >= b (swapped internally otherwise,
///                     matching how the estimate is applied)
///   iii (gamma > 0):  ||a|^g - |b|^g| <= g (|a|^{g-1} + |b|^{g-1}) |a-b|
MarginReport elementary_inequality_check(double a, double b, double gamma, ElemVariant variant);

enum class PiconeVariant { i, ii, iii, iv };

struct PiconeReport {
  double min_slack = 0.0;     // smallest slack over all node pairs
  double max_abs_slack = 0.0; // largest |slack|; ~0 in the equality case f = c g
  int arg_i = -1;             // pair attaining the minimum slack
  int arg_j = -1;
  bool violated = false;
};

/// Discrete Picone inequality on every node pair (i, j), i != j, for
/// f > 0 and g >= 0 nodewise, exponents 1 < r2 <= r1. alpha, beta enter
/// variants iii/iv only (both >= 1 there). Equality holds for f = c g in
/// variants i and ii. Variant iii is valid for r1 <= r2 + 1; outside that
/// window the checker reports the genuine negative slack. (For any gap the
/// sum of the iii and iv forms stays nonnegative, which is what the
/// threshold-curve bound integrates.)
PiconeReport picone_check(const GridFunction& f, const GridFunction& g, double r1,
                          double r2, PiconeVariant variant, double alpha = 1.0,
                          double beta = 1.0);

}  // namespace fracpq
