#pragma once

#include <memory>
#include <vector>

namespace fracpq {

/// Bounded open interval (a, b); the 1-D domain the problem lives on.
struct Interval {
  double a = 0.0;
  double b = 1.0;
  double length() const { return b - a; }
};

/// One (s, r) exponent pair of a fractional r-Laplacian.
struct FractionalParams {
  double s = 0.5;  // fractional order, 0 < s < 1
  double r = 2.0;  // integrability exponent, r > 1
  double sr() const { return s * r; }
};

/// Full problem configuration. Standing assumption: 0 < s2 < s1 < 1 < q < p.
struct PQConfig {
  Interval interval;
  double s1 = 0.7;
  double s2 = 0.5;
  double p = 3.0;
  double q = 2.0;

  FractionalParams p_params() const { return {s1, p}; }
  FractionalParams q_params() const { return {s2, q}; }
};

void validate(const Interval& iv);
void validate(const FractionalParams& params);
void validate(const PQConfig& config);

/// Uniform cell-midpoint grid on an interval. Immutable after construction;
/// no node touches the boundary, so the exterior kernel integral stays finite.
struct Grid {
  Interval interval;
  int n = 0;                  // number of cells
  double h = 0.0;             // cell width, h * n == b - a
  std::vector<double> nodes;  // midpoints x_i = a + (i - 1/2) h, strictly increasing
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds the midpoint grid with n >= 1 cells. Deterministic.
GridPtr build_grid(const Interval& interval, int n);

bool same_grid(const Grid& lhs, const Grid& rhs);

/// Nodal values on a grid; the represented function is zero outside (a, b).
struct GridFunction {
  GridPtr grid;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(GridPtr g, double fill = 0.0);
  GridFunction(GridPtr g, std::vector<double> v);

  int size() const { return grid ? grid->n : 0; }
  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

/// Exact tail integral k_i = (1/sr) [(x_i - a)^{-sr} + (b - x_i)^{-sr}] of the
/// kernel |x_i - y|^{-(1+sr)} over R \ (a, b). Encodes the Dirichlet
/// condition u = 0 outside the domain.
double exterior_kernel_weight(const Grid& grid, int i, const FractionalParams& params);

}  // namespace fracpq
