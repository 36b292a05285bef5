#include "fracpq/domain_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace fracpq {

void validate(const Interval& iv) {
  if (!(iv.a < iv.b)) {
    throw std::invalid_argument("interval: require a < b, got [" + std::to_string(iv.a) +
                                ", " + std::to_string(iv.b) + "]");
  }
  if (!std::isfinite(iv.a) || !std::isfinite(iv.b)) {
    throw std::invalid_argument("interval: endpoints must be finite");
  }
}

void validate(const FractionalParams& params) {
  if (!(params.s > 0.0 && params.s < 1.0)) {
    throw std::invalid_argument("fractional order: require 0 < s < 1, got s = " +
                                std::to_string(params.s));
  }
  if (!(params.r > 1.0) || !std::isfinite(params.r)) {
    throw std::invalid_argument("integrability exponent: require 1 < r < inf, got r = " +
                                std::to_string(params.r));
  }
}

void validate(const PQConfig& config) {
  validate(config.interval);
  validate(FractionalParams{config.s1, config.p});
  validate(FractionalParams{config.s2, config.q});
  if (!(config.s2 < config.s1)) {
    throw std::invalid_argument("config: require s2 < s1");
  }
  if (!(config.q < config.p)) {
    throw std::invalid_argument("config: require q < p");
  }
}

GridPtr build_grid(const Interval& interval, int n) {
  validate(interval);
  if (n < 1) {
    throw std::invalid_argument("grid: require n >= 1, got n = " + std::to_string(n));
  }
  auto grid = std::make_shared<Grid>();
  grid->interval = interval;
  grid->n = n;
  grid->h = interval.length() / n;
  grid->nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid->nodes[static_cast<std::size_t>(i)] = interval.a + (i + 0.5) * grid->h;
  }
  return grid;
}

bool same_grid(const Grid& lhs, const Grid& rhs) {
  if (&lhs == &rhs) return true;
  return lhs.n == rhs.n && lhs.interval.a == rhs.interval.a && lhs.interval.b == rhs.interval.b;
}

GridFunction::GridFunction(GridPtr g, double fill)
    : grid(std::move(g)), values(static_cast<std::size_t>(grid->n), fill) {}

GridFunction::GridFunction(GridPtr g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)) {
  if (static_cast<int>(values.size()) != grid->n) {
    throw std::invalid_argument("grid function: value count does not match grid size");
  }
}

double exterior_kernel_weight(const Grid& grid, int i, const FractionalParams& params) {
  validate(params);
  if (i < 0 || i >= grid.n) {
    throw std::invalid_argument("exterior_kernel_weight: node index out of range");
  }
  const double x = grid.nodes[static_cast<std::size_t>(i)];
  const double da = x - grid.interval.a;
  const double db = grid.interval.b - x;
  if (!(da > 0.0) || !(db > 0.0)) {
    throw std::domain_error("exterior_kernel_weight: node touches the boundary, tail integral diverges");
  }
  const double sr = params.sr();
  return (std::pow(da, -sr) + std::pow(db, -sr)) / sr;
}

}  // namespace fracpq
