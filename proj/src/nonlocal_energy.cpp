#include "fracpq/nonlocal_energy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fracpq {

double abs_pow(double t, double e) {
  const double a = std::abs(t);
  if (e == 2.0) return a * a;
  if (e == 3.0) return a * a * a;
  if (e == 1.0) return a;
  return std::pow(a, e);
}

double signed_pow(double t, double e) {
  if (t == 0.0) return 0.0;
  const double m = abs_pow(t, e);
  return t > 0.0 ? m : -m;
}

namespace {

void check_same_grid(const EnergyAssembly& asm_, const GridFunction& u, const char* where) {
  if (!u.grid || !asm_.grid || !same_grid(*asm_.grid, *u.grid)) {
    throw std::invalid_argument(std::string(where) + ": grid function does not live on the assembly grid");
  }
}

}  // namespace

EnergyAssembly assemble(const GridPtr& grid, const FractionalParams& params) {
  validate(params);
  if (!grid || grid->n < 1) {
    throw std::invalid_argument("assemble: empty grid");
  }
  const int n = grid->n;
  EnergyAssembly out;
  out.grid = grid;
  out.params = params;
  out.pair_weights.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  out.exterior_weights.resize(static_cast<std::size_t>(n));

  const double h2 = grid->h * grid->h;
  const double exponent = 1.0 + params.sr();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = grid->nodes[static_cast<std::size_t>(j)] - grid->nodes[static_cast<std::size_t>(i)];
      const double w = h2 / std::pow(dist, exponent);
      if (!std::isfinite(w)) {
        throw std::overflow_error("assemble: pairwise kernel weight overflowed at pair (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      out.pair_weights[static_cast<std::size_t>(i) * n + j] = w;
      out.pair_weights[static_cast<std::size_t>(j) * n + i] = w;
    }
    const double e = 2.0 * grid->h * exterior_kernel_weight(*grid, i, params);
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw std::overflow_error("assemble: exterior weight not positive-finite at node " + std::to_string(i));
    }
    out.exterior_weights[static_cast<std::size_t>(i)] = e;
  }
  return out;
}

double energy(const EnergyAssembly& asm_, const GridFunction& u) {
  check_same_grid(asm_, u, "energy");
  const int n = asm_.n();
  const double r = asm_.params.r;
  const auto& v = u.values;
  double interior = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * n;
    for (int j = i + 1; j < n; ++j) {
      interior += asm_.pair_weights[row + j] * abs_pow(v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)], r);
    }
  }
  double exterior = 0.0;
  for (int i = 0; i < n; ++i) {
    exterior += asm_.exterior_weights[static_cast<std::size_t>(i)] * abs_pow(v[static_cast<std::size_t>(i)], r);
  }
  return 2.0 * interior + exterior;
}

void operator_apply_into(const EnergyAssembly& asm_, const GridFunction& u,
                         std::vector<double>& out) {
  check_same_grid(asm_, u, "operator_apply");
  const int n = asm_.n();
  const double rm1 = asm_.params.r - 1.0;
  const auto& v = u.values;
  out.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * n;
    for (int j = i + 1; j < n; ++j) {
      const double flux = 2.0 * asm_.pair_weights[row + j] *
                          signed_pow(v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)], rm1);
      out[static_cast<std::size_t>(i)] += flux;
      out[static_cast<std::size_t>(j)] -= flux;
    }
    out[static_cast<std::size_t>(i)] +=
        asm_.exterior_weights[static_cast<std::size_t>(i)] * signed_pow(v[static_cast<std::size_t>(i)], rm1);
  }
}

GridFunction operator_apply(const EnergyAssembly& asm_, const GridFunction& u) {
  GridFunction g(u.grid);
  operator_apply_into(asm_, u, g.values);
  return g;
}

double lp_norm_pow(const Grid& grid, const GridFunction& u, double gamma) {
  if (!u.grid || !same_grid(grid, *u.grid)) {
    throw std::invalid_argument("lp_norm_pow: grid mismatch");
  }
  double acc = 0.0;
  for (double v : u.values) acc += abs_pow(v, gamma);
  return acc * grid.h;
}

namespace {

MarginReport make_margin(double lhs, double rhs, double slack) {
  MarginReport rep;
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.slack = slack;
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  rep.violated = std::isfinite(slack) ? (slack < -kSlackTol * scale) : false;
  return rep;
}

}  // namespace

MarginReport elementary_inequality_check(double a, double b, double gamma, ElemVariant variant) {
  switch (variant) {
    case ElemVariant::i: {
      if (!(gamma > 1.0)) throw std::invalid_argument("elementary (i): require gamma > 1");
      const double ap = std::max(a, 0.0), bp = std::max(b, 0.0);
      const double am = std::max(-a, 0.0), bm = std::max(-b, 0.0);
      const double core = signed_pow(a - b, gamma - 1.0);
      const double lhs1 = core * (ap - bp);
      const double rhs1 = abs_pow(ap - bp, gamma);
      const double lhs2 = core * (bm - am);
      const double rhs2 = abs_pow(am - bm, gamma);
      // report the tighter of the positive-part and negative-part inequalities
      if (lhs1 - rhs1 <= lhs2 - rhs2) return make_margin(lhs1, rhs1, lhs1 - rhs1);
      return make_margin(lhs2, rhs2, lhs2 - rhs2);
    }
    case ElemVariant::ii: {
      if (!(gamma >= 2.0)) throw std::invalid_argument("elementary (ii): require gamma >= 2");
      if (a < b) std::swap(a, b);  // the inequality is oriented: both sides antisymmetric
      const double lhs = signed_pow(a - b, gamma - 1.0);
      const double c = std::pow(2.0, gamma - 2.0);  // sharp at b = -a
      const double rhs = c * (signed_pow(a, gamma - 1.0) - signed_pow(b, gamma - 1.0));
      return make_margin(lhs, rhs, rhs - lhs);
    }
    case ElemVariant::iii: {
      if (!(gamma > 0.0)) throw std::invalid_argument("elementary (iii): require gamma > 0");
      if (a == 0.0 && b == 0.0) return make_margin(0.0, 0.0, 0.0);
      const double lhs = std::abs(abs_pow(a, gamma) - abs_pow(b, gamma));
      const double rhs = gamma * (abs_pow(a, gamma - 1.0) + abs_pow(b, gamma - 1.0)) * std::abs(a - b);
      return make_margin(lhs, rhs, rhs - lhs);
    }
  }
  throw std::logic_error("elementary_inequality_check: unreachable");
}

namespace {

struct PiconePair {
  double lhs, rhs;
};

PiconePair picone_pair(double fi, double fj, double gi, double gj, double r1, double r2,
                       PiconeVariant variant, double alpha, double beta) {
  switch (variant) {
    case PiconeVariant::i: {
      const double lhs = signed_pow(fi - fj, r1 - 1.0) *
                         (abs_pow(gi, r2) / abs_pow(fi, r2 - 1.0) - abs_pow(gj, r2) / abs_pow(fj, r2 - 1.0));
      const double rhs = abs_pow(gi - gj, r2) * abs_pow(fi - fj, r1 - r2);
      return {lhs, rhs};
    }
    case PiconeVariant::ii: {
      const double lhs = signed_pow(fi - fj, r2 - 1.0) *
                         (abs_pow(gi, r1) / abs_pow(fi, r1 - 1.0) - abs_pow(gj, r1) / abs_pow(fj, r1 - 1.0));
      const double rhs = signed_pow(gi - gj, r2 - 1.0) *
                         (abs_pow(gi, r1 - r2 + 1.0) / abs_pow(fi, r1 - r2) -
                          abs_pow(gj, r1 - r2 + 1.0) / abs_pow(fj, r1 - r2));
      return {lhs, rhs};
    }
    case PiconeVariant::iii:
    case PiconeVariant::iv: {
      const double di = alpha * abs_pow(fi, r1 - 1.0) + beta * abs_pow(fi, r2 - 1.0);
      const double dj = alpha * abs_pow(fj, r1 - 1.0) + beta * abs_pow(fj, r2 - 1.0);
      const double frac = abs_pow(gi, r1) / di - abs_pow(gj, r1) / dj;
      if (variant == PiconeVariant::iii) {
        return {signed_pow(fi - fj, r1 - 1.0) * frac, abs_pow(gi - gj, r1)};
      }
      const double rr = r1 / r2;
      return {signed_pow(fi - fj, r2 - 1.0) * frac,
              abs_pow(abs_pow(gi, rr) - abs_pow(gj, rr), r2)};
    }
  }
  throw std::logic_error("picone_pair: unreachable");
}

}  // namespace

PiconeReport picone_check(const GridFunction& f, const GridFunction& g, double r1, double r2,
                          PiconeVariant variant, double alpha, double beta) {
  if (f.size() != g.size() || f.size() == 0) {
    throw std::invalid_argument("picone_check: functions must share a nonempty grid");
  }
  if (!(r2 > 1.0) || !(r2 <= r1)) {
    throw std::invalid_argument("picone_check: require 1 < r2 <= r1");
  }
  for (double v : f.values) {
    if (!(v > 0.0)) throw std::invalid_argument("picone_check: f must be strictly positive");
  }
  for (double v : g.values) {
    if (v < 0.0) throw std::invalid_argument("picone_check: g must be nonnegative");
  }
  if ((variant == PiconeVariant::iii || variant == PiconeVariant::iv) &&
      (alpha < 1.0 || beta < 1.0)) {
    throw std::invalid_argument("picone_check: variants iii/iv require alpha, beta >= 1");
  }

  PiconeReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  const int n = f.size();
  bool any_violation = false;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto [lhs, rhs] = picone_pair(f[i], f[j], g[i], g[j], r1, r2, variant, alpha, beta);
      const double slack = rhs - lhs;
      if (slack < rep.min_slack) {
        rep.min_slack = slack;
        rep.arg_i = i;
        rep.arg_j = j;
      }
      rep.max_abs_slack = std::max(rep.max_abs_slack, std::abs(slack));
      const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
      if (slack < -kSlackTol * scale) any_violation = true;
    }
  }
  if (n == 1) rep.min_slack = 0.0;  // no pairs
  rep.violated = any_violation;
  return rep;
}

}  // namespace fracpq
