#pragma once

// gfunction.hpp -- conditional-variance profiles ("g-functions"): the input
// from which densities, tails, and tail envelopes are reconstructed.
// Parametric forms plus a tabulated form with linear interpolation and
// constant extrapolation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mst {

struct GConstant {
  double c;
};

struct GAffine {
  double alpha, beta;  // alpha + beta * y
};

struct GQuadratic {
  double cprime;  // cprime * y^2
};

// c1 * y^p for y >= z0; tabulated below z0 (the pure power is not integrable
// against y/g down to 0 when p >= 2, so a prefix is mandatory there)
struct GPower {
  double c1, p, z0;
  std::vector<double> prefix_grid, prefix_values;
};

struct GTabulated {
  std::vector<double> grid, values;  // grid strictly increasing, values > 0
  std::vector<double> se;            // optional per-node standard errors (may be empty)
};

namespace detail {

inline double interp_linear(const std::vector<double>& xs, const std::vector<double>& ys,
                            double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + t * (ys[i + 1] - ys[i]);
}

inline void check_table(const std::vector<double>& grid, const std::vector<double>& values,
                        const char* what) {
  if (grid.size() < 2 || grid.size() != values.size())
    throw std::invalid_argument(std::string(what) + ": need matching grid/values with >= 2 nodes");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
  for (double v : values)
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + ": values must be positive");
}

}  // namespace detail

struct GFunction {
  std::variant<GConstant, GAffine, GQuadratic, GPower, GTabulated> form;
  double support_left = -std::numeric_limits<double>::infinity();

  double operator()(double y) const {
    return std::visit(
        [y](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GConstant>) {
            return f.c;
          } else if constexpr (std::is_same_v<T, GAffine>) {
            return f.alpha + f.beta * y;
          } else if constexpr (std::is_same_v<T, GQuadratic>) {
            return f.cprime * y * y;
          } else if constexpr (std::is_same_v<T, GPower>) {
            if (y >= f.z0) return f.c1 * std::pow(y, f.p);
            return detail::interp_linear(f.prefix_grid, f.prefix_values, y);
          } else {
            return detail::interp_linear(f.grid, f.values, y);
          }
        },
        form);
  }

  // false when evaluation at y would rely on constant extrapolation of a table
  bool covers(double y) const {
    if (const auto* t = std::get_if<GTabulated>(&form))
      return y >= t->grid.front() && y <= t->grid.back();
    if (const auto* p = std::get_if<GPower>(&form))
      return y >= p->z0 || y >= p->prefix_grid.front();
    return true;
  }
};

inline GFunction g_constant(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("g_constant: c must be positive");
  return {GConstant{c}, -std::numeric_limits<double>::infinity()};
}

inline GFunction g_affine(double alpha, double beta, double support_left) {
  GFunction g{GAffine{alpha, beta}, support_left};
  return g;
}

inline GFunction g_quadratic(double cprime) {
  if (!(cprime > 0.0)) throw std::invalid_argument("g_quadratic: cprime must be positive");
  return {GQuadratic{cprime}, -std::numeric_limits<double>::infinity()};
}

inline GFunction g_power(double c1, double p, double z0, std::vector<double> prefix_grid,
                         std::vector<double> prefix_values,
                         double support_left = -std::numeric_limits<double>::infinity()) {
  if (!(c1 > 0.0)) throw std::invalid_argument("g_power: c1 must be positive");
  if (!(z0 > 0.0)) throw std::invalid_argument("g_power: z0 must be positive");
  detail::check_table(prefix_grid, prefix_values, "g_power prefix");
  if (!(prefix_grid.front() <= 0.0) || !(prefix_grid.back() >= z0))
    throw std::invalid_argument("g_power: prefix table must cover [0, z0]");
  return {GPower{c1, p, z0, std::move(prefix_grid), std::move(prefix_values)}, support_left};
}

inline GFunction g_tabulated(std::vector<double> grid, std::vector<double> values,
                             std::vector<double> se = {},
                             double support_left = -std::numeric_limits<double>::infinity()) {
  detail::check_table(grid, values, "g_tabulated");
  if (!se.empty() && se.size() != grid.size())
    throw std::invalid_argument("g_tabulated: se must be empty or match the grid");
  return {GTabulated{std::move(grid), std::move(values), std::move(se)}, support_left};
}

}  // namespace mst
