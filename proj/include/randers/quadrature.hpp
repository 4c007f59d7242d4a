#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace randers {

enum class QuadratureRule { trapezoid };

/// Composite rule applied cell by cell; each grid cell is split into
/// `refinement` equal sub-cells.
struct QuadratureSpec {
  QuadratureRule rule = QuadratureRule::trapezoid;
  int refinement = 4;
};

/// Strictly increasing node array starting at 0.
inline void validate_grid(std::span<const double> grid) {
  if (grid.size() < 2) throw std::invalid_argument("grid needs at least two nodes");
  if (grid.front() != 0.0) throw std::invalid_argument("grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
}

/// 0, then `cells` geometrically spaced nodes from first_node to end.
inline std::vector<double> geometric_grid(double first_node, double end, std::size_t cells) {
  if (!(first_node > 0.0 && end > first_node) || cells < 2) throw std::invalid_argument("geometric_grid: bad arguments");
  std::vector<double> g(cells + 1);
  g[0] = 0.0;
  const double ratio = std::log(end / first_node) / static_cast<double>(cells - 1);
  for (std::size_t i = 1; i <= cells; ++i) g[i] = first_node * std::exp(ratio * static_cast<double>(i - 1));
  g[cells] = end;
  return g;
}

inline std::vector<double> uniform_grid(double end, std::size_t cells) {
  if (!(end > 0.0) || cells < 1) throw std::invalid_argument("uniform_grid: bad arguments");
  std::vector<double> g(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) g[i] = end * static_cast<double>(i) / static_cast<double>(cells);
  g[cells] = end;
  return g;
}

/// One point of the composite rule: cell index, local coordinate theta in
/// [0,1], abscissa s and weight.
struct QuadratureNode {
  std::size_t cell;
  double theta;
  double s;
  double weight;
};

/// Composite trapezoid nodes over every cell of `grid`. Sub-cell endpoints on
/// shared cell boundaries appear once per adjacent cell.
inline std::vector<QuadratureNode> quadrature_nodes(std::span<const double> grid, const QuadratureSpec& quad) {
  if (quad.refinement < 1) throw std::invalid_argument("quadrature refinement must be >= 1");
  const auto r = static_cast<std::size_t>(quad.refinement);
  std::vector<QuadratureNode> nodes;
  nodes.reserve((grid.size() - 1) * (r + 1));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    for (std::size_t k = 0; k <= r; ++k) {
      const double theta = static_cast<double>(k) / static_cast<double>(r);
      const double end_factor = (k == 0 || k == r) ? 0.5 : 1.0;
      nodes.push_back({i, theta, grid[i] + theta * h, end_factor * h / static_cast<double>(r)});
    }
  }
  return nodes;
}

/// Integral of f(s, u(s), u'(s)) for the piecewise-linear interpolant of
/// `values` on `grid`; u' is the cell-wise difference quotient.
template <class Integrand>
double integrate_piecewise_linear(std::span<const double> grid, std::span<const double> values, Integrand&& f,
                                  const QuadratureSpec& quad = {}) {
  if (values.size() != grid.size()) throw std::invalid_argument("profile is not aligned with the grid");
  if (quad.refinement < 1) throw std::invalid_argument("quadrature refinement must be >= 1");
  const auto r = static_cast<std::size_t>(quad.refinement);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    const double du = (values[i + 1] - values[i]) / h;
    double cell = 0.0;
    for (std::size_t k = 0; k <= r; ++k) {
      const double theta = static_cast<double>(k) / static_cast<double>(r);
      const double end_factor = (k == 0 || k == r) ? 0.5 : 1.0;
      const double s = grid[i] + theta * h;
      const double u = (1.0 - theta) * values[i] + theta * values[i + 1];
      cell += end_factor * f(s, u, du);
    }
    total += cell * h / static_cast<double>(r);
  }
  return total;
}

/// Piecewise-linear interpolation; zero beyond the last node.
inline double interpolate(std::span<const double> grid, std::span<const double> values, double s) {
  if (s <= grid.front()) return values.front();
  if (s >= grid.back()) return s == grid.back() ? values.back() : 0.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), s);
  const auto i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double theta = (s - grid[i]) / (grid[i + 1] - grid[i]);
  return (1.0 - theta) * values[i] + theta * values[i + 1];
}

}  // namespace randers
