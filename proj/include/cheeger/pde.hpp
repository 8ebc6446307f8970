#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cheeger/field.hpp"
#include "cheeger/linalg.hpp"

namespace cheeger {

inline constexpr double kDefaultTorsionTol = 1e-10;
inline constexpr double kDefaultEigenTol = 1e-8;

struct TorsionSolution {
  ScalarField w;
  double compliance = 0.0;  // C = h^N * sum(w)
  double sup_norm = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct EigenResult {
  double lambda1 = 0.0;
  ScalarField u;  // h^N * sum(u^2) = 1, u >= 0
  int iterations = 0;
  double residual = 0.0;
};

/// Solves L w = 1 on the active nodes (w = 0 elsewhere) and returns the
/// torsion function with its compliance.
inline TorsionSolution solve_torsion(const CellSet& set, double tol = kDefaultTorsionTol,
                                     const ScalarField* warm_start = nullptr) {
  if (set.empty()) throw InvalidArgument("empty domain");
  detail::require(tol > 0.0, "torsion tolerance must be positive");
  const ActiveSystem system(set);
  const std::vector<double> rhs(system.size(), 1.0);
  std::vector<double> x = warm_start ? system.gather(warm_start->values)
                                     : std::vector<double>(system.size(), 0.0);
  const auto cg = conjugate_gradient(system, rhs, x, tol, default_iteration_cap(system.size()));
  if (!cg.converged) {
    throw SolverError("torsion solve hit the iteration cap (residual " +
                          detail::format_real(cg.residual) + ")",
                      cg.residual);
  }
  TorsionSolution out;
  out.w = ScalarField(set.grid_ptr(), system.scatter(x));
  double sum = 0.0;
  for (double& value : out.w.values) {
    value = std::max(0.0, value);
    sum += value;
    out.sup_norm = std::max(out.sup_norm, value);
  }
  out.compliance = set.grid().cell_volume() * sum;
  out.iterations = cg.iterations;
  out.residual = cg.residual;
  return out;
}

/// Smallest Dirichlet eigenvalue of L on the active nodes by inverse power
/// iteration (inner solves by conjugate gradient). Stops when the Rayleigh
/// quotient changes by at most tol relative.
inline EigenResult solve_eigen(const CellSet& set, double tol = kDefaultEigenTol,
                               int max_outer = 1000) {
  if (set.empty()) throw InvalidArgument("empty domain");
  detail::require(tol > 0.0, "eigen tolerance must be positive");
  const ActiveSystem system(set);
  const std::size_t n = system.size();
  const double inner_tol = std::min(1e-11, 1e-3 * tol);
  const int cap = default_iteration_cap(n);

  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n, 0.0);
  double lambda = std::numeric_limits<double>::infinity();
  EigenResult out;
  bool done = false;
  for (int it = 1; it <= max_outer; ++it) {
    if (std::isfinite(lambda)) {
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / lambda;
    }
    const auto cg = conjugate_gradient(system, x, y, inner_tol, cap);
    if (!cg.converged) {
      throw SolverError("eigen inner solve hit the iteration cap (residual " +
                            detail::format_real(cg.residual) + ")",
                        cg.residual);
    }
    const double yy = detail::dot(y, y);
    const double next = detail::dot(x, y) / yy;
    const double inv_norm = 1.0 / std::sqrt(yy);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] * inv_norm;
    out.iterations = it;
    const bool settled = std::abs(next - lambda) <= tol * next;
    lambda = next;
    if (settled) {
      done = true;
      break;
    }
  }
  if (!done) throw SolverError("eigen iteration hit the outer iteration cap");

  double sum = 0.0;
  for (double xi : x) sum += xi;
  if (sum < 0.0) {
    for (double& xi : x) xi = -xi;
  }
  for (double& xi : x) xi = std::max(0.0, xi);

  std::vector<double> lx(n);
  system.apply(x, lx);
  double res = 0.0, xx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res += (lx[i] - lambda * x[i]) * (lx[i] - lambda * x[i]);
    xx += x[i] * x[i];
  }
  const double scale = 1.0 / std::sqrt(set.grid().cell_volume() * xx);
  for (double& xi : x) xi *= scale;

  out.lambda1 = lambda;
  out.u = ScalarField(set.grid_ptr(), system.scatter(x));
  out.residual = std::sqrt(res / xx) / lambda;
  return out;
}

namespace detail {

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Nodes of the open ball B_R(x0); throws unless the ball and its first
/// outside node layer lie in D.
inline CellSet ball_nodes_inside(const GridPtr& grid, const Point& x0, double radius) {
  const Grid& g = *grid;
  detail::require(radius > 0.0, "ball radius must be positive");
  for (int a = 0; a < g.dim(); ++a) {
    const double lo = g.origin()[a];
    const double hi = lo + (g.shape()[a] - 1) * g.h();
    if (x0[a] - radius - g.h() < lo || x0[a] + radius + g.h() > hi) {
      throw InvalidArgument("ball is not contained in D");
    }
  }
  std::vector<std::uint8_t> active(g.size(), 0);
  std::size_t count = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double r = distance(g.coords(n), x0, g.dim());
    if (r <= radius + g.h() && !g.inside(n)) {
      throw InvalidArgument("ball is not contained in D");
    }
    if (r < radius) {
      active[n] = 1;
      ++count;
    }
  }
  detail::require(count > 0, "ball contains no grid nodes");
  return CellSet(grid, std::move(active));
}

}  // namespace detail

/// Replaces v inside B_R(x0) by the solution of L vhat = 1 whose Dirichlet
/// data is v on the first node layer outside the ball; v is kept elsewhere.
inline ScalarField solve_harmonic_replacement(const ScalarField& v, const Point& x0, double radius,
                                              double tol = kDefaultTorsionTol) {
  detail::require(tol > 0.0, "replacement tolerance must be positive");
  const CellSet ball = detail::ball_nodes_inside(v.grid, x0, radius);
  const Grid& g = *v.grid;
  const ActiveSystem system(ball);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  std::vector<double> rhs(system.size(), 1.0);
  for (std::size_t i = 0; i < system.size(); ++i) {
    const auto n = system.nodes()[i];
    for (int d = 0; d < g.num_directions(); ++d) {
      const auto m = g.neighbor(n, d);
      if (!ball.active(m)) rhs[i] += inv_h2 * v.values[m];
    }
  }
  std::vector<double> x = system.gather(v.values);
  const auto cg = conjugate_gradient(system, rhs, x, tol, default_iteration_cap(system.size()));
  if (!cg.converged) {
    throw SolverError("replacement solve hit the iteration cap", cg.residual);
  }
  ScalarField out = v;
  for (std::size_t i = 0; i < system.size(); ++i) out.values[system.nodes()[i]] = x[i];
  return out;
}

}  // namespace cheeger
