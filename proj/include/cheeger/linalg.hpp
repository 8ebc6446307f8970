#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cheeger/grid.hpp"

namespace cheeger {

/// The negative Laplacian L restricted to the active nodes of a cell set,
/// stored compactly. Rows are active nodes in row-major order; neighbours
/// that are not active carry homogeneous Dirichlet data. Walls of D sit at
/// the recorded fraction theta of the spacing, which only changes the
/// diagonal, so L stays symmetric positive definite.
class ActiveSystem {
 public:
  explicit ActiveSystem(const CellSet& set) : grid_(set.grid_ptr()) {
    const Grid& g = *grid_;
    const int dirs = g.num_directions();
    inv_h2_ = 1.0 / (g.h() * g.h());
    compact_.assign(g.size(), -1);
    nodes_.reserve(set.count());
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (set.active(n)) {
        compact_[n] = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(n);
      }
    }
    neighbors_.assign(nodes_.size() * dirs, -1);
    diag_.assign(nodes_.size(), 0.0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto n = nodes_[i];
      double diag = 0.0;
      for (int d = 0; d < dirs; ++d) {
        const auto m = g.neighbor(n, d);
        neighbors_[i * dirs + d] = compact_[m];
        diag += g.inside(m) ? 1.0 : 1.0 / g.wall_fraction(n, d);
      }
      diag_[i] = diag * inv_h2_;
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& diagonal() const noexcept { return diag_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::int32_t compact_index(std::size_t node) const noexcept { return compact_[node]; }

  void apply(std::span<const double> x, std::span<double> y) const {
    const int dirs = grid_->num_directions();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      double off = 0.0;
      const auto* nb = &neighbors_[i * dirs];
      for (int d = 0; d < dirs; ++d) {
        if (nb[d] >= 0) off += x[static_cast<std::size_t>(nb[d])];
      }
      y[i] = diag_[i] * x[i] - inv_h2_ * off;
    }
  }

  std::vector<double> gather(const std::vector<double>& full) const {
    std::vector<double> out(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) out[i] = full[nodes_[i]];
    return out;
  }

  std::vector<double> scatter(std::span<const double> compact) const {
    std::vector<double> out(grid_->size(), 0.0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) out[nodes_[i]] = compact[i];
    return out;
  }

 private:
  GridPtr grid_;
  double inv_h2_ = 0.0;
  std::vector<std::size_t> nodes_;
  std::vector<std::int32_t> compact_;
  std::vector<std::int32_t> neighbors_;
  std::vector<double> diag_;
};

struct CgResult {
  int iterations = 0;
  double residual = 0.0;  // relative: |b - A x| / |b|
  bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Jacobi-preconditioned conjugate gradient. `x` holds the initial guess on
/// entry and the iterate on exit. Stops at relative residual <= tol.
inline CgResult conjugate_gradient(const ActiveSystem& a, std::span<const double> b,
                                   std::vector<double>& x, double tol, int max_iterations) {
  const std::size_t n = a.size();
  CgResult result;
  x.resize(n, 0.0);
  const double b_norm = std::sqrt(detail::dot(b, b));
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    result.converged = true;
    return result;
  }
  const auto& diag = a.diagonal();
  std::vector<double> r(n), z(n), p(n), q(n);
  a.apply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double r_norm = std::sqrt(detail::dot(r, r));
  result.residual = r_norm / b_norm;
  if (result.residual <= tol) {
    result.converged = true;
    return result;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = detail::dot(r, z);
  for (int it = 1; it <= max_iterations; ++it) {
    a.apply(p, q);
    const double pq = detail::dot(p, q);
    if (!(pq > 0.0)) break;
    const double step = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * q[i];
    }
    r_norm = std::sqrt(detail::dot(r, r));
    result.iterations = it;
    result.residual = r_norm / b_norm;
    if (result.residual <= tol) {
      result.converged = true;
      return result;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_next = detail::dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return result;
}

/// Iteration cap used by the solvers: 50 * sqrt(number of unknowns).
inline int default_iteration_cap(std::size_t unknowns) {
  return static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(unknowns))));
}

}  // namespace cheeger
