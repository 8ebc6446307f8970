#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cheeger/grid.hpp"

namespace cheeger {

/// Node-indexed real values on a grid. Values outside D are kept at zero.
struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
  ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    detail::require(values.size() == grid->size(), "field size does not match grid");
  }

  double operator[](std::size_t n) const { return values[n]; }
  double& operator[](std::size_t n) { return values[n]; }
};

inline double sup_norm(const ScalarField& v) {
  double m = 0.0;
  for (double x : v.values) m = std::max(m, std::abs(x));
  return m;
}

inline double min_value(const ScalarField& v) {
  double m = 0.0;
  for (std::size_t n = 0; n < v.values.size(); ++n) {
    if (v.grid->inside(n)) m = std::min(m, v.values[n]);
  }
  return m;
}

/// I(v) = h^N * sum of v over D.
inline double integral(const ScalarField& v) {
  double s = 0.0;
  for (std::size_t n = 0; n < v.values.size(); ++n) {
    if (v.grid->inside(n)) s += v.values[n];
  }
  return v.grid->cell_volume() * s;
}

/// E(v) = h^N * sum over lattice edges of ((v_a - v_b)/h)^2, with v = 0
/// outside D and wall edges shortened to theta*h. Equals h^N * v.L_D v.
inline double dirichlet_energy(const ScalarField& v) {
  const Grid& g = *v.grid;
  const double inv_h2 = 1.0 / (g.h() * g.h());
  double s = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.inside(n)) continue;
    const double vn = v.values[n];
    for (int d = 0; d < g.num_directions(); ++d) {
      const auto m = g.neighbor(n, d);
      if (g.inside(m)) {
        if (d % 2 == 1) {
          const double diff = vn - v.values[m];
          s += diff * diff;
        }
      } else {
        s += vn * vn / g.wall_fraction(n, d);
      }
    }
  }
  return g.cell_volume() * inv_h2 * s;
}

/// Applies the Dirichlet negative Laplacian of D (L_D) to v; zero outside D.
inline std::vector<double> apply_domain_operator(const ScalarField& v) {
  const Grid& g = *v.grid;
  const double inv_h2 = 1.0 / (g.h() * g.h());
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.inside(n)) continue;
    double diag = 0.0, off = 0.0;
    for (int d = 0; d < g.num_directions(); ++d) {
      const auto m = g.neighbor(n, d);
      if (g.inside(m)) {
        diag += 1.0;
        off += v.values[m];
      } else {
        diag += 1.0 / g.wall_fraction(n, d);
      }
    }
    out[n] = inv_h2 * (diag * v.values[n] - off);
  }
  return out;
}

/// The discrete Laplacian Delta_h v = -L_D v at every node (zero outside D).
inline ScalarField discrete_laplacian(const ScalarField& v) {
  auto lv = apply_domain_operator(v);
  for (double& x : lv) x = -x;
  return ScalarField(v.grid, std::move(lv));
}

inline ScalarField scaled(const ScalarField& v, double c) {
  ScalarField out = v;
  for (double& x : out.values) x *= c;
  return out;
}

/// Support {v > tau} as a cell set.
inline CellSet support(const ScalarField& v, double tau = 0.0) {
  std::vector<std::uint8_t> active(v.grid->size(), 0);
  for (std::size_t n = 0; n < active.size(); ++n) {
    active[n] = v.grid->inside(n) && v.values[n] > tau;
  }
  return CellSet(v.grid, std::move(active));
}

}  // namespace cheeger
