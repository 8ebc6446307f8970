#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "cheeger/field.hpp"
#include "cheeger/pde.hpp"

namespace cheeger {

enum class Problem { compliance, eigen };

inline const char* to_string(Problem p) { return p == Problem::compliance ? "compliance" : "eigen"; }

/// Scale-invariance threshold of |Omega|^alpha J(Omega): 1+2/N for 1/C,
/// 2/N for lambda_1. Admissible exponents lie strictly below it.
inline double alpha_threshold(Problem problem, int dim) {
  return problem == Problem::compliance ? 1.0 + 2.0 / dim : 2.0 / dim;
}

namespace detail {

inline void check_alpha(double alpha, Problem problem, int dim) {
  require(dim == 2 || dim == 3, "dimension N must be 2 or 3");
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  const double limit = alpha_threshold(problem, dim);
  if (!(alpha < limit)) {
    char buf[96];
    if (problem == Problem::compliance) {
      std::snprintf(buf, sizeof buf, "alpha must be < 1+2/N = %g", limit);
    } else {
      std::snprintf(buf, sizeof buf, "alpha must be < 2/N = %g", limit);
    }
    throw InvalidArgument(buf);
  }
}

}  // namespace detail

/// Exponent and smoothing parameters of the rescaled cost. Construction
/// rejects exponents at or above the scale-invariance threshold.
struct FunctionalParams {
  double alpha = 0.0;
  double epsilon = 1e-3;  // width of the measure ramp, in units of v
  double tau = 0.0;       // support cutoff for the exact measure
  Problem problem = Problem::compliance;
  int dim = 2;

  static FunctionalParams make(Problem problem, double alpha, int dim, double epsilon = 1e-3,
                               double tau = 0.0) {
    detail::check_alpha(alpha, problem, dim);
    detail::require(epsilon > 0.0, "epsilon must be positive");
    detail::require(tau >= 0.0, "tau must be >= 0");
    return FunctionalParams{alpha, epsilon, tau, problem, dim};
  }
  static FunctionalParams compliance(double alpha, int dim, double epsilon = 1e-3,
                                     double tau = 0.0) {
    return make(Problem::compliance, alpha, dim, epsilon, tau);
  }
  static FunctionalParams eigen(double alpha, int dim, double epsilon = 1e-3, double tau = 0.0) {
    return make(Problem::eigen, alpha, dim, epsilon, tau);
  }

  FunctionalParams with_epsilon(double eps) const {
    detail::require(eps > 0.0, "epsilon must be positive");
    FunctionalParams p = *this;
    p.epsilon = eps;
    return p;
  }
};

enum class CostMode { set_compliance, v_relaxed, set_eigen };
enum class MeasureVariant { smoothed, exact };

struct FunctionalValue {
  double measure_term = 0.0;  // |Omega|, or M_eps(v) / #{v > tau} h^N
  double energy = 0.0;        // E(v), C(Omega) or lambda_1(Omega)
  double integral = 0.0;      // I(v); compliance in set mode
  double value = 0.0;
  CostMode mode = CostMode::set_compliance;
  MeasureVariant variant = MeasureVariant::exact;
};

/// |Omega|^alpha / C(Omega) from an already computed torsion solution.
inline FunctionalValue evaluate_set_compliance(const CellSet& set, const TorsionSolution& torsion,
                                               const FunctionalParams& params) {
  FunctionalValue out;
  out.mode = CostMode::set_compliance;
  out.measure_term = measure(set);
  out.energy = torsion.compliance;
  out.integral = torsion.compliance;
  out.value = std::pow(out.measure_term, params.alpha) / torsion.compliance;
  return out;
}

inline FunctionalValue evaluate_set_compliance(const CellSet& set, const FunctionalParams& params,
                                               double tol = kDefaultTorsionTol) {
  if (set.empty()) throw InvalidArgument("empty domain: the cost is +infinity");
  return evaluate_set_compliance(set, solve_torsion(set, tol), params);
}

/// |Omega|^alpha * lambda_1(Omega).
inline FunctionalValue evaluate_set_eigen(const CellSet& set, const FunctionalParams& params,
                                          double tol = kDefaultEigenTol) {
  if (set.empty()) throw InvalidArgument("empty domain: the cost is +infinity");
  detail::check_alpha(params.alpha, Problem::eigen, set.grid().dim());
  const auto eig = solve_eigen(set, tol);
  FunctionalValue out;
  out.mode = CostMode::set_eigen;
  out.measure_term = measure(set);
  out.energy = eig.lambda1;
  out.value = std::pow(out.measure_term, params.alpha) * eig.lambda1;
  return out;
}

namespace detail {

inline void require_nonnegative_nonzero(const ScalarField& v) {
  bool any = false;
  for (std::size_t n = 0; n < v.values.size(); ++n) {
    if (!v.grid->inside(n)) continue;
    require(v.values[n] >= 0.0, "field must be nonnegative");
    any = any || v.values[n] > 0.0;
  }
  require(any, "zero field");
}

/// Piecewise-linear measure ramp H(s) = min(1, s/eps).
inline double ramp(double s, double eps) { return s >= eps ? 1.0 : s / eps; }

}  // namespace detail

/// R_C(v) = I(v)^2 / E(v).
inline double rc_quotient(const ScalarField& v) {
  detail::require_nonnegative_nonzero(v);
  return std::pow(integral(v), 2) / dirichlet_energy(v);
}

/// Smoothed measure M_eps(v) = h^N sum H(v), or exact h^N #{v > tau}.
inline double relaxed_measure(const ScalarField& v, const FunctionalParams& params,
                              MeasureVariant variant) {
  double s = 0.0;
  for (std::size_t n = 0; n < v.values.size(); ++n) {
    if (!v.grid->inside(n)) continue;
    const double x = v.values[n];
    if (variant == MeasureVariant::smoothed) {
      s += detail::ramp(x, params.epsilon);
    } else {
      s += x > params.tau ? 1.0 : 0.0;
    }
  }
  return v.grid->cell_volume() * s;
}

/// F(v) = M^alpha E(v) / I(v)^2 on the cone of nonnegative fields.
inline FunctionalValue evaluate_v(const ScalarField& v, const FunctionalParams& params,
                                  MeasureVariant variant = MeasureVariant::smoothed) {
  detail::require_nonnegative_nonzero(v);
  FunctionalValue out;
  out.mode = CostMode::v_relaxed;
  out.variant = variant;
  out.measure_term = relaxed_measure(v, params, variant);
  out.energy = dirichlet_energy(v);
  out.integral = integral(v);
  out.value = std::pow(out.measure_term, params.alpha) * out.energy / (out.integral * out.integral);
  return out;
}

/// L2 gradient of the smoothed F: the directional derivative along phi is
/// h^N * sum(g * phi). On the ramp the one-sided derivative from above is
/// used, H'(s) = 1/eps for 0 <= s < eps, so that g is the right derivative
/// at v = 0, the relevant one on the cone v >= 0.
inline ScalarField gradient_v(const ScalarField& v, const FunctionalParams& params) {
  const auto f = evaluate_v(v, params, MeasureVariant::smoothed);
  const double m = f.measure_term, e = f.energy, i = f.integral;
  detail::require(m > 0.0 && i > 0.0, "gradient needs positive measure and integral");
  const double m_alpha = std::pow(m, params.alpha);
  const double c_energy = 2.0 * m_alpha / (i * i);
  const double c_measure = params.alpha == 0.0
                               ? 0.0
                               : params.alpha * std::pow(m, params.alpha - 1.0) * e / (i * i) /
                                     params.epsilon;
  const double c_integral = 2.0 * m_alpha * e / (i * i * i);

  const auto lv = apply_domain_operator(v);
  ScalarField g(v.grid);
  for (std::size_t n = 0; n < g.values.size(); ++n) {
    if (!v.grid->inside(n)) continue;
    const double x = v.values[n];
    g.values[n] = c_energy * lv[n] + (x < params.epsilon ? c_measure : 0.0) - c_integral;
  }
  return g;
}

}  // namespace cheeger
