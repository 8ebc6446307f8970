#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cheeger/functional.hpp"

namespace cheeger {

// ---------------------------------------------------------------------------
// Projected gradient descent on the relaxed functional F(v)
// ---------------------------------------------------------------------------

struct RelaxedOptions {
  int max_iters = 20000;         // per annealing phase
  int phases = 6;                // epsilon is halved after each phase
  double epsilon_rel = 0.25;     // initial epsilon; fields are kept at sup(v) = 1
  double epsilon_floor_h = 1.5;  // epsilon >= this * h * sqrt(E/M)
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 10;
  int stall_window = 50;
  double stall_tol = 1e-8;
  double noise = 0.0;            // multiplicative start noise amplitude
  std::uint64_t seed = 0;
  bool project_support = true;   // finish with the torsion function of the support
  double support_cut = 0.25;     // support level for the projection, in units of epsilon
  double torsion_tol = kDefaultTorsionTol;
};

struct HistoryEntry {
  int iteration = 0;
  int phase = 0;
  double epsilon = 0.0;
  double value = 0.0;
  double measure = 0.0;
  double step = 0.0;
};

struct RelaxedRun {
  ScalarField v_star;         // minimiser; torsion function of its support when projected
  ScalarField v_relaxed;      // raw descent iterate before projection
  std::vector<HistoryEntry> history;
  bool converged = false;
  FunctionalParams params;
  double final_epsilon = 0.0;  // relative to sup(v)
  double value = 0.0;         // exact-measure F(v_star)
  int iterations = 0;

  /// Final epsilon in the units of v_star.
  double support_epsilon() const { return final_epsilon * sup_norm(v_star); }
};

namespace detail {

/// Inverse Lipschitz bound of the smooth part of the L2 gradient:
/// (2 M^alpha / I^2) * lambda_max(L) <= (2 M^alpha / I^2) * 4N / h^2.
inline double safe_step(const ScalarField& v, const FunctionalParams& p) {
  const auto f = evaluate_v(v, p, MeasureVariant::smoothed);
  const double h = v.grid->h();
  return f.integral * f.integral * h * h /
         (8.0 * v.grid->dim() * std::pow(f.measure_term, p.alpha));
}

inline double l2_dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.values.size(); ++n) s += a.values[n] * b.values[n];
  return a.grid->cell_volume() * s;
}

/// E/I^2 is scale free but M_eps is not, so epsilon is measured against
/// sup(v): the descent runs on the slice sup(v) = 1. Rescales v onto it and
/// returns F(v), or +inf for the zero field.
inline double normalize_or_inf(ScalarField& v, const FunctionalParams& params) {
  const double m = sup_norm(v);
  if (!(m > 0.0)) return std::numeric_limits<double>::infinity();
  for (double& x : v.values) x /= m;
  return evaluate_v(v, params, MeasureVariant::smoothed).value;
}

/// L2 gradient with its component along v removed.
inline ScalarField tangential_gradient(const ScalarField& v, const FunctionalParams& params) {
  ScalarField g = gradient_v(v, params);
  const double radial = l2_dot(g, v) / l2_dot(v, v);
  for (std::size_t n = 0; n < g.values.size(); ++n) g.values[n] -= radial * v.values[n];
  return g;
}

}  // namespace detail

/// Minimises F(v) = M_eps(v)^alpha E(v) / I(v)^2 over v >= 0 on D by projected
/// gradient descent, v <- max(v - s g, 0), with Armijo backtracking and
/// Barzilai-Borwein trial steps. Epsilon is annealed by halving per phase.
/// Starts from the torsion function of D.
inline RelaxedRun minimize_relaxed(const GridPtr& grid, const FunctionalParams& params,
                                   const RelaxedOptions& opts = {}) {
  detail::require(params.problem == Problem::compliance,
                  "the relaxed formulation is defined for the compliance cost");
  detail::check_alpha(params.alpha, Problem::compliance, grid->dim());
  detail::require(opts.max_iters >= 1, "max_iters must be >= 1");
  detail::require(opts.phases >= 1, "phases must be >= 1");

  RelaxedRun run;
  run.params = params;
  ScalarField v = solve_torsion(full_set(grid), opts.torsion_tol).w;
  if (opts.noise > 0.0) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t n = 0; n < v.values.size(); ++n) {
      if (grid->inside(n)) v.values[n] *= 1.0 + opts.noise * unit(rng);
    }
  }

  const double h = grid->h();
  const double start_scale = sup_norm(v);
  for (double& x : v.values) x /= start_scale;
  double epsilon = opts.epsilon_rel;
  int total_iterations = 0;
  bool last_phase_converged = false;
  ScalarField trial(grid);

  for (int phase = 0; phase < opts.phases; ++phase) {
    if (phase > 0) {
      const auto f = evaluate_v(v, params.with_epsilon(epsilon), MeasureVariant::exact);
      const double floor =
          opts.epsilon_floor_h * h * std::sqrt(params.alpha * f.energy / f.measure_term);
      epsilon = std::max(0.5 * epsilon, floor);
    }
    const auto p = params.with_epsilon(epsilon);
    double value = evaluate_v(v, p).value;
    ScalarField g = detail::tangential_gradient(v, p);
    double step = sup_norm(v) / std::max(sup_norm(g), std::numeric_limits<double>::min());
    std::vector<double> phase_values{value};
    last_phase_converged = false;

    for (int it = 1; it <= opts.max_iters; ++it) {
      bool accepted = false;
      double trial_value = value;
      const int attempts = 2 * (opts.max_backtracks + 1);
      for (int bt = 0; bt < attempts; ++bt) {
        if (bt == opts.max_backtracks + 1) step = std::min(step, detail::safe_step(v, p));
        for (std::size_t n = 0; n < v.values.size(); ++n) {
          trial.values[n] = grid->inside(n) ? std::max(0.0, v.values[n] - step * g.values[n]) : 0.0;
        }
        trial_value = detail::normalize_or_inf(trial, p);
        if (std::isnan(trial_value)) {
          throw SolverError("non-finite value at iteration " + std::to_string(total_iterations + it));
        }
        double moved = 0.0;
        for (std::size_t n = 0; n < v.values.size(); ++n) {
          moved += (trial.values[n] - v.values[n]) * (trial.values[n] - v.values[n]);
        }
        moved *= grid->cell_volume();
        if (trial_value <= value - opts.armijo * moved / step && trial_value < value) {
          accepted = true;
          break;
        }
        step *= opts.backtrack;
      }
      if (!accepted) {
        // No descent along the projected arc: stationary to working precision.
        last_phase_converged = true;
        total_iterations += it - 1;
        break;
      }

      ScalarField g_next = detail::tangential_gradient(trial, p);
      double ss = 0.0, sy = 0.0;
      for (std::size_t n = 0; n < v.values.size(); ++n) {
        const double ds = trial.values[n] - v.values[n];
        const double dy = g_next.values[n] - g.values[n];
        ss += ds * ds;
        sy += ds * dy;
      }
      const double used_step = step;
      step = sy > 0.0 ? ss / sy : 2.0 * step;

      std::swap(v.values, trial.values);
      g = std::move(g_next);
      value = trial_value;
      phase_values.push_back(value);
      run.history.push_back({total_iterations + it, phase, epsilon, value,
                             relaxed_measure(v, p, MeasureVariant::exact), used_step});

      const int window = opts.stall_window;
      if (static_cast<int>(phase_values.size()) > window) {
        const double before = phase_values[phase_values.size() - 1 - window];
        if (before - value <= opts.stall_tol * std::abs(value)) {
          last_phase_converged = true;
          total_iterations += it;
          break;
        }
      }
      if (it == opts.max_iters) total_iterations += it;
    }
    if (support(v).empty()) {
      throw SolverError("zero field collapse: the support vanished during descent");
    }
  }

  run.converged = last_phase_converged;
  run.final_epsilon = epsilon;
  run.iterations = total_iterations;
  run.v_relaxed = v;
  if (opts.project_support) {
    CellSet omega = support(v, opts.support_cut * epsilon);
    if (omega.empty()) omega = support(v);
    run.v_star = solve_torsion(omega, opts.torsion_tol).w;
  } else {
    run.v_star = v;
  }
  run.value = evaluate_v(run.v_star, params, MeasureVariant::exact).value;
  return run;
}

/// Positivity set {v_star > tau} of a relaxed run.
inline CellSet extract_support(const RelaxedRun& run, double tau = 0.0) {
  detail::require(tau >= 0.0, "tau must be >= 0");
  CellSet s = support(run.v_star, tau);
  if (s.empty()) throw InvalidArgument("extracted support is empty");
  return s;
}

// ---------------------------------------------------------------------------
// Combinatorial search over cell sets
// ---------------------------------------------------------------------------

struct SearchOptions {
  bool first_improvement = false;
  int max_flips = 1000000;
  int restarts = 0;            // extra runs, alternating random sets and kicked incumbents
  double restart_density = 0.7;  // fraction of D active in a random start
  std::uint64_t seed = 0;
  int threads = 1;
  double tol = 0.0;            // solver tolerance; 0 picks the mode default
  double min_gain = 1e-12;     // relative improvement needed to accept a flip
};

struct FlipMove {
  std::size_t node = 0;
  bool added = false;
  double value = 0.0;  // cost after the flip
};

struct SearchRun {
  CellSet omega_star;
  double value = 0.0;
  int flips = 0;
  int restarts = 0;
  std::vector<FlipMove> trace;
};

namespace detail {

inline double mode_tolerance(CostMode mode, double tol) {
  if (tol > 0.0) return tol;
  return mode == CostMode::set_eigen ? kDefaultEigenTol : kDefaultTorsionTol;
}

/// Set cost of the given mode. The torsion warm start only changes the
/// starting iterate of the solve.
inline double set_cost(const CellSet& set, const FunctionalParams& params, CostMode mode,
                       double tol, const ScalarField* warm = nullptr) {
  if (set.empty()) return std::numeric_limits<double>::infinity();
  if (mode == CostMode::set_eigen) return evaluate_set_eigen(set, params, tol).value;
  return evaluate_set_compliance(set, solve_torsion(set, tol, warm), params).value;
}

inline void require_set_mode(CostMode mode, const FunctionalParams& params, int dim) {
  require(mode != CostMode::v_relaxed, "search needs a set mode (set_compliance or set_eigen)");
  require((mode == CostMode::set_eigen) == (params.problem == Problem::eigen),
          "cost mode does not match the problem of the parameters");
  check_alpha(params.alpha, mode == CostMode::set_eigen ? Problem::eigen : Problem::compliance,
              dim);
}

/// Nodes whose flip keeps the set next to its current boundary: inactive
/// inside-D nodes with an active neighbour, and active nodes with an
/// inactive neighbour (inside or outside D). Row-major order.
inline std::vector<std::size_t> flip_candidates(const CellSet& set) {
  const Grid& g = set.grid();
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.inside(n)) continue;
    const bool on = set.active(n);
    if (on && set.count() == 1) continue;
    for (int d = 0; d < g.num_directions(); ++d) {
      if (set.active(g.neighbor(n, d)) != on) {
        out.push_back(n);
        break;
      }
    }
  }
  return out;
}

inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += workers) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Descent {
  CellSet set;
  double value;
  int flips = 0;
  std::vector<FlipMove> trace;
};

inline Descent descend(CellSet set, const FunctionalParams& params, CostMode mode,
                       const SearchOptions& opts, double tol) {
  std::optional<ScalarField> warm;
  auto refresh = [&](const CellSet& s) {
    if (mode == CostMode::set_compliance) warm = solve_torsion(s, tol).w;
  };
  refresh(set);
  Descent out{set, set_cost(set, params, mode, tol), 0, {}};
  while (out.flips < opts.max_flips) {
    const auto candidates = flip_candidates(out.set);
    std::vector<double> values(candidates.size(), std::numeric_limits<double>::infinity());
    const ScalarField* base = warm ? &*warm : nullptr;
    auto evaluate = [&](std::size_t i) {
      values[i] = set_cost(out.set.flipped(candidates[i]), params, mode, tol, base);
    };
    const double bar = out.value - opts.min_gain * std::abs(out.value);
    std::size_t best = candidates.size();
    if (opts.first_improvement) {
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        evaluate(i);
        if (values[i] < bar) {
          best = i;
          break;
        }
      }
    } else {
      parallel_for(candidates.size(), opts.threads, evaluate);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (values[i] < bar && (best == candidates.size() || values[i] < values[best])) best = i;
      }
    }
    if (best == candidates.size()) break;
    const auto node = candidates[best];
    out.set = out.set.flipped(node);
    out.value = values[best];
    out.trace.push_back({node, out.set.active(node), out.value});
    ++out.flips;
    refresh(out.set);
  }
  return out;
}

}  // namespace detail

/// Single-node flip descent on the set cost: best improvement by default,
/// lowest node index on ties. Optional seeded restarts alternate between
/// random sets and perturbations of the incumbent; the best local optimum wins (earliest run on ties). The reported value
/// is recomputed by a cold solve on the final set.
inline SearchRun local_search(const GridPtr& grid, const FunctionalParams& params, CostMode mode,
                              const CellSet& init, const SearchOptions& opts = {}) {
  detail::require_set_mode(mode, params, grid->dim());
  detail::require(!init.empty(), "initial set must be non-empty");
  detail::require(init.grid_ptr() == grid, "initial set lives on a different grid");
  detail::require(opts.restarts >= 0, "restarts must be >= 0");
  const double tol = detail::mode_tolerance(mode, opts.tol);

  auto best = detail::descend(init, params, mode, opts, tol);
  std::mt19937_64 rng(opts.seed);
  std::bernoulli_distribution coin(opts.restart_density);
  std::vector<std::size_t> inside_nodes;
  for (std::size_t n = 0; n < grid->size(); ++n) {
    if (grid->inside(n)) inside_nodes.push_back(n);
  }
  std::uniform_int_distribution<std::size_t> pick(0, inside_nodes.size() - 1);
  for (int r = 0; r < opts.restarts; ++r) {
    std::vector<std::uint8_t> active;
    if (r % 2 == 0) {
      // fresh random set
      active.assign(grid->size(), 0);
      for (auto n : inside_nodes) active[n] = coin(rng);
    } else {
      // kick: toggle a few random nodes of the incumbent
      active = best.set.mask();
      const int kicks = 2 + r % 3;
      for (int k = 0; k < kicks; ++k) {
        const auto n = inside_nodes[pick(rng)];
        active[n] = !active[n];
      }
    }
    CellSet start(grid, std::move(active));
    if (start.empty()) continue;
    auto run = detail::descend(std::move(start), params, mode, opts, tol);
    if (run.value < best.value) best = std::move(run);
  }

  SearchRun out{best.set, detail::set_cost(best.set, params, mode, tol), best.flips,
                opts.restarts, std::move(best.trace)};
  return out;
}

inline constexpr std::size_t kOracleMaxNodes = 20;

/// Exhaustive minimiser over all non-empty subsets of D (at most 20 nodes).
/// Bit i of the mask is the i-th inside node in row-major order; the lowest
/// mask wins ties.
inline SearchRun brute_force_oracle(const GridPtr& grid, const FunctionalParams& params,
                                    CostMode mode, double tol = 0.0) {
  detail::require_set_mode(mode, params, grid->dim());
  const std::size_t n = grid->inside_count();
  if (n > kOracleMaxNodes) {
    throw InvalidArgument("oracle refuses " + std::to_string(n) +
                          " inside nodes (at most 20 are enumerated)");
  }
  detail::require(n > 0, "empty domain");
  tol = detail::mode_tolerance(mode, tol);
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < grid->size(); ++k) {
    if (grid->inside(k)) nodes.push_back(k);
  }
  std::uint32_t best_mask = 0;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> active(grid->size(), 0);
  for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n); ++mask) {
    for (std::size_t b = 0; b < n; ++b) active[nodes[b]] = (mask >> b) & 1u;
    const double value = detail::set_cost(CellSet(grid, active), params, mode, tol);
    if (value < best_value) {
      best_value = value;
      best_mask = mask;
    }
  }
  for (std::size_t b = 0; b < n; ++b) active[nodes[b]] = (best_mask >> b) & 1u;
  SearchRun out{CellSet(grid, active), best_value, 0, 0, {}};
  return out;
}

}  // namespace cheeger
