#pragma once

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cheeger/config.hpp"
#include "cheeger/io.hpp"
#include "cheeger/optimize.hpp"
#include "cheeger/verify.hpp"

namespace cheeger {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitSolver = 2, kExitFail = 3 };

struct SweepRow {
  double alpha = 0.0;
  double value = 0.0;
  double measure = 0.0;
  double contact_fraction = 0.0;
};

/// Outcome of one minimize run, whichever method produced it.
struct MinimizeOutcome {
  CellSet omega;
  ScalarField field;  // v_star, or the torsion/eigen function of omega
  double value = 0.0;
  std::optional<RelaxedRun> relaxed;
  std::optional<SearchRun> search;
};

namespace detail {

inline RelaxedOptions relaxed_options(const RunConfig& c) {
  RelaxedOptions o;
  o.max_iters = c.max_iters;
  o.phases = c.phases;
  o.epsilon_rel = c.epsilon;
  o.noise = c.noise;
  o.seed = c.seed;
  o.torsion_tol = c.torsion_tol;
  return o;
}

inline SearchOptions search_options(const RunConfig& c) {
  SearchOptions o;
  o.first_improvement = c.first_improvement;
  o.restarts = c.restarts;
  o.seed = c.seed;
  o.threads = c.threads;
  o.tol = c.problem == Problem::eigen ? c.eigen_tol : c.torsion_tol;
  return o;
}

inline CostMode set_mode(Problem p) {
  return p == Problem::eigen ? CostMode::set_eigen : CostMode::set_compliance;
}

inline GridPtr make_grid(const RunConfig& c) { return build_grid(c.domain, c.dim, c.resolution); }

// Ball sweeps in 2D are pixelation limited below 128 nodes per unit length.
inline double sweep_resolution(const RunConfig& c) {
  return c.dim == 2 ? std::max(c.resolution, 128.0) : c.resolution;
}

inline bool corners_inactive(const CellSet& omega) {
  const Grid& g = omega.grid();
  if (g.dim() != 2) return false;
  const int nx = g.shape()[0], ny = g.shape()[1];
  for (int j : {1, ny - 2}) {
    for (int i : {1, nx - 2}) {
      const auto n = g.index(i, j);
      if (g.inside(n) && omega.active(n)) return false;
    }
  }
  return true;
}

inline void export_field(const OutputDir& dir, const std::string& name, const ScalarField& v,
                         const CellSet& active) {
  dir.write("field_" + name + ".csv", [&](std::ostream& o) { write_field_csv(o, v, active); });
  if (v.grid->dim() == 2) {
    dir.write("field_" + name + ".pgm", [&](std::ostream& o) { write_pgm(o, v); }, true);
  }
}

inline void write_manifest(const OutputDir& dir, const RunConfig& c, const Manifest& results) {
  dir.write("manifest.txt", [&](std::ostream& o) {
    write_config(o, c);
    for (const auto& [k, v] : results.entries()) o << "result." << k << " = " << v << '\n';
  });
}

}  // namespace detail

inline MinimizeOutcome minimize(const GridPtr& grid, const RunConfig& c, double alpha) {
  const auto params = FunctionalParams::make(c.problem, alpha, c.dim);
  if (c.method == Method::relaxed) {
    auto run = minimize_relaxed(grid, params, detail::relaxed_options(c));
    MinimizeOutcome out{extract_support(run, c.tau), run.v_star, run.value, run, std::nullopt};
    return out;
  }
  auto run = local_search(grid, params, detail::set_mode(c.problem), full_set(grid),
                          detail::search_options(c));
  ScalarField field = c.problem == Problem::eigen ? solve_eigen(run.omega_star, c.eigen_tol).u
                                                  : solve_torsion(run.omega_star, c.torsion_tol).w;
  MinimizeOutcome out{run.omega_star, std::move(field), run.value, std::nullopt, run};
  return out;
}

/// Executes a resolved configuration. Writes artifacts into output_dir and
/// report blocks with verdict lines to `out`. Returns kExitOk or kExitFail;
/// module errors propagate as exceptions.
inline int run(const RunConfig& c, std::ostream& out) {
  const OutputDir dir(c.output_dir);
  Manifest m;
  int status = kExitOk;

  switch (c.command) {
    case Command::solve_torsion: {
      const auto grid = detail::make_grid(c);
      const auto set = full_set(grid);
      const auto t = solve_torsion(set, c.torsion_tol);
      m.set("inside_nodes", grid->inside_count());
      m.set("h", grid->h());
      m.set("measure", measure(set));
      m.set("compliance", t.compliance);
      m.set("sup_norm", t.sup_norm);
      m.set("iterations", t.iterations);
      m.set("residual", t.residual);
      detail::export_field(dir, "w", t.w, set);
      out << "compliance = " << detail::format_real(t.compliance) << '\n'
          << "sup_norm = " << detail::format_real(t.sup_norm) << '\n';
      break;
    }
    case Command::solve_eigen: {
      const auto grid = detail::make_grid(c);
      const auto set = full_set(grid);
      const auto e = solve_eigen(set, c.eigen_tol);
      m.set("inside_nodes", grid->inside_count());
      m.set("h", grid->h());
      m.set("measure", measure(set));
      m.set("lambda1", e.lambda1);
      m.set("iterations", e.iterations);
      m.set("residual", e.residual);
      detail::export_field(dir, "u", e.u, set);
      out << "lambda1 = " << detail::format_real(e.lambda1) << '\n';
      break;
    }
    case Command::minimize: {
      const auto grid = detail::make_grid(c);
      const auto result = minimize(grid, c, c.alpha);
      const auto params = FunctionalParams::make(c.problem, c.alpha, c.dim);
      const double full_value = c.problem == Problem::eigen
                                    ? evaluate_set_eigen(full_set(grid), params, c.eigen_tol).value
                                    : evaluate_set_compliance(full_set(grid), params, c.torsion_tol).value;
      const auto cls = classify_boundary(result.omega);
      m.set("value", result.value);
      m.set("full_set_value", full_value);
      m.set("measure", measure(result.omega));
      m.set("active_nodes", result.omega.count());
      m.set("contact_fraction", cls.contact_fraction);
      m.set("free_boundary_nodes", cls.free_boundary_nodes.size());
      m.set("contact_nodes", cls.contact_nodes.size());
      m.set("corners_inactive", detail::corners_inactive(result.omega));
      if (result.relaxed) {
        m.set("converged", result.relaxed->converged);
        m.set("iterations", result.relaxed->iterations);
        m.set("final_epsilon", result.relaxed->final_epsilon);
        dir.write("history.csv", [&](std::ostream& o) { write_history_csv(o, result.relaxed->history); });
      } else {
        m.set("flips", result.search->flips);
        m.set("restarts", result.search->restarts);
        dir.write("report_trace.csv",
                  [&](std::ostream& o) { write_trace_csv(o, *grid, result.search->trace); });
      }
      detail::export_field(dir, "v", result.field, result.omega);
      dir.write("omega.mask", [&](std::ostream& o) { write_mask(o, *grid, result.omega.mask()); });
      out << "value = " << detail::format_real(result.value) << '\n'
          << "full_set_value = " << detail::format_real(full_value) << '\n'
          << "measure = " << detail::format_real(measure(result.omega)) << '\n';
      break;
    }
    case Command::sweep_alpha: {
      const auto grid = detail::make_grid(c);
      std::vector<SweepRow> rows(c.alphas.size());
      RunConfig inner = c;
      inner.threads = 1;
      detail::parallel_for(c.alphas.size(), c.threads, [&](std::size_t i) {
        const auto r = minimize(grid, inner, c.alphas[i]);
        rows[i] = {c.alphas[i], r.value, measure(r.omega),
                   classify_boundary(r.omega).contact_fraction};
      });
      std::ostringstream csv;
      csv << "alpha,value,measure,contact_fraction\n";
      for (const auto& r : rows) {
        csv << detail::format_real(r.alpha) << ',' << detail::format_real(r.value) << ','
            << detail::format_real(r.measure) << ',' << detail::format_real(r.contact_fraction)
            << '\n';
      }
      dir.write("report_sweep.csv", [&](std::ostream& o) { o << csv.str(); });
      m.set("runs", rows.size());
      out << csv.str();
      break;
    }
    case Command::oracle: {
      const auto grid = detail::make_grid(c);
      const auto params = FunctionalParams::make(c.problem, c.alpha, c.dim);
      const auto tol = c.problem == Problem::eigen ? c.eigen_tol : c.torsion_tol;
      const auto r = brute_force_oracle(grid, params, detail::set_mode(c.problem), tol);
      m.set("value", r.value);
      m.set("measure", measure(r.omega_star));
      m.set("active_nodes", r.omega_star.count());
      dir.write("omega.mask", [&](std::ostream& o) { write_mask(o, *grid, r.omega_star.mask()); });
      out << "value = " << detail::format_real(r.value) << '\n';
      break;
    }
    case Command::export_domain: {
      const auto grid = detail::make_grid(c);
      const auto set = full_set(grid);
      ScalarField indicator(grid);
      for (std::size_t n = 0; n < grid->size(); ++n) indicator.values[n] = grid->inside(n);
      dir.write("domain.mask", [&](std::ostream& o) { write_mask(o, *grid, grid->inside_mask()); });
      detail::export_field(dir, "domain", indicator, set);
      m.set("inside_nodes", grid->inside_count());
      m.set("measure", measure(set));
      m.set("perimeter", perimeter(set));
      out << "inside_nodes = " << grid->inside_count() << '\n';
      break;
    }
    case Command::verify: {
      const bool all = c.check == "all";
      auto wants = [&](const char* name) { return all || c.check == name; };
      std::optional<MinimizeOutcome> minimizer;
      auto get_minimizer = [&]() -> const MinimizeOutcome& {
        if (!minimizer) {
          RunConfig relaxed = c;
          relaxed.method = Method::relaxed;
          relaxed.problem = Problem::compliance;
          minimizer = minimize(detail::make_grid(c), relaxed, c.alpha);
        }
        return *minimizer;
      };
      auto record = [&](const std::string& name, const auto& report, bool pass) {
        dir.write("report_" + name + ".csv", [&](std::ostream& o) { o << report.csv(); });
        emit_report(out, report);
        m.set("check." + name, pass ? "PASS" : "FAIL");
        if (!pass) status = kExitFail;
      };
      auto family = [&]() {
        std::vector<std::pair<std::string, DomainSpec>> f{
            {"ball", DomainSpec::disk(0.5)},
            {"square", DomainSpec::square(1.0)},
            {"rectangle", c.dim == 2 ? DomainSpec::rectangle(1.0, 0.5)
                                     : DomainSpec::rectangle(1.0, 0.5, 0.5)},
            {"lshape", DomainSpec::lshape(1.0)}};
        return f;
      };

      if (wants("supersolution")) {
        const auto& r = get_minimizer();
        const double eps = r.relaxed->support_epsilon();
        const auto rep = check_supersolution(r.field, eps);
        record("supersolution", rep, rep.pass);
      }
      if (wants("optimality")) {
        OptimalityOptions o;
        o.band = c.band;
        const auto rep = check_optimality(get_minimizer().field, c.alpha, o);
        record("optimality", rep, rep.pass());
      }
      if (wants("layer-cake")) {
        const auto rep = layer_cake_profile(get_minimizer().field);
        record("layer-cake", rep, rep.pass);
      }
      if (wants("growth")) {
        const auto radii = c.radii.empty() ? std::vector<double>{0.1, 0.2, 0.3} : c.radii;
        const auto rep = check_growth(get_minimizer().field, c.x0, radii);
        record("growth", rep, rep.pass());
      }
      if (wants("linf-bound")) {
        std::vector<LinfSample> samples;
        for (const auto& [label, spec] : family()) {
          const auto t = solve_torsion(full_set(build_grid(spec, c.dim, c.resolution)), c.torsion_tol);
          samples.push_back({label, t.sup_norm, t.compliance});
        }
        const auto rep = check_linf_bound(c.dim, samples);
        record("linf-bound", rep, rep.pass);
        const auto radii = c.radii.empty() ? std::vector<double>{0.25, 0.5, 1.0} : c.radii;
        const auto exp = fit_linf_exponent(c.dim, radii, c.resolution);
        record("linf-exponent", exp, exp.pass);
      }
      if (wants("kohler-jobin")) {
        std::vector<std::pair<std::string, CellSet>> sets;
        for (const auto& [label, spec] : family()) {
          sets.emplace_back(label, full_set(build_grid(spec, c.dim, c.resolution)));
        }
        const auto ball = sets.front().second;
        const auto rep = check_kohler_jobin(sets, ball);
        record("kohler-jobin", rep, rep.pass);
      }
      if (wants("scaling")) {
        const auto radii =
            c.radii.empty() ? std::vector<double>{0.4, 0.6, 0.8, 1.0} : c.radii;
        const auto rep = check_scaling(c.alpha, c.problem, radii, c.dim, detail::sweep_resolution(c));
        record("scaling", rep, rep.pass);
      }
      if (wants("coercivity")) {
        std::vector<double> radii = c.radii;
        if (radii.empty()) {
          radii = c.dim == 2 ? std::vector<double>{1.0, 0.6, 0.35, 0.2, 0.12, 0.08}
                             : std::vector<double>{1.0, 0.7, 0.5, 0.35};
        }
        // growth a ball family shows over two decades of measure, with the
        // slope slack, capped at 10x
        const double slack = 0.05;
        const double min_growth =
            std::min(10.0, std::pow(100.0, std::max(0.0, 1.0 + 2.0 / c.dim - c.alpha - slack)));
        const auto rep = coercivity_sweep(c.dim, c.alpha, radii, detail::sweep_resolution(c), slack,
                                          min_growth);
        record("coercivity", rep, rep.pass);
      }
      break;
    }
  }
  detail::write_manifest(dir, c, m);
  return status;
}

/// Maps the outcome of a run to the documented exit codes, reporting
/// errors on `err`.
inline int run_guarded(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    return run(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::invalid_argument ? kExitUsage : kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace cheeger
