// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "cheeger/cheeger.hpp"

using namespace cheeger;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

bool within(double value, double expected, double rel) {
  return std::abs(value - expected) <= rel * std::abs(expected);
}

// J0 first zero by bisection on the power series.
double j01() {
  auto j0 = [](double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 40; ++k) {
      term *= -(x * x) / (4.0 * k * k);
      sum += term;
    }
    return sum;
  };
  double a = 2.0, b = 3.0;
  for (int i = 0; i < 100; ++i) {
    const double m = 0.5 * (a + b);
    (j0(a) * j0(m) <= 0 ? b : a) = m;
  }
  return 0.5 * (a + b);
}

CellSet ball_in_square(const GridPtr& g, double r) {
  return CellSet::from_predicate(
      g, [r](const Point& x) { return std::hypot(x[0] - 0.5, x[1] - 0.5) < r; });
}

// Square D at alpha = 1.8, resolution 128; shared by several criteria.
const RelaxedRun& square_run() {
  static const RelaxedRun run = minimize_relaxed(build_grid(DomainSpec::square(1.0), 2, 128),
                                                 FunctionalParams::compliance(1.8, 2));
  return run;
}

// ---------------------------------------------------------------------------

Outcome torsion_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto t = solve_torsion(full_set(build_grid(DomainSpec::disk(1.0), 2, 256)));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = within(t.compliance, pi / 8, 0.005) && within(t.sup_norm, 0.25, 0.005) && secs < 10;
  return {ok, "C = " + num(t.compliance, 8) + " (pi/8 = " + num(pi / 8, 8) + "), sup = " +
                  num(t.sup_norm, 8) + ", " + num(secs, 3) + " s"};
}

Outcome eigen_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  const double j = j01();
  const auto disk = solve_eigen(full_set(build_grid(DomainSpec::disk(1.0), 2, 256)));
  const auto square = solve_eigen(full_set(build_grid(DomainSpec::square(1.0), 2, 256)));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = within(disk.lambda1, j * j, 0.005) && within(square.lambda1, 2 * pi * pi, 0.005) &&
                  secs < 30;
  return {ok, "disk " + num(disk.lambda1, 8) + " (j^2 = " + num(j * j, 8) + "), square " +
                  num(square.lambda1, 8) + " (2 pi^2 = " + num(2 * pi * pi, 8) + "), " +
                  num(secs, 3) + " s"};
}

Outcome scaling_laws() {
  const std::vector<double> radii{0.4, 0.6, 0.8, 1.0};
  bool ok = true;
  std::string d;
  auto add = [&](double alpha, Problem p) {
    const auto r = check_scaling(alpha, p, radii);
    ok = ok && r.pass;
    d += std::string(d.empty() ? "" : "; ") + (p == Problem::compliance ? "C" : "eig") + " a=" +
         num(alpha, 3) + " slope " + num(r.slope, 4) +
         (r.at_threshold ? " var " + num(r.variation, 3) : "") + (r.pass ? "" : " FAIL");
  };
  for (double a : {0.0, 1.0, 1.5, 2.0}) add(a, Problem::compliance);
  for (double a : {0.0, 0.5, 1.0}) add(a, Problem::eigen);
  return {ok, d};
}

Outcome coercivity() {
  const auto three = coercivity_sweep(3, 1.0, {1.0, 0.7, 0.5, 0.35}, 32);
  const auto two = coercivity_sweep(2, 1.5, {1.0, 0.6, 0.35, 0.2, 0.12, 0.08}, 128);
  const bool ok = three.slope <= 1.0 - 1.0 - 2.0 / 3.0 + 0.05 && two.monotone &&
                  two.decades >= 2.0 && two.growth >= 10.0;
  return {ok, "N=3 slope " + num(three.slope, 4) + " (<= " + num(-2.0 / 3.0 + 0.05, 4) +
                  "); N=2 growth " + num(two.growth, 4) + "x over " + num(two.decades, 3) +
                  " decades, monotone " + (two.monotone ? "yes" : "no")};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution keep(0.8);
  int regions = 0, compared = 0, matched = 0;
  std::string worst;
  while (regions < 24) {
    std::vector<std::uint8_t> inside(36, 0);
    int count = 0;
    for (int j = 1; j < 5; ++j) {
      for (int i = 1; i < 5; ++i) {
        inside[i + 6 * j] = keep(rng);
        count += inside[i + 6 * j];
      }
    }
    if (count == 0) continue;
    const auto g = std::make_shared<const Grid>(2, std::array<int, 3>{6, 6, 1}, 0.25, Point{}, inside);
    for (double alpha : {0.5, 1.0}) {
      const auto p = FunctionalParams::compliance(alpha, 2);
      const auto oracle = brute_force_oracle(g, p, CostMode::set_compliance);
      SearchOptions o;
      o.restarts = 32;
      o.seed = static_cast<std::uint64_t>(regions);
      const auto ls = local_search(g, p, CostMode::set_compliance, full_set(g), o);
      ++compared;
      if (ls.value == oracle.value) {
        ++matched;
      } else if (worst.empty()) {
        worst = ", first mismatch region " + std::to_string(regions) + " alpha " + num(alpha, 2) +
                ": " + num(ls.value, 17) + " vs " + num(oracle.value, 17);
      }
    }
    ++regions;
  }
  return {matched == compared,
          std::to_string(matched) + "/" + std::to_string(compared) + " exact matches on " +
              std::to_string(regions) + " regions" + worst};
}

Outcome supersolution() {
  struct Case {
    const char* label;
    DomainSpec domain;
    double res;
    double alpha;
  };
  const Case cases[] = {{"square a=1.5", DomainSpec::square(1.0), 64, 1.5},
                        {"lshape a=1.8", DomainSpec::lshape(1.0), 64, 1.8},
                        {"disk a=1", DomainSpec::disk(1.0), 64, 1.0}};
  bool ok = true;
  std::string d;
  auto check = [&](const std::string& label, const RelaxedRun& run) {
    if (!run.converged) {
      d += (d.empty() ? "" : "; ") + label + " not converged";
      ok = false;
      return;
    }
    const auto r = check_supersolution(run.v_star, run.support_epsilon());
    ok = ok && r.pass && r.interior_count > 0;
    d += (d.empty() ? "" : "; ") + label + " min " + num(r.worst_residual, 3) + " interior max " +
         num(r.worst_interior, 3) + " on " + std::to_string(r.interior_count) + " nodes";
  };
  check("square a=1.8 res 128", square_run());
  for (const auto& c : cases) {
    check(c.label, minimize_relaxed(build_grid(c.domain, 2, c.res),
                                    FunctionalParams::compliance(c.alpha, 2)));
  }
  return {ok, d};
}

Outcome optimality() {
  const auto r = check_optimality(square_run().v_star, 1.8);
  const auto g = build_grid(DomainSpec::square(1.0), 2, 256);
  const auto ball = check_optimality(solve_torsion(ball_in_square(g, 0.4)).w, 2.0);
  const bool ok = r.free_relstd <= 0.15 && std::abs(r.ratio() - 1) <= 0.15 && r.contact_samples > 0 &&
                  r.contact_min >= 0.85 * r.target && std::abs(ball.ratio() - 1) <= 0.05;
  return {ok, "free ratio " + num(r.ratio(), 4) + " relstd " + num(r.free_relstd, 3) +
                  ", contact min/target " + num(r.contact_min / r.target, 4) +
                  "; ball at alpha 2 ratio " + num(ball.ratio(), 4)};
}

Outcome corner_avoidance() {
  const auto& run = square_run();
  const auto omega = extract_support(run);
  const Grid& g = omega.grid();
  bool corners = true;
  for (int j : {1, g.shape()[1] - 2})
    for (int i : {1, g.shape()[0] - 2}) corners = corners && !omega.active(g.index(i, j));
  const double full = evaluate_set_compliance(full_set(omega.grid_ptr()), run.params).value;
  const double value = evaluate_set_compliance(omega, run.params).value;
  const bool ok = corners && value <= full * (1 - 1e-4);
  return {ok, std::string("corners ") + (corners ? "inactive" : "ACTIVE") + ", F(Omega*) = " +
                  num(value, 8) + " vs F(D) = " + num(full, 8)};
}

Outcome kohler_jobin() {
  const int res = 128;
  const auto ball = full_set(build_grid(DomainSpec::disk(0.5), 2, res));
  std::vector<std::pair<std::string, CellSet>> sets;
  sets.emplace_back("disk", full_set(build_grid(DomainSpec::disk(1.0), 2, res)));
  sets.emplace_back("square", full_set(build_grid(DomainSpec::square(1.0), 2, res)));
  sets.emplace_back("rectangle 2:1", full_set(build_grid(DomainSpec::rectangle(1.0, 0.5), 2, res)));
  sets.emplace_back("lshape", full_set(build_grid(DomainSpec::lshape(1.0), 2, res)));
  const auto r = check_kohler_jobin(sets, ball);
  const double j = j01();
  const double analytic = pi / 8 * j * j * j * j;
  bool ok = r.pass && std::abs(r.entries[0].ratio - 1) <= 0.005 && within(r.reference, analytic, 0.005) &&
            within(analytic, 13.135, 0.005);
  std::string d = "ball " + num(r.reference, 6) + " (analytic " + num(analytic, 6) + ")";
  for (const auto& e : r.entries) d += ", " + e.label + " " + num(e.ratio, 5);
  return {ok, d};
}

Outcome linf_bound() {
  const auto exp = fit_linf_exponent(2, {0.25, 0.5, 1.0}, 64);
  std::vector<LinfSample> family;
  for (auto spec : {DomainSpec::disk(0.5), DomainSpec::square(1.0), DomainSpec::rectangle(1.0, 0.5),
                    DomainSpec::lshape(1.0)}) {
    const auto t = solve_torsion(full_set(build_grid(spec, 2, 128)));
    family.push_back({spec.to_string(), t.sup_norm, t.compliance});
  }
  const auto r = check_linf_bound(2, family);
  double worst = 0.0;
  for (double x : r.ratios) worst = std::max(worst, x / r.reference_ratio);
  return {exp.pass && r.pass, "exponent " + num(exp.slope, 6) + " (0.5), max ratio / disk " + num(worst, 4)};
}

Outcome harmonic_replacement() {
  const auto& square = square_run();
  const auto mid = minimize_relaxed(build_grid(DomainSpec::square(1.0), 2, 64),
                                    FunctionalParams::compliance(1.5, 2));
  const std::vector<double> radii{0.1, 0.2, 0.3};
  bool ok = true;
  std::string d;
  auto add = [&](const std::string& label, const RelaxedRun& run, const Point& x0) {
    const auto r = check_growth(run.v_star, x0, radii);
    double worst = 0.0;
    for (double m : r.min_differences) worst = std::min(worst, m);
    ok = ok && r.pass();
    d += (d.empty() ? "" : "; ") + label + (r.trivial ? " trivial" : " slope " + num(r.fitted_slope, 4)) +
         " min(vhat-v) " + num(worst, 3);
  };
  add("a=1.8 centre", square, {0.5, 0.5, 0});
  add("a=1.8 (0.32,0.32)", square, {0.32, 0.32, 0});
  add("a=1.5 (0.32,0.32)", mid, {0.32, 0.32, 0});
  return {ok, d};
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(7);
  const auto g = build_grid(DomainSpec::square(1.0), 2, 17);  // 16 x 16 interior
  auto field = [&](double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    ScalarField v(g);
    for (std::size_t n = 0; n < g->size(); ++n) v.values[n] = g->inside(n) ? u(rng) : 0.0;
    return v;
  };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    // half the fields sit above the measure ramp, half on it
    const auto p = k % 2 == 0 ? FunctionalParams::compliance(1.5, 2, 0.05)
                              : FunctionalParams::compliance(1.2, 2, 2.0);
    const auto v = field(0.1, 1.0);
    const auto phi = field(-1.0, 1.0);
    const auto grad = gradient_v(v, p);
    double pair = 0.0;
    for (std::size_t n = 0; n < g->size(); ++n) pair += grad.values[n] * phi.values[n];
    pair *= g->cell_volume();
    const double delta = 1e-6;
    ScalarField plus = v, minus = v;
    for (std::size_t n = 0; n < g->size(); ++n) {
      plus.values[n] += delta * phi.values[n];
      minus.values[n] -= delta * phi.values[n];
    }
    const double fd = (evaluate_v(plus, p).value - evaluate_v(minus, p).value) / (2 * delta);
    worst = std::max(worst, std::abs(pair - fd) / std::abs(fd));
  }
  return {worst <= 1e-5, "worst relative difference " + num(worst, 3) + " over 100 fields"};
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "cheeger_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::string> configs{
      "command=minimize\nmethod=relaxed\ndomain=square(1)\nresolution=48\nalpha=1.8\nseed=5\nnoise=0.1\n",
      "command=minimize\nmethod=search\ndomain=lshape(1)\nresolution=12\nalpha=1.6\nrestarts=4\nseed=9\n",
      "command=sweep-alpha\nmethod=search\ndomain=square(1)\nresolution=10\nalphas=0.5,1.0,1.5,1.9\n",
      "command=verify\ncheck=layer-cake\ndomain=square(1)\nresolution=48\nalpha=1.8\n"};
  int files = 0, identical = 0;
  std::string first_diff;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      std::istringstream in(configs[k]);
      auto c = resolve_config(read_config(in));
      c.threads = 1;
      c.output_dir = (root / (std::to_string(k) + "_" + std::to_string(rep))).string();
      std::ostringstream out, err;
      const int status = run_guarded(c, out, err);
      if (status != kExitOk) return {false, "config " + std::to_string(k) + " exit " + std::to_string(status) + " " + err.str()};
      dirs.emplace_back(c.output_dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
      };
      ++files;
      if (read(entry.path()) == read(dirs[1] / entry.path().filename())) {
        ++identical;
      } else if (first_diff.empty()) {
        first_diff = ", differs: " + entry.path().filename().string();
      }
    }
  }
  fs::remove_all(root);
  return {files > 0 && identical == files,
          std::to_string(identical) + "/" + std::to_string(files) + " CSV files byte-identical" + first_diff};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "torsion accuracy", torsion_accuracy},
      {2, "eigenvalue accuracy", eigen_accuracy},
      {3, "scaling laws", scaling_laws},
      {4, "coercivity", coercivity},
      {5, "oracle equivalence", oracle_equivalence},
      {6, "supersolution", supersolution},
      {7, "optimality condition", optimality},
      {8, "corner avoidance", corner_avoidance},
      {9, "Kohler-Jobin", kohler_jobin},
      {10, "L-infinity bound", linf_bound},
      {11, "harmonic replacement", harmonic_replacement},
      {12, "gradient correctness", gradient_correctness},
      {13, "determinism", determinism},
  };
  int failures = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << ' ' << c.name << " [" << num(secs, 3)
              << " s]: " << o.detail << std::endl;
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << " in "
            << num(total, 4) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
