#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cheeger/functional.hpp"

namespace cheeger {

enum class Command { solve_torsion, solve_eigen, minimize, verify, oracle, sweep_alpha, export_domain };
enum class Method { relaxed, search };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::solve_torsion: return "solve-torsion";
    case Command::solve_eigen: return "solve-eigen";
    case Command::minimize: return "minimize";
    case Command::verify: return "verify";
    case Command::oracle: return "oracle";
    case Command::sweep_alpha: return "sweep-alpha";
    case Command::export_domain: return "export";
  }
  return "";
}

inline const char* to_string(Method m) { return m == Method::relaxed ? "relaxed" : "search"; }

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"supersolution", "optimality", "linf-bound",
                                              "layer-cake",    "growth",     "kohler-jobin",
                                              "scaling",       "coercivity", "all"};
  return names;
}

/// Fully resolved run description. Defaults are the documented ones.
struct RunConfig {
  Command command = Command::solve_torsion;
  Method method = Method::relaxed;
  std::string check = "all";
  DomainSpec domain = DomainSpec::square(1.0);
  int dim = 2;
  double resolution = 64;
  Problem problem = Problem::compliance;
  double alpha = 1.0;
  std::vector<double> alphas;
  double epsilon = 0.25;  // initial relaxation width, relative to sup(v)
  double tau = 0.0;
  double torsion_tol = kDefaultTorsionTol;
  double eigen_tol = kDefaultEigenTol;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::string output_dir = "out";
  int threads = 1;
  int max_iters = 20000;
  int phases = 6;
  int restarts = 0;
  int band = 3;
  std::vector<double> radii;  // empty: the check's default
  Point x0{0.5, 0.5, 0.5};
  bool first_improvement = false;
};

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "command", "method",    "check",       "domain",  "N",       "resolution", "mode",
      "alpha",   "alphas",    "epsilon",     "tau",     "torsion_tol", "eigen_tol", "seed",
      "noise",   "output_dir", "threads",    "max_iters", "phases", "restarts",   "band",
      "radii",   "x0",        "first_improvement"};
  return keys;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(item, key));
  }
  return out;
}

inline long long parse_integer(const std::string& text, const std::string& key) {
  const double v = parse_double(text, key);
  if (v != std::floor(v) || std::abs(v) > 9e15) {
    throw InvalidArgument(key + " must be an integer");
  }
  return static_cast<long long>(v);
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidArgument(key + " must be true or false");
}

}  // namespace detail

/// Adds "key=value" to the map; later assignments replace earlier ones.
inline void add_assignment(ConfigMap& map, const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw InvalidArgument("expected key=value, got '" + line + "'");
  const std::string key(detail::trim(std::string_view(line).substr(0, eq)));
  const std::string value(detail::trim(std::string_view(line).substr(eq + 1)));
  if (key.empty()) throw InvalidArgument("empty key in '" + line + "'");
  const auto& keys = detail::config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw InvalidArgument("unknown key '" + key + "'");
  }
  map[key] = value;
}

/// Reads key=value lines; '#' starts a comment, blank lines are skipped, and
/// so are the "result." lines of a manifest, which therefore reads back as
/// the config of its run.
inline ConfigMap read_config(std::istream& in) {
  ConfigMap map;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    // result lines of a run manifest are not settings
    if (detail::trim(line).rfind("result.", 0) == 0) continue;
    try {
      add_assignment(map, line);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return map;
}

inline ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  return read_config(in);
}

/// Resolves a key=value map into a RunConfig, applying defaults and
/// checking ranges. The exponent is checked against the threshold of the
/// selected mode, except that the dilation check may sit exactly on it.
inline RunConfig resolve_config(const ConfigMap& map) {
  RunConfig c;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = map.find(key);
    return it == map.end() ? nullptr : &it->second;
  };

  const auto* command = get("command");
  if (!command) throw InvalidArgument("missing required key 'command'");
  if (*command == "solve-torsion") c.command = Command::solve_torsion;
  else if (*command == "solve-eigen") c.command = Command::solve_eigen;
  else if (*command == "minimize") c.command = Command::minimize;
  else if (*command == "verify") c.command = Command::verify;
  else if (*command == "oracle") c.command = Command::oracle;
  else if (*command == "sweep-alpha") c.command = Command::sweep_alpha;
  else if (*command == "export") c.command = Command::export_domain;
  else throw InvalidArgument("unknown command '" + *command + "'");

  if (const auto* v = get("method")) {
    if (*v == "relaxed") c.method = Method::relaxed;
    else if (*v == "search") c.method = Method::search;
    else throw InvalidArgument("method must be relaxed or search");
  }
  if (const auto* v = get("check")) {
    const auto& names = check_names();
    if (std::find(names.begin(), names.end(), *v) == names.end()) {
      throw InvalidArgument("unknown check '" + *v + "'");
    }
    c.check = *v;
  } else if (c.command == Command::verify) {
    throw InvalidArgument("missing required key 'check'");
  }
  if (const auto* v = get("domain")) c.domain = DomainSpec::parse(*v);
  if (const auto* v = get("N")) c.dim = static_cast<int>(detail::parse_integer(*v, "N"));
  detail::require(c.dim == 2 || c.dim == 3, "N must be 2 or 3");
  if (const auto* v = get("resolution")) c.resolution = detail::parse_double(*v, "resolution");
  detail::require(c.resolution >= 8, "resolution must be >= 8");
  if (const auto* v = get("mode")) {
    if (*v == "compliance") c.problem = Problem::compliance;
    else if (*v == "eigen") c.problem = Problem::eigen;
    else throw InvalidArgument("mode must be compliance or eigen");
  }

  const bool threshold_allowed = c.command == Command::verify && c.check == "scaling";
  auto check_exponent = [&](double a) {
    if (threshold_allowed && a == alpha_threshold(c.problem, c.dim)) return;
    detail::check_alpha(a, c.problem, c.dim);
  };
  if (const auto* v = get("alpha")) {
    c.alpha = detail::parse_double(*v, "alpha");
    check_exponent(c.alpha);
  } else if (c.problem == Problem::eigen) {
    c.alpha = 0.5 * alpha_threshold(c.problem, c.dim);
  }
  if (const auto* v = get("alphas")) {
    c.alphas = detail::parse_list(*v, "alphas");
    for (double a : c.alphas) check_exponent(a);
    std::sort(c.alphas.begin(), c.alphas.end());
  }
  if (c.command == Command::sweep_alpha) {
    detail::require(get("alphas") != nullptr, "missing required key 'alphas'");
    detail::require(c.alphas.size() >= 2, "sweep-alpha needs >= 2 alphas (>=2 required)");
  }

  if (const auto* v = get("epsilon")) c.epsilon = detail::parse_double(*v, "epsilon");
  detail::require(c.epsilon > 0.0 && c.epsilon <= 1.0, "epsilon must be in (0, 1]");
  if (const auto* v = get("tau")) c.tau = detail::parse_double(*v, "tau");
  detail::require(c.tau >= 0.0, "tau must be >= 0");
  if (const auto* v = get("torsion_tol")) c.torsion_tol = detail::parse_double(*v, "torsion_tol");
  detail::require(c.torsion_tol > 0.0, "torsion_tol must be positive");
  if (const auto* v = get("eigen_tol")) c.eigen_tol = detail::parse_double(*v, "eigen_tol");
  detail::require(c.eigen_tol > 0.0, "eigen_tol must be positive");
  if (const auto* v = get("seed")) {
    const auto s = detail::parse_integer(*v, "seed");
    detail::require(s >= 0, "seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (const auto* v = get("noise")) c.noise = detail::parse_double(*v, "noise");
  detail::require(c.noise >= 0.0 && c.noise < 1.0, "noise must be in [0, 1)");
  if (const auto* v = get("output_dir")) c.output_dir = *v;
  detail::require(!c.output_dir.empty(), "output_dir must not be empty");
  if (const auto* v = get("threads")) c.threads = static_cast<int>(detail::parse_integer(*v, "threads"));
  detail::require(c.threads >= 1, "threads must be >= 1");
  if (const auto* v = get("max_iters")) c.max_iters = static_cast<int>(detail::parse_integer(*v, "max_iters"));
  detail::require(c.max_iters >= 1, "max_iters must be >= 1");
  if (const auto* v = get("phases")) c.phases = static_cast<int>(detail::parse_integer(*v, "phases"));
  detail::require(c.phases >= 1, "phases must be >= 1");
  if (const auto* v = get("restarts")) c.restarts = static_cast<int>(detail::parse_integer(*v, "restarts"));
  detail::require(c.restarts >= 0, "restarts must be >= 0");
  if (const auto* v = get("band")) c.band = static_cast<int>(detail::parse_integer(*v, "band"));
  detail::require(c.band >= 1, "band must be >= 1");
  if (const auto* v = get("radii")) {
    c.radii = detail::parse_list(*v, "radii");
    for (double r : c.radii) detail::require(r > 0.0, "radii must be positive");
  }
  if (const auto* v = get("x0")) {
    const auto p = detail::parse_list(*v, "x0");
    detail::require(static_cast<int>(p.size()) == c.dim, "x0 needs N coordinates");
    for (int a = 0; a < c.dim; ++a) c.x0[a] = p[a];
  }
  if (const auto* v = get("first_improvement")) {
    c.first_improvement = detail::parse_bool(*v, "first_improvement");
  }
  return c;
}

/// Writes the config back as key=value lines that resolve to the same run.
inline void write_config(std::ostream& out, const RunConfig& c) {
  auto list = [](const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + detail::format_real(xs[i]);
    return s;
  };
  out << "command = " << to_string(c.command) << '\n'
      << "method = " << to_string(c.method) << '\n'
      << "check = " << c.check << '\n'
      << "domain = " << c.domain.to_string() << '\n'
      << "N = " << c.dim << '\n'
      << "resolution = " << detail::format_real(c.resolution) << '\n'
      << "mode = " << to_string(c.problem) << '\n'
      << "alpha = " << detail::format_real(c.alpha) << '\n';
  if (!c.alphas.empty()) out << "alphas = " << list(c.alphas) << '\n';
  out << "epsilon = " << detail::format_real(c.epsilon) << '\n'
      << "tau = " << detail::format_real(c.tau) << '\n'
      << "torsion_tol = " << detail::format_real(c.torsion_tol) << '\n'
      << "eigen_tol = " << detail::format_real(c.eigen_tol) << '\n'
      << "seed = " << c.seed << '\n'
      << "noise = " << detail::format_real(c.noise) << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "threads = " << c.threads << '\n'
      << "max_iters = " << c.max_iters << '\n'
      << "phases = " << c.phases << '\n'
      << "restarts = " << c.restarts << '\n'
      << "band = " << c.band << '\n';
  if (!c.radii.empty()) out << "radii = " << list(c.radii) << '\n';
  out << "x0 = " << list(std::vector<double>(c.x0.begin(), c.x0.begin() + c.dim)) << '\n'
      << "first_improvement = " << (c.first_improvement ? "true" : "false") << '\n';
}

}  // namespace cheeger
