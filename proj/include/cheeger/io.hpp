#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cheeger/optimize.hpp"

namespace cheeger {

/// Field values as CSV rows "x,y[,z],value", one per active node in
/// row-major order, reals with 17 significant digits.
inline void write_field_csv(std::ostream& out, const ScalarField& v, const CellSet& active) {
  const Grid& g = *v.grid;
  out << (g.dim() == 2 ? "x,y,value\n" : "x,y,z,value\n");
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!active.active(n)) continue;
    const auto p = g.coords(n);
    for (int a = 0; a < g.dim(); ++a) out << detail::format_real(p[a]) << ',';
    out << detail::format_real(v.values[n]) << '\n';
  }
}

/// Binary 8-bit PGM of a 2D field, min-max scaled, top row at the largest y.
inline void write_pgm(std::ostream& out, const ScalarField& v) {
  const Grid& g = *v.grid;
  detail::require(g.dim() == 2, "PGM export is only defined for 2D fields");
  const auto [lo_it, hi_it] = std::minmax_element(v.values.begin(), v.values.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  const int nx = g.shape()[0], ny = g.shape()[1];
  out << "P5\n" << nx << ' ' << ny << "\n255\n";
  std::string row(static_cast<std::size_t>(nx), '\0');
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const double x = span > 0.0 ? (v.values[g.index(i, j)] - lo) / span : 0.0;
      row[i] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * x)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

inline void write_history_csv(std::ostream& out, const std::vector<HistoryEntry>& history) {
  out << "iteration,phase,epsilon,value,measure,step\n";
  for (const auto& h : history) {
    out << h.iteration << ',' << h.phase << ',' << detail::format_real(h.epsilon) << ','
        << detail::format_real(h.value) << ',' << detail::format_real(h.measure) << ','
        << detail::format_real(h.step) << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const Grid& grid, const std::vector<FlipMove>& trace) {
  out << "flip,node,i,j,k,added,value\n";
  for (std::size_t f = 0; f < trace.size(); ++f) {
    const auto c = grid.unravel(trace[f].node);
    out << f + 1 << ',' << trace[f].node << ',' << c[0] << ',' << c[1] << ',' << c[2] << ','
        << (trace[f].added ? 1 : 0) << ',' << detail::format_real(trace[f].value) << '\n';
  }
}

/// Ordered key = value record of a run.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& kv : entries_) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, detail::format_real(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Output directory helper: creates the directory and opens files in it.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw InvalidArgument("cannot create output directory '" + root_.string() + "'");
  }

  const std::filesystem::path& root() const { return root_; }

  std::ofstream open(const std::string& name, bool binary = false) const {
    std::ofstream out(root_ / name, binary ? std::ios::binary : std::ios::out);
    if (!out) throw InvalidArgument("cannot write '" + (root_ / name).string() + "'");
    return out;
  }

  template <typename Writer>
  void write(const std::string& name, Writer&& writer, bool binary = false) const {
    auto out = open(name, binary);
    writer(out);
    if (!out) throw InvalidArgument("write failed for '" + (root_ / name).string() + "'");
  }

 private:
  std::filesystem::path root_;
};

}  // namespace cheeger
