#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cheeger/error.hpp"

namespace cheeger {

using Point = std::array<double, 3>;

// ---------------------------------------------------------------------------
// Domain descriptors
// ---------------------------------------------------------------------------

enum class ShapeKind { disk, square, rectangle, lshape, annulus, mask_file };

/// Textual shape descriptor such as "disk(1)", "rectangle(2,1)",
/// "annulus(0.5,1)" or "mask_file(path/to/mask.txt)".
struct DomainSpec {
  ShapeKind kind = ShapeKind::square;
  std::vector<double> params;
  std::string path;

  static DomainSpec disk(double r) { return {ShapeKind::disk, {r}, {}}; }
  static DomainSpec square(double a) { return {ShapeKind::square, {a}, {}}; }
  static DomainSpec rectangle(double a, double b) {
    return {ShapeKind::rectangle, {a, b}, {}};
  }
  static DomainSpec rectangle(double a, double b, double c) {
    return {ShapeKind::rectangle, {a, b, c}, {}};
  }
  static DomainSpec lshape(double a) { return {ShapeKind::lshape, {a}, {}}; }
  static DomainSpec annulus(double inner, double outer) {
    return {ShapeKind::annulus, {inner, outer}, {}};
  }
  static DomainSpec mask(std::string p) {
    return {ShapeKind::mask_file, {}, std::move(p)};
  }

  static DomainSpec parse(std::string_view text);
  std::string to_string() const;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view text, const std::string& what) {
  const std::string s(trim(text));
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse number for " + what + ": '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(value)) {
    throw InvalidArgument("cannot parse number for " + what + ": '" + s + "'");
  }
  return value;
}

inline std::string format_real(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace detail

inline DomainSpec DomainSpec::parse(std::string_view text) {
  text = detail::trim(text);
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw InvalidArgument("malformed domain descriptor '" + std::string(text) +
                          "' (expected name(args))");
  }
  const std::string name(detail::trim(text.substr(0, open)));
  const std::string_view args = text.substr(open + 1, text.size() - open - 2);

  if (name == "mask_file" || name == "mask") {
    const auto p = detail::trim(args);
    if (p.empty()) throw InvalidArgument("mask_file() needs a path");
    return mask(std::string(p));
  }

  std::vector<double> values;
  std::size_t start = 0;
  while (start <= args.size()) {
    const auto comma = args.find(',', start);
    const auto piece = args.substr(start, comma == std::string_view::npos ? args.npos : comma - start);
    values.push_back(detail::parse_double(piece, "domain '" + name + "'"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }

  auto expect = [&](std::size_t lo, std::size_t hi) {
    if (values.size() < lo || values.size() > hi) {
      throw InvalidArgument("wrong number of arguments for domain '" + name + "'");
    }
  };
  DomainSpec spec;
  spec.params = values;
  if (name == "disk" || name == "ball") {
    expect(1, 1);
    spec.kind = ShapeKind::disk;
  } else if (name == "square" || name == "cube") {
    expect(1, 1);
    spec.kind = ShapeKind::square;
  } else if (name == "rectangle" || name == "box") {
    expect(2, 3);
    spec.kind = ShapeKind::rectangle;
  } else if (name == "lshape") {
    expect(1, 1);
    spec.kind = ShapeKind::lshape;
  } else if (name == "annulus") {
    expect(2, 2);
    spec.kind = ShapeKind::annulus;
  } else {
    throw InvalidArgument("unknown domain shape '" + name + "'");
  }
  return spec;
}

inline std::string DomainSpec::to_string() const {
  std::string name;
  switch (kind) {
    case ShapeKind::disk: name = "disk"; break;
    case ShapeKind::square: name = "square"; break;
    case ShapeKind::rectangle: name = "rectangle"; break;
    case ShapeKind::lshape: name = "lshape"; break;
    case ShapeKind::annulus: name = "annulus"; break;
    case ShapeKind::mask_file: return "mask_file(" + path + ")";
  }
  std::string out = name + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ",";
    out += detail::format_real(params[i]);
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Uniform node-centred grid over a box containing the design region D.
///
/// Nodes are stored row-major with x fastest: index = i + nx*(j + ny*k).
/// The outermost layer of nodes always lies outside D, so every node of D
/// has all 2N lattice neighbours inside the array.
///
/// For analytic shapes the grid also records, for each (node, direction)
/// whose neighbour leaves D, the fraction theta in (0,1] of the lattice
/// spacing at which the segment crosses the boundary of D. The Dirichlet
/// closure of the discrete Laplacian uses it to place the wall at its true
/// position instead of at the excluded node. Fractions are floored at 0.8:
/// a node hugging the wall still counts a full h^N of measure, and with a
/// lower floor dropping such nodes becomes a spurious improvement of the
/// rescaled cost (edges to inactive nodes inside D always have theta = 1).
class Grid {
 public:
  static constexpr double kMinWallFraction = 0.8;

  Grid(int dim, std::array<int, 3> shape, double h, Point origin,
       std::vector<std::uint8_t> inside,
       std::unordered_map<std::uint64_t, double> wall_fraction = {})
      : dim_(dim),
        shape_(shape),
        h_(h),
        origin_(origin),
        inside_(std::move(inside)),
        wall_fraction_(std::move(wall_fraction)) {
    detail::require(dim_ == 2 || dim_ == 3, "grid dimension must be 2 or 3");
    detail::require(h_ > 0.0 && std::isfinite(h_), "grid spacing must be positive");
    if (dim_ == 2) shape_[2] = 1;
    for (int a = 0; a < dim_; ++a) {
      detail::require(shape_[a] >= 3, "grid needs at least 3 nodes per axis");
    }
    detail::require(inside_.size() == size(), "inside mask size does not match grid shape");
    strides_ = {1, static_cast<std::ptrdiff_t>(shape_[0]),
                static_cast<std::ptrdiff_t>(shape_[0]) * shape_[1]};
    for (std::size_t n = 0; n < size(); ++n) {
      if (!inside_[n]) continue;
      const auto c = unravel(n);
      for (int a = 0; a < dim_; ++a) {
        detail::require(c[a] > 0 && c[a] < shape_[a] - 1,
                        "nodes on the outermost grid layer must lie outside D");
      }
      ++inside_count_;
    }
  }

  int dim() const noexcept { return dim_; }
  int num_directions() const noexcept { return 2 * dim_; }
  const std::array<int, 3>& shape() const noexcept { return shape_; }
  double h() const noexcept { return h_; }
  /// h^N, the volume carried by one node.
  double cell_volume() const noexcept { return dim_ == 2 ? h_ * h_ : h_ * h_ * h_; }
  const Point& origin() const noexcept { return origin_; }

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(shape_[0]) * shape_[1] * shape_[2];
  }
  std::size_t inside_count() const noexcept { return inside_count_; }
  bool inside(std::size_t node) const noexcept { return inside_[node] != 0; }
  const std::vector<std::uint8_t>& inside_mask() const noexcept { return inside_; }

  std::size_t index(int i, int j, int k = 0) const noexcept {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(shape_[0]) *
                                             (static_cast<std::size_t>(j) +
                                              static_cast<std::size_t>(shape_[1]) * k);
  }

  std::array<int, 3> unravel(std::size_t node) const noexcept {
    const auto nx = static_cast<std::size_t>(shape_[0]);
    const auto ny = static_cast<std::size_t>(shape_[1]);
    return {static_cast<int>(node % nx), static_cast<int>((node / nx) % ny),
            static_cast<int>(node / (nx * ny))};
  }

  Point coords(std::size_t node) const noexcept {
    const auto c = unravel(node);
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + c[a] * h_;
    return p;
  }

  /// Direction d encodes axis d/2; even d steps backwards, odd d forwards.
  std::size_t neighbor(std::size_t node, int d) const noexcept {
    const auto stride = strides_[d / 2];
    return (d % 2 == 0) ? node - stride : node + stride;
  }

  /// Fraction of h between an inside node and the wall of D in direction d
  /// (1 when the neighbour is inside D or the wall sits on the neighbour).
  double wall_fraction(std::size_t node, int d) const {
    if (wall_fraction_.empty()) return 1.0;
    const auto it = wall_fraction_.find(node * 6 + static_cast<std::uint64_t>(d));
    return it == wall_fraction_.end() ? 1.0 : it->second;
  }

  bool has_curved_walls() const noexcept { return !wall_fraction_.empty(); }

 private:
  int dim_;
  std::array<int, 3> shape_;
  double h_;
  Point origin_;
  std::vector<std::uint8_t> inside_;
  std::unordered_map<std::uint64_t, double> wall_fraction_;
  std::array<std::ptrdiff_t, 3> strides_{};
  std::size_t inside_count_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

namespace detail {

struct ShapeGeometry {
  Point lo{0, 0, 0};
  Point hi{0, 0, 0};
  // Negative strictly inside D, positive outside, continuous.
  std::function<double(const Point&)> level;
};

inline double box_level(const Point& x, const Point& lo, const Point& hi, int dim) {
  double v = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim; ++a) v = std::max({v, lo[a] - x[a], x[a] - hi[a]});
  return v;
}

inline double radius(const Point& x, int dim) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
  return std::sqrt(r2);
}

inline ShapeGeometry shape_geometry(const DomainSpec& spec, int dim) {
  const auto& p = spec.params;
  ShapeGeometry g;
  switch (spec.kind) {
    case ShapeKind::disk: {
      const double r = p.at(0);
      require(r > 0.0, "shape degenerate: disk radius must be positive");
      for (int a = 0; a < dim; ++a) g.lo[a] = -r, g.hi[a] = r;
      g.level = [r, dim](const Point& x) { return radius(x, dim) - r; };
      break;
    }
    case ShapeKind::square: {
      const double a = p.at(0);
      require(a > 0.0, "shape degenerate: square side must be positive");
      for (int ax = 0; ax < dim; ++ax) g.hi[ax] = a;
      g.level = [lo = g.lo, hi = g.hi, dim](const Point& x) { return box_level(x, lo, hi, dim); };
      break;
    }
    case ShapeKind::rectangle: {
      require(dim == 2 || p.size() == 3, "rectangle in 3D needs three side lengths");
      for (int ax = 0; ax < dim; ++ax) {
        require(p.at(ax) > 0.0, "shape degenerate: rectangle sides must be positive");
        g.hi[ax] = p[ax];
      }
      g.level = [lo = g.lo, hi = g.hi, dim](const Point& x) { return box_level(x, lo, hi, dim); };
      break;
    }
    case ShapeKind::lshape: {
      const double a = p.at(0);
      require(a > 0.0, "shape degenerate: lshape side must be positive");
      for (int ax = 0; ax < dim; ++ax) g.hi[ax] = a;
      g.level = [lo = g.lo, hi = g.hi, a, dim](const Point& x) {
        const double notch = std::max(0.5 * a - x[0], 0.5 * a - x[1]);
        return std::max(box_level(x, lo, hi, dim), -notch);
      };
      break;
    }
    case ShapeKind::annulus: {
      const double r1 = p.at(0), r2 = p.at(1);
      require(r1 >= 0.0 && r2 > 0.0 && r1 < r2,
              "shape degenerate: annulus needs 0 <= R1 < R2");
      for (int a = 0; a < dim; ++a) g.lo[a] = -r2, g.hi[a] = r2;
      g.level = [r1, r2, dim](const Point& x) {
        const double r = radius(x, dim);
        return std::max(r1 - r, r - r2);
      };
      break;
    }
    case ShapeKind::mask_file:
      throw InvalidArgument("mask files have no analytic geometry");
  }
  return g;
}

}  // namespace detail

/// Reads the ASCII mask format: a header line "MASK <nx> <ny> [<nz>] <h>"
/// followed by ny (times nz) rows of nx characters '0'/'1', x fastest.
inline GridPtr read_mask(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("mask file is empty");
  std::istringstream header(line);
  std::string tag;
  header >> tag;
  if (tag != "MASK") throw InvalidArgument("mask file must start with 'MASK'");
  std::vector<std::string> tokens;
  for (std::string t; header >> t;) tokens.push_back(t);
  if (tokens.size() != 3 && tokens.size() != 4) {
    throw InvalidArgument("mask header must be 'MASK <nx> <ny> [<nz>] <h>'");
  }
  const int dim = tokens.size() == 3 ? 2 : 3;
  std::array<int, 3> shape{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    const double v = detail::parse_double(tokens[a], "mask extent");
    if (v < 3 || v != std::floor(v) || v > 1e5) {
      throw InvalidArgument("mask extents must be integers >= 3");
    }
    shape[a] = static_cast<int>(v);
  }
  const double h = detail::parse_double(tokens.back(), "mask spacing");
  if (!(h > 0.0)) throw InvalidArgument("mask spacing must be positive");

  const std::size_t rows = static_cast<std::size_t>(shape[1]) * shape[2];
  std::vector<std::uint8_t> inside;
  inside.reserve(rows * shape[0]);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw InvalidArgument("mask file has too few rows");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() != static_cast<std::size_t>(shape[0])) {
      throw InvalidArgument("mask row " + std::to_string(r + 1) + " has wrong length");
    }
    for (char c : line) {
      if (c != '0' && c != '1') {
        throw InvalidArgument(std::string("invalid character in mask row ") +
                              std::to_string(r + 1));
      }
      inside.push_back(c == '1');
    }
  }
  while (std::getline(in, line)) {
    if (!detail::trim(line).empty()) throw InvalidArgument("mask file has extra rows");
  }
  return std::make_shared<const Grid>(dim, shape, h, Point{0, 0, 0}, std::move(inside));
}

inline GridPtr read_mask_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open mask file '" + path + "'");
  return read_mask(in);
}

/// Writes a node mask in the format accepted by read_mask.
inline void write_mask(std::ostream& out, const Grid& grid, const std::vector<std::uint8_t>& mask) {
  const auto& s = grid.shape();
  out << "MASK " << s[0] << ' ' << s[1];
  if (grid.dim() == 3) out << ' ' << s[2];
  out << ' ' << detail::format_real(grid.h()) << '\n';
  std::size_t n = 0;
  for (int r = 0; r < s[1] * s[2]; ++r) {
    std::string row(static_cast<std::size_t>(s[0]), '0');
    for (int i = 0; i < s[0]; ++i, ++n) row[i] = mask[n] ? '1' : '0';
    out << row << '\n';
  }
}

/// Discretises the design region. `resolution` is nodes per unit length
/// (h = 1/resolution). Nodes strictly inside the shape belong to D.
inline GridPtr build_grid(const DomainSpec& spec, int dim, double resolution) {
  detail::require(dim == 2 || dim == 3, "dimension N must be 2 or 3");
  if (spec.kind == ShapeKind::mask_file) {
    auto grid = read_mask_file(spec.path);
    detail::require(grid->dim() == dim, "mask file dimension does not match N");
    return grid;
  }
  detail::require(resolution >= 8.0 && std::isfinite(resolution),
                  "resolution must be at least 8 nodes per unit length");

  const auto geometry = detail::shape_geometry(spec, dim);
  const double h = 1.0 / resolution;
  const double tol = 1e-9 * h;

  std::array<int, 3> shape{1, 1, 1};
  Point origin{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    const double extent = geometry.hi[a] - geometry.lo[a];
    shape[a] = static_cast<int>(std::ceil(extent * resolution - 1e-9)) + 3;
    origin[a] = geometry.lo[a] - h;
  }
  const std::size_t total = static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  std::vector<std::uint8_t> inside(total, 0);

  auto point_of = [&](std::size_t n) {
    const auto nx = static_cast<std::size_t>(shape[0]);
    const auto ny = static_cast<std::size_t>(shape[1]);
    const int c[3] = {static_cast<int>(n % nx), static_cast<int>((n / nx) % ny),
                      static_cast<int>(n / (nx * ny))};
    Point p{0, 0, 0};
    for (int a = 0; a < dim; ++a) p[a] = origin[a] + c[a] * h;
    return p;
  };
  for (std::size_t n = 0; n < total; ++n) inside[n] = geometry.level(point_of(n)) < -tol;

  // Per-axis span of inside nodes must cover at least 3 nodes.
  std::array<int, 3> lo_idx{INT32_MAX, INT32_MAX, INT32_MAX}, hi_idx{-1, -1, -1};
  const std::array<std::size_t, 3> strides{1, static_cast<std::size_t>(shape[0]),
                                           static_cast<std::size_t>(shape[0]) * shape[1]};
  for (std::size_t n = 0; n < total; ++n) {
    if (!inside[n]) continue;
    const int c[3] = {static_cast<int>(n % shape[0]), static_cast<int>((n / shape[0]) % shape[1]),
                      static_cast<int>(n / strides[2])};
    for (int a = 0; a < dim; ++a) {
      lo_idx[a] = std::min(lo_idx[a], c[a]);
      hi_idx[a] = std::max(hi_idx[a], c[a]);
    }
  }
  for (int a = 0; a < dim; ++a) {
    detail::require(hi_idx[a] >= 0 && hi_idx[a] - lo_idx[a] + 1 >= 3,
                    "resolution too small: fewer than 3 interior nodes across an axis");
  }

  std::unordered_map<std::uint64_t, double> walls;
  for (std::size_t n = 0; n < total; ++n) {
    if (!inside[n]) continue;
    const Point x = point_of(n);
    for (int d = 0; d < 2 * dim; ++d) {
      const int axis = d / 2;
      const double sign = (d % 2 == 0) ? -1.0 : 1.0;
      const std::size_t m = (d % 2 == 0) ? n - strides[axis] : n + strides[axis];
      if (inside[m]) continue;
      auto along = [&](double t) {
        Point y = x;
        y[axis] += sign * t * h;
        return geometry.level(y);
      };
      if (along(1.0) <= 0.0) continue;  // wall sits on (or past) the excluded node
      double a = 0.0, b = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (a + b);
        (along(mid) < 0.0 ? a : b) = mid;
      }
      const double theta = 0.5 * (a + b);
      if (theta < 1.0 - 1e-9) {
        walls.emplace(n * 6 + static_cast<std::uint64_t>(d),
                      std::max(theta, Grid::kMinWallFraction));
      }
    }
  }
  return std::make_shared<const Grid>(dim, shape, h, origin, std::move(inside), std::move(walls));
}

// ---------------------------------------------------------------------------
// Cell sets
// ---------------------------------------------------------------------------

/// A candidate set Omega inside D, stored as an active-node mask.
class CellSet {
 public:
  CellSet(GridPtr grid, std::vector<std::uint8_t> active)
      : grid_(std::move(grid)), active_(std::move(active)) {
    detail::require(grid_ != nullptr, "cell set needs a grid");
    detail::require(active_.size() == grid_->size(), "active mask size does not match grid");
    for (std::size_t n = 0; n < active_.size(); ++n) {
      if (!active_[n]) continue;
      detail::require(grid_->inside(n), "active node outside D");
      active_[n] = 1;
      ++count_;
    }
  }

  /// Active nodes are the inside-D nodes whose coordinates satisfy `pred`.
  template <typename Pred>
  static CellSet from_predicate(GridPtr grid, Pred&& pred) {
    std::vector<std::uint8_t> active(grid->size(), 0);
    for (std::size_t n = 0; n < grid->size(); ++n) {
      active[n] = grid->inside(n) && pred(grid->coords(n));
    }
    return CellSet(std::move(grid), std::move(active));
  }

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  bool active(std::size_t node) const noexcept { return active_[node] != 0; }
  const std::vector<std::uint8_t>& mask() const noexcept { return active_; }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  /// Returns a copy with one node toggled.
  CellSet flipped(std::size_t node) const {
    auto m = active_;
    m[node] = !m[node];
    return CellSet(grid_, std::move(m));
  }

  friend bool operator==(const CellSet& a, const CellSet& b) {
    return a.grid_ == b.grid_ && a.active_ == b.active_;
  }

 private:
  GridPtr grid_;
  std::vector<std::uint8_t> active_;
  std::size_t count_ = 0;
};

inline CellSet full_set(const GridPtr& grid) { return CellSet(grid, grid->inside_mask()); }

inline CellSet empty_set(const GridPtr& grid) {
  return CellSet(grid, std::vector<std::uint8_t>(grid->size(), 0));
}

/// Lebesgue-measure proxy: h^N times the number of active nodes.
inline double measure(const CellSet& set) {
  return set.grid().cell_volume() * static_cast<double>(set.count());
}

/// Lattice (l1) perimeter: h^(N-1) times the number of faces between an
/// active node and a non-active neighbour. Exact for axis-aligned boxes;
/// overestimates smooth boundaries (by 4/pi for a disk).
inline double perimeter(const CellSet& set) {
  const Grid& g = set.grid();
  std::size_t faces = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!set.active(n)) continue;
    for (int d = 0; d < g.num_directions(); ++d) faces += !set.active(g.neighbor(n, d));
  }
  const double face_area = g.dim() == 2 ? g.h() : g.h() * g.h();
  return face_area * static_cast<double>(faces);
}

struct BoundaryClassification {
  /// Active nodes with at least one inactive neighbour inside D.
  std::vector<std::size_t> free_boundary_nodes;
  /// Active nodes with at least one neighbour outside D.
  std::vector<std::size_t> contact_nodes;
  double contact_fraction = 0.0;
};

inline BoundaryClassification classify_boundary(const CellSet& set) {
  const Grid& g = set.grid();
  BoundaryClassification out;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!set.active(n)) continue;
    bool free = false, contact = false;
    for (int d = 0; d < g.num_directions(); ++d) {
      const auto m = g.neighbor(n, d);
      if (!g.inside(m)) {
        contact = true;
      } else if (!set.active(m)) {
        free = true;
      }
    }
    if (free) out.free_boundary_nodes.push_back(n);
    if (contact) out.contact_nodes.push_back(n);
  }
  const auto total = out.free_boundary_nodes.size() + out.contact_nodes.size();
  out.contact_fraction =
      total == 0 ? 0.0 : static_cast<double>(out.contact_nodes.size()) / static_cast<double>(total);
  return out;
}

}  // namespace cheeger
