#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "plapdpp/core.hpp"

namespace plapdpp {

template <std::size_t D>
struct Box {
  Point<D> lo;
  Point<D> hi;

  Box expanded(double r) const {
    Box b = *this;
    for (std::size_t i = 0; i < D; ++i) {
      b.lo[i] -= r;
      b.hi[i] += r;
    }
    return b;
  }

  bool contains(const Point<D>& x) const {
    for (std::size_t i = 0; i < D; ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
};

enum class Smoothness { C2, Lipschitz };

/// Position of a point relative to the sets Omega, I_eps, Gamma_eps and O = Gamma_1.
enum class Region { InteriorFar, InnerStrip, OuterStrip, OuterFar, Outside };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::InteriorFar: return "InteriorFar";
    case Region::InnerStrip: return "InnerStrip";
    case Region::OuterStrip: return "OuterStrip";
    case Region::OuterFar: return "OuterFar";
    case Region::Outside: return "Outside";
  }
  return "?";
}

namespace detail {

inline double segment_distance(const Point<2>& x, const Point<2>& a, const Point<2>& b,
                               Point<2>* closest) {
  const Point<2> ab = b - a;
  double t = dot(x - a, ab) / dot(ab, ab);
  t = std::clamp(t, 0.0, 1.0);
  const Point<2> c = a + t * ab;
  if (closest) *closest = c;
  return distance(x, c);
}

// Exact distance to a closed polygon boundary and crossing-number inside test.
struct Polygon {
  std::vector<Point<2>> vertices;

  double boundary_distance(const Point<2>& x, Point<2>* closest) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      Point<2> c;
      const double d = segment_distance(x, vertices[i], vertices[(i + 1) % n], &c);
      if (d < best) {
        best = d;
        if (closest) *closest = c;
      }
    }
    return best;
  }

  bool contains(const Point<2>& x) const {
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto& a = vertices[i];
      const auto& b = vertices[j];
      if ((a[1] > x[1]) != (b[1] > x[1])) {
        const double xc = (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0];
        if (x[0] < xc) inside = !inside;
      }
    }
    return inside;
  }

  double signed_distance(const Point<2>& x) const {
    const double d = boundary_distance(x, nullptr);
    if (d == 0.0) return 0.0;
    return contains(x) ? -d : d;
  }
};

}  // namespace detail

/// Implicit description of a bounded domain through its exact signed distance
/// (negative inside, zero on the boundary, positive outside).
template <std::size_t D>
class Domain {
 public:
  struct Ball {
    Point<D> center;
    double radius;
  };
  struct Annulus {
    Point<D> center;
    double r_inner;
    double r_outer;
  };
  /// Axis-aligned cube of the given half side.
  struct Square {
    Point<D> center;
    double half_side;
  };
  /// (-a, a)^2 with the closed quadrant [0, a] x [-a, 0] removed; re-entrant corner at the origin.
  struct LShape {
    double half_side;
  };
  using Shape = std::variant<Ball, Annulus, Square, LShape>;

  static Domain ball(const Point<D>& center, double radius) {
    if (!(radius > 0)) throw Error(ErrorKind::InvalidInput, "ball radius must be positive");
    return Domain(Ball{center, radius});
  }

  static Domain annulus(const Point<D>& center, double r_inner, double r_outer) {
    if (!(r_inner > 0 && r_outer > r_inner))
      throw Error(ErrorKind::InvalidInput, "annulus needs 0 < r_inner < r_outer");
    return Domain(Annulus{center, r_inner, r_outer});
  }

  static Domain square(const Point<D>& center, double half_side) {
    if (!(half_side > 0)) throw Error(ErrorKind::InvalidInput, "square half side must be positive");
    return Domain(Square{center, half_side});
  }

  static Domain lshape(double half_side = 1.0) {
    static_assert(D == 2, "the L-shaped domain is planar");
    if (!(half_side > 0)) throw Error(ErrorKind::InvalidInput, "L-shape half side must be positive");
    return Domain(LShape{half_side});
  }

  const Shape& shape() const { return shape_; }

  Smoothness smoothness() const {
    return std::holds_alternative<Ball>(shape_) || std::holds_alternative<Annulus>(shape_)
               ? Smoothness::C2
               : Smoothness::Lipschitz;
  }

  std::string name() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Ball>) return "Ball";
          else if constexpr (std::is_same_v<S, Annulus>) return "Annulus";
          else if constexpr (std::is_same_v<S, Square>) return "Square";
          else return "LShape";
        },
        shape_);
  }

  double signed_distance(const Point<D>& x) const {
    return std::visit([&](const auto& s) { return sdf(s, x); }, shape_);
  }

  double boundary_distance(const Point<D>& x) const { return std::abs(signed_distance(x)); }

  bool contains(const Point<D>& x) const { return signed_distance(x) < 0.0; }

  /// A closest point of the boundary (ties broken deterministically).
  Point<D> nearest_boundary_point(const Point<D>& x) const {
    return std::visit([&](const auto& s) { return project(s, x); }, shape_);
  }

  /// Tight box around the closure of the domain.
  Box<D> omega_box() const {
    return std::visit([](const auto& s) { return tight_box(s); }, shape_);
  }

  /// Box containing the domain and its unit outer collar O.
  Box<D> bounding_box() const { return omega_box().expanded(1.0); }

  double diameter() const {
    const Box<D> b = omega_box();
    return norm(b.hi - b.lo);
  }

 private:
  explicit Domain(Shape s) : shape_(std::move(s)) {}

  static Point<D> unit_or_axis(const Point<D>& v) {
    const double n = norm(v);
    Point<D> u{};
    if (n == 0.0) {
      u[0] = 1.0;
      return u;
    }
    return (1.0 / n) * v;
  }

  static double sdf(const Ball& b, const Point<D>& x) { return distance(x, b.center) - b.radius; }

  static double sdf(const Annulus& a, const Point<D>& x) {
    const double r = distance(x, a.center);
    return std::max(a.r_inner - r, r - a.r_outer);
  }

  static double sdf(const Square& s, const Point<D>& x) {
    double outside2 = 0.0;
    double qmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < D; ++i) {
      const double q = std::abs(x[i] - s.center[i]) - s.half_side;
      qmax = std::max(qmax, q);
      if (q > 0) outside2 += q * q;
    }
    return std::sqrt(outside2) + std::min(qmax, 0.0);
  }

  static detail::Polygon polygon(const LShape& l) {
    const double a = l.half_side;
    return detail::Polygon{{{-a, -a}, {0.0, -a}, {0.0, 0.0}, {a, 0.0}, {a, a}, {-a, a}}};
  }

  static double sdf(const LShape& l, const Point<D>& x) {
    if constexpr (D == 2) {
      return polygon(l).signed_distance(x);
    } else {
      (void)l;
      (void)x;
      throw Error(ErrorKind::UnsupportedDimension, "L-shape is planar");
    }
  }

  static Point<D> project(const Ball& b, const Point<D>& x) {
    return b.center + b.radius * unit_or_axis(x - b.center);
  }

  static Point<D> project(const Annulus& a, const Point<D>& x) {
    const Point<D> u = unit_or_axis(x - a.center);
    const double r = distance(x, a.center);
    const double rr = (std::abs(r - a.r_inner) <= std::abs(r - a.r_outer)) ? a.r_inner : a.r_outer;
    return a.center + rr * u;
  }

  static Point<D> project(const Square& s, const Point<D>& x) {
    Point<D> y = x;
    bool outside = false;
    for (std::size_t i = 0; i < D; ++i) {
      const double lo = s.center[i] - s.half_side;
      const double hi = s.center[i] + s.half_side;
      if (x[i] < lo || x[i] > hi) outside = true;
      y[i] = std::clamp(x[i], lo, hi);
    }
    if (outside) return y;
    // Inside: push to the nearest face.
    std::size_t best = 0;
    double gap = std::numeric_limits<double>::infinity();
    double target = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      const double lo = s.center[i] - s.half_side;
      const double hi = s.center[i] + s.half_side;
      if (x[i] - lo < gap) { gap = x[i] - lo; best = i; target = lo; }
      if (hi - x[i] < gap) { gap = hi - x[i]; best = i; target = hi; }
    }
    y = x;
    y[best] = target;
    return y;
  }

  static Point<D> project(const LShape& l, const Point<D>& x) {
    if constexpr (D == 2) {
      Point<2> c = x;
      polygon(l).boundary_distance(x, &c);
      return c;
    } else {
      (void)l;
      return x;
    }
  }

  static Box<D> tight_box(const Ball& b) {
    Box<D> box{b.center, b.center};
    return box.expanded(b.radius);
  }
  static Box<D> tight_box(const Annulus& a) {
    Box<D> box{a.center, a.center};
    return box.expanded(a.r_outer);
  }
  static Box<D> tight_box(const Square& s) {
    Box<D> box{s.center, s.center};
    return box.expanded(s.half_side);
  }
  static Box<D> tight_box(const LShape& l) {
    Box<D> box{};
    return box.expanded(l.half_side);
  }

  Shape shape_;
};

/// Region of x for collar width eps; the unit collar O = Gamma_1 bounds the extended domain.
template <std::size_t D>
Region classify_point(const Domain<D>& dom, const Point<D>& x, double eps) {
  const double s = dom.signed_distance(x);
  if (s < 0.0) return (-s > eps) ? Region::InteriorFar : Region::InnerStrip;
  if (s <= eps) return Region::OuterStrip;
  if (s <= 1.0) return Region::OuterFar;
  return Region::Outside;
}

/// The grid origin + h Z^d.
template <std::size_t D>
struct Lattice {
  double h = 1.0;
  Point<D> origin{};

  Lattice() = default;
  Lattice(double spacing, const Point<D>& o) : h(spacing), origin(o) {
    if (!(h > 0)) throw Error(ErrorKind::InvalidInput, "lattice spacing must be positive");
  }

  Point<D> point(const Index<D>& a) const {
    Point<D> x;
    for (std::size_t i = 0; i < D; ++i) x[i] = origin[i] + h * static_cast<double>(a[i]);
    return x;
  }

  /// Lattice through x with the same spacing (x + G_h is a translate of G_h).
  Lattice through(const Point<D>& x) const { return Lattice(h, x); }
};

/// Integer offsets alpha with |alpha| h <= eps, in lexicographic order.
template <std::size_t D>
class BallStencil {
 public:
  BallStencil(double h, double eps) : h_(h), eps_(eps) {
    if (!(h > 0) || !(eps > 0)) throw Error(ErrorKind::InvalidInput, "ball needs h > 0 and eps > 0");
    if (eps < h * (1.0 - 1e-12))
      throw Error(ErrorKind::EmptyBall, "eps < h leaves only the centre in the discrete ball");
    const double ratio = eps / h;
    // Relative slack so that eps = k h computed in floating point keeps the k-th ring.
    const double r2 = ratio * ratio * (1.0 + 1e-12);
    radius_ = static_cast<std::int64_t>(std::floor(ratio * (1.0 + 1e-12)));
    Index<D> a;
    a.fill(-radius_);
    while (true) {
      double n2 = 0.0;
      for (std::size_t i = 0; i < D; ++i) n2 += static_cast<double>(a[i] * a[i]);
      if (n2 <= r2) offsets_.push_back(a);
      std::size_t k = D;
      while (k > 0) {
        --k;
        if (++a[k] <= radius_) break;
        a[k] = -radius_;
        if (k == 0) return;
      }
    }
  }

  double h() const { return h_; }
  double eps() const { return eps_; }
  std::int64_t radius() const { return radius_; }
  const std::vector<Index<D>>& offsets() const { return offsets_; }
  std::size_t size() const { return offsets_.size(); }

 private:
  double h_;
  double eps_;
  std::int64_t radius_ = 0;
  std::vector<Index<D>> offsets_;
};

/// B_eps^h(x) = (x + G_h) intersected with the closed ball of radius eps around x.
template <std::size_t D>
std::vector<Point<D>> discrete_ball(const Lattice<D>& lat, const Point<D>& x, double eps) {
  const BallStencil<D> ball(lat.h, eps);
  std::vector<Point<D>> pts;
  pts.reserve(ball.size());
  const Lattice<D> shifted = lat.through(x);
  for (const auto& a : ball.offsets()) pts.push_back(shifted.point(a));
  return pts;
}

/// Membership of a lattice node in the stored support of a field.
enum class Cell : std::uint8_t { None, Interior, Collar, Exterior };

/// Values on the lattice nodes of the extended domain, stored on a dense box.
///
/// Support nodes are split into Interior (in Omega, farther than eps from the
/// boundary), Collar (the inner strip I_eps) and Exterior (outer nodes within
/// the stored strip width). Nodes of the box outside the support hold 0 and are
/// never part of a valid stencil of an Interior or Collar node.
template <std::size_t D>
class LatticeField {
 public:
  LatticeField() = default;

  /// Support for collar width eps; exterior nodes are kept up to distance strip_width.
  static LatticeField build(const Domain<D>& dom, const Lattice<D>& lat, double eps,
                            double strip_width) {
    if (!(eps > 0)) throw Error(ErrorKind::InvalidInput, "eps must be positive");
    if (!(strip_width >= eps)) throw Error(ErrorKind::InvalidInput, "strip narrower than eps");
    LatticeField f;
    f.lattice_ = lat;
    f.eps_ = eps;
    const Box<D> box = dom.omega_box().expanded(strip_width);
    std::size_t total = 1;
    for (std::size_t i = 0; i < D; ++i) {
      const auto lo = static_cast<std::int64_t>(std::ceil((box.lo[i] - lat.origin[i]) / lat.h - 1e-9));
      const auto hi = static_cast<std::int64_t>(std::floor((box.hi[i] - lat.origin[i]) / lat.h + 1e-9));
      f.lo_[i] = lo;
      f.extent_[i] = static_cast<std::size_t>(hi - lo + 1);
      total *= f.extent_[i];
    }
    std::size_t stride = 1;
    for (std::size_t k = D; k-- > 0;) {
      f.stride_[k] = stride;
      stride *= f.extent_[k];
    }
    f.cells_.assign(total, Cell::None);
    f.values_.assign(total, 0.0);
    f.signed_distance_.assign(total, 0.0);
    for (std::size_t lin = 0; lin < total; ++lin) {
      const Point<D> x = f.point(lin);
      const double s = dom.signed_distance(x);
      Cell c = Cell::None;
      if (s < 0.0) c = (-s > eps) ? Cell::Interior : Cell::Collar;
      else if (s <= strip_width) c = Cell::Exterior;
      f.cells_[lin] = c;
      f.signed_distance_[lin] = s;
      switch (c) {
        case Cell::Interior: f.interior_.push_back(lin); break;
        case Cell::Collar: f.collar_.push_back(lin); break;
        case Cell::Exterior: f.exterior_.push_back(lin); break;
        case Cell::None: break;
      }
      if (c != Cell::None) f.support_.push_back(lin);
    }
    return f;
  }

  const Lattice<D>& lattice() const { return lattice_; }
  double eps() const { return eps_; }
  const Index<D>& lo() const { return lo_; }
  const std::array<std::size_t, D>& extents() const { return extent_; }
  const std::array<std::size_t, D>& strides() const { return stride_; }
  std::size_t dense_size() const { return cells_.size(); }

  const std::vector<std::size_t>& support() const { return support_; }
  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& collar() const { return collar_; }
  const std::vector<std::size_t>& exterior() const { return exterior_; }

  Cell cell(std::size_t lin) const { return cells_[lin]; }
  const std::vector<Cell>& cells() const { return cells_; }
  double signed_distance(std::size_t lin) const { return signed_distance_[lin]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Linear position of a lattice index in the dense box, or -1 when outside the box.
  std::int64_t linear(const Index<D>& a) const {
    std::int64_t lin = 0;
    for (std::size_t i = 0; i < D; ++i) {
      const std::int64_t r = a[i] - lo_[i];
      if (r < 0 || r >= static_cast<std::int64_t>(extent_[i])) return -1;
      lin += r * static_cast<std::int64_t>(stride_[i]);
    }
    return lin;
  }

  Index<D> index(std::size_t lin) const {
    Index<D> a;
    for (std::size_t i = 0; i < D; ++i) {
      a[i] = lo_[i] + static_cast<std::int64_t>(lin / stride_[i]);
      lin %= stride_[i];
    }
    return a;
  }

  Point<D> point(std::size_t lin) const { return lattice_.point(index(lin)); }

  bool in_support(const Index<D>& a) const {
    const auto lin = linear(a);
    return lin >= 0 && cells_[static_cast<std::size_t>(lin)] != Cell::None;
  }

  /// Sampler interface used by the averages.
  double value(const Index<D>& a) const {
    const auto lin = linear(a);
    if (lin < 0 || cells_[static_cast<std::size_t>(lin)] == Cell::None)
      throw Error(ErrorKind::StencilEscapesSupport, "stencil node outside the stored support");
    return values_[static_cast<std::size_t>(lin)];
  }

  /// Fill every support node with f(x).
  template <class F>
  void assign(F&& f) {
    for (std::size_t lin : support_) values_[lin] = f(point(lin));
  }

 private:
  Lattice<D> lattice_;
  double eps_ = 0.0;
  Index<D> lo_{};
  std::array<std::size_t, D> extent_{};
  std::array<std::size_t, D> stride_{};
  std::vector<Cell> cells_;
  std::vector<double> values_;
  std::vector<double> signed_distance_;
  std::vector<std::size_t> support_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> collar_;
  std::vector<std::size_t> exterior_;
};

/// Read-only view pairing the support of a field with another value buffer.
template <std::size_t D>
class FieldView {
 public:
  FieldView(const LatticeField<D>& layout, const double* data) : layout_(&layout), data_(data) {}

  double value(const Index<D>& a) const {
    const auto lin = layout_->linear(a);
    if (lin < 0 || layout_->cell(static_cast<std::size_t>(lin)) == Cell::None)
      throw Error(ErrorKind::StencilEscapesSupport, "stencil node outside the stored support");
    return data_[lin];
  }

 private:
  const LatticeField<D>* layout_;
  const double* data_;
};

/// Samples a function at the nodes of a lattice.
template <std::size_t D, class F>
class FunctionSampler {
 public:
  FunctionSampler(const Lattice<D>& lat, F f) : lat_(lat), f_(std::move(f)) {}

  double value(const Index<D>& a) const { return f_(lat_.point(a)); }
  const Lattice<D>& lattice() const { return lat_; }

 private:
  Lattice<D> lat_;
  F f_;
};

}  // namespace plapdpp
