#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "plapdpp/core.hpp"
#include "plapdpp/geometry.hpp"
#include "plapdpp/quadrature.hpp"

namespace plapdpp {

enum class AverageKind {
  IntegralP2,       ///< ball mean (Laplacian)
  SupInfInfty,      ///< midrange of the ball (infinity-Laplacian)
  ConvexP,          ///< alpha_p * midrange + beta_p * mean, configurable quadrature
  PToInfty,         ///< (1 - eps^3) * midrange + eps^3 * mean
  Directional,      ///< midrange over directions of the tilted segment average (d = 2)
  DiscreteP,        ///< ConvexP with the lattice midpoint sum
  FiveDiagLaplace,  ///< nearest-neighbour mean, eps = h
};

inline const char* to_string(AverageKind k) {
  switch (k) {
    case AverageKind::IntegralP2: return "IntegralP2";
    case AverageKind::SupInfInfty: return "SupInfInfty";
    case AverageKind::ConvexP: return "ConvexP";
    case AverageKind::PToInfty: return "PToInfty";
    case AverageKind::Directional: return "Directional";
    case AverageKind::DiscreteP: return "DiscreteP";
    case AverageKind::FiveDiagLaplace: return "FiveDiagLaplace";
  }
  return "?";
}

inline AverageKind average_kind_from_string(const std::string& s) {
  for (auto k : {AverageKind::IntegralP2, AverageKind::SupInfInfty, AverageKind::ConvexP,
                 AverageKind::PToInfty, AverageKind::Directional, AverageKind::DiscreteP,
                 AverageKind::FiveDiagLaplace})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::ConfigError, "unknown average kind '" + s + "'");
}

/// Second-order operator that (phi - A_eps[phi]) / (c eps^2) approximates with a minus sign.
enum class LimitOperator { Laplacian, NormalizedP };

/// Weights of the midrange and mean parts of a convex average.
struct MixWeights {
  double alpha;  ///< weight of (max + min) / 2
  double beta;   ///< weight of the mean
};

/// Description of an average operator A_eps (independent of eps and h).
struct Average {
  AverageKind kind = AverageKind::IntegralP2;
  Exponent p = 2.0;
  std::size_t dimension = 2;
  int quadrature_order = 1;  ///< 1 = midpoint; k in [2, 7] = composite closed Newton-Cotes
  int direction_count = 32;
  int disk_nodes = 33;

  static Average integral(std::size_t d = 2, int order = 1) {
    return validated({AverageKind::IntegralP2, 2.0, d, order});
  }
  static Average supinf(std::size_t d = 2) {
    return validated({AverageKind::SupInfInfty, Exponent::infinity(), d});
  }
  static Average convex(Exponent p, std::size_t d = 2, int order = 1) {
    return validated({AverageKind::ConvexP, p, d, order});
  }
  static Average discrete(Exponent p, std::size_t d = 2) {
    return validated({AverageKind::DiscreteP, p, d});
  }
  static Average p_to_infty(std::size_t d = 2, int order = 1) {
    return validated({AverageKind::PToInfty, Exponent::infinity(), d, order});
  }
  static Average directional(double p, int direction_count = 32, int disk_nodes = 33) {
    return validated({AverageKind::Directional, p, 2, 2, direction_count, disk_nodes});
  }
  static Average five_diag(std::size_t d = 2) {
    return validated({AverageKind::FiveDiagLaplace, 2.0, d});
  }

  /// Checks the parameter ranges of the kind; throws InvalidInput or NonMonotoneOrder.
  static Average validated(Average a) {
    if (a.dimension < 1) throw Error(ErrorKind::InvalidInput, "dimension must be positive");
    if (a.quadrature_order > kMaxNewtonCotesOrder)
      throw Error(ErrorKind::NonMonotoneOrder, "quadrature order above 7");
    if (a.quadrature_order < 1) throw Error(ErrorKind::InvalidInput, "quadrature order below 1");
    switch (a.kind) {
      case AverageKind::ConvexP:
      case AverageKind::DiscreteP:
        if (!a.p.is_infinite() && !(a.p.value() >= 2.0))
          throw Error(ErrorKind::InvalidInput, "convex p-average needs p >= 2");
        if (a.kind == AverageKind::DiscreteP) a.quadrature_order = 1;
        break;
      case AverageKind::Directional:
        if (a.dimension != 2)
          throw Error(ErrorKind::UnsupportedDimension, "directional average is planar");
        if (a.p.is_infinite() || !(a.p.value() > 1.0))
          throw Error(ErrorKind::InvalidInput, "directional average needs 1 < p < inf");
        if (a.direction_count < 8 || a.direction_count % 2 != 0)
          throw Error(ErrorKind::InvalidInput, "direction_count must be even and >= 8");
        if (a.disk_nodes < 2) throw Error(ErrorKind::InvalidInput, "disk_nodes must be >= 2");
        break;
      case AverageKind::IntegralP2:
      case AverageKind::FiveDiagLaplace:
        a.p = 2.0;
        break;
      case AverageKind::SupInfInfty:
      case AverageKind::PToInfty:
        a.p = Exponent::infinity();
        break;
    }
    return a;
  }

  /// alpha and beta at a given eps (only PToInfty depends on eps).
  MixWeights weights(double eps) const {
    const double d = static_cast<double>(dimension);
    switch (kind) {
      case AverageKind::IntegralP2:
      case AverageKind::FiveDiagLaplace:
        return {0.0, 1.0};
      case AverageKind::SupInfInfty:
        return {1.0, 0.0};
      case AverageKind::PToInfty: {
        const double e3 = eps * eps * eps;
        return {1.0 - e3, e3};
      }
      case AverageKind::ConvexP:
      case AverageKind::DiscreteP:
      case AverageKind::Directional: {
        if (p.is_infinite()) return {1.0, 0.0};
        const double pv = p.value();
        const double beta = (2.0 + d) / (pv + d);
        return {1.0 - beta, beta};
      }
    }
    return {0.0, 1.0};
  }

  /// The constant c in phi = A_eps[phi] + c eps^2 (-L phi) + o(eps^2).
  double c_mvp() const {
    const double d = static_cast<double>(dimension);
    switch (kind) {
      case AverageKind::IntegralP2: return 1.0 / (2.0 * (2.0 + d));
      case AverageKind::FiveDiagLaplace: return 1.0 / (2.0 * d);
      case AverageKind::SupInfInfty:
      case AverageKind::PToInfty: return 0.5;
      case AverageKind::ConvexP:
      case AverageKind::DiscreteP:
      case AverageKind::Directional:
        if (p.is_infinite()) return 0.5;
        return p.value() / (2.0 * (p.value() + d));
    }
    return 1.0;
  }

  /// Operator L matching c_mvp: the plain Laplacian for the two Laplacian averages,
  /// the normalized p-Laplacian (p = inf: normalized infinity-Laplacian) otherwise.
  LimitOperator limit_operator() const {
    return (kind == AverageKind::IntegralP2 || kind == AverageKind::FiveDiagLaplace)
               ? LimitOperator::Laplacian
               : LimitOperator::NormalizedP;
  }

  /// True when the average is (alpha * midrange + beta * uniform mean) over the discrete ball.
  bool is_midpoint_mix() const {
    switch (kind) {
      case AverageKind::SupInfInfty:
      case AverageKind::DiscreteP: return true;
      case AverageKind::IntegralP2:
      case AverageKind::ConvexP:
      case AverageKind::PToInfty: return quadrature_order == 1;
      case AverageKind::Directional:
      case AverageKind::FiveDiagLaplace: return false;
    }
    return false;
  }

  std::string name() const {
    std::string s = to_string(kind);
    if (kind == AverageKind::ConvexP || kind == AverageKind::DiscreteP ||
        kind == AverageKind::Directional)
      s += "(p=" + p.to_string() + ")";
    return s;
  }
};

namespace detail {

/// A lattice offset with a weight.
template <std::size_t D>
struct WeightedOffset {
  Index<D> offset;
  double weight;
};

}  // namespace detail

/// An average instantiated for a lattice spacing h and a radius eps.
///
/// Evaluation reads a sampler (any type with `double value(const Index<D>&) const`)
/// on the lattice nodes of the discrete ball around a lattice node x. For fixed
/// (h, eps) the stencil, quadrature weights and interpolation tables are built once.
template <std::size_t D>
class Averager {
 public:
  Averager(const Average& avg, double h, double eps)
      : avg_(Average::validated(avg)), h_(h), eps_(eps), ball_(h, eps), mix_(avg_.weights(eps)) {
    if (avg_.dimension != D)
      throw Error(ErrorKind::InvalidInput, "average dimension does not match the lattice");
    switch (avg_.kind) {
      case AverageKind::FiveDiagLaplace: build_five_point(); break;
      case AverageKind::Directional: build_directional(); break;
      default:
        if (mix_.beta > 0.0 && avg_.quadrature_order > 1) build_ball_weights();
        break;
    }
  }

  const Average& average() const { return avg_; }
  double h() const { return h_; }
  double eps() const { return eps_; }
  const BallStencil<D>& ball() const { return ball_; }
  MixWeights mix() const { return mix_; }

  /// Largest index offset read by an evaluation (in every axis).
  std::int64_t reach() const {
    if (avg_.kind == AverageKind::FiveDiagLaplace) return 1;
    if (avg_.kind == AverageKind::Directional) return directional_reach_;
    return ball_.radius();
  }

  template <class Sampler>
  double operator()(const Sampler& f, const Index<D>& x) const {
    switch (avg_.kind) {
      case AverageKind::FiveDiagLaplace: return weighted_sum(f, x, five_point_);
      case AverageKind::Directional: return directional(f, x);
      default: break;
    }
    const double mid = uses_midrange() ? midrange(f, x) : 0.0;
    const double avg = uses_mean() ? mean(f, x) : 0.0;
    return combine(mid, avg);
  }

  bool uses_midrange() const { return avg_.kind != AverageKind::IntegralP2; }

  bool uses_mean() const {
    switch (avg_.kind) {
      case AverageKind::SupInfInfty: return false;
      case AverageKind::ConvexP:
      case AverageKind::DiscreteP: return !avg_.p.is_infinite();
      default: return true;
    }
  }

  /// Final value of a ball-based average from its midrange and mean parts.
  double combine(double midrange_part, double mean_part) const {
    if (!uses_mean()) return midrange_part;
    if (!uses_midrange()) return mean_part;
    return mix_.alpha * midrange_part + mix_.beta * mean_part;
  }

  /// (max + min) / 2 over the discrete ball.
  template <class Sampler>
  double midrange(const Sampler& f, const Index<D>& x) const {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& a : ball_.offsets()) {
      const double v = f.value(shift(x, a));
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    return 0.5 * hi + 0.5 * lo;
  }

  /// Quadrature mean over the discrete ball with the configured rule.
  template <class Sampler>
  double mean(const Sampler& f, const Index<D>& x) const {
    if (!ball_weights_.empty()) return weighted_sum(f, x, ball_weights_);
    double s = 0.0;
    for (const auto& a : ball_.offsets()) s += f.value(shift(x, a));
    return s / static_cast<double>(ball_.size());
  }

 private:
  static Index<D> shift(const Index<D>& x, const Index<D>& a) {
    Index<D> y;
    for (std::size_t i = 0; i < D; ++i) y[i] = x[i] + a[i];
    return y;
  }

  template <class Sampler>
  static double weighted_sum(const Sampler& f, const Index<D>& x,
                             const std::vector<detail::WeightedOffset<D>>& w) {
    double s = 0.0;
    for (const auto& t : w) s += t.weight * f.value(shift(x, t.offset));
    return s;
  }

  void build_ball_weights() {
    const auto n = static_cast<int>(2 * ball_.radius() + 1);
    const auto w1 = newton_cotes_weights(avg_.quadrature_order, n);
    double total = 0.0;
    for (const auto& a : ball_.offsets()) {
      double w = 1.0;
      for (std::size_t i = 0; i < D; ++i) w *= w1[static_cast<std::size_t>(a[i] + ball_.radius())];
      ball_weights_.push_back({a, w});
      total += w;
    }
    for (auto& t : ball_weights_) t.weight /= total;
  }

  void build_five_point() {
    if (std::abs(eps_ - h_) > 1e-12 * h_)
      throw Error(ErrorKind::InvalidInput, "nearest-neighbour average needs eps = h");
    for (std::size_t i = 0; i < D; ++i)
      for (int s : {-1, 1}) {
        Index<D> a{};
        a[i] = s;
        five_point_.push_back({a, 1.0 / (2.0 * static_cast<double>(D))});
      }
  }

  // Bilinear interpolation of the lattice at an offset given in units of h.
  void add_bilinear(std::vector<detail::WeightedOffset<D>>& out, const Point<D>& offset,
                    double weight) {
    if constexpr (D == 2) {
      const double fx = std::floor(offset[0]);
      const double fy = std::floor(offset[1]);
      double tx = offset[0] - fx;
      double ty = offset[1] - fy;
      // Snap round-off so that on-lattice samples do not touch a neighbouring node.
      if (tx < 1e-12) tx = 0.0;
      if (ty < 1e-12) ty = 0.0;
      if (tx > 1.0 - 1e-12) tx = 1.0;
      if (ty > 1.0 - 1e-12) ty = 1.0;
      const auto ix = static_cast<std::int64_t>(fx);
      const auto iy = static_cast<std::int64_t>(fy);
      const double corner[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
      const Index<D> idx[4] = {{ix, iy}, {ix + 1, iy}, {ix, iy + 1}, {ix + 1, iy + 1}};
      for (int c = 0; c < 4; ++c) {
        if (corner[c] == 0.0) continue;
        out.push_back({idx[c], weight * corner[c]});
        for (std::size_t i = 0; i < D; ++i)
          directional_reach_ = std::max(directional_reach_, std::abs(idx[c][i]));
      }
    } else {
      (void)out;
      (void)offset;
      (void)weight;
    }
  }

  void build_directional() {
    if constexpr (D != 2) {
      throw Error(ErrorKind::UnsupportedDimension, "directional average is planar");
    } else {
      const double pv = avg_.p.value();
      const double d = 2.0;
      const double w_tip = (pv - 1.0) / (pv + d);
      const double w_disk = (1.0 + d) / (pv + d);
      const auto seg = newton_cotes_weights(avg_.quadrature_order, avg_.disk_nodes);
      const double r = eps_ / h_;
      const int k = avg_.direction_count;
      for (int j = 0; j < k; ++j) {
        const double angle = 2.0 * std::numbers::pi * j / k;
        const Point<2> nu{std::cos(angle), std::sin(angle)};
        const Point<2> perp{-nu[1], nu[0]};
        std::vector<detail::WeightedOffset<2>> list;
        add_bilinear(list, r * nu, w_tip);
        for (int i = 0; i < avg_.disk_nodes; ++i) {
          const double s = -1.0 + 2.0 * i / (avg_.disk_nodes - 1);
          add_bilinear(list, (r * s) * perp, w_disk * seg[static_cast<std::size_t>(i)]);
        }
        directions_.push_back(std::move(list));
      }
    }
  }

  template <class Sampler>
  double directional(const Sampler& f, const Index<D>& x) const {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& list : directions_) {
      const double v = weighted_sum(f, x, list);
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    return 0.5 * hi + 0.5 * lo;
  }

  Average avg_;
  double h_;
  double eps_;
  BallStencil<D> ball_;
  MixWeights mix_;
  std::vector<detail::WeightedOffset<D>> ball_weights_;
  std::vector<detail::WeightedOffset<D>> five_point_;
  std::vector<std::vector<detail::WeightedOffset<D>>> directions_;
  std::int64_t directional_reach_ = 0;
};

// Free-function forms. The sampler must expose lattice() so that eps can be
// converted to a stencil; x is a lattice index.

template <std::size_t D, class Field>
double avg_integral(const Field& field, const Index<D>& x, double eps, int quadrature_order = 1) {
  return Averager<D>(Average::integral(D, quadrature_order), field.lattice().h, eps)(field, x);
}

template <std::size_t D, class Field>
double avg_supinf(const Field& field, const Index<D>& x, double eps) {
  return Averager<D>(Average::supinf(D), field.lattice().h, eps)(field, x);
}

template <std::size_t D, class Field>
double avg_p(const Field& field, const Index<D>& x, double eps, Exponent p,
             int quadrature_order = 1) {
  return Averager<D>(Average::convex(p, D, quadrature_order), field.lattice().h, eps)(field, x);
}

template <std::size_t D, class Field>
double avg_p_to_infty(const Field& field, const Index<D>& x, double eps, int quadrature_order = 1) {
  return Averager<D>(Average::p_to_infty(D, quadrature_order), field.lattice().h, eps)(field, x);
}

template <class Field>
double avg_directional(const Field& field, const Index<2>& x, double eps, double p,
                       int direction_count = 32, int disk_nodes = 33) {
  return Averager<2>(Average::directional(p, direction_count, disk_nodes), field.lattice().h,
                     eps)(field, x);
}

}  // namespace plapdpp
