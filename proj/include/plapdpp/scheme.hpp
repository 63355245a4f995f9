#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "plapdpp/averages.hpp"
#include "plapdpp/core.hpp"
#include "plapdpp/exact.hpp"
#include "plapdpp/geometry.hpp"

namespace plapdpp {

/// HardBoundary: u = A[u] in Omega, u = G outside.
/// DeltaWeighted: u = delta A[u] + (1 - delta) G with delta = dist(x, boundary)/eps on the inner collar.
enum class Flavor { HardBoundary, DeltaWeighted };

inline const char* to_string(Flavor f) {
  return f == Flavor::HardBoundary ? "HardBoundary" : "DeltaWeighted";
}

inline Flavor flavor_from_string(const std::string& s) {
  if (s == "HardBoundary") return Flavor::HardBoundary;
  if (s == "DeltaWeighted") return Flavor::DeltaWeighted;
  throw Error(ErrorKind::ConfigError, "unknown flavor '" + s + "'");
}

/// Collar weight dist(x, boundary)/eps from a (negative) signed distance.
inline double collar_weight(double signed_distance, double eps) {
  return std::clamp(-signed_distance / eps, 0.0, 1.0);
}

/// Scheme row S(eps, x, t, u) at the node `lin` of `layout`.
///
/// `u` is any sampler over the lattice of `layout`; `boundary` holds G on the
/// same dense layout. Collar rows of the DeltaWeighted flavor take precedence
/// over the interior formula.
template <std::size_t D, class Sampler>
double scheme_value(const Averager<D>& avg, Flavor flavor, const LatticeField<D>& layout,
                    const Sampler& u, std::size_t lin, double t,
                    const std::vector<double>& boundary) {
  const Cell c = layout.cell(lin);
  switch (c) {
    case Cell::Exterior:
      return t - boundary[lin];
    case Cell::Collar:
      if (flavor == Flavor::DeltaWeighted) {
        const double w = collar_weight(layout.signed_distance(lin), layout.eps());
        return t - w * avg(u, layout.index(lin)) - (1.0 - w) * boundary[lin];
      }
      [[fallthrough]];
    case Cell::Interior: {
      const double c_eps2 = avg.average().c_mvp() * avg.eps() * avg.eps();
      return (t - avg(u, layout.index(lin))) / c_eps2;
    }
    case Cell::None:
      break;
  }
  throw Error(ErrorKind::StencilEscapesSupport, "scheme row requested outside the support");
}

template <std::size_t D>
double scheme_value(const Averager<D>& avg, Flavor flavor, const LatticeField<D>& u,
                    std::size_t lin, double t, const std::vector<double>& boundary) {
  return scheme_value(avg, flavor, u, u, lin, t, boundary);
}

/// L phi(x) for the operator the average is consistent with.
template <std::size_t D>
double limit_operator_value(const Average& avg, const SmoothTestFunction<D>& phi,
                            const Point<D>& x) {
  if (avg.limit_operator() == LimitOperator::Laplacian) return laplacian(phi, x);
  return normalized_p_laplacian(phi, x, avg.p);
}

/// Interior scheme value S(eps, x, phi(x), phi) on the lattice x + hZ^d.
///
/// Evaluated as -A[phi - phi(x)](x) / (c eps^2), which is the same quantity by
/// affine invariance but avoids cancelling phi(x) against the average.
template <std::size_t D>
double interior_scheme_value(const Averager<D>& avg, const SmoothTestFunction<D>& phi,
                             const Point<D>& x) {
  const double center = phi(x);
  const Lattice<D> lat(avg.h(), x);
  auto shifted = [&](const Point<D>& y) { return phi(y) - center; };
  const FunctionSampler<D, decltype(shifted)> sampler(lat, shifted);
  const double c_eps2 = avg.average().c_mvp() * avg.eps() * avg.eps();
  return -avg(sampler, Index<D>{}) / c_eps2;
}

struct ConsistencyRow {
  double eps;
  double h;
  double scheme;     ///< S(eps, x, phi(x), phi)
  double target;     ///< -L phi(x)
  double residual;   ///< |scheme - target|
};

/// Residual table of the interior scheme against -L phi(x), one row per eps.
/// `h_of_eps` maps eps to the lattice spacing.
template <std::size_t D, class HRule>
std::vector<ConsistencyRow> check_consistency(const Average& avg, const SmoothTestFunction<D>& phi,
                                              const Point<D>& x, const std::vector<double>& eps_list,
                                              HRule&& h_of_eps) {
  if (avg.limit_operator() == LimitOperator::NormalizedP &&
      norm(phi.grad(x)) <= kGradientFloor)
    throw Error(ErrorKind::VanishingGradient, "consistency needs a non-vanishing gradient");
  const double target = -limit_operator_value(avg, phi, x);
  std::vector<ConsistencyRow> rows;
  for (double eps : eps_list) {
    const double h = h_of_eps(eps);
    const Averager<D> a(avg, h, eps);
    const double s = interior_scheme_value(a, phi, x);
    rows.push_back({eps, h, s, target, std::abs(s - target)});
  }
  return rows;
}

struct MonotoneViolation {
  std::size_t trial;
  std::size_t node;
  double s_lower;  ///< S at the smaller field
  double s_upper;  ///< S at the larger field
};

struct MonotonicityReport {
  std::string average;
  Flavor flavor;
  std::size_t trials = 0;
  std::vector<MonotoneViolation> violations;
};

/// Random check that u <= v implies S(eps, x, t, v) <= S(eps, x, t, u) + 1e-12.
///
/// Each trial draws a support node x and t in [-2, 2], then u uniform in
/// [-1, 1], v = u + (non-negative noise, zero on about half of the nodes) and
/// G in [-1, 1] on the support nodes of the box that the stencil of x can read.
template <std::size_t D>
MonotonicityReport check_monotone(const Average& avg, Flavor flavor, std::size_t trials,
                                  std::uint64_t seed, const Domain<D>& domain, double h,
                                  double eps) {
  const Averager<D> a(avg, h, eps);
  const double strip = eps + 2.0 * h;
  const Lattice<D> lat(h, Point<D>{});
  const LatticeField<D> layout = LatticeField<D>::build(domain, lat, eps, strip);
  const auto& support = layout.support();
  const std::int64_t reach = a.reach();
  CounterRng rng(seed);
  MonotonicityReport report{avg.name(), flavor, trials, {}};
  std::vector<double> u_values(layout.dense_size(), 0.0);
  std::vector<double> v_values(layout.dense_size(), 0.0);
  std::vector<double> g_values(layout.dense_size(), 0.0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t node = support[rng.below(support.size())];
    const double t = rng.uniform(-2.0, 2.0);
    const Index<D> centre = layout.index(node);
    Index<D> off;
    off.fill(-reach);
    while (true) {
      Index<D> y;
      for (std::size_t i = 0; i < D; ++i) y[i] = centre[i] + off[i];
      const auto lin = layout.linear(y);
      if (lin >= 0 && layout.cell(static_cast<std::size_t>(lin)) != Cell::None) {
        const auto l = static_cast<std::size_t>(lin);
        u_values[l] = rng.uniform(-1.0, 1.0);
        const double coin = rng.uniform();
        const double bump = rng.uniform();
        v_values[l] = u_values[l] + (coin < 0.5 ? 0.0 : bump);
        g_values[l] = rng.uniform(-1.0, 1.0);
      }
      std::size_t k = D;
      while (k > 0 && ++off[k - 1] > reach) off[--k] = -reach;
      if (k == 0) break;
    }
    const FieldView<D> u(layout, u_values.data());
    const FieldView<D> v(layout, v_values.data());
    const double su = scheme_value(a, flavor, layout, u, node, t, g_values);
    const double sv = scheme_value(a, flavor, layout, v, node, t, g_values);
    if (!(sv <= su + 1e-12)) report.violations.push_back({trial, node, su, sv});
  }
  return report;
}

}  // namespace plapdpp
