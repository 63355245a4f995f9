#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "plapdpp/core.hpp"
#include "plapdpp/exact.hpp"
#include "plapdpp/geometry.hpp"
#include "plapdpp/solver.hpp"

namespace plapdpp {

/// Below this |xi| the logarithmic barrier replaces the power barrier.
inline constexpr double kLogBranchThreshold = 1e-8;

/// xi = (d - p)/(p - 1).
inline double barrier_xi(std::size_t d, double p) {
  return (static_cast<double>(d) - p) / (p - 1.0);
}

/// Constants of one ring step.
///
/// a = U(delta_k / 2) weight of M_k, a_prime = weight of M_k at radius
/// (2 - mu) delta_{k+1}; b = 1 - a and b_prime = 1 - a_prime are the weights of m.
struct BarrierConstants {
  double mu = 0.5;
  double xi = 0.0;
  bool log_branch = false;
  double a = 0.0;
  double b = 0.0;
  double a_prime = 0.0;
  double b_prime = 0.0;
  double theta = 0.0;  ///< (a + a_prime) / (2 a)

  /// Admissible ring-approximation error for a target eta: (a - a_prime) eta / 16.
  double gamma(double eta) const { return 0.25 * (a - a_prime) * (eta / 4.0); }
};

inline void check_barrier_inputs(double mu, std::size_t d, double p) {
  if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorKind::InvalidInput, "mu must lie in (0, 1)");
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidInput, "need 1 < p < inf");
  if (d < 1) throw Error(ErrorKind::InvalidInput, "dimension must be positive");
}

/// Contraction factor per ring for p != d:
/// (1 - (mu/(2-mu))^xi / 2 - (mu/2)^xi / 2) / (1 - (mu/2)^xi).
inline double theta(double mu, std::size_t d, double p) {
  check_barrier_inputs(mu, d, p);
  const double xi = barrier_xi(d, p);
  if (std::abs(xi) < kLogBranchThreshold)
    throw Error(ErrorKind::PEqualsD, "p = d needs the logarithmic barrier");
  const double x = std::pow(mu / (2.0 - mu), xi);
  const double y = std::pow(mu / 2.0, xi);
  const double t = (1.0 - 0.5 * x - 0.5 * y) / (1.0 - y);
  if (!(t > 0.0 && t < 1.0))
    throw Error(ErrorKind::ThetaOutOfRange, "contraction factor outside (0, 1)");
  return t;
}

/// Contraction factor of the logarithmic barrier (p = d).
inline double theta_log_branch(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorKind::InvalidInput, "mu must lie in (0, 1)");
  const double l = std::log(4.0 / mu);
  const double a = std::log(2.0 / mu) / l;
  const double a_prime = std::log((2.0 - mu) / mu) / l;
  const double t = (a + a_prime) / (2.0 * a);
  if (!(t > 0.0 && t < 1.0))
    throw Error(ErrorKind::ThetaOutOfRange, "contraction factor outside (0, 1)");
  return t;
}

inline BarrierConstants barrier_constants(double mu, std::size_t d, double p) {
  check_barrier_inputs(mu, d, p);
  BarrierConstants c;
  c.mu = mu;
  c.xi = barrier_xi(d, p);
  c.log_branch = std::abs(c.xi) < kLogBranchThreshold;
  if (c.log_branch) {
    const double l = std::log(4.0 / mu);
    c.a = std::log(2.0 / mu) / l;
    c.a_prime = std::log((2.0 - mu) / mu) / l;
    c.b = 1.0 - c.a;
    c.b_prime = 1.0 - c.a_prime;
    c.theta = theta_log_branch(mu);
    return c;
  }
  const double q = std::pow(mu / 4.0, c.xi);
  const double y = std::pow(mu / 2.0, c.xi);
  const double x = std::pow(mu / (2.0 - mu), c.xi);
  c.a = (1.0 - y) / (1.0 - q);
  c.b = (y - q) / (1.0 - q);
  c.a_prime = (1.0 - x) / (1.0 - q);
  c.b_prime = (x - q) / (1.0 - q);
  c.theta = theta(mu, d, p);
  return c;
}

/// Ring data around a boundary point y.
template <std::size_t D>
struct BarrierConfig {
  double mu = 0.5;
  double delta = 0.4;
  double p = 3.0;
  double m = 0.0;  ///< local boundary sup near y
  double M = 1.0;  ///< global boundary sup
  int k = 1;
  Point<D> z_k{};  ///< centre of the exterior ball of radius mu delta_{k+1}
  Point<D> y{};    ///< boundary point

  /// delta_j = delta / 4^(j-1).
  double delta_at(int j) const { return delta / std::pow(4.0, j - 1); }
  double inner_radius() const { return mu * delta_at(k + 1); }
  double outer_radius() const { return delta_at(k); }
};

/// U_k: p-harmonic and radial around z_k, equal to m on the inner sphere and Mk on the outer one.
template <std::size_t D>
SmoothTestFunction<D> ring_barrier(const BarrierConfig<D>& cfg, double Mk) {
  check_barrier_inputs(cfg.mu, D, cfg.p);
  const double xi = barrier_xi(D, cfg.p);
  const double r_in = cfg.inner_radius();
  const Point<D> z = cfg.z_k;
  const double m = cfg.m;
  double coef = 0.0;
  double shift = 0.0;
  SmoothTestFunction<D> base;
  if (std::abs(xi) < kLogBranchThreshold) {
    coef = (Mk - m) / std::log(4.0 / cfg.mu);
    shift = m - coef * std::log(r_in);
    base = fundamental_solution<D>(static_cast<double>(D), z);
  } else {
    const double q = std::pow(cfg.mu / 4.0, xi);
    coef = (m - Mk) * std::pow(r_in, xi) / (1.0 - q);
    shift = (Mk - q * m) / (1.0 - q);
    base = detail::radial<D>(
        "power", cfg.p, z, [xi](double r) { return std::pow(r, -xi); },
        [xi](double r) { return -xi * std::pow(r, -xi - 1.0); },
        [xi](double r) { return -xi * (-xi - 1.0) * std::pow(r, -xi - 2.0); });
  }
  SmoothTestFunction<D> u;
  u.name = "ring_barrier";
  u.eval = [=](const Point<D>& x) { return coef * base.eval(x) + shift; };
  u.grad = [=](const Point<D>& x) { return coef * base.grad(x); };
  u.hess = [=](const Point<D>& x) {
    Matrix<D> h = base.hess(x);
    for (auto& row : h)
      for (double& v : row) v *= coef;
    return h;
  };
  return u;
}

/// k0 = floor(log_theta(eta / (4 osc))) + 1, at least 1.
inline int modulus_k0(double eta, double osc_g, double mu, std::size_t d, double p) {
  if (!(eta > 0.0) || !(osc_g > 0.0))
    throw Error(ErrorKind::InvalidInput, "eta and osc(G) must be positive");
  const double th = std::abs(barrier_xi(d, p)) < kLogBranchThreshold ? theta_log_branch(mu)
                                                                      : theta(mu, d, p);
  const double ratio = eta / (4.0 * osc_g);
  const double l = std::log(ratio) / std::log(th);
  const double k0 = std::floor(l) + 1.0;
  return static_cast<int>(std::max(1.0, k0));
}

/// Fraction of sample points of the ball B(z, r) that lie outside the domain and
/// inside B(y, R); 1 means the exterior-ball condition holds on the samples.
template <std::size_t D>
double exterior_ball_fraction(const Domain<D>& dom, const Point<D>& y, double big_radius,
                              const Point<D>& z, double r, std::size_t samples,
                              std::uint64_t seed = 1) {
  CounterRng rng(seed);
  std::size_t good = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    Point<D> v;
    double n2 = 2.0;
    while (n2 > 1.0) {
      for (auto& c : v) c = rng.uniform(-1.0, 1.0);
      n2 = dot(v, v);
    }
    const Point<D> x = z + r * v;
    if (!dom.contains(x) && dom.signed_distance(x) > 0.0 && distance(x, y) < big_radius) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(samples);
}

struct RingRow {
  int k;
  double eps;
  double h;
  long iterations;
  double error;  ///< sup over the unknown nodes of |U_k^eps - U_k|
  double gamma;  ///< admissible error for the configured eta
};

/// Solves the DPP on the ring B(z_k, delta_k) minus the closed ball B(z_k, mu delta_{k+1})
/// with data U_k and measures the sup error of U_k^eps against U_k.
template <std::size_t D>
std::vector<RingRow> verify_ring_convergence(const BarrierConfig<D>& cfg, double Mk,
                                             const std::vector<double>& eps_list,
                                             const Average& average, const HRule& h_rule,
                                             double eta, const SolveOptions& opts = {}) {
  if (average.p.is_infinite() || average.p.value() != cfg.p)
    throw Error(ErrorKind::InvalidInput, "average exponent differs from the barrier exponent");
  const auto barrier = ring_barrier(cfg, Mk);
  const auto consts = barrier_constants(cfg.mu, D, cfg.p);
  const auto ring = Domain<D>::annulus(cfg.z_k, cfg.inner_radius(), cfg.outer_radius());
  const auto data = BoundaryData<D>::closed(barrier.eval);
  std::vector<RingRow> rows;
  for (double eps : eps_list) {
    if (eps > cfg.inner_radius() / 2.0 * (1.0 + 1e-12))
      throw Error(ErrorKind::InvalidInput, "eps above mu delta_{k+1} / 2");
    DppProblem<D> prob{ring, average, Flavor::HardBoundary, eps, h_rule(eps), data, cfg.z_k, {}};
    const auto r = solve(prob, opts);
    double err = 0.0;
    for (std::size_t lin : r.u.interior())
      err = std::max(err, std::abs(r.u.values()[lin] - barrier(r.u.point(lin))));
    for (std::size_t lin : r.u.collar())
      err = std::max(err, std::abs(r.u.values()[lin] - barrier(r.u.point(lin))));
    rows.push_back({cfg.k, eps, prob.h, r.iterations, err, consts.gamma(eta)});
  }
  return rows;
}

/// Outcome of one numerical induction step.
struct InductionStepReport {
  int k;
  double eps;
  double m;
  double M;
  double Mk;
  double measured;  ///< sup of u over B(y, delta_{k+1}) inside the domain
  double bound;     ///< m + theta^{k+1} (M - m) + 2 gamma / a + 2 tol
  bool holds;
};

/// Solves on the whole domain with data min(G, M_k) and checks the bound of the next ring.
template <std::size_t D>
InductionStepReport check_induction_step(const DppProblem<D>& base, const BarrierConfig<D>& cfg,
                                         double eta, const SolveOptions& opts = {}) {
  const auto consts = barrier_constants(cfg.mu, D, cfg.p);
  // m and M from the unclamped data on the eps-strip.
  ValueIteration<D> probe(base, 1);
  double m = -std::numeric_limits<double>::infinity();
  double M = -std::numeric_limits<double>::infinity();
  const auto& layout = probe.layout();
  for (std::size_t lin : layout.exterior()) {
    if (layout.signed_distance(lin) > base.eps) continue;
    const double g = probe.boundary()[lin];
    M = std::max(M, g);
    if (distance(layout.point(lin), cfg.y) < 5.0 * cfg.delta) m = std::max(m, g);
  }
  const double Mk = m + std::pow(consts.theta, cfg.k) * (M - m);
  DppProblem<D> clamped = base;
  const auto original = base.boundary;
  const Domain<D> dom = base.domain;
  clamped.boundary = BoundaryData<D>::closed(
      [original, dom, Mk](const Point<D>& x) { return std::min(original.extend(dom, x), Mk); });
  const auto r = solve(clamped, opts);
  double measured = -std::numeric_limits<double>::infinity();
  const double radius = cfg.delta_at(cfg.k + 1);
  auto visit = [&](std::size_t lin) {
    if (distance(r.u.point(lin), cfg.y) < radius) measured = std::max(measured, r.u.values()[lin]);
  };
  for (std::size_t lin : r.u.interior()) visit(lin);
  for (std::size_t lin : r.u.collar()) visit(lin);
  const double bound = m + std::pow(consts.theta, cfg.k + 1) * (M - m) +
                       2.0 * consts.gamma(eta) / consts.a + 2.0 * r.tol;
  return {cfg.k, base.eps, m, M, Mk, measured, bound, measured <= bound};
}

/// Quantities of the boundary modulus for a target eta.
struct ModulusPlan {
  double theta;
  int k0;
  double radius;  ///< delta / 4^k0
  double eps0;    ///< mu delta_{k0} / 2, the ring step's own bound on eps
};

inline ModulusPlan modulus_plan(double eta, double osc_g, double mu, double delta, std::size_t d,
                                double p) {
  const auto c = barrier_constants(mu, d, p);
  const int k0 = modulus_k0(eta, osc_g, mu, d, p);
  const double radius = delta / std::pow(4.0, k0);
  const double eps0 = mu * (delta / std::pow(4.0, k0 - 1)) / 2.0;
  return {c.theta, k0, radius, eps0};
}

struct ModulusRow {
  Point<2> y;
  double radius;
  std::size_t nodes;  ///< lattice nodes of the domain inside B(y, radius)
  double measured;    ///< sup |u - G(y)| over those nodes (0 when there are none)
};

/// sup |u(x) - G(y)| over lattice nodes x of the domain with |x - y| < radius.
template <std::size_t D>
ModulusRow measure_modulus(const SolveResult<D>& r, const Point<D>& y, double gy, double radius) {
  ModulusRow row{};
  if constexpr (D == 2) row.y = y;
  row.radius = radius;
  auto visit = [&](std::size_t lin) {
    if (distance(r.u.point(lin), y) < radius) {
      ++row.nodes;
      row.measured = std::max(row.measured, std::abs(r.u.values()[lin] - gy));
    }
  };
  for (std::size_t lin : r.u.interior()) visit(lin);
  for (std::size_t lin : r.u.collar()) visit(lin);
  return row;
}

}  // namespace plapdpp
