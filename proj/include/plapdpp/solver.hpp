#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "plapdpp/averages.hpp"
#include "plapdpp/core.hpp"
#include "plapdpp/exact.hpp"
#include "plapdpp/geometry.hpp"
#include "plapdpp/kernel.hpp"
#include "plapdpp/scheme.hpp"

namespace plapdpp {

/// Boundary datum g on the boundary and its extension G to the outer strip.
template <std::size_t D>
struct BoundaryData {
  enum class Extension { NearestBoundaryPoint, ClosedForm };

  std::function<double(const Point<D>&)> g;
  Extension extension = Extension::NearestBoundaryPoint;
  std::function<double(const Point<D>&)> closed_form;  ///< used when extension == ClosedForm

  /// G(x) = g(nearest boundary point of x).
  static BoundaryData nearest(std::function<double(const Point<D>&)> g) {
    return {std::move(g), Extension::NearestBoundaryPoint, {}};
  }

  /// G = f on the whole extended domain, g = f on the boundary.
  static BoundaryData closed(std::function<double(const Point<D>&)> f) {
    return {f, Extension::ClosedForm, f};
  }

  double extend(const Domain<D>& dom, const Point<D>& x) const {
    if (extension == Extension::ClosedForm) return closed_form(x);
    return g(dom.nearest_boundary_point(x));
  }
};

/// Lattice spacing as a function of eps.
struct HRule {
  enum class Kind { Cubic, Quadratic, Fixed, Ratio };
  Kind kind = Kind::Cubic;
  double value = 1.0;  ///< factor (Quadratic), spacing (Fixed) or eps/h (Ratio)

  static HRule cubic() { return {Kind::Cubic, 1.0}; }
  static HRule quadratic(double factor = 1.0) { return {Kind::Quadratic, factor}; }
  static HRule fixed(double h) { return {Kind::Fixed, h}; }
  static HRule ratio(double eps_over_h) { return {Kind::Ratio, eps_over_h}; }

  double operator()(double eps) const {
    switch (kind) {
      case Kind::Cubic: return eps * eps * eps;
      case Kind::Quadratic: return value * eps * eps;
      case Kind::Fixed: return value;
      case Kind::Ratio: return eps / value;
    }
    return eps;
  }

  std::string name() const {
    char buf[64];
    switch (kind) {
      case Kind::Cubic: return "Cubic";
      case Kind::Quadratic: std::snprintf(buf, sizeof buf, "Quadratic(%.17g)", value); return buf;
      case Kind::Fixed: std::snprintf(buf, sizeof buf, "Fixed(%.17g)", value); return buf;
      case Kind::Ratio: std::snprintf(buf, sizeof buf, "Ratio(%.17g)", value); return buf;
    }
    return "?";
  }
};

template <std::size_t D>
struct DppProblem {
  Domain<D> domain;
  Average average;
  Flavor flavor = Flavor::HardBoundary;
  double eps = 0.1;
  double h = 1e-3;
  BoundaryData<D> boundary;
  Point<D> origin{};                       ///< lattice anchor
  std::optional<double> strip_width;      ///< stored width of the outer strip (default eps + 2h)

  double strip() const { return strip_width.value_or(eps + 2.0 * h); }
};

enum class InitKind { BoundaryInf, Zero, Given };

struct SolveOptions {
  std::optional<double> tol;        ///< default 1e-9 * osc(G), at least 1e-14
  std::optional<long> max_iters;    ///< default min(50 (diam/eps)^2, 1e6)
  InitKind init = InitKind::BoundaryInf;
  std::vector<double> given;        ///< dense initial values for InitKind::Given
  unsigned threads = 0;             ///< 0: PLAPDPP_THREADS or 1
};

template <std::size_t D>
struct SolveResult {
  LatticeField<D> u;
  std::vector<double> boundary;  ///< G on the dense layout (0 off the support)
  long iterations = 0;
  double final_update_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  double tol = 0.0;
  double g_min = 0.0;  ///< inf of G over the data nodes
  double g_max = 0.0;  ///< sup of G over the data nodes
};

/// Raised when value iteration stops at max_iters; carries the last iterate.
template <std::size_t D>
class NotConvergedError : public Error {
 public:
  explicit NotConvergedError(SolveResult<D> partial)
      : Error(ErrorKind::NotConverged,
              "value iteration stopped after " + std::to_string(partial.iterations) +
                  " iterations"),
        partial_(std::move(partial)) {}

  const SolveResult<D>& partial() const { return partial_; }

 private:
  SolveResult<D> partial_;
};

/// Jacobi value iteration for one DPP on a fixed lattice.
///
/// Owns the layout, the boundary values and two buffers; each sweep reads one
/// buffer and writes the other.
template <std::size_t D>
class ValueIteration {
 public:
  explicit ValueIteration(const DppProblem<D>& prob, unsigned threads = 0)
      : prob_(prob), averager_(validate(prob)), threads_(threads ? threads : sweep_threads()) {
    const Lattice<D> lat(prob.h, prob.origin);
    layout_ = LatticeField<D>::build(prob.domain, lat, prob.eps, prob.strip());
    if (layout_.interior().empty() && layout_.collar().empty())
      throw Error(ErrorKind::InvalidInput, "no lattice node inside the domain");

    boundary_.assign(layout_.dense_size(), 0.0);
    for (std::size_t lin : layout_.support())
      boundary_[lin] = prob.boundary.extend(prob.domain, layout_.point(lin));

    g_min_ = std::numeric_limits<double>::infinity();
    g_max_ = -std::numeric_limits<double>::infinity();
    auto widen = [&](std::size_t lin) {
      g_min_ = std::min(g_min_, boundary_[lin]);
      g_max_ = std::max(g_max_, boundary_[lin]);
    };
    for (std::size_t lin : layout_.exterior()) widen(lin);
    if (prob.flavor == Flavor::DeltaWeighted)
      for (std::size_t lin : layout_.collar()) widen(lin);

    collar_weight_.assign(layout_.collar().size(), 1.0);
    if (prob.flavor == Flavor::DeltaWeighted)
      for (std::size_t k = 0; k < layout_.collar().size(); ++k)
        collar_weight_[k] = collar_weight(layout_.signed_distance(layout_.collar()[k]), prob.eps);

    if (prob.average.is_midpoint_mix())
      kernel_ = std::make_unique<BallKernel<D>>(layout_, averager_);

    current_.assign(layout_.dense_size(), 0.0);
    next_.assign(layout_.dense_size(), 0.0);
    scratch_.assign(layout_.dense_size(), 0.0);
  }

  ValueIteration(const ValueIteration&) = delete;
  ValueIteration& operator=(const ValueIteration&) = delete;

  const LatticeField<D>& layout() const { return layout_; }
  const Averager<D>& averager() const { return averager_; }
  const std::vector<double>& boundary() const { return boundary_; }
  const std::vector<double>& values() const { return current_; }
  double g_min() const { return g_min_; }
  double g_max() const { return g_max_; }
  long iterations() const { return iterations_; }
  double last_update() const { return last_update_; }

  /// Resets the iterate; data nodes get G, unknown nodes the chosen start value.
  void initialize(InitKind init, const std::vector<double>& given = {}) {
    if (init == InitKind::Given && given.size() != layout_.dense_size())
      throw Error(ErrorKind::InvalidInput, "initial field does not match the layout");
    std::fill(current_.begin(), current_.end(), 0.0);
    for (std::size_t lin : layout_.exterior()) current_[lin] = boundary_[lin];
    auto start = [&](std::size_t lin) {
      switch (init) {
        case InitKind::BoundaryInf: return g_min_;
        case InitKind::Zero: return 0.0;
        case InitKind::Given: return given[lin];
      }
      return 0.0;
    };
    for (std::size_t lin : layout_.interior()) current_[lin] = start(lin);
    for (std::size_t lin : layout_.collar()) current_[lin] = start(lin);
    next_ = current_;
    iterations_ = 0;
    last_update_ = std::numeric_limits<double>::infinity();
  }

  /// One Jacobi sweep; returns sup |u_new - u_old|.
  double sweep() {
    const double* in = current_.data();
    double* avg_out = scratch_.data();
    if (kernel_) {
      kernel_->apply(in, avg_out, threads_);
    } else {
      generic_averages(in, avg_out);
    }
    double diff = 0.0;
    for (std::size_t lin : layout_.interior()) {
      next_[lin] = avg_out[lin];
      diff = std::max(diff, std::abs(next_[lin] - current_[lin]));
    }
    const auto& collar = layout_.collar();
    for (std::size_t k = 0; k < collar.size(); ++k) {
      const std::size_t lin = collar[k];
      const double w = collar_weight_[k];
      next_[lin] = (prob_.flavor == Flavor::DeltaWeighted)
                       ? w * avg_out[lin] + (1.0 - w) * boundary_[lin]
                       : avg_out[lin];
      diff = std::max(diff, std::abs(next_[lin] - current_[lin]));
    }
    std::swap(current_, next_);
    ++iterations_;
    last_update_ = diff;
    return diff;
  }

  /// Sweeps until the update is at most tol or max_iters sweeps have been done in total.
  bool run(double tol, long max_iters) {
    while (iterations_ < max_iters) {
      if (sweep() <= tol) return true;
    }
    return last_update_ <= tol;
  }

  SolveResult<D> result(double tol) const {
    SolveResult<D> r;
    r.u = layout_;
    r.u.values() = current_;
    r.boundary = boundary_;
    r.iterations = iterations_;
    r.final_update_norm = last_update_;
    r.converged = last_update_ <= tol;
    r.tol = tol;
    r.g_min = g_min_;
    r.g_max = g_max_;
    return r;
  }

  double default_tol() const { return std::max(1e-9 * (g_max_ - g_min_), 1e-14); }

  long default_max_iters() const {
    const double ratio = prob_.domain.diameter() / prob_.eps;
    return static_cast<long>(std::min(50.0 * ratio * ratio, 1e6));
  }

 private:
  static Averager<D> validate(const DppProblem<D>& prob) {
    if (!(prob.eps > 0.0 && prob.eps < 1.0))
      throw Error(ErrorKind::InvalidInput, "eps must lie in (0, 1)");
    if (!(prob.h > 0.0)) throw Error(ErrorKind::InvalidInput, "h must be positive");
    if (prob.domain.diameter() / prob.h < 10.0)
      throw Error(ErrorKind::InvalidInput, "lattice too coarse for the domain");
    Averager<D> a(prob.average, prob.h, prob.eps);
    double reach = prob.eps;
    if (prob.average.kind == AverageKind::Directional) reach += std::sqrt(2.0) * prob.h;
    if (prob.average.kind == AverageKind::FiveDiagLaplace) reach = prob.h;
    if (prob.strip() < reach * (1.0 - 1e-12))
      throw Error(ErrorKind::StencilEscapesSupport,
                  "outer strip narrower than the stencil reach; widen the strip or lower eps");
    return a;
  }

  void generic_averages(const double* in, double* out) const {
    const FieldView<D> view(layout_, in);
    std::vector<std::size_t> nodes = layout_.interior();
    nodes.insert(nodes.end(), layout_.collar().begin(), layout_.collar().end());
    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t k = lo; k < hi; ++k) out[nodes[k]] = averager_(view, layout_.index(nodes[k]));
    };
    if (threads_ <= 1) {
      work(0, nodes.size());
      return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads_; ++t)
      pool.emplace_back(work, nodes.size() * t / threads_, nodes.size() * (t + 1) / threads_);
    for (auto& th : pool) th.join();
  }

  DppProblem<D> prob_;
  Averager<D> averager_;
  unsigned threads_;
  LatticeField<D> layout_;
  std::unique_ptr<BallKernel<D>> kernel_;
  std::vector<double> boundary_;
  std::vector<double> collar_weight_;
  std::vector<double> current_;
  std::vector<double> next_;
  std::vector<double> scratch_;
  double g_min_ = 0.0;
  double g_max_ = 0.0;
  long iterations_ = 0;
  double last_update_ = std::numeric_limits<double>::infinity();
};

/// Fixed point of the DPP by value iteration; throws NotConvergedError<D> at max_iters.
template <std::size_t D>
SolveResult<D> solve(const DppProblem<D>& prob, const SolveOptions& opts = {}) {
  ValueIteration<D> vi(prob, opts.threads);
  const double tol = opts.tol.value_or(vi.default_tol());
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tolerance must be positive");
  const long max_iters = opts.max_iters.value_or(vi.default_max_iters());
  vi.initialize(opts.init, opts.given);
  vi.run(tol, max_iters);
  SolveResult<D> r = vi.result(tol);
  if (!r.converged) throw NotConvergedError<D>(std::move(r));
  return r;
}

/// Largest excursion of u outside [inf G, sup G] over the unknown nodes (0 if none).
template <std::size_t D>
double max_principle_excess(const SolveResult<D>& r) {
  double excess = 0.0;
  auto check = [&](std::size_t lin) {
    const double v = r.u.values()[lin];
    excess = std::max({excess, r.g_min - v, v - r.g_max});
  };
  for (std::size_t lin : r.u.interior()) check(lin);
  for (std::size_t lin : r.u.collar()) check(lin);
  return excess;
}

struct ComparisonReport {
  long iterations = 0;        ///< common sweep count of both solves
  double tol = 0.0;
  double max_violation = 0.0;  ///< max(u1 - u2) over the support, clipped below at 0
  std::size_t violations = 0;  ///< nodes with u1 > u2 + 2 tol
  double max_principle_excess = 0.0;  ///< largest excursion of u1 or u2 outside its data range
};

/// Solves the problem with two boundary data G1 <= G2 and checks u1 <= u2 + 2 tol.
///
/// Both iterations start from their own BoundaryInf and the one that stops
/// first is continued so that both have done the same number of sweeps.
template <std::size_t D>
ComparisonReport check_comparison(const DppProblem<D>& prob, const BoundaryData<D>& g1,
                                  const BoundaryData<D>& g2, const SolveOptions& opts = {}) {
  DppProblem<D> p1 = prob;
  DppProblem<D> p2 = prob;
  p1.boundary = g1;
  p2.boundary = g2;
  ValueIteration<D> v1(p1, opts.threads);
  ValueIteration<D> v2(p2, opts.threads);
  const auto& layout = v1.layout();
  auto data_nodes = layout.exterior();
  if (prob.flavor == Flavor::DeltaWeighted)
    data_nodes.insert(data_nodes.end(), layout.collar().begin(), layout.collar().end());
  for (std::size_t lin : data_nodes)
    if (v1.boundary()[lin] > v2.boundary()[lin])
      throw Error(ErrorKind::InvalidInput, "comparison needs G1 <= G2 on the outer strip");

  const double tol = opts.tol.value_or(std::min(v1.default_tol(), v2.default_tol()));
  const long max_iters = opts.max_iters.value_or(v1.default_max_iters());
  v1.initialize(InitKind::BoundaryInf);
  v2.initialize(InitKind::BoundaryInf);
  const bool ok1 = v1.run(tol, max_iters);
  const bool ok2 = v2.run(tol, max_iters);
  const long n = std::max(v1.iterations(), v2.iterations());
  v1.run(-1.0, n);
  v2.run(-1.0, n);

  ComparisonReport rep;
  rep.iterations = n;
  rep.tol = tol;
  for (std::size_t lin : layout.support()) {
    const double d = v1.values()[lin] - v2.values()[lin];
    rep.max_violation = std::max(rep.max_violation, d);
    if (d > 2.0 * tol) ++rep.violations;
  }
  for (const auto* v : {&v1, &v2}) {
    for (const auto& nodes : {layout.interior(), layout.collar()})
      for (std::size_t lin : nodes) {
        const double u = v->values()[lin];
        rep.max_principle_excess = std::max({rep.max_principle_excess, v->g_min() - u, u - v->g_max()});
      }
  }
  if (!ok1 || !ok2) throw NotConvergedError<D>(v1.result(tol));
  return rep;
}

struct ConvergenceRow {
  double eps;
  double h;
  std::size_t nodes;       ///< unknown nodes (interior + collar)
  long iterations;
  double update_norm;
  double error;            ///< max over Omega_h of |u - reference|
  double order;            ///< log(e_prev / e) / log(eps_prev / eps); NaN on the first row
};

/// Solves on each eps of the list and measures the sup error against a reference.
template <std::size_t D>
std::vector<ConvergenceRow> convergence_study(const Domain<D>& domain, const Average& average,
                                              Flavor flavor, const BoundaryData<D>& boundary,
                                              const std::vector<double>& eps_list, const HRule& h_rule,
                                              const std::function<double(const Point<D>&)>& reference,
                                              const SolveOptions& opts = {}) {
  std::vector<ConvergenceRow> rows;
  for (double eps : eps_list) {
    DppProblem<D> prob{domain, average, flavor, eps, h_rule(eps), boundary, {}, {}};
    const SolveResult<D> r = solve(prob, opts);
    double err = 0.0;
    auto check = [&](std::size_t lin) {
      err = std::max(err, std::abs(r.u.values()[lin] - reference(r.u.point(lin))));
    };
    for (std::size_t lin : r.u.interior()) check(lin);
    for (std::size_t lin : r.u.collar()) check(lin);
    double order = std::numeric_limits<double>::quiet_NaN();
    if (!rows.empty())
      order = std::log(rows.back().error / err) / std::log(rows.back().eps / eps);
    rows.push_back({eps, prob.h, r.u.interior().size() + r.u.collar().size(), r.iterations,
                    r.final_update_norm, err, order});
  }
  return rows;
}

}  // namespace plapdpp
