#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "plapdpp/core.hpp"

namespace plapdpp {

template <std::size_t D>
using Matrix = std::array<std::array<double, D>, D>;

/// Closed-form smooth function with gradient and Hessian.
template <std::size_t D>
struct SmoothTestFunction {
  std::string name;
  std::function<double(const Point<D>&)> eval;
  std::function<Point<D>(const Point<D>&)> grad;
  std::function<Matrix<D>(const Point<D>&)> hess;

  double operator()(const Point<D>& x) const { return eval(x); }
};

/// A p-harmonic function away from its singular points.
template <std::size_t D>
struct ExactSolution : SmoothTestFunction<D> {
  Exponent valid_p = 2.0;
  std::vector<Point<D>> singular_points;
};

/// Gradients below this norm make the normalized operators undefined.
inline constexpr double kGradientFloor = 1e-10;

template <std::size_t D>
double trace(const Matrix<D>& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < D; ++i) t += m[i][i];
  return t;
}

template <std::size_t D>
double quadratic_form(const Matrix<D>& m, const Point<D>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < D; ++j) s += v[i] * m[i][j] * v[j];
  return s;
}

template <std::size_t D>
double laplacian(const SmoothTestFunction<D>& f, const Point<D>& x) {
  return trace(f.hess(x));
}

/// <D^2 f g, g> / |g|^2 with g = grad f.
template <std::size_t D>
double normalized_infty_laplacian(const SmoothTestFunction<D>& f, const Point<D>& x) {
  const Point<D> g = f.grad(x);
  const double g2 = dot(g, g);
  if (std::sqrt(g2) <= kGradientFloor)
    throw Error(ErrorKind::VanishingGradient, "normalized operator at a critical point");
  return quadratic_form(f.hess(x), g) / g2;
}

template <std::size_t D>
double normalized_one_laplacian(const SmoothTestFunction<D>& f, const Point<D>& x) {
  return laplacian(f, x) - normalized_infty_laplacian(f, x);
}

/// (1/p) Laplacian + ((p - 2)/p) normalized infinity-Laplacian; p = inf gives the latter alone.
template <std::size_t D>
double normalized_p_laplacian(const SmoothTestFunction<D>& f, const Point<D>& x, Exponent p) {
  const double inf_part = normalized_infty_laplacian(f, x);
  if (p.is_infinite()) return inf_part;
  const double pv = p.value();
  return laplacian(f, x) / pv + (pv - 2.0) / pv * inf_part;
}

/// div(|grad f|^{p-2} grad f) = |g|^{p-2} (Laplacian + (p - 2) normalized infinity-Laplacian).
template <std::size_t D>
double p_laplacian(const SmoothTestFunction<D>& f, const Point<D>& x, double p) {
  const Point<D> g = f.grad(x);
  const double gn = norm(g);
  if (gn <= kGradientFloor) {
    if (p == 2.0) return laplacian(f, x);
    throw Error(ErrorKind::VanishingGradient, "p-Laplacian at a critical point");
  }
  return std::pow(gn, p - 2.0) * (laplacian(f, x) + (p - 2.0) * normalized_infty_laplacian(f, x));
}

// Test corpus.

template <std::size_t D>
SmoothTestFunction<D> affine_function(const Point<D>& slope, double offset) {
  return {"affine",
          [=](const Point<D>& x) { return dot(slope, x) + offset; },
          [=](const Point<D>&) { return slope; },
          [](const Point<D>&) { return Matrix<D>{}; }};
}

/// |y - center|^2
template <std::size_t D>
SmoothTestFunction<D> squared_distance(const Point<D>& center) {
  return {"squared_distance",
          [=](const Point<D>& x) {
            const Point<D> r = x - center;
            return dot(r, r);
          },
          [=](const Point<D>& x) { return 2.0 * (x - center); },
          [](const Point<D>&) {
            Matrix<D> m{};
            for (std::size_t i = 0; i < D; ++i) m[i][i] = 2.0;
            return m;
          }};
}

/// y_1^2 - y_2^2 (harmonic).
inline SmoothTestFunction<2> harmonic_quadratic() {
  return {"harmonic_quadratic",
          [](const Point<2>& x) { return x[0] * x[0] - x[1] * x[1]; },
          [](const Point<2>& x) { return Point<2>{2.0 * x[0], -2.0 * x[1]}; },
          [](const Point<2>&) { return Matrix<2>{{{2.0, 0.0}, {0.0, -2.0}}}; }};
}

/// slope . y + offset + amplitude * exp(-|y - center|^2 / (2 width^2))
template <std::size_t D>
SmoothTestFunction<D> bump_affine(const Point<D>& slope, double offset, const Point<D>& center,
                                  double amplitude, double width) {
  const double s2 = width * width;
  auto bump = [=](const Point<D>& x) {
    const Point<D> r = x - center;
    return amplitude * std::exp(-dot(r, r) / (2.0 * s2));
  };
  return {"bump_affine",
          [=](const Point<D>& x) { return dot(slope, x) + offset + bump(x); },
          [=](const Point<D>& x) { return slope + (-bump(x) / s2) * (x - center); },
          [=](const Point<D>& x) {
            const Point<D> r = x - center;
            const double b = bump(x);
            Matrix<D> m{};
            for (std::size_t i = 0; i < D; ++i)
              for (std::size_t j = 0; j < D; ++j)
                m[i][j] = b * (r[i] * r[j] / (s2 * s2) - (i == j ? 1.0 / s2 : 0.0));
            return m;
          }};
}

namespace detail {

// f(x) = phi(|x - pole|) given phi', phi''.
template <std::size_t D>
ExactSolution<D> radial(std::string name, Exponent p, const Point<D>& pole,
                        std::function<double(double)> phi, std::function<double(double)> dphi,
                        std::function<double(double)> ddphi) {
  ExactSolution<D> s;
  s.name = std::move(name);
  s.valid_p = p;
  s.singular_points = {pole};
  s.eval = [=](const Point<D>& x) { return phi(distance(x, pole)); };
  s.grad = [=](const Point<D>& x) {
    const Point<D> r = x - pole;
    const double rho = norm(r);
    return (dphi(rho) / rho) * r;
  };
  s.hess = [=](const Point<D>& x) {
    const Point<D> r = x - pole;
    const double rho = norm(r);
    const double radial_part = ddphi(rho);
    const double tangential = dphi(rho) / rho;
    Matrix<D> m{};
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = 0; j < D; ++j) {
        const double rr = r[i] * r[j] / (rho * rho);
        m[i][j] = radial_part * rr + tangential * ((i == j ? 1.0 : 0.0) - rr);
      }
    return m;
  };
  return s;
}

}  // namespace detail

/// Exponent -xi = (p - d)/(p - 1) of the radial p-harmonic power |x|^{-xi}.
inline double fundamental_power(double p, std::size_t d) {
  return (p - static_cast<double>(d)) / (p - 1.0);
}

/// Radial p-harmonic function with singularity at `pole`: |x|^{(p-d)/(p-1)} for p != d,
/// log|x| for p = d, and the cone |x| for p = inf.
template <std::size_t D>
ExactSolution<D> fundamental_solution(Exponent p, const Point<D>& pole) {
  if (p.is_infinite()) {
    return detail::radial<D>("cone", p, pole, [](double r) { return r; },
                             [](double) { return 1.0; }, [](double) { return 0.0; });
  }
  const double pv = p.value();
  if (!(pv > 1.0)) throw Error(ErrorKind::InvalidInput, "fundamental solution needs p > 1");
  const double k = fundamental_power(pv, D);
  if (std::abs(k) < 1e-8) {
    return detail::radial<D>("log", p, pole, [](double r) { return std::log(r); },
                             [](double r) { return 1.0 / r; },
                             [](double r) { return -1.0 / (r * r); });
  }
  return detail::radial<D>(
      "power", p, pole, [k](double r) { return std::pow(r, k); },
      [k](double r) { return k * std::pow(r, k - 1.0); },
      [k](double r) { return k * (k - 1.0) * std::pow(r, k - 2.0); });
}

}  // namespace plapdpp
