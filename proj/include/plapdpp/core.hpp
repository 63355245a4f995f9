#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace plapdpp {

template <std::size_t D>
using Point = std::array<double, D>;

/// Integer coordinates of a lattice node (x = origin + h * index).
template <std::size_t D>
using Index = std::array<std::int64_t, D>;

enum class ErrorKind {
  EmptyBall,
  StencilEscapesSupport,
  UnsupportedDimension,
  NonMonotoneOrder,
  VanishingGradient,
  PEqualsD,
  ThetaOutOfRange,
  NotConverged,
  InvalidInput,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyBall: return "EmptyBall";
    case ErrorKind::StencilEscapesSupport: return "StencilEscapesSupport";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::NonMonotoneOrder: return "NonMonotoneOrder";
    case ErrorKind::VanishingGradient: return "VanishingGradient";
    case ErrorKind::PEqualsD: return "PEqualsD";
    case ErrorKind::ThetaOutOfRange: return "ThetaOutOfRange";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Exponent p in (1, inf]. Infinity is a separate state, never a floating-point inf.
class Exponent {
 public:
  constexpr Exponent(double p) : value_(p), infinite_(false) {}  // NOLINT(google-explicit-constructor)

  static constexpr Exponent infinity() { return Exponent(0.0, true); }

  constexpr bool is_infinite() const { return infinite_; }

  double value() const {
    if (infinite_) throw Error(ErrorKind::InvalidInput, "finite value of p = inf requested");
    return value_;
  }

  bool operator==(const Exponent& other) const {
    return infinite_ == other.infinite_ && (infinite_ || value_ == other.value_);
  }

  std::string to_string() const;

 private:
  constexpr Exponent(double p, bool inf) : value_(p), infinite_(inf) {}

  double value_;
  bool infinite_;
};

inline std::string Exponent::to_string() const {
  if (infinite_) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

// Small vector helpers for fixed-size points.

template <std::size_t D>
inline double dot(const Point<D>& a, const Point<D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t D>
inline double norm(const Point<D>& a) {
  return std::sqrt(dot(a, a));
}

template <std::size_t D>
inline Point<D> operator+(const Point<D>& a, const Point<D>& b) {
  Point<D> r;
  for (std::size_t i = 0; i < D; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t D>
inline Point<D> operator-(const Point<D>& a, const Point<D>& b) {
  Point<D> r;
  for (std::size_t i = 0; i < D; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t D>
inline Point<D> operator*(double s, const Point<D>& a) {
  Point<D> r;
  for (std::size_t i = 0; i < D; ++i) r[i] = s * a[i];
  return r;
}

template <std::size_t D>
inline double distance(const Point<D>& a, const Point<D>& b) {
  return norm(a - b);
}

/// Counter-based generator: the n-th draw is splitmix64(seed + (n+1) * golden).
/// Draws depend only on (seed, n), so any sub-stream can be reproduced without
/// replaying earlier draws.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t at(std::uint64_t counter) const {
    return mix(seed_ + (counter + 1) * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t next_u64() { return at(counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace plapdpp
