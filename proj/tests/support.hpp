#pragma once

#include <cstdint>

#include "plapdpp/core.hpp"
#include "plapdpp/geometry.hpp"

namespace plapdpp::testing {

/// Reproducible random values on a lattice: value(a) = scale * U(-1, 1) + offset,
/// hashed from (seed, a), so the field is defined at every index.
template <std::size_t D>
class RandomField {
 public:
  RandomField(const Lattice<D>& lat, std::uint64_t seed, double scale = 1.0, double offset = 0.0)
      : lat_(lat), seed_(seed), scale_(scale), offset_(offset) {}

  double value(const Index<D>& a) const { return scale_ * raw(a) + offset_; }
  const Lattice<D>& lattice() const { return lat_; }

  /// Uniform in [-1, 1).
  double raw(const Index<D>& a) const {
    std::uint64_t h = seed_;
    for (auto c : a) h = CounterRng::mix(h ^ (static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL));
    return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
  }

 private:
  Lattice<D> lat_;
  std::uint64_t seed_;
  double scale_;
  double offset_;
};

/// Pointwise combination of two samplers.
template <class A, class B, class Op>
class Combined {
 public:
  Combined(const A& a, const B& b, Op op) : a_(a), b_(b), op_(op) {}

  template <class I>
  double value(const I& x) const { return op_(a_.value(x), b_.value(x)); }
  const auto& lattice() const { return a_.lattice(); }

 private:
  const A& a_;
  const B& b_;
  Op op_;
};

}  // namespace plapdpp::testing
