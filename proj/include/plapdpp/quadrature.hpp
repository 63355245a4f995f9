#pragma once

#include <array>
#include <vector>

#include "plapdpp/core.hpp"

namespace plapdpp {

/// Highest closed Newton-Cotes rule used; every rule up to this one has positive weights.
inline constexpr int kMaxNewtonCotesOrder = 7;

/// Normalized weights of a composite rule on `nodes` equispaced nodes.
///
/// Order 1 is the composite midpoint rule (equal weights). Order k >= 2 is the
/// composite closed k-point Newton-Cotes rule, so nodes - 1 must be a multiple of k - 1.
inline std::vector<double> newton_cotes_weights(int order, int nodes) {
  if (order > kMaxNewtonCotesOrder)
    throw Error(ErrorKind::NonMonotoneOrder, "Newton-Cotes order above 7 has negative weights");
  if (order < 1) throw Error(ErrorKind::InvalidInput, "quadrature order must be at least 1");
  if (nodes < 1) throw Error(ErrorKind::InvalidInput, "quadrature needs at least one node");

  std::vector<double> w(static_cast<std::size_t>(nodes), 0.0);
  if (order == 1 || nodes == 1) {
    for (double& x : w) x = 1.0 / nodes;
    return w;
  }

  static const std::array<std::vector<double>, 8> kPanels = {{
      {},
      {},
      {1, 1},
      {1, 4, 1},
      {1, 3, 3, 1},
      {7, 32, 12, 32, 7},
      {19, 75, 50, 50, 75, 19},
      {41, 216, 27, 272, 27, 216, 41},
  }};
  const int step = order - 1;
  if ((nodes - 1) % step != 0)
    throw Error(ErrorKind::InvalidInput, "composite rule of order " + std::to_string(order) +
                                             " does not fit " + std::to_string(nodes) + " nodes");
  const auto& panel = kPanels[static_cast<std::size_t>(order)];
  double panel_sum = 0.0;
  for (double c : panel) panel_sum += c;
  const int panels = (nodes - 1) / step;
  for (int k = 0; k < panels; ++k)
    for (int j = 0; j <= step; ++j)
      w[static_cast<std::size_t>(k * step + j)] += panel[static_cast<std::size_t>(j)] / panel_sum;
  for (double& x : w) x /= panels;
  return w;
}

}  // namespace plapdpp
