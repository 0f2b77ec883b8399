#pragma once

#include <vector>

namespace fraclab {

/// Gauss-Legendre rule mapped to [0,1]; weights sum to one.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  [[nodiscard]] int size() const { return static_cast<int>(nodes.size()); }
};

/// Returns a cached n-point rule. Exact for polynomials of degree 2n-1.
const GaussRule& gauss_legendre(int n);

}  // namespace fraclab
