#pragma once

#include <cmath>
#include <string>

#include "fraclab/errors.hpp"

namespace fraclab {

/// Differentiability order s and integrability exponent p of the nonlocal energy.
struct FracParams {
  double s = 0.5;
  double p = 2.0;
  /// Multiplies the operator and its energy; 1 gives the un-normalized operator.
  double normalization = 1.0;

  [[nodiscard]] double p_conj() const { return p / (p - 1.0); }
  /// Exponent of |x-y| in the (s,p)-gradient: 1/p + s in one dimension.
  [[nodiscard]] double alpha() const { return 1.0 / p + s; }
  /// Exponent of |x-y| in the energy density: 1 + s p in one dimension.
  [[nodiscard]] double beta() const { return 1.0 + s * p; }
  [[nodiscard]] bool quadratic() const { return std::abs(p - 2.0) < 1e-14; }

  void validate() const {
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("s must lie in (0,1), got " + std::to_string(s));
    if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("p must lie in (1,inf), got " + std::to_string(p));
    if (!(normalization > 0.0) || !std::isfinite(normalization))
      throw ValidationError("normalization constant must be positive");
  }
};

}  // namespace fraclab
