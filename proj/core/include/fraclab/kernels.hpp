#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

/// Symmetric weight a(x, y) with certified bounds lambda <= a <= Lambda.
///
/// Kernels are lazy: the evaluator is sampled at quadrature points when an
/// operator is assembled. Evaluators must be pure and thread-safe.
class Kernel {
 public:
  using Evaluator = std::function<double(double, double)>;

  Kernel(Evaluator evaluator, double lambda, double Lambda, std::string label);

  [[nodiscard]] double operator()(double x, double y) const { return eval_(x, y); }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double Lambda() const { return Lambda_; }
  [[nodiscard]] const std::string& label() const { return label_; }
  /// Oscillation index n of a(n x, n y); 1 for kernels that were never oscillated.
  [[nodiscard]] int frequency() const { return frequency_; }
  /// True when the kernel does not depend on (x, y).
  [[nodiscard]] bool is_constant() const { return constant_; }

 private:
  friend Kernel oscillate(const Kernel& k, int n);
  friend Kernel constant_kernel(double c);

  Evaluator eval_;
  double lambda_;
  double Lambda_;
  std::string label_;
  int frequency_ = 1;
  bool constant_ = false;
};

/// a == c with lambda = Lambda = c.
Kernel constant_kernel(double c);
/// mean + amp cos(2 pi x) cos(2 pi y) with mean = (lambda+Lambda)/2, amp = (Lambda-lambda)/2.
Kernel separable_cosine_kernel(double lambda = 1.0, double Lambda = 2.0);
/// Period-1 checkerboard on half-unit cells: Lambda where floor(2x)+floor(2y) is even, lambda otherwise.
Kernel checkerboard_kernel(double lambda = 1.0, double Lambda = 2.0);
/// lambda + (Lambda - lambda) b(|x - y|) with b a smooth 1-periodic bump in [0, 1].
Kernel radial_bump_kernel(double lambda = 1.0, double Lambda = 2.0);

/// The smooth 1-periodic bump used by radial_bump_kernel; b(0) = 0, b(1/2) = 1.
double periodic_bump(double t);

/// (x, y) -> a(n x, n y); same bounds. n must be >= 1.
Kernel oscillate(const Kernel& k, int n);

/// Named builtin families: constant, separable-cosine, checkerboard, radial-bump.
/// Recognised parameters: c (constant), lambda, Lambda.
Kernel builtin_kernel(const std::string& name, const std::map<std::string, double>& params = {});
const std::vector<std::string>& builtin_kernel_names();

struct KernelValidation {
  bool passed = false;
  double max_asymmetry = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  /// Worst violating pair (asymmetry or bound), when the check failed.
  double bad_x = 0.0;
  double bad_y = 0.0;
  std::string message;
};

/// Samples a symmetric lattice of pairs in [-half_width, half_width]^2 (about
/// `samples` pairs) and checks symmetry to 1e-12 and the declared bounds.
KernelValidation validate_kernel(const Kernel& k, int samples, double half_width = 4.0);

/// a_n = a(n x, n y) for each n in the index list.
class KernelSequence {
 public:
  KernelSequence(Kernel base, std::vector<int> indices);
  [[nodiscard]] const Kernel& base() const { return base_; }
  [[nodiscard]] const std::vector<int>& indices() const { return indices_; }
  [[nodiscard]] Kernel member(int n) const { return oscillate(base_, n); }

 private:
  Kernel base_;
  std::vector<int> indices_;
};

}  // namespace fraclab
