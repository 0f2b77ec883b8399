#include "fraclab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fraclab {

Kernel::Kernel(Evaluator evaluator, double lambda, double Lambda, std::string label)
    : eval_(std::move(evaluator)), lambda_(lambda), Lambda_(Lambda), label_(std::move(label)) {
  if (!eval_) throw ValidationError("kernel needs an evaluator");
  if (!(lambda > 0.0) || !(Lambda >= lambda) || !std::isfinite(Lambda))
    throw ValidationError("kernel bounds must satisfy 0 < lambda <= Lambda < inf");
}

Kernel constant_kernel(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("constant kernel value must be positive");
  std::ostringstream label;
  label << "constant(" << c << ")";
  Kernel k([c](double, double) { return c; }, c, c, label.str());
  k.constant_ = true;
  return k;
}

Kernel separable_cosine_kernel(double lambda, double Lambda) {
  const double mean = 0.5 * (lambda + Lambda);
  const double amp = 0.5 * (Lambda - lambda);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return Kernel([mean, amp](double x, double y) { return mean + amp * std::cos(two_pi * x) * std::cos(two_pi * y); },
                lambda, Lambda, "separable-cosine");
}

Kernel checkerboard_kernel(double lambda, double Lambda) {
  return Kernel(
      [lambda, Lambda](double x, double y) {
        const auto parity = static_cast<long long>(std::floor(2.0 * x)) + static_cast<long long>(std::floor(2.0 * y));
        return (parity % 2 == 0) ? Lambda : lambda;
      },
      lambda, Lambda, "checkerboard");
}

double periodic_bump(double t) {
  const double z = 2.0 * (t - std::floor(t)) - 1.0;  // in [-1, 1)
  const double d = 1.0 - z * z;
  if (d <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / d);
}

Kernel radial_bump_kernel(double lambda, double Lambda) {
  return Kernel([lambda, Lambda](double x, double y) { return lambda + (Lambda - lambda) * periodic_bump(std::abs(x - y)); },
                lambda, Lambda, "radial-bump");
}

Kernel oscillate(const Kernel& k, int n) {
  if (n < 1) throw ValidationError("oscillation index must be >= 1");
  if (k.is_constant() || n == 1) {
    Kernel out = k;
    if (!k.is_constant()) out.frequency_ = k.frequency_;
    return out;
  }
  const double scale = n;
  Kernel out([base = k.eval_, scale](double x, double y) { return base(scale * x, scale * y); }, k.lambda_, k.Lambda_,
             k.label_ + "@" + std::to_string(n));
  out.frequency_ = k.frequency_ * n;
  return out;
}

const std::vector<std::string>& builtin_kernel_names() {
  static const std::vector<std::string> names{"constant", "separable-cosine", "checkerboard", "radial-bump"};
  return names;
}

Kernel builtin_kernel(const std::string& name, const std::map<std::string, double>& params) {
  auto get = [&](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  const double lambda = get("lambda", 1.0);
  const double Lambda = get("Lambda", 2.0);
  if (name == "constant") return constant_kernel(get("c", 1.0));
  if (name == "separable-cosine") return separable_cosine_kernel(lambda, Lambda);
  if (name == "checkerboard") return checkerboard_kernel(lambda, Lambda);
  if (name == "radial-bump") return radial_bump_kernel(lambda, Lambda);
  throw ValidationError("unknown kernel family '" + name + "'");
}

KernelValidation validate_kernel(const Kernel& k, int samples, double half_width) {
  if (samples < 100) throw ValidationError("validate_kernel needs at least 100 samples");
  const int m = std::max(10, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(samples)))));
  std::vector<double> z(m);
  for (int i = 0; i < m; ++i) z[i] = -half_width + 2.0 * half_width * i / (m - 1);

  KernelValidation out;
  out.min_value = std::numeric_limits<double>::infinity();
  out.max_value = -std::numeric_limits<double>::infinity();
  double worst_bound = 0.0;
  double bound_x = 0.0, bound_y = 0.0;
  double asym_x = 0.0, asym_y = 0.0;
  const double bound_tol = 1e-12 * std::max(1.0, k.Lambda());
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double axy = k(z[i], z[j]);
      const double ayx = k(z[j], z[i]);
      const double asym = std::abs(axy - ayx);
      if (asym > out.max_asymmetry) {
        out.max_asymmetry = asym;
        asym_x = z[i];
        asym_y = z[j];
      }
      for (double v : {axy, ayx}) {
        out.min_value = std::min(out.min_value, v);
        out.max_value = std::max(out.max_value, v);
        const double excess = std::max(k.lambda() - v, v - k.Lambda());
        if (!std::isfinite(v) || excess > worst_bound) {
          worst_bound = std::isfinite(v) ? excess : std::numeric_limits<double>::infinity();
          bound_x = z[i];
          bound_y = z[j];
        }
      }
    }
  }
  const bool symmetric = out.max_asymmetry <= 1e-12;
  const bool bounded = worst_bound <= bound_tol;
  out.passed = symmetric && bounded;
  std::ostringstream msg;
  if (!symmetric) {
    out.bad_x = asym_x;
    out.bad_y = asym_y;
    msg << "kernel '" << k.label() << "' is not symmetric: |a(x,y)-a(y,x)| = " << out.max_asymmetry << " at (" << asym_x
        << ", " << asym_y << ")";
  } else if (!bounded) {
    out.bad_x = bound_x;
    out.bad_y = bound_y;
    msg << "kernel '" << k.label() << "' leaves [" << k.lambda() << ", " << k.Lambda() << "] at (" << bound_x << ", "
        << bound_y << ")";
  } else {
    msg << "kernel '" << k.label() << "' symmetric and within [" << k.lambda() << ", " << k.Lambda() << "]";
  }
  out.message = msg.str();
  return out;
}

KernelSequence::KernelSequence(Kernel base, std::vector<int> indices) : base_(std::move(base)), indices_(std::move(indices)) {
  if (indices_.empty()) throw ValidationError("kernel sequence needs at least one index");
  for (int n : indices_)
    if (n < 1) throw ValidationError("kernel sequence indices must be >= 1");
}

}  // namespace fraclab
