#include "uniclip/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uniclip/errors.hpp"

namespace uniclip {

std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> point,
                                               double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("finite_difference_gradient: epsilon must be > 0");
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> grad(x.size());
  auto eval = [&](std::size_t k) {
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw EvaluationError("finite_difference_gradient: non-finite value at coordinate " + std::to_string(k));
    }
    return v;
  };
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + epsilon;
    const double up = eval(k);
    x[k] = orig - epsilon;
    const double down = eval(k);
    x[k] = orig;
    grad[k] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), floor});
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

double relative_error_norm(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("relative_error_norm: length mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), floor});
  return std::sqrt(diff) / scale;
}

}  // namespace uniclip
