#pragma once

#include <functional>
#include <span>
#include <vector>

namespace uniclip {

inline constexpr double kDefaultFiniteDifferenceStep = 1e-4;

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient estimate of f at `point`, one coordinate at a time.
/// Throws EvaluationError when f returns a non-finite value.
std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> point,
                                               double epsilon = kDefaultFiniteDifferenceStep);

/// max_k |a_k - b_k| / max(|a_k|, |b_k|, floor). The floor keeps near-zero
/// components from dominating; pass 0 for a pure relative error.
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6);

/// ‖a - b‖ / max(‖a‖, ‖b‖, floor): norm-wise relative error.
double relative_error_norm(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

}  // namespace uniclip
