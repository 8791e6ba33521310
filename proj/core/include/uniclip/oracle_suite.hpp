#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uniclip {

/// Result of comparing one analytic gradient against its finite-difference oracle.
struct OracleCheck {
  std::string name;
  double error = 0.0;      // max relative error over all compared components
  double tolerance = 0.0;
  [[nodiscard]] bool passed() const noexcept { return error <= tolerance; }
};

inline constexpr double kGradientTolerance = 1e-4;
inline constexpr double kLossLevelTolerance = 1e-5;
/// Components below this magnitude are compared on an absolute scale.
inline constexpr double kGradientFloor = 1e-6;

struct OracleSuiteOptions {
  std::uint64_t seed = 0;
  std::size_t loss_instances = 100;  // randomized instances per loss family
  bool end_to_end = true;            // full model checks on a tiny configuration
};

/// Every loss family (InfoNCE, MIL-NCE, SupCon, MP-NCE variants, separated supervision)
/// against central differences: loss-level (∂L/∂log s and ∂L/∂s) and through the
/// score (embeddings, log τ, b) in every similarity mode; optionally every trainable
/// parameter of a tiny model in every augmentation-awareness mode.
std::vector<OracleCheck> run_oracle_suite(const OracleSuiteOptions& options = {});

}  // namespace uniclip
