#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "uniclip/config.hpp"
#include "uniclip/training.hpp"

namespace uniclip {

struct GridCell {
  std::string id;
  std::vector<std::string> overrides;  // dotted key=value, applied on top of the base config
};

struct GridSpec {
  std::string axis;
  std::vector<GridCell> cells;
  std::vector<std::uint64_t> seeds;
};

/// Axis names accepted by standard_grid.
std::vector<std::string> grid_axes();

/// Built-in grids: "loss", "similarity", "awareness", "views", "head", "augmentation".
/// Seeds are 0..n_seeds-1. Unknown axis → ConfigError.
GridSpec standard_grid(const std::string& axis, std::size_t n_seeds = 5);

/// Resolves every cell against `base` before anything runs. Every cell must override the
/// same set of keys (the ablated axis) and produce a valid config; otherwise ConfigError
/// naming the cell.
std::vector<RunConfig> resolve_grid(const RunConfig& base, const GridSpec& spec);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single seed
};

MetricSummary summarize(const std::vector<double>& values);

struct CellResult {
  GridCell cell;
  RunConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsRecord> finals;  // last-epoch record per seed
  std::vector<DensityStats> densities;

  /// Values of one named metric (see metric_fields) across seeds.
  [[nodiscard]] std::vector<double> values(const std::string& metric) const;
  [[nodiscard]] MetricSummary summary(const std::string& metric) const { return uniclip::summarize(values(metric)); }
};

struct AblationResult {
  GridSpec spec;
  std::vector<CellResult> cells;

  [[nodiscard]] const CellResult& cell(const std::string& id) const;
};

struct AblationProgress {
  std::string cell_id;
  std::uint64_t seed = 0;
  const MetricsRecord* final_record = nullptr;
};

AblationResult run_ablation(const RunConfig& base, const GridSpec& spec,
                            const std::function<void(const AblationProgress&)>& on_run = {});

}  // namespace uniclip
