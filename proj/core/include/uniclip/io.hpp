#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uniclip/ablation.hpp"
#include "uniclip/config.hpp"
#include "uniclip/metrics.hpp"
#include "uniclip/synthetic_world.hpp"
#include "uniclip/training.hpp"

namespace uniclip {

inline constexpr int kArtifactSchemaVersion = 1;

/// Writes `content` to a temporary sibling and renames it over `path`; creates parent
/// directories. Throws std::runtime_error on I/O failure.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trippable decimal form ("%.17g").
std::string format_double(double v);

/// Comment header shared by the text artifacts: schema, seed and resolved config as one JSON line.
std::string artifact_header(const RunConfig& cfg, const std::string& kind);

/// Per-epoch metrics; columns follow metric_fields.
std::string metrics_csv(const RunConfig& cfg, const std::vector<MetricsRecord>& history);

/// Final-run summary: config, seed, final metrics, learned τ and b.
std::string run_summary_json(const RunConfig& cfg, const std::vector<MetricsRecord>& history);

/// Histogram rows of one density statistic: domain, kind, bin_lo, bin_hi, count, fraction.
std::string histogram_tsv(const RunConfig& cfg, const DensityStats& stats);

/// The same for a single domain only.
std::string histogram_tsv(const RunConfig& cfg, const DensityStats& stats, Domain domain);

/// One row per cell: id, seeds, then mean and sd of each final metric.
std::string ablation_csv(const RunConfig& base, const AblationResult& result);
std::string ablation_json(const RunConfig& base, const AblationResult& result);

/// Flat binary dataset layout (see docs/formats.md).
std::string dataset_binary(const Dataset& data);

}  // namespace uniclip
