#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uniclip/augmentation.hpp"
#include "uniclip/encoders.hpp"
#include "uniclip/losses.hpp"
#include "uniclip/similarity.hpp"
#include "uniclip/synthetic_world.hpp"

namespace uniclip {

inline constexpr int kConfigSchemaVersion = 1;

enum class Supervision { unified, separated };
std::string to_string(Supervision s);

struct OptimizerConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.1;
  double warmup_epochs = 2.0;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;  // N original pairs per batch
  OptimizerConfig optimizer;
  std::size_t probe_train_pairs = 1024;
  std::size_t probe_steps = 100;
  double probe_lr = 0.5;
  std::size_t density_batch = 64;  // N of the fixed evaluation batch
};

/// Everything that determines one training run.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 0;
  WorldConfig world;
  EncoderConfig encoder;
  LossSpec loss;
  Supervision supervision = Supervision::unified;
  SimilarityMode similarity = SimilarityMode::domain_dependent;
  double initial_tau = 0.1;
  // One policy name ("weak" / "strong") per image view; the text view count is separate.
  std::vector<std::string> image_view_policies{"weak", "strong", "strong"};
  std::size_t text_views = 1;
  AugmentationPolicy weak_policy = AugmentationPolicy::weak();
  AugmentationPolicy strong_policy = AugmentationPolicy::strong();
  TrainConfig train;

  [[nodiscard]] std::size_t image_views() const noexcept { return image_view_policies.size(); }
  [[nodiscard]] std::vector<AugmentationPolicy> view_policies() const;
  /// Fills derived widths (pixel count, text dim) and checks every field. Throws ConfigError.
  void validate();
};

RunConfig default_config();

/// Canonical JSON text of a configuration (stable key order).
std::string config_to_json(const RunConfig& cfg, int indent = 2);

/// Parses JSON text on top of the defaults, then applies dotted `key=value` overrides.
/// Unknown keys and ill-typed values are rejected with a ConfigError naming the key.
RunConfig config_from_json(const std::string& json_text, const std::vector<std::string>& overrides = {});

/// Reads a config file; a missing or unreadable file is a ConfigError naming the path.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Applies overrides to an already-resolved configuration.
RunConfig with_overrides(const RunConfig& base, const std::vector<std::string>& overrides);

/// Human-readable list of every key with its type and default.
std::string config_schema_description();

}  // namespace uniclip
