#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "uniclip/augmentation.hpp"

namespace uniclip {

/// Semantic content of one synthetic image–text pair.
///
/// The image shows a smooth background driven by `latent` and a saturated colored
/// patch. When `spatial_mentioned` is set the patch sits on the left or right
/// (`right_side`) and the text states the side; otherwise it is centered and the
/// text carries no side information. When `color_mentioned` is set the text
/// names the patch hue class.
struct Concept {
  std::vector<double> latent;
  std::size_t label = 0;
  std::size_t hue_class = 0;
  bool spatial_mentioned = false;
  bool right_side = false;
  bool color_mentioned = false;
};

struct SyntheticPair {
  Concept scene;
  SyntheticImage image;
  std::vector<double> text_features;
};

struct WorldConfig {
  std::size_t n_pairs = 2560;
  double eval_fraction = 0.2;
  std::size_t n_classes = 8;
  std::size_t n_hues = 6;
  std::size_t latent_dim = 6;
  std::size_t resolution = 16;
  double noise = 0.1;             // text feature noise
  double instance_spread = 0.6;   // latent spread around the class prototype
  double spatial_probability = 0.75;
  double color_probability = 0.75;

  [[nodiscard]] std::size_t text_dim() const noexcept { return latent_dim + 1 + n_hues; }
  /// Throws ConfigError on an invalid configuration.
  void validate() const;
};

struct Dataset {
  WorldConfig config;
  std::uint64_t seed = 0;
  std::vector<SyntheticPair> train;
  std::vector<SyntheticPair> eval;
};

/// Deterministic in (config, seed); pair k is generated from its own counter-keyed stream.
Dataset generate_dataset(const WorldConfig& config, std::uint64_t seed);

/// Pair `index` of the world; identical to the corresponding entry of generate_dataset.
SyntheticPair generate_pair(const WorldConfig& config, std::uint64_t seed, std::size_t index);

/// Pure rendering of a concept at the given resolution.
SyntheticImage render_concept(const Concept& scene, const WorldConfig& config);

/// Text feature vector [latent + noise, side (−1/0/+1), hue one-hot (zero when unmentioned)].
std::vector<double> text_features(const Concept& scene, const WorldConfig& config, Rng& noise_rng);

enum class Alignment { aligned, misaligned };

/// Whether `instr` semantically breaks the pair's text: a flip when the side is
/// mentioned; grayscale or a hue shift beyond half the palette spacing when the color
/// is mentioned; a crop whose box excludes the patch center.
Alignment misalignment_probe(const SyntheticPair& pair, const AugmentationInstruction& instr,
                             const WorldConfig& config);

/// Flat little-endian binary export:
///   magic "UCSW" | u32 version=1 | u32 n_train | u32 n_eval | u32 channels | u32 height |
///   u32 width | u32 text_dim | u32 latent_dim
///   then for train followed by eval: f64 pixel block (n×C×H×W, row-major),
///   f64 text feature block (n×text_dim), u32 label block (n × [label, hue, spatial, right, color]).
void write_dataset_binary(std::ostream& out, const Dataset& data);
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

}  // namespace uniclip
