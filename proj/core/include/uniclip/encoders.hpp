#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "uniclip/augmentation.hpp"
#include "uniclip/layers.hpp"
#include "uniclip/param_store.hpp"
#include "uniclip/similarity.hpp"

namespace uniclip {

/// Where the augmentation embedding enters the image pathway.
enum class AugmentationAwareness {
  agnostic,  // nowhere: the head sees a zeroed augmentation slot
  head,      // the projection head (default)
  encoder,   // the image encoder input (ablation)
};

std::string to_string(AugmentationAwareness a);

struct EncoderConfig {
  std::size_t pixel_count = 3 * 16 * 16;
  std::size_t text_dim = 13;
  std::size_t image_hidden = 64;
  std::size_t representation_width = 32;   // h
  std::size_t augmentation_width = 16;     // f_A output
  std::size_t unified_width = 32;          // z
  std::size_t head_blocks = 3;
  std::size_t head_expansion = 2;
  std::size_t text_hidden = 32;
  std::size_t text_representation_width = 32;
  AugmentationAwareness awareness = AugmentationAwareness::head;

  [[nodiscard]] std::size_t head_input_width() const noexcept { return representation_width + augmentation_width; }
  void validate() const;
};

/// f_A: 11-dim instruction encoding → augmentation embedding (three GELU-separated layers).
class AugmentationEncoder {
 public:
  AugmentationEncoder() = default;
  AugmentationEncoder(ParamStore& store, std::size_t width, Rng& rng);

  /// rows × 11 → rows × width.
  DenseMatrix forward(const ParamStore& store, const DenseMatrix& encodings);
  DenseMatrix backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const;

 private:
  Mlp mlp_;
};

/// f_I: flattened pixels → representation h. Only an encoder built with
/// `augmentation_width > 0` accepts an augmentation embedding.
class ImageEncoder {
 public:
  ImageEncoder() = default;
  ImageEncoder(ParamStore& store, const EncoderConfig& cfg, std::size_t augmentation_width, Rng& rng);

  DenseMatrix forward(const ParamStore& store, const DenseMatrix& pixels);
  DenseMatrix forward_with_augmentation(const ParamStore& store, const DenseMatrix& pixels,
                                        const DenseMatrix& augmentation);
  /// Returns the gradient w.r.t. the augmentation input columns (rows × 0 when agnostic);
  /// the pixel gradient is never formed.
  DenseMatrix backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const;

  [[nodiscard]] std::size_t pixel_count() const noexcept { return pixel_count_; }
  [[nodiscard]] std::size_t augmentation_width() const noexcept { return augmentation_width_; }

 private:
  std::size_t pixel_count_ = 0;
  std::size_t augmentation_width_ = 0;
  Mlp mlp_;
};

/// g_I: [h | augmentation embedding] → residual blocks → linear → z.
class ImageHead {
 public:
  ImageHead() = default;
  ImageHead(ParamStore& store, const EncoderConfig& cfg, Rng& rng);

  DenseMatrix forward(const ParamStore& store, const DenseMatrix& representation, const DenseMatrix& augmentation);
  /// Gradient w.r.t. the concatenated input [h | aug].
  DenseMatrix backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const;

 private:
  std::size_t representation_width_ = 0;
  std::size_t augmentation_width_ = 0;
  std::vector<ResidualBlock> blocks_;
  Linear output_;
};

/// f_T then the linear g_T into the unified space.
class TextTower {
 public:
  TextTower() = default;
  TextTower(ParamStore& store, const EncoderConfig& cfg, Rng& rng);

  DenseMatrix forward(const ParamStore& store, const DenseMatrix& features);
  void backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const;

 private:
  Mlp encoder_;
  Linear projection_;
};

/// Image inputs of one batch: augmented pixels plus their instruction encodings.
struct ImageBatch {
  DenseMatrix pixels;        // rows × pixel_count
  DenseMatrix instructions;  // rows × 11
};

DenseMatrix flatten_images(const std::vector<SyntheticImage>& images);
DenseMatrix encode_instructions(const std::vector<AugmentationInstruction>& instructions);

/// All five networks plus the learnable temperatures and offsets, sharing one ParamStore.
class UniclipModel {
 public:
  static constexpr const char* kLogTauName = "similarity.log_tau";
  static constexpr const char* kOffsetName = "similarity.offset";

  UniclipModel(const EncoderConfig& cfg, SimilarityMode mode, double initial_tau, Rng& init_rng);

  [[nodiscard]] const EncoderConfig& config() const noexcept { return cfg_; }
  ParamStore& params() noexcept { return store_; }
  [[nodiscard]] const ParamStore& params() const noexcept { return store_; }

  [[nodiscard]] SimilarityParams similarity() const;

  /// Embeds images (rows = views) and texts; stacks image rows above text rows.
  DenseMatrix forward(const ImageBatch& images, const DenseMatrix& texts);
  /// Backpropagates ∂L/∂z from the last forward into every network parameter.
  void backward(const DenseMatrix& grad_embeddings, Gradients& grads);
  /// Adds similarity-parameter gradients into `grads`.
  void accumulate_similarity(const SimilarityGradients& g, Gradients& grads) const;

  DenseMatrix embed_images(const ImageBatch& images);
  DenseMatrix embed_texts(const DenseMatrix& texts);
  /// Augmentation-agnostic representation h = f_I(pixels); not defined for the encoder-aware ablation.
  DenseMatrix image_representation(const DenseMatrix& pixels);

  AugmentationEncoder& augmentation_encoder() { return *aug_encoder_; }
  ImageEncoder& image_encoder() { return image_encoder_; }
  ImageHead& image_head() { return image_head_; }
  TextTower& text_tower() { return text_tower_; }
  [[nodiscard]] bool has_augmentation_encoder() const noexcept { return aug_encoder_.has_value(); }

 private:
  EncoderConfig cfg_;
  SimilarityMode mode_;
  ParamStore store_;
  std::optional<AugmentationEncoder> aug_encoder_;
  ImageEncoder image_encoder_;
  ImageHead image_head_;
  TextTower text_tower_;
  std::size_t image_rows_ = 0;
};

}  // namespace uniclip
