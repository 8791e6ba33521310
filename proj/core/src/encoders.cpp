#include "uniclip/encoders.hpp"

#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

std::string to_string(AugmentationAwareness a) {
  switch (a) {
    case AugmentationAwareness::agnostic: return "agnostic";
    case AugmentationAwareness::head: return "head";
    case AugmentationAwareness::encoder: return "encoder";
  }
  return "?";
}

void EncoderConfig::validate() const {
  const std::size_t widths[] = {pixel_count,         text_dim,      image_hidden,  representation_width,
                                augmentation_width,  unified_width, head_expansion, text_hidden,
                                text_representation_width};
  for (auto w : widths) {
    if (w == 0) throw ConfigError("encoder widths must all be >= 1");
  }
}

// ---------------------------------------------------------------------------

AugmentationEncoder::AugmentationEncoder(ParamStore& store, std::size_t width, Rng& rng)
    : mlp_(store, "aug_encoder", {kInstructionWidth, width, width, width}, rng) {}

DenseMatrix AugmentationEncoder::forward(const ParamStore& store, const DenseMatrix& encodings) {
  if (encodings.cols() != kInstructionWidth) {
    throw ShapeError("augmentation encoder: expected " + std::to_string(kInstructionWidth) + " columns, got " +
                     encodings.shape_string());
  }
  return mlp_.forward(store, encodings);
}

DenseMatrix AugmentationEncoder::backward(const ParamStore& store, const DenseMatrix& grad_out,
                                          Gradients& grads) const {
  return mlp_.backward(store, grad_out, grads);
}

// ---------------------------------------------------------------------------

ImageEncoder::ImageEncoder(ParamStore& store, const EncoderConfig& cfg, std::size_t augmentation_width, Rng& rng)
    : pixel_count_(cfg.pixel_count),
      augmentation_width_(augmentation_width),
      mlp_(store, "image_encoder", {cfg.pixel_count + augmentation_width, cfg.image_hidden, cfg.representation_width},
           rng) {}

DenseMatrix ImageEncoder::forward(const ParamStore& store, const DenseMatrix& pixels) {
  if (augmentation_width_ != 0) {
    throw ContractError("image encoder: this encoder is augmentation-aware; use forward_with_augmentation");
  }
  if (pixels.cols() != pixel_count_) {
    throw ShapeError("image encoder: expected " + std::to_string(pixel_count_) + " pixels, got " +
                     pixels.shape_string());
  }
  return mlp_.forward(store, pixels);
}

DenseMatrix ImageEncoder::forward_with_augmentation(const ParamStore& store, const DenseMatrix& pixels,
                                                    const DenseMatrix& augmentation) {
  if (augmentation_width_ == 0 || augmentation.cols() != augmentation_width_) {
    throw ShapeError("image encoder: augmentation input " + augmentation.shape_string() +
                     " does not match configured width " + std::to_string(augmentation_width_));
  }
  if (pixels.cols() != pixel_count_) {
    throw ShapeError("image encoder: expected " + std::to_string(pixel_count_) + " pixels, got " +
                     pixels.shape_string());
  }
  return mlp_.forward(store, hconcat(pixels, augmentation));
}

DenseMatrix ImageEncoder::backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const {
  return mlp_.backward(store, grad_out, grads, pixel_count_);
}

// ---------------------------------------------------------------------------

ImageHead::ImageHead(ParamStore& store, const EncoderConfig& cfg, Rng& rng)
    : representation_width_(cfg.representation_width), augmentation_width_(cfg.augmentation_width) {
  const std::size_t width = cfg.head_input_width();
  for (std::size_t b = 0; b < cfg.head_blocks; ++b) {
    blocks_.emplace_back(store, "image_head.block" + std::to_string(b), width, cfg.head_expansion, rng);
  }
  output_ = Linear(store, "image_head.output", width, cfg.unified_width, rng);
}

DenseMatrix ImageHead::forward(const ParamStore& store, const DenseMatrix& representation,
                               const DenseMatrix& augmentation) {
  if (representation.cols() != representation_width_ || augmentation.cols() != augmentation_width_ ||
      representation.rows() != augmentation.rows()) {
    throw ShapeError("image head: inputs " + representation.shape_string() + " and " +
                     augmentation.shape_string());
  }
  DenseMatrix x = hconcat(representation, augmentation);
  for (auto& block : blocks_) x = block.forward(store, x);
  return output_.forward(store, x);
}

DenseMatrix ImageHead::backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const {
  DenseMatrix g = output_.backward(store, grad_out, grads);
  for (std::size_t b = blocks_.size(); b-- > 0;) g = blocks_[b].backward(store, g, grads);
  return g;
}

// ---------------------------------------------------------------------------

TextTower::TextTower(ParamStore& store, const EncoderConfig& cfg, Rng& rng)
    : encoder_(store, "text_encoder", {cfg.text_dim, cfg.text_hidden, cfg.text_representation_width}, rng),
      projection_(store, "text_head", cfg.text_representation_width, cfg.unified_width, rng) {}

DenseMatrix TextTower::forward(const ParamStore& store, const DenseMatrix& features) {
  if (features.cols() != encoder_.in_width()) {
    throw ShapeError("text encoder: expected " + std::to_string(encoder_.in_width()) + " features, got " +
                     features.shape_string());
  }
  return projection_.forward(store, encoder_.forward(store, features));
}

void TextTower::backward(const ParamStore& store, const DenseMatrix& grad_out, Gradients& grads) const {
  encoder_.backward(store, projection_.backward(store, grad_out, grads), grads);
}

// ---------------------------------------------------------------------------

DenseMatrix flatten_images(const std::vector<SyntheticImage>& images) {
  if (images.empty()) return {};
  const std::size_t width = images.front().pixel_count();
  DenseMatrix out(images.size(), width);
  for (std::size_t r = 0; r < images.size(); ++r) {
    if (images[r].pixel_count() != width) throw ShapeError("flatten_images: mixed resolutions");
    std::copy(images[r].pixels().begin(), images[r].pixels().end(), out.row(r).begin());
  }
  return out;
}

DenseMatrix encode_instructions(const std::vector<AugmentationInstruction>& instructions) {
  DenseMatrix out(instructions.size(), kInstructionWidth);
  for (std::size_t r = 0; r < instructions.size(); ++r) {
    const auto v = encode_instruction(instructions[r]);
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

UniclipModel::UniclipModel(const EncoderConfig& cfg, SimilarityMode mode, double initial_tau, Rng& init_rng)
    : cfg_(cfg), mode_(mode) {
  cfg_.validate();
  if (cfg_.awareness != AugmentationAwareness::agnostic) {
    aug_encoder_.emplace(store_, cfg_.augmentation_width, init_rng);
  }
  const std::size_t encoder_aug =
      cfg_.awareness == AugmentationAwareness::encoder ? cfg_.augmentation_width : 0;
  image_encoder_ = ImageEncoder(store_, cfg_, encoder_aug, init_rng);
  image_head_ = ImageHead(store_, cfg_, init_rng);
  text_tower_ = TextTower(store_, cfg_, init_rng);
  const auto init = SimilarityParams::initial(mode, initial_tau);
  store_.add(kLogTauName, DenseMatrix(1, kDomainCount, std::vector<double>(init.log_tau.begin(), init.log_tau.end())),
             false);
  store_.add(kOffsetName, DenseMatrix(1, kDomainCount, std::vector<double>(init.offset.begin(), init.offset.end())),
             false);
}

SimilarityParams UniclipModel::similarity() const {
  SimilarityParams p;
  p.mode = mode_;
  const auto& lt = store_.value(kLogTauName);
  const auto& off = store_.value(kOffsetName);
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    p.log_tau[d] = lt(0, d);
    p.offset[d] = off(0, d);
  }
  return p;
}

DenseMatrix UniclipModel::embed_images(const ImageBatch& images) {
  const std::size_t rows = images.pixels.rows();
  if (images.instructions.rows() != rows) throw ShapeError("embed_images: instruction rows differ from pixel rows");
  image_rows_ = rows;
  const DenseMatrix zeros(rows, cfg_.augmentation_width);
  switch (cfg_.awareness) {
    case AugmentationAwareness::agnostic:
      return image_head_.forward(store_, image_encoder_.forward(store_, images.pixels), zeros);
    case AugmentationAwareness::head: {
      const DenseMatrix aug = aug_encoder_->forward(store_, images.instructions);
      return image_head_.forward(store_, image_encoder_.forward(store_, images.pixels), aug);
    }
    case AugmentationAwareness::encoder: {
      const DenseMatrix aug = aug_encoder_->forward(store_, images.instructions);
      return image_head_.forward(store_, image_encoder_.forward_with_augmentation(store_, images.pixels, aug), zeros);
    }
  }
  throw ContractError("embed_images: unknown awareness mode");
}

DenseMatrix UniclipModel::embed_texts(const DenseMatrix& texts) { return text_tower_.forward(store_, texts); }

DenseMatrix UniclipModel::image_representation(const DenseMatrix& pixels) {
  if (cfg_.awareness == AugmentationAwareness::encoder) {
    // The encoder-aware ablation has no augmentation-free representation; use the identity instruction.
    DenseMatrix identity(pixels.rows(), kInstructionWidth);
    const auto v = encode_instruction(AugmentationInstruction::identity());
    for (std::size_t r = 0; r < pixels.rows(); ++r) std::copy(v.begin(), v.end(), identity.row(r).begin());
    const DenseMatrix aug = aug_encoder_->forward(store_, identity);
    return image_encoder_.forward_with_augmentation(store_, pixels, aug);
  }
  return image_encoder_.forward(store_, pixels);
}

DenseMatrix UniclipModel::forward(const ImageBatch& images, const DenseMatrix& texts) {
  return vconcat(embed_images(images), embed_texts(texts));
}

void UniclipModel::backward(const DenseMatrix& grad_embeddings, Gradients& grads) {
  const std::size_t width = cfg_.unified_width;
  DenseMatrix grad_img(image_rows_, width);
  DenseMatrix grad_txt(grad_embeddings.rows() - image_rows_, width);
  for (std::size_t r = 0; r < grad_embeddings.rows(); ++r) {
    auto src = grad_embeddings.row(r);
    auto dst = r < image_rows_ ? grad_img.row(r) : grad_txt.row(r - image_rows_);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  text_tower_.backward(store_, grad_txt, grads);

  const DenseMatrix grad_head_in = image_head_.backward(store_, grad_img, grads);
  const DenseMatrix grad_h = column_slice(grad_head_in, 0, cfg_.representation_width);
  switch (cfg_.awareness) {
    case AugmentationAwareness::agnostic:
      image_encoder_.backward(store_, grad_h, grads);
      break;
    case AugmentationAwareness::head:
      image_encoder_.backward(store_, grad_h, grads);
      aug_encoder_->backward(
          store_, column_slice(grad_head_in, cfg_.representation_width, cfg_.augmentation_width), grads);
      break;
    case AugmentationAwareness::encoder: {
      aug_encoder_->backward(store_, image_encoder_.backward(store_, grad_h, grads), grads);
      break;
    }
  }
}

void UniclipModel::accumulate_similarity(const SimilarityGradients& g, Gradients& grads) const {
  auto& lt = grads.slot(kLogTauName, 1, kDomainCount);
  auto& off = grads.slot(kOffsetName, 1, kDomainCount);
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    lt(0, d) += g.log_tau[d];
    off(0, d) += g.offset[d];
  }
}

}  // namespace uniclip
