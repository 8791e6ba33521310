#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "uniclip/rng.hpp"

namespace uniclip {

/// Parameters of one sampled composite image augmentation.
/// Unapplied transforms carry identity parameters.
struct AugmentationInstruction {
  // Crop box in normalized coordinates; (x, y) is the top-left corner.
  double crop_x = 0.0;
  double crop_y = 0.0;
  double crop_w = 1.0;
  double crop_h = 1.0;
  // Signed offsets from the identity jitter (0 = unchanged).
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
  double hue = 0.0;
  double blur_sigma = 0.0;  // in pixels
  bool flipped = false;
  bool grayscaled = false;

  static AugmentationInstruction identity() { return {}; }
  [[nodiscard]] bool is_valid() const noexcept;
  friend bool operator==(const AugmentationInstruction&, const AugmentationInstruction&) = default;
};

inline constexpr std::size_t kInstructionWidth = 11;
using InstructionVector = std::array<double, kInstructionWidth>;

/// Fixed layout [x, y, w, h, Δbrightness, Δcontrast, Δsaturation, Δhue, σ, flip, gray].
InstructionVector encode_instruction(const AugmentationInstruction& instr) noexcept;

enum class AugmentationStrength { weak, strong };

struct AugmentationPolicy {
  AugmentationStrength strength = AugmentationStrength::weak;
  double crop_scale_min = 0.5;
  double crop_scale_max = 1.0;
  double crop_ratio_min = 3.0 / 4.0;
  double crop_ratio_max = 4.0 / 3.0;
  double crop_probability = 1.0;
  double jitter_probability = 0.8;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.1;
  double blur_probability = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double flip_probability = 0.0;
  double gray_probability = 0.0;

  /// Weak policy: crop scale [0.5, 1], jitter 0.8, blur 0.5, no flip/grayscale.
  static AugmentationPolicy weak();
  /// Strong policy: crop scale [0.08, 1], jitter 0.8, blur 0.5, flip 0.5, grayscale 0.2.
  static AugmentationPolicy strong();
  /// Every transform disabled; always samples the identity instruction.
  static AugmentationPolicy none();

  /// Throws ConfigError when a probability or range is out of bounds.
  void validate() const;
};

AugmentationInstruction sample_instruction(const AugmentationPolicy& policy, Rng& rng);

/// Channel-major (C×H×W) image with pixel values in [0, 1].
class SyntheticImage {
 public:
  static constexpr std::size_t kChannels = 3;

  SyntheticImage() = default;
  SyntheticImage(std::size_t height, std::size_t width, double fill = 0.0);

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t pixel_count() const noexcept { return pixels_.size(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return pixels_[(c * height_ + y) * width_ + x];
  }
  [[nodiscard]] double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return pixels_[(c * height_ + y) * width_ + x];
  }

  [[nodiscard]] const std::vector<double>& pixels() const noexcept { return pixels_; }
  std::vector<double>& pixels() noexcept { return pixels_; }

  [[nodiscard]] bool in_range() const noexcept;
  friend bool operator==(const SyntheticImage&, const SyntheticImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

/// Applies crop→jitter→blur→flip→gray. Output has the input size; pixels clamped to [0, 1].
SyntheticImage apply_augmentation(const SyntheticImage& img, const AugmentationInstruction& instr);

std::string to_string(AugmentationStrength s);

}  // namespace uniclip
