#include <cmath>

#include "doctest.h"
#include "uniclip/augmentation.hpp"
#include "uniclip/errors.hpp"
#include "uniclip/rng.hpp"

using namespace uniclip;

namespace {

SyntheticImage random_image(std::size_t res, Rng& rng) {
  SyntheticImage img(res, res);
  for (auto& v : img.pixels()) v = uniform(rng, 0.0, 1.0);
  return img;
}

AugmentationPolicy all_off() {
  AugmentationPolicy p = AugmentationPolicy::weak();
  p.crop_probability = 0.0;
  p.jitter_probability = 0.0;
  p.blur_probability = 0.0;
  return p;
}

}  // namespace

TEST_CASE("policy with every probability zero samples the identity") {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) CHECK(sample_instruction(all_off(), rng) == AugmentationInstruction::identity());
  for (int k = 0; k < 100; ++k) {
    CHECK(sample_instruction(AugmentationPolicy::none(), rng) == AugmentationInstruction::identity());
  }
}

TEST_CASE("weak policy never flips or grayscales") {
  Rng rng(2);
  for (int k = 0; k < 5000; ++k) {
    const auto instr = sample_instruction(AugmentationPolicy::weak(), rng);
    CHECK_FALSE(instr.flipped);
    CHECK_FALSE(instr.grayscaled);
    CHECK(instr.crop_w * instr.crop_h >= 0.5 - 1e-12);
  }
}

TEST_CASE("strong policy flip frequency") {
  Rng rng(3);
  std::size_t flips = 0, grays = 0;
  constexpr std::size_t n = 10000;
  for (std::size_t k = 0; k < n; ++k) {
    const auto instr = sample_instruction(AugmentationPolicy::strong(), rng);
    CHECK(instr.is_valid());
    flips += instr.flipped ? 1 : 0;
    grays += instr.grayscaled ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(flips) / n - 0.5) <= 0.02);
  CHECK(std::abs(static_cast<double>(grays) / n - 0.2) <= 0.02);
}

TEST_CASE("instruction encodings") {
  CHECK(encode_instruction(AugmentationInstruction::identity()) == InstructionVector{0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0});
  AugmentationInstruction center;
  center.crop_x = center.crop_y = 0.25;
  center.crop_w = center.crop_h = 0.5;
  center.flipped = true;
  CHECK(encode_instruction(center) == InstructionVector{0.25, 0.25, 0.5, 0.5, 0, 0, 0, 0, 0, 1, 0});
  AugmentationInstruction gray;
  gray.grayscaled = true;
  CHECK(encode_instruction(gray) == InstructionVector{0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1});
  AugmentationInstruction jitter;
  jitter.brightness = 0.1;
  jitter.contrast = -0.2;
  jitter.saturation = 0.3;
  jitter.hue = -0.05;
  jitter.blur_sigma = 1.5;
  CHECK(encode_instruction(jitter) == InstructionVector{0, 0, 1, 1, 0.1, -0.2, 0.3, -0.05, 1.5, 0, 0});
}

TEST_CASE("identity augmentation is pixel-identical") {
  Rng rng(4);
  const SyntheticImage img = random_image(8, rng);
  CHECK(apply_augmentation(img, AugmentationInstruction::identity()) == img);
}

TEST_CASE("flip is an involution") {
  Rng rng(5);
  const SyntheticImage img = random_image(7, rng);
  AugmentationInstruction flip;
  flip.flipped = true;
  const SyntheticImage once = apply_augmentation(img, flip);
  CHECK_FALSE(once == img);
  CHECK(once.at(1, 2, 0) == img.at(1, 2, 6));
  CHECK(apply_augmentation(once, flip) == img);
}

TEST_CASE("grayscale output has equal channels") {
  Rng rng(6);
  const SyntheticImage img = random_image(6, rng);
  AugmentationInstruction gray;
  gray.grayscaled = true;
  const SyntheticImage out = apply_augmentation(img, gray);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 6; ++x) {
      CHECK(out.at(0, y, x) == out.at(1, y, x));
      CHECK(out.at(1, y, x) == out.at(2, y, x));
    }
  }
}

TEST_CASE("sampled augmentations keep pixels in range and size fixed") {
  Rng rng(7);
  const SyntheticImage img = random_image(10, rng);
  for (int k = 0; k < 200; ++k) {
    const SyntheticImage out = apply_augmentation(img, sample_instruction(AugmentationPolicy::strong(), rng));
    CHECK(out.height() == 10);
    CHECK(out.width() == 10);
    CHECK(out.in_range());
  }
}

TEST_CASE("policy validation") {
  AugmentationPolicy p = AugmentationPolicy::strong();
  CHECK_NOTHROW(p.validate());
  p.flip_probability = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = AugmentationPolicy::weak();
  p.flip_probability = 0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = AugmentationPolicy::weak();
  p.crop_scale_min = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
