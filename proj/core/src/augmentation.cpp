#include "uniclip/augmentation.hpp"

#include <algorithm>
#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

namespace {

double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string("augmentation policy: ") + name + " must be in [0, 1], got " +
                      std::to_string(p));
  }
}

void check_range(double lo, double hi, const char* name) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError(std::string("augmentation policy: ") + name + " range is empty");
  }
}

double luma(double r, double g, double b) noexcept { return 0.299 * r + 0.587 * g + 0.114 * b; }

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) noexcept {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0) / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) noexcept {
  const double hh = h * 6.0;
  const int sector = static_cast<int>(std::floor(hh)) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

SyntheticImage crop_resize(const SyntheticImage& img, const AugmentationInstruction& in) {
  const auto H = img.height();
  const auto W = img.width();
  SyntheticImage out(H, W);
  const double hh = static_cast<double>(H);
  const double ww = static_cast<double>(W);
  for (std::size_t oy = 0; oy < H; ++oy) {
    const double sy = std::clamp((in.crop_y + (static_cast<double>(oy) + 0.5) / hh * in.crop_h) * hh - 0.5,
                                 0.0, hh - 1.0);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const auto y1 = std::min(y0 + 1, H - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < W; ++ox) {
      const double sx = std::clamp(
          (in.crop_x + (static_cast<double>(ox) + 0.5) / ww * in.crop_w) * ww - 0.5, 0.0, ww - 1.0);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto x1 = std::min(x0 + 1, W - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < SyntheticImage::kChannels; ++c) {
        const double top = img.at(c, y0, x0) * (1.0 - fx) + img.at(c, y0, x1) * fx;
        const double bottom = img.at(c, y1, x0) * (1.0 - fx) + img.at(c, y1, x1) * fx;
        out.at(c, oy, ox) = clamp01(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

void color_jitter(SyntheticImage& img, const AugmentationInstruction& in) {
  const auto H = img.height();
  const auto W = img.width();
  auto for_each_pixel = [&](auto&& fn) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        double r = img.at(0, y, x), g = img.at(1, y, x), b = img.at(2, y, x);
        fn(r, g, b);
        img.at(0, y, x) = clamp01(r);
        img.at(1, y, x) = clamp01(g);
        img.at(2, y, x) = clamp01(b);
      }
    }
  };
  if (in.brightness != 0.0) {
    const double f = 1.0 + in.brightness;
    for_each_pixel([f](double& r, double& g, double& b) { r *= f, g *= f, b *= f; });
  }
  if (in.contrast != 0.0) {
    double mean = 0.0;
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) mean += luma(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
    }
    mean /= static_cast<double>(H * W);
    const double f = 1.0 + in.contrast;
    for_each_pixel([f, mean](double& r, double& g, double& b) {
      r = (r - mean) * f + mean;
      g = (g - mean) * f + mean;
      b = (b - mean) * f + mean;
    });
  }
  if (in.saturation != 0.0) {
    const double f = 1.0 + in.saturation;
    for_each_pixel([f](double& r, double& g, double& b) {
      const double gray = luma(r, g, b);
      r = (r - gray) * f + gray;
      g = (g - gray) * f + gray;
      b = (b - gray) * f + gray;
    });
  }
  if (in.hue != 0.0) {
    const double shift = in.hue;
    for_each_pixel([shift](double& r, double& g, double& b) {
      double h = 0, s = 0, v = 0;
      rgb_to_hsv(r, g, b, h, s, v);
      h = std::fmod(h + shift + 1.0, 1.0);
      hsv_to_rgb(h, s, v, r, g, b);
    });
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * t * t / (sigma * sigma));
    k[static_cast<std::size_t>(t + radius)] = v;
    total += v;
  }
  for (auto& v : k) v /= total;
  return k;
}

void gaussian_blur(SyntheticImage& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int H = static_cast<int>(img.height());
  const int W = static_cast<int>(img.width());
  SyntheticImage tmp(img.height(), img.width());
  for (std::size_t c = 0; c < SyntheticImage::kChannels; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int xx = std::clamp(x + t, 0, W - 1);
          acc += kernel[static_cast<std::size_t>(t + radius)] * img.at(c, y, xx);
        }
        tmp.at(c, y, x) = acc;
      }
    }
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int yy = std::clamp(y + t, 0, H - 1);
          acc += kernel[static_cast<std::size_t>(t + radius)] * tmp.at(c, yy, x);
        }
        img.at(c, y, x) = clamp01(acc);
      }
    }
  }
}

void horizontal_flip(SyntheticImage& img) {
  const auto W = img.width();
  for (std::size_t c = 0; c < SyntheticImage::kChannels; ++c) {
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < W / 2; ++x) std::swap(img.at(c, y, x), img.at(c, y, W - 1 - x));
    }
  }
}

void grayscale(SyntheticImage& img) {
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double g = clamp01(luma(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)));
      img.at(0, y, x) = g;
      img.at(1, y, x) = g;
      img.at(2, y, x) = g;
    }
  }
}

}  // namespace

bool AugmentationInstruction::is_valid() const noexcept {
  const double fields[] = {crop_x, crop_y, crop_w, crop_h, brightness, contrast, saturation, hue, blur_sigma};
  for (double f : fields) {
    if (!std::isfinite(f)) return false;
  }
  constexpr double slack = 1e-12;
  return crop_x >= 0.0 && crop_y >= 0.0 && crop_w > 0.0 && crop_h > 0.0 && crop_x + crop_w <= 1.0 + slack &&
         crop_y + crop_h <= 1.0 + slack && blur_sigma >= 0.0;
}

InstructionVector encode_instruction(const AugmentationInstruction& in) noexcept {
  return {in.crop_x,    in.crop_y,     in.crop_w,
          in.crop_h,    in.brightness, in.contrast,
          in.saturation, in.hue,       in.blur_sigma,
          in.flipped ? 1.0 : 0.0,      in.grayscaled ? 1.0 : 0.0};
}

AugmentationPolicy AugmentationPolicy::weak() { return AugmentationPolicy{}; }

AugmentationPolicy AugmentationPolicy::strong() {
  AugmentationPolicy p;
  p.strength = AugmentationStrength::strong;
  p.crop_scale_min = 0.08;
  p.flip_probability = 0.5;
  p.gray_probability = 0.2;
  return p;
}

AugmentationPolicy AugmentationPolicy::none() {
  AugmentationPolicy p;
  p.crop_probability = 0.0;
  p.jitter_probability = 0.0;
  p.blur_probability = 0.0;
  p.flip_probability = 0.0;
  p.gray_probability = 0.0;
  return p;
}

void AugmentationPolicy::validate() const {
  check_probability(crop_probability, "crop_probability");
  check_probability(jitter_probability, "jitter_probability");
  check_probability(blur_probability, "blur_probability");
  check_probability(flip_probability, "flip_probability");
  check_probability(gray_probability, "gray_probability");
  check_range(crop_scale_min, crop_scale_max, "crop_scale");
  check_range(crop_ratio_min, crop_ratio_max, "crop_ratio");
  check_range(blur_sigma_min, blur_sigma_max, "blur_sigma");
  if (!(crop_scale_min > 0.0 && crop_scale_max <= 1.0)) {
    throw ConfigError("augmentation policy: crop_scale must lie in (0, 1]");
  }
  if (!(crop_ratio_min > 0.0)) throw ConfigError("augmentation policy: crop_ratio must be positive");
  if (!(blur_sigma_min >= 0.0)) throw ConfigError("augmentation policy: blur_sigma must be >= 0");
  for (double m : {brightness, contrast, saturation}) {
    if (!(m >= 0.0 && m < 1.0)) throw ConfigError("augmentation policy: jitter magnitude must be in [0, 1)");
  }
  if (!(hue >= 0.0 && hue <= 0.5)) throw ConfigError("augmentation policy: hue magnitude must be in [0, 0.5]");
  if (strength == AugmentationStrength::weak && (flip_probability != 0.0 || gray_probability != 0.0)) {
    throw ConfigError("augmentation policy: weak policy must have flip and grayscale probabilities of 0");
  }
}

AugmentationInstruction sample_instruction(const AugmentationPolicy& policy, Rng& rng) {
  AugmentationInstruction out;
  if (bernoulli(rng, policy.crop_probability)) {
    const double log_lo = std::log(policy.crop_ratio_min);
    const double log_hi = std::log(policy.crop_ratio_max);
    bool placed = false;
    for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
      const double area = uniform(rng, policy.crop_scale_min, policy.crop_scale_max);
      const double ratio = std::exp(uniform(rng, log_lo, log_hi));
      const double w = std::sqrt(area * ratio);
      const double h = std::sqrt(area / ratio);
      if (w <= 1.0 && h <= 1.0) {
        out.crop_w = w;
        out.crop_h = h;
        out.crop_x = uniform(rng, 0.0, 1.0 - w);
        out.crop_y = uniform(rng, 0.0, 1.0 - h);
        placed = true;
      }
    }
    // Fallback mirrors RandomResizedCrop: the whole (square) frame.
  }
  if (bernoulli(rng, policy.jitter_probability)) {
    out.brightness = uniform(rng, -policy.brightness, policy.brightness);
    out.contrast = uniform(rng, -policy.contrast, policy.contrast);
    out.saturation = uniform(rng, -policy.saturation, policy.saturation);
    out.hue = uniform(rng, -policy.hue, policy.hue);
  }
  if (bernoulli(rng, policy.blur_probability)) {
    out.blur_sigma = uniform(rng, policy.blur_sigma_min, policy.blur_sigma_max);
  }
  out.flipped = bernoulli(rng, policy.flip_probability);
  out.grayscaled = bernoulli(rng, policy.gray_probability);
  return out;
}

SyntheticImage::SyntheticImage(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), pixels_(kChannels * height * width, fill) {}

bool SyntheticImage::in_range() const noexcept {
  return std::all_of(pixels_.begin(), pixels_.end(),
                     [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

SyntheticImage apply_augmentation(const SyntheticImage& img, const AugmentationInstruction& instr) {
  const bool full_frame =
      instr.crop_x == 0.0 && instr.crop_y == 0.0 && instr.crop_w == 1.0 && instr.crop_h == 1.0;
  SyntheticImage out = full_frame ? img : crop_resize(img, instr);
  color_jitter(out, instr);
  if (instr.blur_sigma > 0.0) gaussian_blur(out, instr.blur_sigma);
  if (instr.flipped) horizontal_flip(out);
  if (instr.grayscaled) grayscale(out);
  if (full_frame) {
    for (auto& v : out.pixels()) v = clamp01(v);
  }
  return out;
}

std::string to_string(AugmentationStrength s) { return s == AugmentationStrength::weak ? "weak" : "strong"; }

}  // namespace uniclip
