#include "uniclip/synthetic_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <ostream>

#include "uniclip/errors.hpp"

namespace uniclip {

namespace {

constexpr std::uint64_t kPrototypeStream = 0x70726f746f747970ULL;
constexpr double kBackgroundGain = 0.07;

struct PatchBox {
  std::size_t x0, y0, size;
};

PatchBox patch_box(const Concept& c, std::size_t res) {
  const std::size_t size = std::max<std::size_t>(1, res / 4);
  const std::size_t y0 = (res - size) / 2;
  std::size_t x0 = (res - size) / 2;
  if (c.spatial_mentioned) x0 = c.right_side ? res - res / 8 - size : res / 8;
  return {x0, y0, size};
}

std::vector<double> class_prototype(const WorldConfig& cfg, std::uint64_t seed, std::size_t label) {
  Rng rng = indexed_stream(seed ^ kPrototypeStream, label);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> p(cfg.latent_dim);
  for (auto& v : p) v = normal(rng);
  return p;
}

// Low-frequency background basis: latent coordinate k modulates a cosine pattern with
// its own frequency, phase and channel mix.
double basis(std::size_t k, std::size_t channel, double u, double v) {
  const double fx = 0.5 + static_cast<double>(k % 3);
  const double fy = 0.5 + static_cast<double>((k / 3) % 3);
  const double phase = 0.7 * static_cast<double>(k);
  const double mix = (k + channel) % 3 == 0 ? 1.0 : 0.4;
  return mix * std::cos(std::numbers::pi * (fx * u + fy * v) + phase);
}

void hue_to_rgb(double hue, double& r, double& g, double& b) {
  const double h6 = hue * 6.0;
  const double f = h6 - std::floor(h6);
  constexpr double v = 0.95, p = 0.05;
  const double q = v - (v - p) * f, t = p + (v - p) * f;
  switch (static_cast<int>(std::floor(h6)) % 6) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xffU);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(v));
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xffU);
  out.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace

void WorldConfig::validate() const {
  if (n_pairs == 0) throw ConfigError("world.n_pairs must be >= 1");
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) throw ConfigError("world.eval_fraction must be in [0, 1)");
  if (n_classes == 0) throw ConfigError("world.n_classes must be >= 1");
  if (n_hues < 2) throw ConfigError("world.n_hues must be >= 2");
  if (latent_dim == 0) throw ConfigError("world.latent_dim must be >= 1");
  if (resolution < 4) throw ConfigError("world.resolution must be >= 4");
  if (!(noise >= 0.0) || !(instance_spread >= 0.0)) throw ConfigError("world noise levels must be >= 0");
  if (!(spatial_probability >= 0.0 && spatial_probability <= 1.0) ||
      !(color_probability >= 0.0 && color_probability <= 1.0)) {
    throw ConfigError("world attribute probabilities must be in [0, 1]");
  }
}

SyntheticImage render_concept(const Concept& c, const WorldConfig& cfg) {
  const std::size_t res = cfg.resolution;
  SyntheticImage img(res, res);
  const double inv = 1.0 / static_cast<double>(res);
  for (std::size_t ch = 0; ch < SyntheticImage::kChannels; ++ch) {
    for (std::size_t y = 0; y < res; ++y) {
      const double v = (static_cast<double>(y) + 0.5) * inv;
      for (std::size_t x = 0; x < res; ++x) {
        const double u = (static_cast<double>(x) + 0.5) * inv;
        double acc = 0.5;
        for (std::size_t k = 0; k < c.latent.size(); ++k) acc += kBackgroundGain * c.latent[k] * basis(k, ch, u, v);
        img.at(ch, y, x) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  double rgb[3];
  hue_to_rgb(static_cast<double>(c.hue_class) / static_cast<double>(cfg.n_hues), rgb[0], rgb[1], rgb[2]);
  const auto box = patch_box(c, res);
  for (std::size_t ch = 0; ch < SyntheticImage::kChannels; ++ch) {
    for (std::size_t y = box.y0; y < box.y0 + box.size; ++y) {
      for (std::size_t x = box.x0; x < box.x0 + box.size; ++x) img.at(ch, y, x) = rgb[ch];
    }
  }
  return img;
}

std::vector<double> text_features(const Concept& c, const WorldConfig& cfg, Rng& noise_rng) {
  std::normal_distribution<double> normal(0.0, cfg.noise > 0.0 ? cfg.noise : 1.0);
  auto jitter = [&]() { return cfg.noise > 0.0 ? normal(noise_rng) : 0.0; };
  std::vector<double> f;
  f.reserve(cfg.text_dim());
  for (double v : c.latent) f.push_back(v + jitter());
  f.push_back(c.spatial_mentioned ? (c.right_side ? 1.0 : -1.0) : 0.0);
  for (std::size_t h = 0; h < cfg.n_hues; ++h) f.push_back(c.color_mentioned && h == c.hue_class ? 1.0 : 0.0);
  return f;
}

SyntheticPair generate_pair(const WorldConfig& cfg, std::uint64_t seed, std::size_t index) {
  Rng rng = indexed_stream(seed, index);
  Concept c;
  c.label = std::uniform_int_distribution<std::size_t>(0, cfg.n_classes - 1)(rng);
  c.hue_class = std::uniform_int_distribution<std::size_t>(0, cfg.n_hues - 1)(rng);
  c.spatial_mentioned = bernoulli(rng, cfg.spatial_probability);
  c.right_side = bernoulli(rng, 0.5);
  c.color_mentioned = bernoulli(rng, cfg.color_probability);
  c.latent = class_prototype(cfg, seed, c.label);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : c.latent) v += cfg.instance_spread * normal(rng);

  SyntheticPair pair;
  pair.image = render_concept(c, cfg);
  pair.text_features = text_features(c, cfg, rng);
  pair.scene = std::move(c);
  return pair;
}

Dataset generate_dataset(const WorldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Dataset data;
  data.config = cfg;
  data.seed = seed;
  const auto n_eval = static_cast<std::size_t>(std::floor(static_cast<double>(cfg.n_pairs) * cfg.eval_fraction));
  const std::size_t n_train = cfg.n_pairs - n_eval;
  data.train.reserve(n_train);
  data.eval.reserve(n_eval);
  for (std::size_t k = 0; k < cfg.n_pairs; ++k) {
    (k < n_train ? data.train : data.eval).push_back(generate_pair(cfg, seed, k));
  }
  return data;
}

Alignment misalignment_probe(const SyntheticPair& pair, const AugmentationInstruction& instr,
                             const WorldConfig& cfg) {
  const Concept& c = pair.scene;
  if (instr.flipped && c.spatial_mentioned) return Alignment::misaligned;
  if (c.color_mentioned) {
    if (instr.grayscaled) return Alignment::misaligned;
    const double half_spacing = 0.5 / static_cast<double>(cfg.n_hues);
    if (std::abs(instr.hue) > half_spacing) return Alignment::misaligned;
  }
  const auto box = patch_box(c, cfg.resolution);
  const double res = static_cast<double>(cfg.resolution);
  const double cx = (static_cast<double>(box.x0) + 0.5 * static_cast<double>(box.size)) / res;
  const double cy = (static_cast<double>(box.y0) + 0.5 * static_cast<double>(box.size)) / res;
  if (cx < instr.crop_x || cx > instr.crop_x + instr.crop_w || cy < instr.crop_y ||
      cy > instr.crop_y + instr.crop_h) {
    return Alignment::misaligned;
  }
  return Alignment::aligned;
}

void write_dataset_binary(std::ostream& out, const Dataset& data) {
  const auto& cfg = data.config;
  out.write("UCSW", 4);
  put_u32(out, kDatasetFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(data.train.size()));
  put_u32(out, static_cast<std::uint32_t>(data.eval.size()));
  put_u32(out, static_cast<std::uint32_t>(SyntheticImage::kChannels));
  put_u32(out, static_cast<std::uint32_t>(cfg.resolution));
  put_u32(out, static_cast<std::uint32_t>(cfg.resolution));
  put_u32(out, static_cast<std::uint32_t>(cfg.text_dim()));
  put_u32(out, static_cast<std::uint32_t>(cfg.latent_dim));
  for (const auto* split : {&data.train, &data.eval}) {
    for (const auto& p : *split) {
      for (double v : p.image.pixels()) put_f64(out, v);
    }
    for (const auto& p : *split) {
      for (double v : p.text_features) put_f64(out, v);
    }
    for (const auto& p : *split) {
      const auto& c = p.scene;
      put_u32(out, static_cast<std::uint32_t>(c.label));
      put_u32(out, static_cast<std::uint32_t>(c.hue_class));
      put_u32(out, c.spatial_mentioned ? 1U : 0U);
      put_u32(out, c.right_side ? 1U : 0U);
      put_u32(out, c.color_mentioned ? 1U : 0U);
    }
  }
}

}  // namespace uniclip
