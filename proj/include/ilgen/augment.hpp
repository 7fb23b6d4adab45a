#pragma once

// Training-time augmentation: random crop (area fraction in
// [crop_min_area, crop_max_area], aspect kept) resized back, horizontal flip,
// brightness/contrast jitter and grayscale. Sampling and application are
// split so callers can force individual branches.

#include <algorithm>
#include <cmath>

#include "ilgen/image.hpp"
#include "ilgen/rng.hpp"

namespace ilgen {

struct AugmentConfig {
  bool enabled = true;
  double crop_min_area = 0.5;
  double crop_max_area = 1.0;
  double flip_prob = 0.5;
  double brightness = 0.2;  // factor drawn from [1 - b, 1 + b]
  double contrast = 0.2;
  double grayscale_prob = 0.2;

  static AugmentConfig none() {
    AugmentConfig c;
    c.enabled = false;
    return c;
  }
};

struct AugmentParams {
  int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;  // crop_w == 0 means no crop
  bool flip = false;
  double brightness = 1.0;
  double contrast = 1.0;
  bool grayscale = false;

  static AugmentParams identity() { return {}; }
};

inline AugmentParams sample_augment(Rng& rng, int width, int height, const AugmentConfig& cfg) {
  AugmentParams p;
  if (!cfg.enabled) return p;
  const double area = rng.uniform(cfg.crop_min_area, cfg.crop_max_area);
  const double side = std::sqrt(area);
  const int cw = std::clamp(static_cast<int>(std::floor(width * side + 0.5)), 1, width);
  const int ch = std::clamp(static_cast<int>(std::floor(height * side + 0.5)), 1, height);
  const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - cw + 1)));
  const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - ch + 1)));
  if (cw < width || ch < height) p = {cx, cy, cw, ch};
  p.flip = rng.bernoulli(cfg.flip_prob);
  p.brightness = rng.uniform(1.0 - cfg.brightness, 1.0 + cfg.brightness);
  p.contrast = rng.uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast);
  p.grayscale = rng.bernoulli(cfg.grayscale_prob);
  return p;
}

inline Image apply_augment(const Image& src, const AugmentParams& p) {
  Image img = p.crop_w > 0 ? resize_bilinear(crop(src, p.crop_x, p.crop_y, p.crop_w, p.crop_h), src.width, src.height)
                           : src;
  if (p.flip) img = flip_horizontal(img);
  const int c = img.channels;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (p.brightness != 1.0 || p.contrast != 1.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t* px = img.pixels.data() + i * c;
      mean += (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) * p.brightness;
    }
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint8_t* px = img.pixels.data() + i * c;
      for (int k = 0; k < 3; ++k) px[k] = clamp_u8((px[k] * p.brightness - mean) * p.contrast + mean);
    }
  }
  if (p.grayscale) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint8_t* px = img.pixels.data() + i * c;
      const std::uint8_t y = clamp_u8(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
      px[0] = px[1] = px[2] = y;
    }
  }
  return img;
}

inline Image augment(const Image& src, Rng& rng, const AugmentConfig& cfg = {}) {
  return apply_augment(src, sample_augment(rng, src.width, src.height, cfg));
}

}  // namespace ilgen
