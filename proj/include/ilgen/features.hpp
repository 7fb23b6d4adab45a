#pragma once

// Fixed pixel featurization standing in for a backbone: bilinear resize to
// 16x16, channel-planar layout (all R, then G, then B), scaled to [0, 1].

#include <string>
#include <vector>

#include "ilgen/image.hpp"

namespace ilgen {

inline constexpr int kFeatureSide = 16;
inline constexpr std::size_t kFeatureDim = 3 * kFeatureSide * kFeatureSide;  // 768

struct FeatureRecord {
  std::string image_id;
  std::vector<double> values;
};

inline std::vector<double> featurize_values(const Image& image) {
  require(image.valid(), Errc::decode_error, "invalid raster");
  require(image.width >= kFeatureSide && image.height >= kFeatureSide, Errc::too_small,
          "image smaller than 16x16");
  const auto resized = resize_bilinear_real(image, kFeatureSide, kFeatureSide);
  constexpr std::size_t plane = kFeatureSide * kFeatureSide;
  const auto c = static_cast<std::size_t>(image.channels);
  std::vector<double> out(kFeatureDim);
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t k = 0; k < 3; ++k) out[k * plane + p] = resized[p * c + k] / 255.0;
  return out;
}

inline FeatureRecord featurize(const Image& image, std::string image_id = {}) {
  return {std::move(image_id), featurize_values(image)};
}

}  // namespace ilgen
