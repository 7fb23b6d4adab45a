#pragma once

// 8-bit interleaved rasters with 3 (RGB) or 4 (RGBA) channels, plus the
// geometric operations shared by data generation and augmentation. All
// arithmetic here is +,-,*,/ and floor, so results match across platforms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ilgen/error.hpp"

namespace ilgen {

struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {
    require(w > 0 && h > 0, Errc::invalid_argument, "image dimensions must be positive");
    require(c == 3 || c == 4, Errc::invalid_argument, "images have 3 or 4 channels");
  }

  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * static_cast<std::size_t>(channels);
  }
  std::uint8_t* at(int x, int y) noexcept { return pixels.data() + index(x, y); }
  const std::uint8_t* at(int x, int y) const noexcept { return pixels.data() + index(x, y); }

  bool valid() const noexcept {
    return width > 0 && height > 0 && (channels == 3 || channels == 4) &&
           pixels.size() == static_cast<std::size_t>(width) * height * channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline std::uint8_t clamp_u8(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

namespace detail {

struct Tap {
  int i0 = 0;
  int i1 = 0;
  double frac = 0.0;
};

// Half-pixel-centre sampling positions for resizing `in` samples to `out`.
inline std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int o = 0; o < out; ++o) {
    double s = (o + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    taps[static_cast<std::size_t>(o)] = {i0, std::min(i0 + 1, in - 1), s - i0};
  }
  return taps;
}

}  // namespace detail

/// Bilinear resample to out_w x out_h, returned as doubles in the 0..255
/// range, interleaved like the source.
inline std::vector<double> resize_bilinear_real(const Image& src, int out_w, int out_h) {
  require(src.valid(), Errc::invalid_argument, "invalid source image");
  require(out_w > 0 && out_h > 0, Errc::invalid_argument, "resize target must be positive");
  const auto tx = detail::bilinear_taps(src.width, out_w);
  const auto ty = detail::bilinear_taps(src.height, out_h);
  const int c = src.channels;
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h * c);
  for (int y = 0; y < out_h; ++y) {
    const auto& vy = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const auto& vx = tx[static_cast<std::size_t>(x)];
      const std::uint8_t* p00 = src.at(vx.i0, vy.i0);
      const std::uint8_t* p10 = src.at(vx.i1, vy.i0);
      const std::uint8_t* p01 = src.at(vx.i0, vy.i1);
      const std::uint8_t* p11 = src.at(vx.i1, vy.i1);
      double* o = out.data() + (static_cast<std::size_t>(y) * out_w + x) * c;
      for (int k = 0; k < c; ++k) {
        const double top = p00[k] + (p10[k] - p00[k]) * vx.frac;
        const double bot = p01[k] + (p11[k] - p01[k]) * vx.frac;
        o[k] = top + (bot - top) * vy.frac;
      }
    }
  }
  return out;
}

inline Image resize_bilinear(const Image& src, int out_w, int out_h) {
  if (src.width == out_w && src.height == out_h) return src;
  const auto real = resize_bilinear_real(src, out_w, out_h);
  Image out(out_w, out_h, src.channels);
  for (std::size_t i = 0; i < real.size(); ++i) out.pixels[i] = clamp_u8(real[i]);
  return out;
}

inline Image crop(const Image& src, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && w > 0 && h > 0 && x0 + w <= src.width && y0 + h <= src.height,
          Errc::invalid_argument, "crop window outside image");
  Image out(w, h, src.channels);
  const std::size_t row = static_cast<std::size_t>(w) * src.channels;
  for (int y = 0; y < h; ++y) std::copy_n(src.at(x0, y0 + y), row, out.at(0, y));
  return out;
}

inline Image flip_horizontal(const Image& src) {
  Image out(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      std::copy_n(src.at(src.width - 1 - x, y), src.channels, out.at(x, y));
  return out;
}

/// Places `src` on a transparent (or zero) canvas with the given margins.
inline Image pad(const Image& src, int left, int top, int right, int bottom) {
  require(left >= 0 && top >= 0 && right >= 0 && bottom >= 0, Errc::invalid_argument, "negative padding");
  Image out(src.width + left + right, src.height + top + bottom, src.channels, 0);
  const std::size_t row = static_cast<std::size_t>(src.width) * src.channels;
  for (int y = 0; y < src.height; ++y) std::copy_n(src.at(0, y), row, out.at(left, top + y));
  return out;
}

inline Image drop_alpha(const Image& src) {
  if (src.channels == 3) return src;
  Image out(src.width, src.height, 3);
  for (std::size_t i = 0, n = static_cast<std::size_t>(src.width) * src.height; i < n; ++i)
    std::copy_n(src.pixels.data() + 4 * i, 3, out.pixels.data() + 3 * i);
  return out;
}

/// Fraction of pixels with alpha > 0.5 (i.e. > 127).
inline double alpha_coverage(const Image& rgba) {
  require(rgba.channels == 4, Errc::invalid_argument, "alpha coverage needs an RGBA image");
  std::size_t on = 0;
  const std::size_t n = static_cast<std::size_t>(rgba.width) * rgba.height;
  for (std::size_t i = 0; i < n; ++i) on += rgba.pixels[4 * i + 3] > 127;
  return static_cast<double>(on) / static_cast<double>(n);
}

struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty when x1 < x0
  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  bool empty() const noexcept { return x1 < x0; }
};

inline BoundingBox alpha_bounding_box(const Image& rgba) {
  require(rgba.channels == 4, Errc::invalid_argument, "bounding box needs an RGBA image");
  BoundingBox b{rgba.width, rgba.height, -1, -1};
  for (int y = 0; y < rgba.height; ++y)
    for (int x = 0; x < rgba.width; ++x)
      if (rgba.at(x, y)[3] > 127) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  if (b.x1 < 0) return BoundingBox{};
  return b;
}

/// HSV hue in degrees [0, 360); 0 for achromatic pixels.
inline double hue_degrees(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) noexcept {
  const double r = r8, g = g8, b = b8;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  if (delta <= 0) return 0.0;
  double h = 0.0;
  if (mx == r) h = (g - b) / delta;
  else if (mx == g) h = 2.0 + (b - r) / delta;
  else h = 4.0 + (r - g) / delta;
  h *= 60.0;
  if (h < 0) h += 360.0;
  return h;
}

/// Colour from HSV with h in [0,360), s and v in [0,1].
inline void hsv_to_rgb(double h, double s, double v, std::uint8_t out[3]) noexcept {
  h = h - 360.0 * std::floor(h / 360.0);
  const double c = v * s;
  const double hp = h / 60.0;
  const double m = v - c;
  const int sector = static_cast<int>(std::floor(hp)) % 6;
  const double f = hp - std::floor(hp);
  const double rise = c * f;
  const double fall = c * (1.0 - f);
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = c; g = rise; break;
    case 1: r = fall; g = c; break;
    case 2: g = c; b = rise; break;
    case 3: g = fall; b = c; break;
    case 4: r = rise; b = c; break;
    default: r = c; b = fall; break;
  }
  out[0] = clamp_u8((r + m) * 255.0);
  out[1] = clamp_u8((g + m) * 255.0);
  out[2] = clamp_u8((b + m) * 255.0);
}

}  // namespace ilgen
