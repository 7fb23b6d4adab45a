#pragma once

// Built-in mock generation clients.
//
//  * categories: deterministic picks from a fixed vocabulary, keyed by
//    (domain, prompt); single nouns first, then "modifier noun" pairs.
//  * generate: category -> shape family and base hue; instance seed -> shape
//    extents, offset, colours and stripe pattern; drawn without antialiasing
//    on the flat kMockBackground colour.
//  * remove-bg: alpha = 255 wherever a pixel differs from kMockBackground,
//    so the mask is exactly the drawn shape.
//  * relight: seed -> two-colour gradient background and an illumination
//    gain on the foreground; alpha is binarized at 0.5 so the foreground
//    keeps its hue.
//
// All pixel arithmetic avoids transcendental functions; output bytes are
// identical on every platform.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "ilgen/genpipe/clients.hpp"
#include "ilgen/genpipe/prompts.hpp"
#include "ilgen/png.hpp"
#include "ilgen/rng.hpp"

namespace ilgen::genpipe {

inline constexpr std::array<std::uint8_t, 3> kMockBackground{250, 250, 250};
inline constexpr int kMockBackgroundTolerance = 12;

namespace mock_vocab {

inline constexpr std::string_view generic_nouns[] = {
    "mug", "chair", "lamp", "sofa", "desk", "teapot", "sandal", "bottle", "bowl", "vase", "clock", "kettle",
    "backpack", "umbrella", "guitar", "bicycle", "toaster", "laptop", "camera", "headphones", "suitcase", "stool",
    "candle", "basket", "helmet", "skateboard", "teddybear", "toy car", "watering can", "plant pot", "bookshelf",
    "wardrobe", "mirror", "fan", "radio", "telephone", "blender", "frying pan", "spatula", "wine glass", "jar",
    "sneaker", "boot", "hat", "scarf", "glove", "wallet", "handbag", "sunglasses", "wristwatch", "pen", "notebook",
    "stapler", "calculator", "keyboard", "mouse", "monitor", "speaker", "microphone", "drum", "violin", "trumpet",
    "piano", "tent", "lantern", "hammer", "screwdriver", "wrench", "drill", "ladder", "bucket", "broom", "doormat",
    "pillow", "blanket", "towel", "soap dispenser", "toothbrush", "hairdryer", "comb", "perfume bottle", "ring",
    "necklace", "bracelet", "earring", "coin", "stamp", "trophy", "globe", "kite", "ball", "dice", "chess piece",
    "puzzle box", "rocking horse", "doll", "robot toy", "birdhouse", "mailbox", "bench"};

inline constexpr std::string_view art_nouns[] = {
    "oil painting", "tapestry", "amulet", "longsword", "samurai armor", "krater vase", "gilded mirror", "cameo ring",
    "glass chandelier", "bust", "marble statue", "bronze figurine", "lacquer box", "ceramic plate", "folding screen",
    "illuminated manuscript", "silver chalice", "ivory comb", "jade pendant", "mosaic panel", "harp", "lute",
    "ceremonial mask", "helmet", "shield", "dagger", "embroidered robe", "silk fan", "porcelain jar", "enamel brooch"};

inline constexpr std::string_view landmark_nouns[] = {
    "catholic church", "neoclassical building", "train station", "temple", "cathedral", "tower building", "square",
    "mosque", "skyscraper", "castle", "lighthouse", "bridge", "town hall", "monument", "fountain", "palace",
    "windmill", "pagoda", "arch", "clock tower", "opera house", "stadium", "museum building", "city gate"};

inline constexpr std::string_view product_nouns[] = {
    "leather jacket", "smartphone", "gaming console", "bluetooth headphones", "smartwatch", "designer handbag",
    "running shoes", "vintage dress", "dslr camera", "polaroid film", "cereal box", "coffee maker", "tablet",
    "electric toothbrush", "jeans", "hoodie", "sports bottle", "perfume", "lipstick", "snack bag", "board game",
    "action figure", "power bank", "desk lamp", "water filter", "yoga mat", "kitchen scale", "wireless earbuds"};

inline constexpr std::string_view modifiers[] = {
    "vintage", "modern", "wooden", "metal", "plastic", "ceramic", "glass", "leather", "striped", "polka-dot",
    "antique", "miniature", "oversized", "folding", "electric", "handmade", "rustic", "minimalist", "ornate",
    "industrial", "colorful", "matte", "glossy", "woven", "carved", "painted", "retro", "sleek", "compact", "classic"};

inline std::vector<std::string> vocabulary(std::string_view domain) {
  std::span<const std::string_view> nouns = generic_nouns;
  if (domain == "art") nouns = art_nouns;
  else if (domain == "landmark") nouns = landmark_nouns;
  else if (domain == "product") nouns = product_nouns;
  std::vector<std::string> out(nouns.begin(), nouns.end());
  for (auto m : modifiers)
    for (auto n : nouns) out.push_back(std::string(m) + " " + std::string(n));
  return out;
}

}  // namespace mock_vocab

class MockCategorySource final : public CategorySource {
 public:
  std::string id() const override { return "mock-llm"; }

  std::vector<std::string> categories(const std::string& domain, const std::string& prompt,
                                      std::size_t count) override {
    ++calls;
    auto vocab = mock_vocab::vocabulary(domain);
    const std::size_t nouns = domain == "art"        ? std::size(mock_vocab::art_nouns)
                              : domain == "landmark" ? std::size(mock_vocab::landmark_nouns)
                              : domain == "product"  ? std::size(mock_vocab::product_nouns)
                                                     : std::size(mock_vocab::generic_nouns);
    // Single nouns are shuffled among themselves and listed before compounds.
    Rng rng(split_seed(fnv1a64(domain) ^ mix64(fnv1a64(prompt)), "mock-categories"));
    shuffle(std::span(vocab.data(), nouns), rng);
    shuffle(std::span(vocab.data() + nouns, vocab.size() - nouns), rng);
    vocab.resize(std::min(count, vocab.size()));
    return vocab;
  }

  std::atomic<std::size_t> calls{0};
};

enum class MockShape { ellipse, rectangle, diamond, triangle, cross, ring, hexagon, squircle };
inline constexpr int kMockShapeCount = 8;

struct MockInstanceSpec {
  MockShape shape = MockShape::ellipse;
  double half_w = 0, half_h = 0;  // fractions of the image side
  double cx = 0.5, cy = 0.5;
  std::array<std::uint8_t, 3> color_a{};
  std::array<std::uint8_t, 3> color_b{};
  bool vertical_stripes = false;
  int stripe_period = 0;  // pixels; 0 = solid
};

/// Shape parameters for (category, seed). Category fixes the family and base
/// hue; the seed varies everything else.
inline MockInstanceSpec mock_instance_spec(std::string_view category, std::uint64_t seed) {
  const std::uint64_t h = mix64(fnv1a64(category));
  MockInstanceSpec s;
  s.shape = static_cast<MockShape>(h % kMockShapeCount);
  const double base_hue = static_cast<double>((h >> 8) % 360);
  Rng rng(split_seed(seed ^ h, "mock-instance"));
  s.half_w = rng.uniform(0.22, 0.36);
  s.half_h = s.half_w * rng.uniform(0.7, 1.3);
  s.cx = 0.5 + rng.uniform(-0.06, 0.06);
  s.cy = 0.5 + rng.uniform(-0.06, 0.06);
  hsv_to_rgb(base_hue + rng.uniform(-40.0, 40.0), rng.uniform(0.55, 0.95), rng.uniform(0.35, 0.8), s.color_a.data());
  hsv_to_rgb(rng.uniform(0.0, 360.0), rng.uniform(0.55, 0.95), rng.uniform(0.35, 0.8), s.color_b.data());
  s.vertical_stripes = rng.bernoulli(0.5);
  s.stripe_period = rng.bernoulli(0.25) ? 0 : 3 + static_cast<int>(rng.below(6));
  return s;
}

inline bool mock_shape_contains(MockShape shape, double u, double v) noexcept {
  const double au = std::abs(u), av = std::abs(v);
  switch (shape) {
    case MockShape::ellipse: return u * u + v * v <= 1.0;
    case MockShape::rectangle: return au <= 1.0 && av <= 1.0;
    case MockShape::diamond: return au + av <= 1.0;
    case MockShape::triangle: return v >= -1.0 && v <= 1.0 && au <= (v + 1.0) * 0.5;
    case MockShape::cross: return (au <= 1.0 && av <= 0.35) || (au <= 0.35 && av <= 1.0);
    case MockShape::ring: {
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.3;
    }
    case MockShape::hexagon: return av <= 0.87 && au + 0.577 * av <= 1.0;
    case MockShape::squircle: return u * u * u * u + v * v * v * v <= 1.0;
  }
  return false;
}

/// Renders an instance on the flat mock background.
inline Image render_mock_instance(const MockInstanceSpec& s, int size) {
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double px = (x + 0.5) / size;
      const double py = (y + 0.5) / size;
      const double u = (px - s.cx) / s.half_w;
      const double v = (py - s.cy) / s.half_h;
      std::uint8_t* out = img.at(x, y);
      if (!mock_shape_contains(s.shape, u, v)) {
        std::copy(kMockBackground.begin(), kMockBackground.end(), out);
        continue;
      }
      bool second = false;
      if (s.stripe_period > 0) second = ((s.vertical_stripes ? x : y) / s.stripe_period) % 2 == 1;
      const auto& c = second ? s.color_b : s.color_a;
      std::copy(c.begin(), c.end(), out);
    }
  return img;
}

class MockInstanceSource final : public InstanceSource {
 public:
  explicit MockInstanceSource(int image_size = 64) : size_(image_size) {}
  std::string id() const override { return "mock-gdm"; }

  Bytes generate(const std::string& prompt, std::uint64_t seed, int /*steps*/) override {
    ++calls;
    const auto category = category_from_instance_prompt(prompt);
    return encode_png(render_mock_instance(mock_instance_spec(category, seed), size_));
  }

  std::atomic<std::size_t> calls{0};

 private:
  int size_;
};

/// Alpha mask of pixels that differ from the mock background.
inline Image mock_remove_background(const Image& src) {
  const Image rgb = drop_alpha(src);
  Image out(rgb.width, rgb.height, 4);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x) {
      const std::uint8_t* p = rgb.at(x, y);
      std::uint8_t* o = out.at(x, y);
      int diff = 0;
      for (int k = 0; k < 3; ++k) diff = std::max(diff, std::abs(int(p[k]) - int(kMockBackground[k])));
      std::copy_n(p, 3, o);
      o[3] = diff > kMockBackgroundTolerance ? 255 : 0;
    }
  return out;
}

class MockBackgroundRemover final : public BackgroundRemover {
 public:
  std::string id() const override { return "mock-rmbg"; }

  Bytes remove_background(const Bytes& png) override {
    ++calls;
    return encode_png(mock_remove_background(decode_png(png)));
  }

  std::atomic<std::size_t> calls{0};
};

struct MockLighting {
  std::array<std::uint8_t, 3> from{};
  std::array<std::uint8_t, 3> to{};
  int direction = 0;  // 0 horizontal, 1 vertical, 2 diagonal
  double gain = 1.0;
};

inline MockLighting mock_lighting(std::string_view prompt, std::uint64_t seed) {
  Rng rng(split_seed(seed ^ mix64(fnv1a64(prompt)), "mock-relight"));
  MockLighting l;
  hsv_to_rgb(rng.uniform(0.0, 360.0), rng.uniform(0.1, 0.5), rng.uniform(0.5, 1.0), l.from.data());
  hsv_to_rgb(rng.uniform(0.0, 360.0), rng.uniform(0.1, 0.5), rng.uniform(0.5, 1.0), l.to.data());
  l.direction = static_cast<int>(rng.below(3));
  l.gain = rng.uniform(0.75, 1.15);
  return l;
}

inline Image mock_relight(const Image& fg, const MockLighting& l) {
  Image out(fg.width, fg.height, 3);
  for (int y = 0; y < fg.height; ++y)
    for (int x = 0; x < fg.width; ++x) {
      const double px = (x + 0.5) / fg.width;
      const double py = (y + 0.5) / fg.height;
      const double t = l.direction == 0 ? px : l.direction == 1 ? py : 0.5 * (px + py);
      const std::uint8_t* f = fg.at(x, y);
      std::uint8_t* o = out.at(x, y);
      const bool opaque = fg.channels == 4 ? f[3] > 127 : true;
      if (opaque) {
        for (int k = 0; k < 3; ++k) o[k] = clamp_u8(f[k] * l.gain);
        continue;
      }
      for (int k = 0; k < 3; ++k) o[k] = clamp_u8(l.from[k] + (double(l.to[k]) - l.from[k]) * t);
    }
  return out;
}

class MockRelighter final : public Relighter {
 public:
  std::string id() const override { return "mock-iclight"; }

  Bytes relight(const Bytes& foreground_png, const std::string& prompt, std::uint64_t seed) override {
    ++calls;
    return encode_png(mock_relight(decode_png(foreground_png), mock_lighting(prompt, seed)));
  }

  std::atomic<std::size_t> calls{0};
};

struct MockClients {
  std::shared_ptr<MockCategorySource> categories = std::make_shared<MockCategorySource>();
  std::shared_ptr<MockInstanceSource> instances;
  std::shared_ptr<MockBackgroundRemover> remover = std::make_shared<MockBackgroundRemover>();
  std::shared_ptr<MockRelighter> relighter = std::make_shared<MockRelighter>();

  explicit MockClients(int image_size = 64) : instances(std::make_shared<MockInstanceSource>(image_size)) {}

  StageClients stage_clients() const { return {categories, instances, remover, relighter}; }

  std::size_t total_calls() const noexcept {
    return categories->calls + instances->calls + remover->calls + relighter->calls;
  }
};

}  // namespace ilgen::genpipe
