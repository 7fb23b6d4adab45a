#pragma once

// Stage client interfaces. Images cross these boundaries as PNG bytes, the
// same encoding the HTTP wire protocol carries.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ilgen/binary_io.hpp"

namespace ilgen::genpipe {

inline constexpr std::string_view kStageCategories = "categories";
inline constexpr std::string_view kStageGenerate = "generate";
inline constexpr std::string_view kStageRemoveBg = "remove-bg";
inline constexpr std::string_view kStagePad = "pad";
inline constexpr std::string_view kStageRelight = "relight";

class CategorySource {
 public:
  virtual ~CategorySource() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::string> categories(const std::string& domain, const std::string& prompt,
                                              std::size_t count) = 0;
};

class InstanceSource {
 public:
  virtual ~InstanceSource() = default;
  virtual std::string id() const = 0;
  virtual Bytes generate(const std::string& prompt, std::uint64_t seed, int steps) = 0;
};

class BackgroundRemover {
 public:
  virtual ~BackgroundRemover() = default;
  virtual std::string id() const = 0;
  /// Returns an RGBA PNG.
  virtual Bytes remove_background(const Bytes& png) = 0;
};

class Relighter {
 public:
  virtual ~Relighter() = default;
  virtual std::string id() const = 0;
  virtual Bytes relight(const Bytes& foreground_png, const std::string& prompt, std::uint64_t seed) = 0;
};

struct StageClients {
  std::shared_ptr<CategorySource> category_source;
  std::shared_ptr<InstanceSource> instance_source;
  std::shared_ptr<BackgroundRemover> background_remover;
  std::shared_ptr<Relighter> relighter;

  bool complete() const noexcept { return category_source && instance_source && background_remover && relighter; }
};

}  // namespace ilgen::genpipe
