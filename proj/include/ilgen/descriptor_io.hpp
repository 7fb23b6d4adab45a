#pragma once

// Descriptor file layout (all integers little-endian):
//   "ILDS" | u16 version | u64 n | u32 d | n*d f32 row-major | n ids, each '\n'-terminated

#include <filesystem>
#include <string>
#include <vector>

#include "ilgen/binary_io.hpp"
#include "ilgen/descriptor.hpp"

namespace ilgen {

inline constexpr std::string_view kDescriptorMagic = "ILDS";
inline constexpr std::uint16_t kDescriptorVersion = 1;

inline Bytes encode_descriptor_set(const DescriptorSet& set) {
  ByteWriter w;
  w.raw(kDescriptorMagic);
  w.le<std::uint16_t>(kDescriptorVersion);
  w.le<std::uint64_t>(set.size());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(set.dim()));
  w.f32s(set.data());
  for (const auto& id : set.ids()) {
    require(id.find('\n') == std::string::npos, Errc::format_error, "image id contains a newline");
    w.raw(id);
    w.raw("\n");
  }
  return std::move(w).bytes();
}

inline DescriptorSet decode_descriptor_set(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  require(r.raw(4) == kDescriptorMagic, Errc::format_error, "bad descriptor magic");
  const auto version = r.le<std::uint16_t>();
  require(version == kDescriptorVersion, Errc::format_error, "unsupported descriptor version " + std::to_string(version));
  const auto n = r.le<std::uint64_t>();
  const auto d = r.le<std::uint32_t>();
  require(d > 0, Errc::format_error, "zero descriptor dimension");
  require(n <= r.remaining() / 4 / d, Errc::format_error, "truncated descriptor matrix");
  auto values = r.f32s(static_cast<std::size_t>(n) * d);
  std::vector<std::string> ids;
  ids.reserve(n);
  std::string_view tail = r.rest();
  while (ids.size() < n) {
    require(!tail.empty(), Errc::format_error, "missing image ids");
    const auto nl = tail.find('\n');
    ids.emplace_back(tail.substr(0, nl));
    tail = nl == std::string_view::npos ? std::string_view{} : tail.substr(nl + 1);
  }
  require(tail.empty(), Errc::format_error, "trailing bytes after image ids");
  return DescriptorSet::from_rows(std::move(ids), std::move(values), d);
}

inline void write_descriptor_file(const std::filesystem::path& path, const DescriptorSet& set) {
  write_file_atomic(path, encode_descriptor_set(set));
}

inline DescriptorSet read_descriptor_file(const std::filesystem::path& path) {
  return decode_descriptor_set(read_file(path));
}

}  // namespace ilgen
