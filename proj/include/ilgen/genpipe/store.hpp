#pragma once

// Content-addressed image store.
//
//   <root>/<sha256>.png          image bytes, named by their own hash
//   <root>/.journal/<sha256>     request-key journal: one file per completed
//                                client request, holding the response (an
//                                image hash or a text payload)
//
// Writes go through write-temp-then-rename, so concurrent writers are safe.

#include <filesystem>
#include <optional>
#include <string>

#include "ilgen/binary_io.hpp"
#include "ilgen/hash.hpp"

namespace ilgen::genpipe {

class ContentStore {
 public:
  explicit ContentStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / ".journal", ec);
    require(!ec, Errc::io_error, "cannot create store at " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  std::filesystem::path path_of(const std::string& hash) const { return root_ / (hash + ".png"); }

  bool contains(const std::string& hash) const { return std::filesystem::exists(path_of(hash)); }

  /// Stores `png` and returns its content hash.
  std::string put(std::span<const std::uint8_t> png) const {
    std::string hash = sha256_hex(png);
    if (!contains(hash)) write_file_atomic(path_of(hash), png);
    return hash;
  }

  Bytes get(const std::string& hash) const {
    require(contains(hash), Errc::missing_image, "store has no image " + hash);
    return read_file(path_of(hash));
  }

  std::optional<std::string> journal_get(std::string_view request_key) const {
    const auto p = journal_path(request_key);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_text_file(p);
  }

  void journal_put(std::string_view request_key, std::string_view value) const {
    write_file_atomic(journal_path(request_key), value);
  }

 private:
  std::filesystem::path journal_path(std::string_view key) const { return root_ / ".journal" / sha256_hex(key); }

  std::filesystem::path root_;
};

}  // namespace ilgen::genpipe
