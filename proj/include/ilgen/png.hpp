#pragma once

// PNG codec. Encoding writes uncompressed (stored) deflate blocks with no
// row filtering, so identical pixels always produce identical bytes and
// content hashes do not depend on the zlib build. Decoding accepts any PNG
// through libpng and yields 8-bit RGB or RGBA.

#include <png.h>
#include <zlib.h>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ilgen/binary_io.hpp"
#include "ilgen/image.hpp"

namespace ilgen {

namespace detail {

inline void put_be32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(Bytes& out, const char type[4], std::span<const std::uint8_t> data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

inline Bytes encode_png(const Image& img) {
  require(img.valid(), Errc::invalid_argument, "cannot encode invalid image");
  static constexpr std::array<std::uint8_t, 8> signature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  Bytes out(signature.begin(), signature.end());

  Bytes ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);                            // bit depth
  ihdr.push_back(img.channels == 4 ? 6 : 2);    // colour type
  ihdr.push_back(0);                            // compression
  ihdr.push_back(0);                            // filter
  ihdr.push_back(0);                            // interlace
  detail::put_chunk(out, "IHDR", ihdr);

  const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;
  Bytes raw;
  raw.reserve((row_bytes + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter type None
    raw.insert(raw.end(), img.at(0, y), img.at(0, y) + row_bytes);
  }

  Bytes z{0x78, 0x01};
  constexpr std::size_t kMaxBlock = 65535;
  std::size_t pos = 0;
  do {
    const std::size_t len = std::min(kMaxBlock, raw.size() - pos);
    const bool last = pos + len == raw.size();
    z.push_back(last ? 1 : 0);
    z.push_back(static_cast<std::uint8_t>(len));
    z.push_back(static_cast<std::uint8_t>(len >> 8));
    z.push_back(static_cast<std::uint8_t>(~len));
    z.push_back(static_cast<std::uint8_t>(~len >> 8));
    z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
             raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  } while (pos < raw.size());
  detail::put_be32(z, static_cast<std::uint32_t>(adler32(1L, raw.data(), static_cast<uInt>(raw.size()))));
  detail::put_chunk(out, "IDAT", z);
  detail::put_chunk(out, "IEND", {});
  return out;
}

inline Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image pimg{};
  pimg.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pimg, bytes.data(), bytes.size()))
    fail(Errc::decode_error, std::string("PNG header: ") + pimg.message);
  const bool alpha = (pimg.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  pimg.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  if (pimg.width == 0 || pimg.height == 0 || pimg.width > 16384 || pimg.height > 16384) {
    png_image_free(&pimg);
    fail(Errc::decode_error, "unsupported PNG dimensions");
  }
  Image img(static_cast<int>(pimg.width), static_cast<int>(pimg.height), alpha ? 4 : 3);
  if (!png_image_finish_read(&pimg, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string msg = pimg.message;
    png_image_free(&pimg);
    fail(Errc::decode_error, "PNG body: " + msg);
  }
  return img;
}

}  // namespace ilgen
