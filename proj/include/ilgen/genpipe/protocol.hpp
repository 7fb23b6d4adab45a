#pragma once

// Generation wire protocol. All bodies are UTF-8 JSON.
//
//   POST /v1/categories  {domain, prompt, count}    -> {names: [...]}
//   POST /v1/generate    {prompt, seed, steps}      -> {png_base64}
//   POST /v1/remove-bg   {png_base64}               -> {png_base64}  (RGBA)
//   POST /v1/relight     {png_base64, prompt, seed} -> {png_base64}
//   errors: non-2xx with {error: {code, message}}
//
// Seeds travel as JSON unsigned integers (full 64-bit range).

#include <string>
#include <string_view>

#include "ilgen/genpipe/clients.hpp"
#include "ilgen/genpipe/config.hpp"
#include "ilgen/hash.hpp"

namespace ilgen::genpipe {

inline constexpr std::string_view kPathCategories = "/v1/categories";
inline constexpr std::string_view kPathGenerate = "/v1/generate";
inline constexpr std::string_view kPathRemoveBg = "/v1/remove-bg";
inline constexpr std::string_view kPathRelight = "/v1/relight";
inline constexpr std::string_view kPathHealth = "/healthz";

inline std::string_view stage_of_path(std::string_view path) noexcept {
  if (path == kPathCategories) return kStageCategories;
  if (path == kPathGenerate) return kStageGenerate;
  if (path == kPathRemoveBg) return kStageRemoveBg;
  if (path == kPathRelight) return kStageRelight;
  return {};
}

inline Json categories_request(const std::string& domain, const std::string& prompt, std::size_t count) {
  return Json{{"domain", domain}, {"prompt", prompt}, {"count", count}};
}

inline Json generate_request(const std::string& prompt, std::uint64_t seed, int steps) {
  return Json{{"prompt", prompt}, {"seed", seed}, {"steps", steps}};
}

inline Json remove_bg_request(const Bytes& png) { return Json{{"png_base64", base64_encode(png)}}; }

inline Json relight_request(const Bytes& png, const std::string& prompt, std::uint64_t seed) {
  return Json{{"png_base64", base64_encode(png)}, {"prompt", prompt}, {"seed", seed}};
}

inline Json image_response(const Bytes& png) { return Json{{"png_base64", base64_encode(png)}}; }

inline Json error_body(std::string_view code, std::string_view message) {
  return Json{{"error", Json{{"code", code}, {"message", message}}}};
}

namespace protocol_detail {

// nlohmann converts -1 to 2^64-1 silently; the protocol wants unsigned integers.
inline std::uint64_t unsigned_field(const Json& req, const char* key) {
  const Json& v = req.at(key);
  if (!v.is_number_unsigned()) fail(Errc::format_error, std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace protocol_detail

struct ProtocolResponse {
  int status = 200;
  Json body;
};

/// Server-side dispatch of one request onto `clients`; used by the in-process
/// test server and to produce golden responses.
inline ProtocolResponse dispatch_request(std::string_view path, std::string_view body, const StageClients& clients) {
  using protocol_detail::unsigned_field;
  Json req;
  try {
    req = Json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return {400, error_body("BAD_REQUEST", "body is not valid JSON")};
  }
  if (!req.is_object()) return {400, error_body("BAD_REQUEST", "body must be an object")};
  try {
    if (path == kPathCategories) {
      auto names = clients.category_source->categories(req.at("domain").get<std::string>(),
                                                       req.at("prompt").get<std::string>(),
                                                       unsigned_field(req, "count"));
      return {200, Json{{"names", names}}};
    }
    if (path == kPathGenerate) {
      return {200, image_response(clients.instance_source->generate(req.at("prompt").get<std::string>(),
                                                                    unsigned_field(req, "seed"),
                                                                    req.value("steps", 1)))};
    }
    if (path == kPathRemoveBg) {
      return {200, image_response(
                       clients.background_remover->remove_background(base64_decode(req.at("png_base64").get<std::string>())))};
    }
    if (path == kPathRelight) {
      return {200, image_response(clients.relighter->relight(base64_decode(req.at("png_base64").get<std::string>()),
                                                             req.at("prompt").get<std::string>(),
                                                             unsigned_field(req, "seed")))};
    }
  } catch (const nlohmann::json::exception& e) {
    return {400, error_body("BAD_REQUEST", e.what())};
  } catch (const Error& e) {
    if (e.code() == Errc::decode_error || e.code() == Errc::format_error || e.code() == Errc::empty_category)
      return {400, error_body("BAD_REQUEST", e.what())};
    return {500, error_body("GENERATION_FAILED", e.what())};
  }
  return {404, error_body("BAD_REQUEST", "unknown endpoint " + std::string(path))};
}

}  // namespace ilgen::genpipe
