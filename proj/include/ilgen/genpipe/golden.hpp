#pragma once

// Golden request/response cases for the wire protocol, and an httplib route
// table that serves StageClients over it.
//
// A golden file is one JSON object:
//   {"name": ..., "path": "/v1/...", "request": "<raw body>",
//    "status": 200, "response": {...}}
// `request` is a string so malformed bodies can be recorded verbatim.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <httplib.h>

#include "ilgen/binary_io.hpp"
#include "ilgen/genpipe/mock.hpp"
#include "ilgen/genpipe/prompts.hpp"
#include "ilgen/genpipe/protocol.hpp"

namespace ilgen::genpipe {

/// Image size the golden suite is recorded at.
inline constexpr int kGoldenImageSize = 64;

struct GoldenCase {
  std::string name;
  std::string path;
  std::string request;
  int status = 200;
  Json response;
};

inline Json to_json(const GoldenCase& g) {
  Json j;
  j["name"] = g.name;
  j["path"] = g.path;
  j["request"] = g.request;
  j["status"] = g.status;
  j["response"] = g.response;
  return j;
}

inline GoldenCase golden_from_json(const Json& j) {
  try {
    return {j.at("name").get<std::string>(), j.at("path").get<std::string>(), j.at("request").get<std::string>(),
            j.at("status").get<int>(), j.at("response")};
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, std::string("golden case: ") + e.what());
  }
}

/// Builds the golden suite by running each request through `clients`.
/// Later requests feed on earlier responses (generate -> remove-bg -> relight).
inline std::vector<GoldenCase> build_golden_cases(const StageClients& clients) {
  std::vector<GoldenCase> out;
  auto add = [&](std::string name, std::string_view path, std::string body) {
    const auto r = dispatch_request(path, body, clients);
    out.push_back({std::move(name), std::string(path), std::move(body), r.status, r.body});
    return r.body;
  };
  const auto generic = make_prompt_template("generic", PromptKind::designed);
  add("categories_generic", kPathCategories,
      categories_request("generic", render_category_prompt(generic, 5), 5).dump());
  const auto art = make_prompt_template("art", PromptKind::template_);
  add("categories_art_template", kPathCategories,
      categories_request("art", render_category_prompt(art, 8), 8).dump());
  const Json gen = add("generate_table", kPathGenerate, generate_request(render_instance_prompt("table"), 0, 1).dump());
  add("generate_max_seed", kPathGenerate,
      generate_request(render_instance_prompt("French Empire clock"), 18446744073709551615ull, 4).dump());
  const Bytes image = base64_decode(gen.at("png_base64").get<std::string>());
  const Json fg = add("remove_bg_table", kPathRemoveBg, remove_bg_request(image).dump());
  const Bytes fg_png = base64_decode(fg.at("png_base64").get<std::string>());
  add("relight_table", kPathRelight, relight_request(fg_png, "table", 3).dump());
  add("error_not_json", kPathGenerate, "{not json");
  add("error_missing_seed", kPathGenerate, R"({"prompt": "a table in a clean background"})");
  add("error_bad_base64", kPathRemoveBg, R"({"png_base64": "@@@@"})");
  add("error_not_png", kPathRelight, Json{{"png_base64", "aGVsbG8="}, {"prompt", "table"}, {"seed", 1}}.dump());
  add("error_unknown_endpoint", "/v1/upscale", "{}");
  return out;
}

inline void write_golden_cases(const std::filesystem::path& dir, const std::vector<GoldenCase>& cases) {
  std::filesystem::create_directories(dir);
  for (const auto& g : cases) write_file_atomic(dir / (g.name + ".json"), to_json(g).dump(1) + "\n");
}

/// Reads every *.json in `dir`, sorted by file name.
inline std::vector<GoldenCase> read_golden_cases(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<GoldenCase> out;
  for (const auto& f : files) {
    try {
      out.push_back(golden_from_json(Json::parse(read_text_file(f))));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format_error, f.string() + ": " + e.what());
    }
  }
  return out;
}

/// Registers the protocol endpoints and /healthz on `server`.
inline void install_protocol_routes(httplib::Server& server, StageClients clients) {
  server.Get(std::string(kPathHealth), [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  server.Post(R"(/.*)", [clients = std::move(clients)](const httplib::Request& req, httplib::Response& res) {
    const auto r = dispatch_request(req.path, req.body, clients);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  });
}

}  // namespace ilgen::genpipe
