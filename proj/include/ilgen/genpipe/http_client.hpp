#pragma once

// Remote stage clients speaking the wire protocol over HTTP.

#include <chrono>
#include <memory>
#include <regex>
#include <string>

#include <httplib.h>

#include "ilgen/genpipe/protocol.hpp"

namespace ilgen::genpipe {

struct Endpoint {
  std::string scheme_host_port;  // "http://host:port"
  std::string base_path;         // "" or "/prefix"
};

/// Parses "http://host[:port][/prefix]". Anything else is a ClientError
/// tagged with `stage`.
inline Endpoint parse_endpoint(const std::string& url, std::string_view stage) {
  static const std::regex re(R"(^(http://[A-Za-z0-9._\-]+|http://\[[0-9A-Fa-f:.]+\])(:[0-9]{1,5})?(/[^?#\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re))
    throw ClientError(std::string(stage), "invalid endpoint URL '" + url + "' (expected http://host[:port][/path])");
  Endpoint e{m[1].str() + m[2].str(), m[3].str()};
  while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
  return e;
}

class HttpTransport {
 public:
  HttpTransport(std::string url, std::chrono::seconds timeout = std::chrono::seconds(600))
      : url_(std::move(url)), timeout_(timeout) {}

  const std::string& url() const noexcept { return url_; }

  /// POSTs `body` to `path`; returns the parsed 2xx response or throws a
  /// ClientError tagged with the stage of `path`.
  Json post(std::string_view path, const Json& body) const {
    const std::string stage(stage_of_path(path));
    const Endpoint ep = parse_endpoint(url_, stage);
    httplib::Client cli(ep.scheme_host_port);
    if (!cli.is_valid()) throw ClientError(stage, "invalid endpoint URL '" + url_ + "'");
    cli.set_connection_timeout(std::chrono::seconds(10));
    cli.set_read_timeout(timeout_);
    cli.set_write_timeout(timeout_);
    const auto res = cli.Post(ep.base_path + std::string(path), body.dump(), "application/json");
    if (!res) throw ClientError(stage, url_ + ": " + httplib::to_string(res.error()));
    Json reply;
    try {
      reply = Json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw ClientError(stage, "HTTP " + std::to_string(res->status) + " with a non-JSON body");
    }
    if (res->status < 200 || res->status >= 300) {
      std::string detail = "HTTP " + std::to_string(res->status);
      if (reply.contains("error") && reply["error"].is_object())
        detail += " " + reply["error"].value("code", std::string("?")) + ": " +
                  reply["error"].value("message", std::string());
      throw ClientError(stage, detail);
    }
    return reply;
  }

  Bytes post_image(std::string_view path, const Json& body) const {
    const Json reply = post(path, body);
    try {
      return base64_decode(reply.at("png_base64").get<std::string>());
    } catch (const std::exception& e) {
      throw ClientError(std::string(stage_of_path(path)), std::string("malformed image response: ") + e.what());
    }
  }

 private:
  std::string url_;
  std::chrono::seconds timeout_;
};

class RemoteCategorySource final : public CategorySource {
 public:
  explicit RemoteCategorySource(std::shared_ptr<const HttpTransport> t) : t_(std::move(t)) {}
  std::string id() const override { return "remote:" + t_->url(); }

  std::vector<std::string> categories(const std::string& domain, const std::string& prompt,
                                      std::size_t count) override {
    const Json reply = t_->post(kPathCategories, categories_request(domain, prompt, count));
    try {
      return reply.at("names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ClientError(std::string(kStageCategories), std::string("malformed categories response: ") + e.what());
    }
  }

 private:
  std::shared_ptr<const HttpTransport> t_;
};

class RemoteInstanceSource final : public InstanceSource {
 public:
  explicit RemoteInstanceSource(std::shared_ptr<const HttpTransport> t) : t_(std::move(t)) {}
  std::string id() const override { return "remote:" + t_->url(); }

  Bytes generate(const std::string& prompt, std::uint64_t seed, int steps) override {
    return t_->post_image(kPathGenerate, generate_request(prompt, seed, steps));
  }

 private:
  std::shared_ptr<const HttpTransport> t_;
};

class RemoteBackgroundRemover final : public BackgroundRemover {
 public:
  explicit RemoteBackgroundRemover(std::shared_ptr<const HttpTransport> t) : t_(std::move(t)) {}
  std::string id() const override { return "remote:" + t_->url(); }

  Bytes remove_background(const Bytes& png) override { return t_->post_image(kPathRemoveBg, remove_bg_request(png)); }

 private:
  std::shared_ptr<const HttpTransport> t_;
};

class RemoteRelighter final : public Relighter {
 public:
  explicit RemoteRelighter(std::shared_ptr<const HttpTransport> t) : t_(std::move(t)) {}
  std::string id() const override { return "remote:" + t_->url(); }

  Bytes relight(const Bytes& png, const std::string& prompt, std::uint64_t seed) override {
    return t_->post_image(kPathRelight, relight_request(png, prompt, seed));
  }

 private:
  std::shared_ptr<const HttpTransport> t_;
};

/// All four stages against a single endpoint.
inline StageClients remote_clients(const std::string& url) {
  auto t = std::make_shared<const HttpTransport>(url);
  return {std::make_shared<RemoteCategorySource>(t), std::make_shared<RemoteInstanceSource>(t),
          std::make_shared<RemoteBackgroundRemover>(t), std::make_shared<RemoteRelighter>(t)};
}

}  // namespace ilgen::genpipe
