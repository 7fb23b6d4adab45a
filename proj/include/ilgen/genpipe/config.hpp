#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ilgen/genpipe/prompts.hpp"
#include "ilgen/hash.hpp"
#include "ilgen/json_util.hpp"

namespace ilgen::genpipe {

struct DomainSpec {
  std::string name;
  PromptKind prompt_kind = PromptKind::designed;
  std::size_t categories = 1;  // C
  std::size_t instances = 1;   // K
  std::size_t backgrounds = 4; // N
  std::optional<std::string> prompt;
  std::optional<std::string> examples;

  std::size_t classes() const noexcept { return categories * instances; }  // M = C * K
  PromptTemplate prompt_template() const { return make_prompt_template(name, prompt_kind, prompt, examples); }
};

struct GenerationConfig {
  std::string dataset_id = "ilgen";
  std::uint64_t master_seed = 0;
  double max_padding_fraction = 0.5;
  int image_size = 64;
  int steps = 1;
  std::size_t threads = 4;  // in-flight work items; does not affect output
  std::vector<DomainSpec> domains;

  void validate() const {
    require(!domains.empty(), Errc::config_error, "at least one domain is required");
    require(max_padding_fraction >= 0.0 && max_padding_fraction <= 0.9, Errc::config_error,
            "max_padding_fraction must lie in [0, 0.9]");
    require(image_size >= 16 && image_size <= 4096, Errc::config_error, "image_size must lie in [16, 4096]");
    require(steps >= 1, Errc::config_error, "steps must be >= 1");
    std::set<std::string> names;
    for (const auto& d : domains) {
      require(!d.name.empty(), Errc::config_error, "domain name is empty");
      require(names.insert(d.name).second, Errc::config_error, "domain '" + d.name + "' listed twice");
      require(d.categories >= 1 && d.instances >= 1 && d.backgrounds >= 1, Errc::config_error,
              "domain '" + d.name + "': C, K and N must be >= 1");
      (void)d.prompt_template();
    }
  }

  std::size_t expected_classes() const noexcept {
    std::size_t n = 0;
    for (const auto& d : domains) n += d.classes();
    return n;
  }

  std::size_t expected_images() const noexcept {
    std::size_t n = 0;
    for (const auto& d : domains) n += d.classes() * d.backgrounds;
    return n;
  }
};

inline Json to_json(const DomainSpec& d) {
  Json j;
  j["name"] = d.name;
  j["prompt_kind"] = std::string(prompt_kind_name(d.prompt_kind));
  j["C"] = d.categories;
  j["K"] = d.instances;
  j["N"] = d.backgrounds;
  if (d.prompt) j["prompt"] = *d.prompt;
  if (d.examples) j["examples"] = *d.examples;
  return j;
}

/// Canonical form; `threads` is excluded because it has no effect on output.
inline Json to_json(const GenerationConfig& c) {
  Json j;
  j["dataset_id"] = c.dataset_id;
  j["master_seed"] = c.master_seed;
  j["max_padding_fraction"] = c.max_padding_fraction;
  j["image_size"] = c.image_size;
  j["steps"] = c.steps;
  Json ds = Json::array();
  for (const auto& d : c.domains) ds.push_back(to_json(d));
  j["domains"] = std::move(ds);
  return j;
}

inline DomainSpec domain_from_json(const Json& j) {
  json_util::check_keys(j, {"name", "prompt_kind", "C", "K", "N", "prompt", "examples"}, "domain");
  DomainSpec d;
  json_util::read(j, "name", d.name, "domain");
  std::string kind = "designed";
  json_util::read(j, "prompt_kind", kind, "domain");
  d.prompt_kind = parse_prompt_kind(kind);
  json_util::read(j, "C", d.categories, "domain");
  json_util::read(j, "K", d.instances, "domain");
  json_util::read(j, "N", d.backgrounds, "domain");
  if (j.contains("prompt")) d.prompt = j.at("prompt").get<std::string>();
  if (j.contains("examples")) d.examples = j.at("examples").get<std::string>();
  return d;
}

/// Strict parse: unknown keys are errors.
inline GenerationConfig generation_config_from_json(const Json& j) {
  json_util::check_keys(j, {"dataset_id", "master_seed", "max_padding_fraction", "image_size", "steps", "threads",
                            "domains"},
                        "generation config");
  GenerationConfig c;
  json_util::read(j, "dataset_id", c.dataset_id, "config");
  json_util::read(j, "master_seed", c.master_seed, "config");
  json_util::read(j, "max_padding_fraction", c.max_padding_fraction, "config");
  json_util::read(j, "image_size", c.image_size, "config");
  json_util::read(j, "steps", c.steps, "config");
  json_util::read(j, "threads", c.threads, "config");
  if (j.contains("domains")) {
    require(j.at("domains").is_array(), Errc::config_error, "domains must be an array");
    for (const auto& d : j.at("domains")) c.domains.push_back(domain_from_json(d));
  }
  c.validate();
  return c;
}

inline std::string config_fingerprint(const GenerationConfig& c) { return sha256_hex(to_json(c).dump()); }

}  // namespace ilgen::genpipe
