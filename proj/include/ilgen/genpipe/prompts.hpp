#pragma once

// Category-generation prompts. Designed prompts are hand-written per domain;
// template prompts share one sentence with {domain} and {examples} slots.
// Both carry a {count} slot filled with the requested category count.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ilgen/error.hpp"
#include "ilgen/text.hpp"

namespace ilgen::genpipe {

enum class PromptKind { designed, template_ };

inline std::string_view prompt_kind_name(PromptKind k) noexcept {
  return k == PromptKind::designed ? "designed" : "template";
}

inline PromptKind parse_prompt_kind(std::string_view s) {
  if (s == "designed") return PromptKind::designed;
  if (s == "template") return PromptKind::template_;
  fail(Errc::config_error, "prompt kind must be 'designed' or 'template', got '" + std::string(s) + "'");
}

struct PromptTemplate {
  std::string domain;
  PromptKind kind = PromptKind::designed;
  std::string text;          // may contain {count}, {domain}, {examples}
  std::string domain_label;  // substituted for {domain}
  std::string examples;      // substituted for {examples}
};

inline constexpr std::string_view kTemplatePrompt =
    "Provide a raw list of {count} objects names from the domain of {domain} objects. Here are some examples, "
    "which you can include in your list too but also get inspired by {examples}.";

struct BuiltinDomain {
  std::string_view name;
  std::string_view designed;
  std::string_view template_domain;
  std::string_view template_examples;
};

inline constexpr BuiltinDomain kBuiltinDomains[] = {
    {"generic",
     "Provide a raw list of {count} objects names from the domain of everyday objects, such as household items, "
     "retail products, electronics, collectibles, vehicles, buildings, outdoor objects, etc. Here are some examples, "
     "which you can include in your list too but also get inspired by sandal, mug, laptop, chair, bottle, temple, "
     "house, dress, teapot, dog, toy, rabbit, teddybear, car, toy, car, bowl, church, skyscraper hotel.",
     "everyday", "sandal, mug, laptop, chair, house, dress, teddybear, car, toy, church"},
    {"art",
     "Provide a raw list of {count} object names from the domain of museum items. Consider a encyclopedic art museum "
     "that is home to collections classic art such as paintings, graphic work, jewelry, vases, sculptures, but also of "
     "musical instruments, costumes, and decorative arts and textiles, as well as antique weapons and armor from "
     "around the world.",
     "museum",
     "Renaissance oil painting, Baroque tapestry, Egyptian faience amulet, Medieval longsword, Japanese samurai armor, "
     "Greek krater vase, Rococo gilded mirror, Ancient Roman cameo ring, Venetian glass chandelier, 19th-century "
     "concert grand piano"},
    {"landmark",
     "Provide a raw list of {count} object names from the domain of buildings, landmarks, urban structures, outdoor "
     "constructions, such as church, neoclassical building, train station, temple, cathedral, tower building, square. "
     "It can be fine-grained too, e.g., catholic church. Please name the most common things, such as house in "
     "standard modern European architecture.",
     "landmarks",
     "catholic church, neoclassical building, train station, temple, cathedral, tower building, square, Mosque, "
     "Skyscraper, Castle"},
    {"product",
     "Provide a raw list of {count} object names from the domain of retail products, supermarket products, e-shop "
     "electronics, clothes, fashion items, shoes, anything that someone would sell in a second hand online market.",
     "retail products",
     "Leather jacket, Smartphone, Gaming console, Bluetooth headphones, Smartwatch, Designer handbag, Running shoes, "
     "Vintage dress, DSLR camera"},
};

inline const BuiltinDomain* find_builtin_domain(std::string_view name) noexcept {
  for (const auto& d : kBuiltinDomains)
    if (d.name == name) return &d;
  return nullptr;
}

/// Prompt for `domain`. Built-in domains supply their own text; other domains
/// need `custom_text` (designed) or `examples` (template).
inline PromptTemplate make_prompt_template(const std::string& domain, PromptKind kind,
                                           const std::optional<std::string>& custom_text = std::nullopt,
                                           const std::optional<std::string>& examples = std::nullopt) {
  PromptTemplate t;
  t.domain = domain;
  t.kind = kind;
  const BuiltinDomain* builtin = find_builtin_domain(domain);
  if (kind == PromptKind::designed) {
    if (custom_text) t.text = *custom_text;
    else if (builtin) t.text = std::string(builtin->designed);
    else fail(Errc::config_error, "domain '" + domain + "' has no built-in designed prompt; set 'prompt'");
  } else {
    t.text = custom_text.value_or(std::string(kTemplatePrompt));
    t.domain_label = builtin ? std::string(builtin->template_domain) : domain;
    if (examples) t.examples = *examples;
    else if (builtin) t.examples = std::string(builtin->template_examples);
    else fail(Errc::config_error, "domain '" + domain + "' has no built-in examples; set 'examples'");
  }
  return t;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

inline std::string render_category_prompt(const PromptTemplate& t, std::size_t count) {
  std::string s = replace_all(t.text, "{count}", std::to_string(count));
  s = replace_all(std::move(s), "{domain}", t.domain_label);
  s = replace_all(std::move(s), "{examples}", t.examples);
  require(!text::trim(s).empty(), Errc::config_error, "rendered prompt is empty");
  return s;
}

inline constexpr std::string_view kInstancePromptSuffix = " in a clean background";

/// "a {category} in a clean background", whitespace in the category collapsed.
inline std::string render_instance_prompt(std::string_view category) {
  const std::string c = text::collapse_whitespace(category);
  require(!c.empty(), Errc::empty_category, "category name is empty");
  return "a " + c + std::string(kInstancePromptSuffix);
}

/// Inverse of render_instance_prompt; returns the prompt unchanged when it
/// does not follow the pattern.
inline std::string category_from_instance_prompt(std::string_view prompt) {
  std::string_view p = text::trim(prompt);
  if (p.starts_with("a ") && p.ends_with(kInstancePromptSuffix)) {
    p.remove_prefix(2);
    p.remove_suffix(kInstancePromptSuffix.size());
  }
  return std::string(p);
}

}  // namespace ilgen::genpipe
