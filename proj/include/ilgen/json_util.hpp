#pragma once

// JSON alias and strict-parse helpers shared by the config readers.

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ilgen/error.hpp"

namespace ilgen {

using Json = nlohmann::ordered_json;

namespace json_util {

/// Throws ConfigError when `obj` has a key outside `allowed`.
inline void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  require(obj.is_object(), Errc::config_error, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    require(ok, Errc::config_error, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const Json& obj, std::string_view key, T& out, const std::string& where) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, where + "." + std::string(key) + ": " + e.what());
  }
}

}  // namespace json_util

}  // namespace ilgen
