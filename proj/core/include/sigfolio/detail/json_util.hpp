#pragma once

#include <json.hpp>
#include <set>
#include <string>

#include "sigfolio/common.hpp"

namespace sigfolio::detail {

using nlohmann::json;

// Strict schema helper: every object is checked against its allowed key set,
// so typos in configs fail loudly instead of being ignored.
inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

inline const json& require(const json& obj, const std::string& key, const std::string& context) {
  if (!obj.contains(key)) throw ConfigError(context + ": missing key '" + key + "'");
  return obj.at(key);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return obj.at(key).get<T>();
}

}  // namespace sigfolio::detail
