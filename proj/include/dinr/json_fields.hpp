#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>

#include <fmt/format.h>
#include <json.hpp>

#include "dinr/errors.hpp"

// Helpers for reading config objects with errors that name the offending
// field path, e.g. "recon.omega: expected number, got string".
namespace dinr::cfg {

using json = nlohmann::json;

inline std::string join_path(std::string_view path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

template <class T>
T as(const json& v, const std::string& where) {
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0))) {
      throw ConfigError(fmt::format("{}: expected a non-negative integer, got {}", where, v.dump()));
    }
  }
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}: unexpected {} value {}", where, v.type_name(), v.dump()));
  }
}

template <class T>
T get(const json& obj, std::string_view path, std::string_view key, T fallback) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end() || it->is_null()) return fallback;
  return as<T>(*it, join_path(path, key));
}

template <class T>
T require(const json& obj, std::string_view path, std::string_view key) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw ConfigError(fmt::format("{}: missing required field", join_path(path, key)));
  return as<T>(*it, join_path(path, key));
}

inline const json& object(const json& obj, std::string_view path, std::string_view key) {
  static const json empty = json::object();
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return empty;
  if (!it->is_object()) throw ConfigError(fmt::format("{}: expected an object", join_path(path, key)));
  return *it;
}

inline void reject_unknown(const json& obj, std::string_view path, std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected an object", path.empty() ? "<root>" : path));
  for (const auto& [k, _] : obj.items()) {
    bool ok = false;
    for (auto name : known) ok = ok || name == k;
    if (!ok) throw ConfigError(fmt::format("{}: unknown field", join_path(path, k)));
  }
}

}  // namespace dinr::cfg
