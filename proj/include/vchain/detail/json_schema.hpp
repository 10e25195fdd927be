#pragma once

// Strict accessors for hand-validated JSON documents. Every failure is a
// SchemaViolation naming the JSON path.

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vchain/error.hpp"

namespace vchain::detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + what);
}

inline json parse_json(std::string_view document, std::string_view what) {
  try {
    return json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string(what) + ": " + e.what());
  }
}

inline void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, std::string("expected object, found ") + j.type_name());
}

inline void expect_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  expect_object(obj, path);
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      schema_error(path, "unknown field '" + key + "'");
    }
  }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) schema_error(path, std::string("expected string, found ") + j.type_name());
  return j.get<std::string>();
}

inline std::string get_string(const json& obj, const std::string& path, const char* key) {
  return get_string(require(obj, path, key), path + "." + key);
}

inline bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback = false) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) schema_error(path + "." + key, std::string("expected boolean, found ") + it->type_name());
  return it->get<bool>();
}

inline std::size_t get_size(const json& obj, const std::string& path, const char* key) {
  const auto& v = require(obj, path, key);
  if (!v.is_number_unsigned()) schema_error(path + "." + key, "expected non-negative integer");
  return v.get<std::size_t>();
}

inline const json& get_array(const json& obj, const std::string& path, const char* key, bool required = true) {
  static const json empty = json::array();
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) schema_error(path, std::string("missing field '") + key + "'");
    return empty;
  }
  if (!it->is_array()) schema_error(path + "." + key, std::string("expected array, found ") + it->type_name());
  return *it;
}

inline const json& get_object(const json& obj, const std::string& path, const char* key) {
  const auto& v = require(obj, path, key);
  expect_object(v, path + "." + key);
  return v;
}

}  // namespace vchain::detail
