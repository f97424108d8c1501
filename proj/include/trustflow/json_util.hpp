#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trustflow/error.hpp"

namespace trustflow {

using json = nlohmann::json;

namespace detail {

inline json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is the 1-based offset of the offending character.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) {
      what = what.substr(pos);
    }
    throw Error(ErrorCode::Syntax, what, line, column);
  }
}

inline void expect_object(const json& value, std::string_view where) {
  if (!value.is_object()) {
    throw Error(ErrorCode::Schema, std::string(where) + ": expected object");
  }
}

// Strict mode: every key must be one of `allowed`.
inline void expect_keys(const json& value, std::initializer_list<std::string_view> allowed,
                        std::string_view where) {
  expect_object(value, where);
  for (const auto& [key, _] : value.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::Schema, std::string(where) + ": unknown key \"" + key + "\"");
    }
  }
}

inline const json& require(const json& value, const char* key, std::string_view where) {
  auto it = value.find(key);
  if (it == value.end()) {
    throw Error(ErrorCode::Schema,
                std::string(where) + ": missing required key \"" + key + "\"");
  }
  return *it;
}

inline std::string as_string(const json& value, std::string_view where) {
  if (!value.is_string()) {
    throw Error(ErrorCode::Schema, std::string(where) + ": expected string");
  }
  return value.get<std::string>();
}

inline std::string get_string(const json& value, const char* key, std::string_view where) {
  return as_string(require(value, key, where), std::string(where) + "." + key);
}

inline std::optional<std::string> get_optional_string(const json& value, const char* key,
                                                      std::string_view where) {
  auto it = value.find(key);
  if (it == value.end() || it->is_null()) {
    return std::nullopt;
  }
  return as_string(*it, std::string(where) + "." + key);
}

inline bool get_bool(const json& value, const char* key, std::string_view where) {
  const auto& v = require(value, key, where);
  if (!v.is_boolean()) {
    throw Error(ErrorCode::Schema, std::string(where) + "." + key + ": expected boolean");
  }
  return v.get<bool>();
}

inline std::vector<std::string> as_string_array(const json& value, std::string_view where) {
  if (!value.is_array()) {
    throw Error(ErrorCode::Schema, std::string(where) + ": expected array");
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(as_string(value[i], std::string(where) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline std::vector<std::string> get_string_array(const json& value, const char* key,
                                                 std::string_view where) {
  return as_string_array(require(value, key, where), std::string(where) + "." + key);
}

inline const json& get_array(const json& value, const char* key, std::string_view where) {
  const auto& v = require(value, key, where);
  if (!v.is_array()) {
    throw Error(ErrorCode::Schema, std::string(where) + "." + key + ": expected array");
  }
  return v;
}

inline std::size_t as_index(const json& value, std::string_view where) {
  if (!value.is_number_unsigned()) {
    throw Error(ErrorCode::Schema, std::string(where) + ": expected non-negative integer");
  }
  return value.get<std::size_t>();
}

// FNV-1a, stable across platforms and runs.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace detail
}  // namespace trustflow
