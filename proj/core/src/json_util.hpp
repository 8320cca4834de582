/*
 * Copyright 2026 The alk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Private helpers shared by the JSON readers and writers.

#include <cmath>
#include <string>
#include <string_view>

#include <json.hpp>

#include "alk/error.hpp"
#include "alk/sampling.hpp"

namespace alk::detail {

using nlohmann::json;

inline std::string join_path(const std::string& ctx, std::string_view key) {
  return ctx.empty() ? std::string(key) : ctx + "." + std::string(key);
}

template <class T>
T read_as(const json& v, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) throw ConfigError("");
      }
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    const char* want = std::is_same_v<T, double>                          ? "a number"
                       : std::is_same_v<T, bool>                          ? "a boolean"
                       : std::is_same_v<T, std::string>                   ? "a string"
                       : std::is_unsigned_v<T>                            ? "a non-negative integer"
                       : std::is_integral_v<T>                            ? "an integer"
                                                                          : "a value of the right type";
    throw ConfigError("field '" + path + "': expected " + want + ", got " + v.dump());
  }
}

template <class T>
T required(const json& j, std::string_view key, const std::string& ctx) {
  const auto path = join_path(ctx, key);
  if (!j.is_object()) throw ConfigError("field '" + ctx + "': expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("field '" + path + "': missing required field");
  return read_as<T>(*it, path);
}

template <class T>
T optional(const json& j, std::string_view key, T def, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError("field '" + ctx + "': expected an object");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return def;
  return read_as<T>(*it, join_path(ctx, key));
}

inline const json& required_object(const json& j, std::string_view key, const std::string& ctx) {
  const auto path = join_path(ctx, key);
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("field '" + path + "': missing required field");
  if (!it->is_object()) throw ConfigError("field '" + path + "': expected an object");
  return *it;
}

inline const json& required_array(const json& j, std::string_view key, const std::string& ctx) {
  const auto path = join_path(ctx, key);
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("field '" + path + "': missing required field");
  if (!it->is_array()) throw ConfigError("field '" + path + "': expected an array");
  return *it;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": JSON parse error: " + e.what());
  }
}

/// Finite doubles only; NaN/inf would not round-trip through JSON.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json uncertainty_to_json(const UncertaintySpec& s);
/// `base_dir` resolves relative CSV paths of empirical marginals.
UncertaintySpec uncertainty_from_json(const json& j, const std::string& ctx, const std::string& base_dir = {});

}  // namespace alk::detail

namespace alk {
struct Contingency;
}

namespace alk::detail {
json contingency_to_json(const Contingency& c);
Contingency contingency_from_json(const json& j, const std::string& ctx, double frequency);
}  // namespace alk::detail
