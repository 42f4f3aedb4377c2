// Copyright 2026 The RALF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RALF__JSON_UTIL_HPP_
#define RALF__JSON_UTIL_HPP_

#include "ralf/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

namespace ralf::detail
{

inline void require_object(const nlohmann::json & j, std::string_view context)
{
  if (!j.is_object()) {
    throw DataError(std::string(context) + ": expected an object");
  }
}

inline void reject_unknown_keys(
  const nlohmann::json & j, std::initializer_list<std::string_view> allowed, std::string_view context)
{
  require_object(j, context);
  for (const auto & [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw DataError(std::string(context) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_optional(const nlohmann::json & j, const char * key, T & out, std::string_view context)
{
  const auto it = j.find(key);
  if (it == j.end()) {
    return;
  }
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception & e) {
    throw DataError(std::string(context) + "." + key + ": " + e.what());
  }
}

template <typename T>
T read_required(const nlohmann::json & j, const char * key, std::string_view context)
{
  if (!j.contains(key)) {
    throw DataError(std::string(context) + ": missing key '" + key + "'");
  }
  T out{};
  read_optional(j, key, out, context);
  return out;
}

}  // namespace ralf::detail

#endif  // RALF__JSON_UTIL_HPP_
