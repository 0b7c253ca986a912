/* Copyright 2026 The Partsketch Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "partsketch/json_schema.hpp"

namespace partsketch::schema {
namespace {

using nlohmann::json;

bool type_matches(const std::string& type, const json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "null") return v.is_null();
  return true;
}

std::optional<SchemaViolation> check(const json& schema, const json& v,
                                     const std::string& ptr) {
  if (!schema.is_object()) return std::nullopt;
  if (auto it = schema.find("type"); it != schema.end() && it->is_string()) {
    if (!type_matches(it->get<std::string>(), v)) {
      return SchemaViolation{"type", ptr, "expected " + it->get<std::string>()};
    }
  }
  if (auto it = schema.find("enum"); it != schema.end() && it->is_array()) {
    bool found = false;
    for (const auto& allowed : *it) found = found || allowed == v;
    if (!found) return SchemaViolation{"enum", ptr, v.dump() + " not allowed"};
  }
  if (v.is_array()) {
    const auto n = v.size();
    if (auto it = schema.find("minItems"); it != schema.end() && n < it->get<std::size_t>()) {
      return SchemaViolation{"min-items", ptr, std::to_string(n) + " items"};
    }
    if (auto it = schema.find("maxItems"); it != schema.end() && n > it->get<std::size_t>()) {
      return SchemaViolation{"max-items", ptr, std::to_string(n) + " items"};
    }
    if (auto it = schema.find("items"); it != schema.end()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (auto bad = check(*it, v[i], ptr + "/" + std::to_string(i))) return bad;
      }
    }
  }
  if (v.is_object()) {
    if (auto it = schema.find("required"); it != schema.end() && it->is_array()) {
      for (const auto& key : *it) {
        if (!v.contains(key.get<std::string>())) {
          return SchemaViolation{"required-key", ptr + "/" + key.get<std::string>(),
                                 "missing " + key.get<std::string>()};
        }
      }
    }
    if (auto it = schema.find("properties"); it != schema.end() && it->is_object()) {
      for (const auto& [key, sub] : it->items()) {
        if (auto field = v.find(key); field != v.end()) {
          if (auto bad = check(sub, *field, ptr + "/" + key)) return bad;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<SchemaViolation> validate(const json& schema, const json& instance) {
  return check(schema, instance, "");
}

}  // namespace partsketch::schema
