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

#ifndef PARTSKETCH_JSON_SCHEMA_HPP_
#define PARTSKETCH_JSON_SCHEMA_HPP_

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace partsketch::schema {

/// First violation found while checking `instance` against `schema`.
struct SchemaViolation {
  std::string code;     // type, min-items, max-items, required-key, enum
  std::string pointer;  // JSON pointer to the offending value
  std::string detail;
};

/// Supports the keywords used by structured-output schemas: type (object,
/// array, string, boolean, number, integer), properties, required, items,
/// minItems, maxItems, enum. Unknown keywords are ignored.
std::optional<SchemaViolation> validate(const nlohmann::json& schema,
                                        const nlohmann::json& instance);

}  // namespace partsketch::schema

#endif  // PARTSKETCH_JSON_SCHEMA_HPP_
