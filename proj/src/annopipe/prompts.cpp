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

#include <filesystem>

#include "partsketch/annopipe.hpp"
#include "partsketch/util.hpp"

namespace partsketch::annopipe {
namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}  // namespace detail

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string> kImageMarkers = {"<rendering>", "<diagnostic_vis>", "<canvas>"};

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

// Text-only rendition of a template: image marker lines dropped, text
// placeholders substituted. Used for the <stepX_instruction> expansions.
std::string text_only(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& item : fill_template(tmpl, values, {})) {
    if (const auto* text = std::get_if<std::string>(&item)) {
      if (!out.empty()) out += '\n';
      out += *text;
    }
  }
  return out;
}

}  // namespace

const PromptTemplates& default_templates() { return detail::embedded_prompts(); }

PromptTemplates load_templates(const std::string& dir) {
  PromptTemplates out = default_templates();
  for (const auto& [name, _] : default_templates()) {
    const auto path = std::filesystem::path(dir) / (name + ".txt");
    if (std::filesystem::exists(path)) out[name] = read_file(path.string());
  }
  return out;
}

const std::map<std::string, std::vector<std::string>>& required_placeholders() {
  static const std::map<std::string, std::vector<std::string>> kRequired = {
      {"step1", {"<rendering>", "<min_parts>", "<max_parts>"}},
      {"step2", {"<rendering>", "<step1_instruction>", "<old_parts_json>"}},
      {"step3", {"<rendering>", "<old_parts_json>", "<critique_json>", "<min_parts>", "<max_parts>"}},
      {"step4", {"<rendering>", "<svg_text>", "<joined_parts>", "<num_paths>"}},
      {"step5", {"<rendering>", "<diagnostic_vis>", "<step4_instruction>", "<old_assignments_json>"}},
      {"step6", {"<rendering>", "<step4_instruction>", "<old_assignments_json>", "<critique_json>"}},
      {"step7", {"<rendering>", "<joined_parts>"}},
  };
  return kRequired;
}

void PipelineConfig::check() const {
  if (min_parts < 1 || min_parts > max_parts) {
    throw std::invalid_argument("part bounds must satisfy 1 <= min_parts <= max_parts");
  }
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  for (const auto& [stage, needed] : required_placeholders()) {
    auto it = templates.find(stage);
    if (it == templates.end()) throw std::invalid_argument("missing template for " + stage);
    for (const auto& ph : needed) {
      if (it->second.find(ph) == std::string::npos) {
        throw std::invalid_argument(stage + " template lacks placeholder " + ph);
      }
    }
  }
}

std::vector<ContentItem> fill_template(
    const std::string& tmpl, const std::map<std::string, std::string>& text_values,
    const std::map<std::string, const raster::Bitmap*>& images) {
  std::vector<ContentItem> out;
  std::string pending;
  auto flush = [&] {
    std::string text = rstrip(pending);
    while (!text.empty() && text.front() == '\n') text.erase(0, 1);
    if (!text.empty()) {
      for (const auto& [key, value] : text_values) replace_all(text, key, value);
      out.emplace_back(std::move(text));
    }
    pending.clear();
  };
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t best = std::string::npos;
    std::string marker;
    for (const auto& m : kImageMarkers) {
      const auto at = tmpl.find(m, pos);
      if (at < best) {
        best = at;
        marker = m;
      }
    }
    if (best == std::string::npos) {
      pending += tmpl.substr(pos);
      break;
    }
    pending += tmpl.substr(pos, best - pos);
    flush();
    if (auto it = images.find(marker); it != images.end() && it->second) {
      out.emplace_back(*it->second);
    }
    pos = best + marker.size();
  }
  flush();
  return out;
}

std::string joined_parts(const PartDecomposition& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '\n';
    out += parts[i].label + ": " + parts[i].description;
  }
  return out;
}

std::string parts_json(const PartDecomposition& parts) {
  json arr = json::array();
  for (const auto& p : parts) arr.push_back(p.description);
  return arr.dump();
}

std::string assignment_json(const PathAssignment& assignment) {
  ordered_json obj = ordered_json::object();
  for (const auto& [path, part] : assignment.part_of_path) {
    obj[path_label(path)] = part_label(part);
  }
  return obj.dump();
}

std::string step1_instruction(const PipelineConfig& cfg) {
  return text_only(cfg.templates.at("step1"),
                   {{"<min_parts>", std::to_string(cfg.min_parts)},
                    {"<max_parts>", std::to_string(cfg.max_parts)}});
}

std::string step4_instruction(const Sketch& sketch, const PartDecomposition& parts,
                              const PipelineConfig& cfg) {
  return text_only(cfg.templates.at("step4"),
                   {{"<svg_text>", rstrip(export_svg(sketch))},
                    {"<joined_parts>", joined_parts(parts)},
                    {"<num_paths>", std::to_string(sketch.paths.size())}});
}

json parts_schema(const PipelineConfig& cfg) {
  return {{"type", "array"},
          {"items", {{"type", "string"}}},
          {"minItems", cfg.min_parts},
          {"maxItems", cfg.max_parts}};
}

json critique_schema() {
  static const json kSchema = json::parse(R"({
    "type": "object",
    "properties": {
      "issues": {
        "type": "array",
        "items": {
          "type": "object",
          "properties": {
            "type": {"type": "string"},
            "severity": {"type": "string", "enum": ["low", "medium", "high"]},
            "reason": {"type": "string"},
            "suggested_fix": {"type": "string"}
          },
          "required": ["type", "reason"]
        }
      },
      "summary": {"type": "string"},
      "should_revise": {"type": "boolean"}
    },
    "required": ["issues", "summary", "should_revise"]
  })");
  return kSchema;
}

json assignment_schema(int num_paths, int num_parts) {
  json labels = json::array();
  for (int i = 1; i <= num_parts; ++i) labels.push_back(part_label(i));
  json properties = json::object();
  json required = json::array();
  for (int i = 1; i <= num_paths; ++i) {
    properties[path_label(i)] = {{"type", "string"}, {"enum", labels}};
    required.push_back(path_label(i));
  }
  return {{"type", "object"}, {"properties", properties}, {"required", required}};
}

}  // namespace partsketch::annopipe
