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

#include <atomic>
#include <set>
#include <thread>

#include "partsketch/annopipe.hpp"
#include "partsketch/json_schema.hpp"
#include "partsketch/raster.hpp"

namespace partsketch::annopipe {
namespace {

using nlohmann::json;

// Thrown by stage validators for a rejected (retryable) answer.
struct Rejection {
  std::string code;
  std::string detail;
};

// Models often wrap JSON in a markdown fence.
std::string strip_fence(const std::string& raw) {
  const auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return raw;
  if (raw.compare(first, 3, "```") != 0) return raw;
  const auto body_start = raw.find('\n', first);
  const auto close = raw.rfind("```");
  if (body_start == std::string::npos || close <= body_start) return raw;
  return raw.substr(body_start + 1, close - body_start - 1);
}

json parse_checked(const std::string& raw, const json& schema) {
  json value = json::parse(strip_fence(raw), nullptr, false);
  if (value.is_discarded()) throw Rejection{"parse", "response is not JSON"};
  if (auto violation = schema::validate(schema, value)) {
    throw Rejection{violation->code, violation->pointer + " " + violation->detail};
  }
  return value;
}

// Issues `req` up to 1 + max_retries times. `accept` either returns the
// parsed value or throws Rejection. Every attempt lands in the trace.
template <typename Accept>
auto run_stage(VlmClient& client, const VlmRequest& req, const PipelineConfig& cfg,
               StageTrace* trace, Accept&& accept) -> decltype(accept(std::string{})) {
  const std::string digest = req.digest();
  const std::string prompt = req.prompt_text();
  const auto images = req.image_digests();
  Rejection last{"none", ""};
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    std::string raw;
    try {
      raw = client.request(req);
    } catch (const ClientError& e) {
      throw ClientError(e.what(), req.stage);
    }
    StageRecord rec{req.stage, digest, prompt, images, raw, false, ""};
    try {
      auto value = accept(raw);
      rec.accepted = true;
      if (trace) trace->push_back(std::move(rec));
      return value;
    } catch (const Rejection& r) {
      last = r;
      rec.rejection = r.code;
      if (trace) trace->push_back(std::move(rec));
    }
  }
  if (last.code == "caption-length") throw CaptionTooLong(req.stage, last.detail);
  throw SchemaError(req.stage, last.code, last.detail);
}

VlmRequest make_request(const std::string& stage, const PipelineConfig& cfg,
                        const std::map<std::string, std::string>& values,
                        const std::map<std::string, const raster::Bitmap*>& images,
                        json schema) {
  VlmRequest req;
  req.stage = stage;
  req.content = fill_template(cfg.templates.at(stage), values, images);
  req.schema = std::move(schema);
  return req;
}

PartDecomposition accept_parts(const std::string& raw, const json& schema) {
  const json value = parse_checked(raw, schema);
  std::vector<std::string> descriptions;
  for (const auto& item : value) {
    const auto text = item.get<std::string>();
    if (count_words(text) == 0) throw Rejection{"empty", "blank part description"};
    descriptions.push_back(text);
  }
  return make_parts(descriptions);
}

PathAssignment accept_assignment(const std::string& raw, int num_paths, int num_parts) {
  json value;
  try {
    value = parse_checked(raw, assignment_schema(num_paths, num_parts));
  } catch (Rejection& r) {
    if (r.code == "required-key") r.code = "totality";
    throw;
  }
  PathAssignment out;
  std::set<int> used;
  for (int p = 1; p <= num_paths; ++p) {
    const int part = *parse_indexed_label(value.at(path_label(p)).get<std::string>(), "Part");
    out.part_of_path[p] = part;
    used.insert(part);
  }
  for (int part = 1; part <= num_parts; ++part) {
    if (!used.contains(part)) {
      throw Rejection{"surjectivity", part_label(part) + " received no paths"};
    }
  }
  return out;
}

CritiqueReport accept_critique(const std::string& raw) {
  return CritiqueReport::from_json(parse_checked(raw, critique_schema()));
}

}  // namespace

PartDecomposition stage1_decompose(VlmClient& client, const raster::Bitmap& rendering,
                                   const PipelineConfig& cfg, StageTrace* trace) {
  const json schema = parts_schema(cfg);
  const auto req = make_request(
      "step1", cfg,
      {{"<min_parts>", std::to_string(cfg.min_parts)}, {"<max_parts>", std::to_string(cfg.max_parts)}},
      {{"<rendering>", &rendering}}, schema);
  return run_stage(client, req, cfg, trace,
                   [&](const std::string& raw) { return accept_parts(raw, schema); });
}

CritiqueReport stage2_critique_parts(VlmClient& client, const raster::Bitmap& rendering,
                                     const PartDecomposition& parts,
                                     const PipelineConfig& cfg, StageTrace* trace) {
  const auto req = make_request(
      "step2", cfg,
      {{"<step1_instruction>", step1_instruction(cfg)}, {"<old_parts_json>", parts_json(parts)}},
      {{"<rendering>", &rendering}}, critique_schema());
  return run_stage(client, req, cfg, trace, accept_critique);
}

PartDecomposition stage3_refine_parts(VlmClient& client, const raster::Bitmap& rendering,
                                      const PartDecomposition& parts,
                                      const CritiqueReport& critique,
                                      const PipelineConfig& cfg, StageTrace* trace) {
  const json schema = parts_schema(cfg);
  const auto req = make_request(
      "step3", cfg,
      {{"<old_parts_json>", parts_json(parts)},
       {"<critique_json>", critique.to_json().dump()},
       {"<min_parts>", std::to_string(cfg.min_parts)},
       {"<max_parts>", std::to_string(cfg.max_parts)}},
      {{"<rendering>", &rendering}}, schema);
  return run_stage(client, req, cfg, trace,
                   [&](const std::string& raw) { return accept_parts(raw, schema); });
}

PathAssignment stage4_assign(VlmClient& client, const raster::Bitmap& rendering,
                             const Sketch& sketch, const PartDecomposition& parts,
                             const PipelineConfig& cfg, StageTrace* trace) {
  const int k = static_cast<int>(sketch.paths.size());
  const int n = static_cast<int>(parts.size());
  if (k < 1) throw std::invalid_argument("sketch has no paths to assign");
  std::string svg = export_svg(sketch);
  while (!svg.empty() && svg.back() == '\n') svg.pop_back();
  const auto req = make_request(
      "step4", cfg,
      {{"<svg_text>", svg}, {"<joined_parts>", joined_parts(parts)}, {"<num_paths>", std::to_string(k)}},
      {{"<rendering>", &rendering}}, assignment_schema(k, n));
  return run_stage(client, req, cfg, trace,
                   [&](const std::string& raw) { return accept_assignment(raw, k, n); });
}

CritiqueReport stage5_critique_assignment(VlmClient& client, const raster::Bitmap& rendering,
                                          const raster::Bitmap& diagnostic,
                                          const Sketch& sketch,
                                          const PathAssignment& assignment,
                                          const PartDecomposition& parts,
                                          const PipelineConfig& cfg, StageTrace* trace) {
  const auto req = make_request(
      "step5", cfg,
      {{"<step4_instruction>", step4_instruction(sketch, parts, cfg)},
       {"<old_assignments_json>", assignment_json(assignment)}},
      {{"<rendering>", &rendering}, {"<diagnostic_vis>", &diagnostic}}, critique_schema());
  return run_stage(client, req, cfg, trace, accept_critique);
}

PathAssignment stage6_refine_assignment(VlmClient& client, const raster::Bitmap& rendering,
                                        const Sketch& sketch, const PartDecomposition& parts,
                                        const PathAssignment& assignment,
                                        const CritiqueReport& critique,
                                        const PipelineConfig& cfg, StageTrace* trace) {
  const int k = static_cast<int>(sketch.paths.size());
  const int n = static_cast<int>(parts.size());
  const auto req = make_request(
      "step6", cfg,
      {{"<step4_instruction>", step4_instruction(sketch, parts, cfg)},
       {"<old_assignments_json>", assignment_json(assignment)},
       {"<critique_json>", critique.to_json().dump()},
       {"<num_paths>", std::to_string(k)}},
      {{"<rendering>", &rendering}}, assignment_schema(k, n));
  return run_stage(client, req, cfg, trace,
                   [&](const std::string& raw) { return accept_assignment(raw, k, n); });
}

std::string stage7_caption(VlmClient& client, const raster::Bitmap& rendering,
                           const PartDecomposition& parts, const PipelineConfig& cfg,
                           StageTrace* trace) {
  const auto req = make_request("step7", cfg, {{"<joined_parts>", joined_parts(parts)}},
                                {{"<rendering>", &rendering}}, json());
  return run_stage(client, req, cfg, trace, [](const std::string& raw) {
    std::string caption = raw;
    const auto first = caption.find_first_not_of(" \t\r\n");
    const auto last = caption.find_last_not_of(" \t\r\n");
    caption = first == std::string::npos ? "" : caption.substr(first, last - first + 1);
    if (caption.size() >= 2 && caption.front() == '"' && caption.back() == '"') {
      caption = caption.substr(1, caption.size() - 2);
    }
    const int words = count_words(caption);
    if (words == 0) throw Rejection{"empty", "blank caption"};
    if (words > kMaxCaptionWords) {
      throw Rejection{"caption-length", std::to_string(words) + " words"};
    }
    return caption;
  });
}

AnnotationResult annotate_sketch(VlmClient& client, const Sketch& sketch,
                                 const PipelineConfig& cfg, const std::string& id) {
  cfg.check();
  AnnotationResult result;
  StageTrace& trace = result.trace;
  std::string stage = "step1";
  try {
    const raster::Bitmap rendering = raster::rasterize(sketch);
    PartDecomposition parts = stage1_decompose(client, rendering, cfg, &trace);
    stage = "step2";
    const CritiqueReport part_critique = stage2_critique_parts(client, rendering, parts, cfg, &trace);
    if (part_critique.should_revise) {
      stage = "step3";
      parts = stage3_refine_parts(client, rendering, parts, part_critique, cfg, &trace);
    }
    stage = "step4";
    PathAssignment assignment = stage4_assign(client, rendering, sketch, parts, cfg, &trace);
    stage = "step5";
    const raster::Bitmap diagnostic = raster::diagnostic_panel(parts, assignment, sketch);
    const CritiqueReport assign_critique = stage5_critique_assignment(
        client, rendering, diagnostic, sketch, assignment, parts, cfg, &trace);
    if (assign_critique.should_revise) {
      stage = "step6";
      assignment = stage6_refine_assignment(client, rendering, sketch, parts, assignment,
                                            assign_critique, cfg, &trace);
    }
    stage = "step7";
    std::string caption = stage7_caption(client, rendering, parts, cfg, &trace);

    result.record = {id, sketch, std::move(caption), std::move(parts), std::move(assignment)};
  } catch (const SchemaError& e) {
    throw AnnotationAborted(e.what(), e.stage(), std::move(trace));
  } catch (const ClientError& e) {
    throw AnnotationAborted(e.what(), e.stage().empty() ? stage : e.stage(), std::move(trace));
  } catch (const std::exception& e) {
    throw AnnotationAborted(e.what(), stage, std::move(trace));
  }
  return result;
}

std::vector<BatchOutcome> annotate_batch(const ClientFactory& make_client,
                                         const std::vector<BatchItem>& items,
                                         const PipelineConfig& cfg) {
  cfg.check();
  std::vector<BatchOutcome> outcomes(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      BatchOutcome& out = outcomes[i];
      out.id = items[i].id;
      try {
        auto client = make_client();
        auto result = annotate_sketch(*client, items[i].sketch, cfg, items[i].id);
        out.record = std::move(result.record);
        out.trace = std::move(result.trace);
      } catch (const AnnotationAborted& e) {
        out.error = e.what();
        out.trace = e.trace();
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency), std::max<std::size_t>(1, items.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  return outcomes;
}

}  // namespace partsketch::annopipe
