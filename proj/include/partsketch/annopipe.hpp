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

#ifndef PARTSKETCH_ANNOPIPE_HPP_
#define PARTSKETCH_ANNOPIPE_HPP_

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "partsketch/bitmap.hpp"
#include "partsketch/partdata.hpp"
#include "partsketch/stroke.hpp"

namespace partsketch::annopipe {

using ContentItem = std::variant<std::string, raster::Bitmap>;

/// One model call: interleaved text and images plus the response schema
/// (null for free-text answers).
struct VlmRequest {
  std::string stage;
  std::vector<ContentItem> content;
  nlohmann::json schema;

  int image_count() const;
  std::vector<const raster::Bitmap*> images() const;
  /// Text items joined in order, images shown as "<image N>".
  std::string prompt_text() const;
  std::vector<std::string> image_digests() const;
  /// SHA-256 over stage, text, image bytes and schema.
  std::string digest() const;
};

class ClientError : public std::runtime_error {
 public:
  explicit ClientError(const std::string& what, std::string stage = {})
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// A vision-language model endpoint. Implementations do not retry and keep
/// no pipeline state; the orchestrator owns retries.
class VlmClient {
 public:
  virtual ~VlmClient() = default;
  virtual std::string request(const VlmRequest& req) = 0;
  virtual std::string identity() const = 0;
};

/// Offline client answering from a per-stage script:
///   {"step1": ["[\"head\", \"body\"]"], "step2": [...], ...}
/// Each stage's responses are consumed in order; the last one repeats once
/// the list runs out. A stage without responses raises ClientError.
class ScriptedClient : public VlmClient {
 public:
  explicit ScriptedClient(std::map<std::string, std::vector<std::string>> script);
  static ScriptedClient from_json(const nlohmann::json& script);

  std::string request(const VlmRequest& req) override;
  std::string identity() const override { return "mock"; }

  const std::vector<VlmRequest>& requests() const { return requests_; }
  int call_count() const { return static_cast<int>(requests_.size()); }

 private:
  std::map<std::string, std::vector<std::string>> script_;
  std::map<std::string, std::size_t> cursor_;
  std::vector<VlmRequest> requests_;
};

/// Adapter for a remote VLM service.
///
/// POST <endpoint> with `Authorization: Bearer <key>` and body
///   {"model": str, "stage": str,
///    "content": [{"type": "text", "text": str} |
///                {"type": "image", "media_type": "image/png", "data": b64}],
///    "response_schema": object | null}
/// The reply is either {"text": str} or the raw answer text.
class RemoteVlmClient : public VlmClient {
 public:
  RemoteVlmClient(std::string endpoint, std::string api_key, std::string model);
  /// Reads VLM_ENDPOINT, VLM_API_KEY and optionally VLM_MODEL.
  static std::unique_ptr<RemoteVlmClient> from_env();

  static nlohmann::json request_body(const VlmRequest& req, const std::string& model);

  std::string request(const VlmRequest& req) override;
  std::string identity() const override { return model_; }

 private:
  std::string endpoint_;
  std::string api_key_;
  std::string model_;
};

struct CritiqueIssue {
  std::string type;
  std::optional<std::string> severity;  // low | medium | high
  std::string reason;
  std::optional<std::string> suggested_fix;
};

struct CritiqueReport {
  std::vector<CritiqueIssue> issues;
  std::string summary;
  bool should_revise = false;

  nlohmann::json to_json() const;
  static CritiqueReport from_json(const nlohmann::json& j);
};

/// One attempt of one stage.
struct StageRecord {
  std::string stage;
  std::string request_digest;
  std::string prompt;
  std::vector<std::string> image_digests;
  std::string raw_response;
  bool accepted = false;
  std::string rejection;  // violation code when not accepted
};

using StageTrace = std::vector<StageRecord>;

nlohmann::json trace_to_json(const StageTrace& trace);
StageTrace trace_from_json(const nlohmann::json& j);

/// Replays recorded answers. Each request is matched to the first unused
/// accepted-or-not record with the same request digest.
class ReplayClient : public VlmClient {
 public:
  explicit ReplayClient(StageTrace trace);
  std::string request(const VlmRequest& req) override;
  std::string identity() const override { return "replay"; }

 private:
  StageTrace trace_;
  std::vector<bool> used_;
};

/// Stage name -> template text. Defaults are compiled in from prompts/.
using PromptTemplates = std::map<std::string, std::string>;

const PromptTemplates& default_templates();
/// Overrides defaults with any stepN.txt / turn.txt present in `dir`.
PromptTemplates load_templates(const std::string& dir);
/// Placeholders each stage's template must contain.
const std::map<std::string, std::vector<std::string>>& required_placeholders();

struct PipelineConfig {
  int min_parts = kMinParts;
  int max_parts = kMaxParts;
  int max_retries = 2;
  int concurrency = 1;
  PromptTemplates templates = default_templates();

  /// Throws std::invalid_argument on violated bounds or missing placeholders.
  void check() const;
};

/// A stage could not produce an acceptable answer.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string stage, std::string code, const std::string& detail)
      : std::runtime_error(stage + ": " + code + ": " + detail),
        stage_(std::move(stage)), code_(std::move(code)) {}
  const std::string& stage() const { return stage_; }
  /// parse, type, min-items, max-items, required-key, enum, totality,
  /// surjectivity, empty, caption-length
  const std::string& code() const { return code_; }

 private:
  std::string stage_;
  std::string code_;
};

class CaptionTooLong : public SchemaError {
 public:
  CaptionTooLong(std::string stage, const std::string& detail)
      : SchemaError(std::move(stage), "caption-length", detail) {}
};

// Prompt builders. Exposed for inspection and for the session backend.
std::string joined_parts(const PartDecomposition& parts);
std::string parts_json(const PartDecomposition& parts);
std::string assignment_json(const PathAssignment& assignment);
std::string step1_instruction(const PipelineConfig& cfg);
std::string step4_instruction(const Sketch& sketch, const PartDecomposition& parts,
                              const PipelineConfig& cfg);
nlohmann::json parts_schema(const PipelineConfig& cfg);
nlohmann::json critique_schema();
nlohmann::json assignment_schema(int num_paths, int num_parts);

/// Splits a template at <rendering>/<diagnostic_vis>/<canvas> markers and
/// substitutes the text placeholders.
std::vector<ContentItem> fill_template(
    const std::string& tmpl, const std::map<std::string, std::string>& text_values,
    const std::map<std::string, const raster::Bitmap*>& images);

PartDecomposition stage1_decompose(VlmClient& client, const raster::Bitmap& rendering,
                                   const PipelineConfig& cfg, StageTrace* trace = nullptr);

CritiqueReport stage2_critique_parts(VlmClient& client, const raster::Bitmap& rendering,
                                     const PartDecomposition& parts,
                                     const PipelineConfig& cfg, StageTrace* trace = nullptr);

PartDecomposition stage3_refine_parts(VlmClient& client, const raster::Bitmap& rendering,
                                      const PartDecomposition& parts,
                                      const CritiqueReport& critique,
                                      const PipelineConfig& cfg, StageTrace* trace = nullptr);

PathAssignment stage4_assign(VlmClient& client, const raster::Bitmap& rendering,
                             const Sketch& sketch, const PartDecomposition& parts,
                             const PipelineConfig& cfg, StageTrace* trace = nullptr);

CritiqueReport stage5_critique_assignment(VlmClient& client, const raster::Bitmap& rendering,
                                          const raster::Bitmap& diagnostic,
                                          const Sketch& sketch,
                                          const PathAssignment& assignment,
                                          const PartDecomposition& parts,
                                          const PipelineConfig& cfg,
                                          StageTrace* trace = nullptr);

PathAssignment stage6_refine_assignment(VlmClient& client, const raster::Bitmap& rendering,
                                        const Sketch& sketch, const PartDecomposition& parts,
                                        const PathAssignment& assignment,
                                        const CritiqueReport& critique,
                                        const PipelineConfig& cfg,
                                        StageTrace* trace = nullptr);

std::string stage7_caption(VlmClient& client, const raster::Bitmap& rendering,
                           const PartDecomposition& parts, const PipelineConfig& cfg,
                           StageTrace* trace = nullptr);

struct AnnotationResult {
  AnnotatedSketch record;
  StageTrace trace;
};

/// The first unrecoverable stage error, with everything recorded so far.
class AnnotationAborted : public std::runtime_error {
 public:
  AnnotationAborted(const std::string& what, std::string stage, StageTrace trace)
      : std::runtime_error(what), stage_(std::move(stage)), trace_(std::move(trace)) {}
  const std::string& stage() const { return stage_; }
  const StageTrace& trace() const { return trace_; }

 private:
  std::string stage_;
  StageTrace trace_;
};

/// 1 -> 2 -> (3 if revise) -> 4 -> 5 -> (6 if revise) -> 7.
AnnotationResult annotate_sketch(VlmClient& client, const Sketch& sketch,
                                 const PipelineConfig& cfg, const std::string& id = "");

struct BatchItem {
  std::string id;
  Sketch sketch;
};

struct BatchOutcome {
  std::string id;
  std::optional<AnnotatedSketch> record;
  StageTrace trace;
  std::string error;
};

using ClientFactory = std::function<std::unique_ptr<VlmClient>()>;

/// Runs up to cfg.concurrency pipelines at once, one fresh client each.
std::vector<BatchOutcome> annotate_batch(const ClientFactory& make_client,
                                         const std::vector<BatchItem>& items,
                                         const PipelineConfig& cfg);

}  // namespace partsketch::annopipe

#endif  // PARTSKETCH_ANNOPIPE_HPP_
