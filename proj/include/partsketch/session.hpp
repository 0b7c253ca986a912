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

#ifndef PARTSKETCH_SESSION_HPP_
#define PARTSKETCH_SESSION_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "partsketch/annopipe.hpp"
#include "partsketch/bitmap.hpp"
#include "partsketch/partdata.hpp"
#include "partsketch/stroke.hpp"

namespace partsketch::session {

class SessionValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BackendInvalid : public std::runtime_error {
 public:
  BackendInvalid(const std::string& what, FormatVerdict verdict, std::string response)
      : std::runtime_error(what), verdict_(verdict), response_(std::move(response)) {}
  const FormatVerdict& verdict() const { return verdict_; }
  const std::string& response() const { return response_; }

 private:
  FormatVerdict verdict_;
  std::string response_;
};

class Exhausted : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TurnIndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class UnknownPart : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PartStatus { kPending, kDrawn, kRemoved };

std::string_view to_string(PartStatus s);

struct QueuedPart {
  PartSpec spec;
  PartStatus status = PartStatus::kPending;
  bool operator==(const QueuedPart&) const = default;
};

struct SessionTurn {
  PartSpec part;
  StrokeSequence strokes;
  std::string origin;  // backend name
  bool operator==(const SessionTurn&) const = default;
};

struct BranchParent {
  std::string session_id;
  int turn_index = 0;
  bool operator==(const BranchParent&) const = default;
};

struct Session {
  std::string id;
  std::string caption;
  CanvasConfig canvas;
  std::vector<QueuedPart> queue;
  std::vector<SessionTurn> turns;  // drawing order
  std::optional<BranchParent> parent;

  /// Every turn's strokes in turn order.
  Sketch canvas_sketch() const;
  const QueuedPart* next_pending() const;
  int pending_count() const;
  bool operator==(const Session&) const = default;
};

/// Persisted form.
nlohmann::json to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);
/// Client view: persisted fields plus per-part status, color and stroke text.
nlohmann::json state_json(const Session& s);

/// The five inputs of one generation turn.
struct TurnInputs {
  raster::Bitmap canvas;
  std::string caption;
  PartSpec next_part;
  std::vector<std::pair<PartSpec, StrokeSequence>> drawn_parts;
  int remaining = 0;  // parts still pending after this one
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string next_part(const TurnInputs& inputs) = 0;
  virtual std::string name() const = 0;
};

/// Seeded random strokes. The seed mixes a hash of the inputs with an
/// optional salt, so equal inputs give equal strokes.
class RandomBackend : public Backend {
 public:
  explicit RandomBackend(std::uint64_t salt = 0) : salt_(salt) {}
  std::string next_part(const TurnInputs& inputs) override;
  std::string name() const override { return "random"; }

 private:
  std::uint64_t salt_;
};

/// Emits the record's strokes for the part with the requested label.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(AnnotatedSketch record) : record_(std::move(record)) {}
  std::string next_part(const TurnInputs& inputs) override;
  std::string name() const override { return "replay:" + record_.id; }

 private:
  AnnotatedSketch record_;
};

/// Fills the "turn" template and asks a VLM client, retrying answers that
/// fail the verifier up to `max_retries` times.
class VlmBackend : public Backend {
 public:
  VlmBackend(std::shared_ptr<annopipe::VlmClient> client, std::string turn_template,
             int max_retries = 2);
  std::string next_part(const TurnInputs& inputs) override;
  std::string name() const override { return "vlm"; }

  annopipe::VlmRequest build_request(const TurnInputs& inputs) const;

 private:
  std::shared_ptr<annopipe::VlmClient> client_;
  std::string template_;
  int max_retries_;
};

/// Builds the five inputs for drawing `part` on top of `drawn`.
TurnInputs make_inputs(const Session& s, const std::vector<SessionTurn>& drawn,
                       const PartSpec& part, int remaining);

// Pure state transitions. Each leaves its input untouched on error.
Session create_session(std::string id, const std::string& caption,
                       const std::vector<std::string>& parts, const CanvasConfig& canvas = {});
/// Returns the new turn's strokes.
StrokeSequence step(Session& s, Backend& backend);
Session regenerate(const Session& s, int turn_index, Backend& backend, std::string new_id);
void remove_part(Session& s, const std::string& label);
void replace_part(Session& s, const std::string& label, const std::string& description,
                  Backend& backend);

/// One JSON file per session.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);
  void save(const Session& s) const;
  Session load(const std::string& id) const;
  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& id) const;
  std::filesystem::path dir_;
};

/// Name -> backend. "random", "random:<salt>", "replay:<record-id>", "vlm".
class BackendRegistry {
 public:
  using VlmFactory = std::function<std::shared_ptr<annopipe::VlmClient>()>;

  void add_record(AnnotatedSketch record);
  void load_records(const std::string& path);
  void set_vlm(VlmFactory factory, std::string turn_template);
  /// Throws SessionValidationError for an unknown name.
  std::unique_ptr<Backend> resolve(const std::string& name) const;
  std::shared_ptr<annopipe::VlmClient> vlm_client() const;

 private:
  std::map<std::string, AnnotatedSketch> records_;
  VlmFactory vlm_factory_;
  std::string turn_template_;
};

/// Persistent sessions with per-session locking.
class SessionService {
 public:
  SessionService(SessionStore store, BackendRegistry backends);

  Session create(const std::string& caption, const std::vector<std::string>& parts,
                 const CanvasConfig& canvas = {});
  Session get(const std::string& id) const;
  std::vector<Session> list() const;
  std::pair<Session, StrokeSequence> step(const std::string& id, const std::string& backend);
  Session regenerate(const std::string& id, int turn_index, const std::string& backend);
  Session remove_part(const std::string& id, const std::string& label);
  Session replace_part(const std::string& id, const std::string& label,
                       const std::string& description, const std::string& backend);

  const BackendRegistry& backends() const { return backends_; }

 private:
  std::shared_ptr<std::mutex> lock_for(const std::string& id) const;
  std::string new_id() const;

  SessionStore store_;
  BackendRegistry backends_;
  mutable std::mutex locks_mutex_;
  mutable std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

/// JSON over HTTP in front of a SessionService.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service, annopipe::PipelineConfig pipeline = {});
  ~HttpServer();

  /// Binds and serves until stop(); returns false if binding failed.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host);
  /// Serves on the socket from bind_any until stop().
  bool serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace partsketch::session

#endif  // PARTSKETCH_SESSION_HPP_
