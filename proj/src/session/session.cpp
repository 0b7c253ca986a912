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

#include "partsketch/session.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "partsketch/raster.hpp"
#include "partsketch/rng.hpp"
#include "partsketch/util.hpp"

namespace partsketch::session {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_color(const raster::Rgb& c) {
  static const char* kDigits = "0123456789abcdef";
  std::string out = "#";
  for (std::uint8_t v : c) {
    out += kDigits[v >> 4];
    out += kDigits[v & 15];
  }
  return out;
}

PartStatus parse_status(const std::string& s) {
  if (s == "pending") return PartStatus::kPending;
  if (s == "drawn") return PartStatus::kDrawn;
  if (s == "removed") return PartStatus::kRemoved;
  throw DecodeError("unknown part status '" + s + "'");
}

QueuedPart* find_queued(Session& s, const std::string& label) {
  for (auto& q : s.queue) {
    if (q.spec.label == label) return &q;
  }
  return nullptr;
}

int turn_of(const Session& s, const std::string& label) {
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    if (s.turns[i].part.label == label) return static_cast<int>(i);
  }
  return -1;
}

StrokeSequence checked_strokes(const std::string& response, const std::string& label) {
  const FormatVerdict verdict = verify_response(response);
  if (!verdict.valid) {
    throw BackendInvalid("backend answer for " + label + " is invalid: " +
                             std::string(to_string(*verdict.error_kind)) + " on line " +
                             std::to_string(verdict.line_index.value_or(0)),
                         verdict, response);
  }
  return parse_strokes(response);
}

}  // namespace

std::string_view to_string(PartStatus s) {
  switch (s) {
    case PartStatus::kPending: return "pending";
    case PartStatus::kDrawn: return "drawn";
    case PartStatus::kRemoved: return "removed";
  }
  return "unknown";
}

Sketch Session::canvas_sketch() const {
  Sketch out;
  out.canvas = canvas;
  for (const auto& t : turns) out.paths.insert(out.paths.end(), t.strokes.begin(), t.strokes.end());
  return out;
}

const QueuedPart* Session::next_pending() const {
  for (const auto& q : queue) {
    if (q.status == PartStatus::kPending) return &q;
  }
  return nullptr;
}

int Session::pending_count() const {
  return static_cast<int>(std::count_if(queue.begin(), queue.end(), [](const QueuedPart& q) {
    return q.status == PartStatus::kPending;
  }));
}

json to_json(const Session& s) {
  json queue = json::array();
  for (const auto& q : s.queue) {
    queue.push_back({{"label", q.spec.label},
                     {"description", q.spec.description},
                     {"status", std::string(to_string(q.status))}});
  }
  json turns = json::array();
  for (const auto& t : s.turns) {
    turns.push_back({{"label", t.part.label},
                     {"description", t.part.description},
                     {"strokes", emit_strokes(t.strokes)},
                     {"origin", t.origin}});
  }
  json parent = nullptr;
  if (s.parent) parent = {{"session_id", s.parent->session_id}, {"turn_index", s.parent->turn_index}};
  return {{"id", s.id},
          {"caption", s.caption},
          {"canvas",
           {{"width", s.canvas.width},
            {"height", s.canvas.height},
            {"stroke_width", s.canvas.stroke_width},
            {"background", s.canvas.background}}},
          {"queue", queue},
          {"turns", turns},
          {"parent", parent}};
}

Session session_from_json(const json& j) {
  try {
    Session s;
    s.id = j.at("id").get<std::string>();
    s.caption = j.at("caption").get<std::string>();
    const auto& c = j.at("canvas");
    s.canvas.width = c.at("width").get<int>();
    s.canvas.height = c.at("height").get<int>();
    s.canvas.stroke_width = c.at("stroke_width").get<double>();
    s.canvas.background = c.value("background", std::uint8_t{255});
    for (const auto& q : j.at("queue")) {
      s.queue.push_back({{q.at("label").get<std::string>(), q.at("description").get<std::string>()},
                         parse_status(q.at("status").get<std::string>())});
    }
    for (const auto& t : j.at("turns")) {
      s.turns.push_back({{t.at("label").get<std::string>(), t.at("description").get<std::string>()},
                         parse_strokes(t.at("strokes").get<std::string>()),
                         t.value("origin", "")});
    }
    if (j.contains("parent") && !j["parent"].is_null()) {
      s.parent = BranchParent{j["parent"].at("session_id").get<std::string>(),
                              j["parent"].at("turn_index").get<int>()};
    }
    return s;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed session: ") + e.what());
  }
}

json state_json(const Session& s) {
  json out = to_json(s);
  const auto palette = raster::Palette::standard();
  json parts = json::array();
  for (const auto& q : s.queue) {
    const int number = parse_indexed_label(q.spec.label, "Part").value_or(1);
    const int turn = turn_of(s, q.spec.label);
    parts.push_back({{"label", q.spec.label},
                     {"description", q.spec.description},
                     {"status", std::string(to_string(q.status))},
                     {"color", hex_color(palette.color(number))},
                     {"turn", turn < 0 ? json(nullptr) : json(turn)},
                     {"strokes", turn < 0 ? json(nullptr) : json(emit_strokes(s.turns[turn].strokes))}});
  }
  out["parts"] = parts;
  const QueuedPart* next = s.next_pending();
  out["next_part"] = next ? json(next->spec.label) : json(nullptr);
  out["complete"] = next == nullptr;
  out["svg"] = export_svg(s.canvas_sketch());
  return out;
}

std::string RandomBackend::next_part(const TurnInputs& inputs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, inputs.caption);
  h = fnv1a(h, "\x1f" + inputs.next_part.label + "\x1f" + inputs.next_part.description);
  for (const auto& [part, strokes] : inputs.drawn_parts) {
    h = fnv1a(h, "\x1e" + part.label + "\x1f" + emit_strokes(strokes));
  }
  h = fnv1a(h, "\x1d" + std::to_string(inputs.remaining));
  Rng rng(h ^ salt_);
  const int count = static_cast<int>(rng.uniform_int(1, 4));
  const int w = inputs.canvas.width;
  const int hgt = inputs.canvas.height;
  StrokeSequence strokes;
  for (int i = 0; i < count; ++i) {
    std::array<int, 8> v{};
    for (int k = 0; k < 8; ++k) v[k] = static_cast<int>(rng.uniform_int(0, (k % 2 ? hgt : w) - 1));
    strokes.push_back(CubicStroke::from_coords(v));
  }
  return emit_strokes(strokes);
}

std::string ReplayBackend::next_part(const TurnInputs& inputs) {
  for (const auto& p : record_.parts) {
    if (p.label == inputs.next_part.label) return emit_strokes(part_strokes(record_, p.label));
  }
  throw UnknownPart("record " + record_.id + " has no " + inputs.next_part.label);
}

VlmBackend::VlmBackend(std::shared_ptr<annopipe::VlmClient> client, std::string turn_template,
                       int max_retries)
    : client_(std::move(client)), template_(std::move(turn_template)), max_retries_(max_retries) {}

annopipe::VlmRequest VlmBackend::build_request(const TurnInputs& inputs) const {
  std::string drawn;
  for (const auto& [part, strokes] : inputs.drawn_parts) {
    drawn += part.label + ": " + part.description + "\n" + emit_strokes(strokes);
  }
  if (drawn.empty()) drawn = "(none)\n";
  while (!drawn.empty() && drawn.back() == '\n') drawn.pop_back();
  annopipe::VlmRequest req;
  req.stage = "turn";
  req.content = annopipe::fill_template(
      template_,
      {{"<caption>", inputs.caption},
       {"<next_part>", inputs.next_part.label + ": " + inputs.next_part.description},
       {"<drawn_parts>", drawn},
       {"<remaining>", std::to_string(inputs.remaining)},
       {"<width>", std::to_string(inputs.canvas.width)},
       {"<height>", std::to_string(inputs.canvas.height)}},
      {{"<canvas>", &inputs.canvas}});
  return req;
}

std::string VlmBackend::next_part(const TurnInputs& inputs) {
  const auto req = build_request(inputs);
  std::string answer;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    answer = client_->request(req);
    while (!answer.empty() && (answer.back() == ' ' || answer.back() == '\r')) answer.pop_back();
    if (verify_response(answer).valid) break;
  }
  return answer;
}

TurnInputs make_inputs(const Session& s, const std::vector<SessionTurn>& drawn,
                       const PartSpec& part, int remaining) {
  TurnInputs in;
  Sketch canvas;
  canvas.canvas = s.canvas;
  for (const auto& t : drawn) {
    canvas.paths.insert(canvas.paths.end(), t.strokes.begin(), t.strokes.end());
    in.drawn_parts.emplace_back(t.part, t.strokes);
  }
  in.canvas = raster::rasterize(canvas);
  in.caption = s.caption;
  in.next_part = part;
  in.remaining = remaining;
  return in;
}

Session create_session(std::string id, const std::string& caption,
                       const std::vector<std::string>& parts, const CanvasConfig& canvas) {
  if (static_cast<int>(parts.size()) < kMinParts || static_cast<int>(parts.size()) > kMaxParts) {
    throw SessionValidationError("a session needs between " + std::to_string(kMinParts) +
                                 " and " + std::to_string(kMaxParts) + " parts, got " +
                                 std::to_string(parts.size()));
  }
  for (const auto& d : parts) {
    if (count_words(d) == 0) throw SessionValidationError("part descriptions must not be blank");
  }
  try {
    canvas.check();
  } catch (const std::invalid_argument& e) {
    throw SessionValidationError(e.what());
  }
  Session s;
  s.id = std::move(id);
  s.caption = caption;
  s.canvas = canvas;
  for (auto& spec : make_parts(parts)) s.queue.push_back({std::move(spec), PartStatus::kPending});
  return s;
}

StrokeSequence step(Session& s, Backend& backend) {
  const QueuedPart* next = s.next_pending();
  if (!next) throw Exhausted("session " + s.id + " has no pending parts");
  const PartSpec part = next->spec;
  const auto inputs = make_inputs(s, s.turns, part, s.pending_count() - 1);
  StrokeSequence strokes = checked_strokes(backend.next_part(inputs), part.label);
  s.turns.push_back({part, strokes, backend.name()});
  find_queued(s, part.label)->status = PartStatus::kDrawn;
  return strokes;
}

Session regenerate(const Session& s, int turn_index, Backend& backend, std::string new_id) {
  if (turn_index < 0 || turn_index >= static_cast<int>(s.turns.size())) {
    throw TurnIndexError("turn " + std::to_string(turn_index) + " does not exist (session has " +
                         std::to_string(s.turns.size()) + " turns)");
  }
  Session branch = s;
  branch.id = std::move(new_id);
  branch.parent = BranchParent{s.id, turn_index};
  branch.turns.resize(turn_index);
  const PartSpec part = s.turns[turn_index].part;
  for (std::size_t i = turn_index; i < s.turns.size(); ++i) {
    find_queued(branch, s.turns[i].part.label)->status = PartStatus::kPending;
  }
  const int remaining = branch.pending_count() - 1;
  const auto inputs = make_inputs(branch, branch.turns, part, remaining);
  StrokeSequence strokes = checked_strokes(backend.next_part(inputs), part.label);
  branch.turns.push_back({part, std::move(strokes), backend.name()});
  find_queued(branch, part.label)->status = PartStatus::kDrawn;
  return branch;
}

void remove_part(Session& s, const std::string& label) {
  const int turn = turn_of(s, label);
  if (turn < 0) throw UnknownPart("no drawn part labeled " + label);
  s.turns.erase(s.turns.begin() + turn);
  find_queued(s, label)->status = PartStatus::kRemoved;
}

void replace_part(Session& s, const std::string& label, const std::string& description,
                  Backend& backend) {
  const int turn = turn_of(s, label);
  if (turn < 0) throw UnknownPart("no drawn part labeled " + label);
  if (count_words(description) == 0) throw SessionValidationError("description must not be blank");
  std::vector<SessionTurn> others;
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    if (static_cast<int>(i) != turn) others.push_back(s.turns[i]);
  }
  const PartSpec part{label, description};
  const auto inputs = make_inputs(s, others, part, s.pending_count());
  StrokeSequence strokes = checked_strokes(backend.next_part(inputs), label);
  s.turns[turn] = {part, std::move(strokes), backend.name()};
  find_queued(s, label)->spec.description = description;
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionStore::path_for(const std::string& id) const {
  const bool safe = !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
  if (!safe) throw NotFound("no session " + id);
  return dir_ / (id + ".json");
}

void SessionStore::save(const Session& s) const {
  const auto path = path_for(s.id);
  const auto tmp = path.string() + ".tmp";
  write_file(tmp, to_json(s).dump(2) + "\n");
  std::filesystem::rename(tmp, path);
}

Session SessionStore::load(const std::string& id) const {
  const auto path = path_for(id);
  if (!std::filesystem::exists(path)) throw NotFound("no session " + id);
  return session_from_json(json::parse(read_file(path.string())));
}

bool SessionStore::exists(const std::string& id) const {
  try {
    return std::filesystem::exists(path_for(id));
  } catch (const NotFound&) {
    return false;
  }
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void BackendRegistry::add_record(AnnotatedSketch record) {
  const std::string id = record.id;
  records_[id] = std::move(record);
}

void BackendRegistry::load_records(const std::string& path) {
  for (auto& rec : partsketch::load_records(path)) add_record(std::move(rec));
}

void BackendRegistry::set_vlm(VlmFactory factory, std::string turn_template) {
  vlm_factory_ = std::move(factory);
  turn_template_ = std::move(turn_template);
}

std::shared_ptr<annopipe::VlmClient> BackendRegistry::vlm_client() const {
  if (!vlm_factory_) return nullptr;
  return vlm_factory_();
}

std::unique_ptr<Backend> BackendRegistry::resolve(const std::string& name) const {
  if (name == "random") return std::make_unique<RandomBackend>();
  if (name.rfind("random:", 0) == 0) {
    try {
      return std::make_unique<RandomBackend>(std::stoull(name.substr(7)));
    } catch (const std::exception&) {
      throw SessionValidationError("random backend salt must be an unsigned integer");
    }
  }
  if (name.rfind("replay:", 0) == 0) {
    auto it = records_.find(name.substr(7));
    if (it == records_.end()) throw SessionValidationError("no record " + name.substr(7));
    return std::make_unique<ReplayBackend>(it->second);
  }
  if (name == "vlm") {
    if (!vlm_factory_) throw SessionValidationError("no VLM backend is configured");
    return std::make_unique<VlmBackend>(vlm_factory_(), turn_template_);
  }
  throw SessionValidationError("unknown backend '" + name + "'");
}

SessionService::SessionService(SessionStore store, BackendRegistry backends)
    : store_(std::move(store)), backends_(std::move(backends)) {}

std::shared_ptr<std::mutex> SessionService::lock_for(const std::string& id) const {
  std::lock_guard guard(locks_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

std::string SessionService::new_id() const {
  static std::mutex mu;
  static Rng rng(std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32));
  std::lock_guard guard(mu);
  static const char* kDigits = "0123456789abcdef";
  std::string id;
  do {
    id = "s";
    std::uint64_t v = rng.next();
    for (int i = 0; i < 12; ++i, v >>= 4) id += kDigits[v & 15];
  } while (store_.exists(id));
  return id;
}

Session SessionService::create(const std::string& caption, const std::vector<std::string>& parts,
                               const CanvasConfig& canvas) {
  Session s = create_session(new_id(), caption, parts, canvas);
  store_.save(s);
  return s;
}

Session SessionService::get(const std::string& id) const {
  auto lock = lock_for(id);
  std::lock_guard guard(*lock);
  return store_.load(id);
}

std::vector<Session> SessionService::list() const {
  std::vector<Session> out;
  for (const auto& id : store_.list()) out.push_back(get(id));
  return out;
}

std::pair<Session, StrokeSequence> SessionService::step(const std::string& id,
                                                        const std::string& backend) {
  auto lock = lock_for(id);
  std::lock_guard guard(*lock);
  Session s = store_.load(id);
  auto b = backends_.resolve(backend);
  StrokeSequence strokes = session::step(s, *b);
  store_.save(s);
  return {s, strokes};
}

Session SessionService::regenerate(const std::string& id, int turn_index,
                                   const std::string& backend) {
  Session parent = get(id);
  auto b = backends_.resolve(backend);
  Session branch = session::regenerate(parent, turn_index, *b, new_id());
  store_.save(branch);
  return branch;
}

Session SessionService::remove_part(const std::string& id, const std::string& label) {
  auto lock = lock_for(id);
  std::lock_guard guard(*lock);
  Session s = store_.load(id);
  session::remove_part(s, label);
  store_.save(s);
  return s;
}

Session SessionService::replace_part(const std::string& id, const std::string& label,
                                     const std::string& description, const std::string& backend) {
  auto lock = lock_for(id);
  std::lock_guard guard(*lock);
  Session s = store_.load(id);
  auto b = backends_.resolve(backend);
  session::replace_part(s, label, description, *b);
  store_.save(s);
  return s;
}

}  // namespace partsketch::session
