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

#include "partsketch/partdata.hpp"

#include <algorithm>
#include <charconv>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "partsketch/raster.hpp"
#include "partsketch/rng.hpp"
#include "partsketch/util.hpp"

namespace partsketch {
namespace {

using nlohmann::json;

std::string join_codes(const std::vector<Violation>& vs) {
  std::string out = "annotation invalid:";
  for (const auto& v : vs) out += " " + v.code + " (" + v.detail + ")";
  return out;
}

int index_of_label(const AnnotatedSketch& a, const std::string& label) {
  for (std::size_t i = 0; i < a.parts.size(); ++i) {
    if (a.parts[i].label == label) return static_cast<int>(i) + 1;
  }
  return 0;
}

void check_order(const AnnotatedSketch& a, const std::vector<std::string>& order) {
  std::vector<std::string> sorted_order = order;
  std::vector<std::string> labels;
  for (const auto& p : a.parts) labels.push_back(p.label);
  std::sort(sorted_order.begin(), sorted_order.end());
  std::sort(labels.begin(), labels.end());
  if (sorted_order != labels) {
    throw OrderError("order is not a permutation of the record's part labels");
  }
}

}  // namespace

PartDecomposition make_parts(const std::vector<std::string>& descriptions) {
  PartDecomposition parts;
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    parts.push_back({part_label(static_cast<int>(i) + 1), descriptions[i]});
  }
  return parts;
}

std::optional<int> parse_indexed_label(std::string_view text, std::string_view prefix) {
  if (text.size() <= prefix.size() || text.substr(0, prefix.size()) != prefix) {
    return std::nullopt;
  }
  const std::string_view digits = text.substr(prefix.size());
  if (digits[0] == '0') return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || value < 1) {
    return std::nullopt;
  }
  return value;
}

std::string part_label(int number) { return "Part" + std::to_string(number); }
std::string path_label(int number) { return "Path" + std::to_string(number); }

std::vector<int> PathAssignment::paths_of(int part_number) const {
  std::vector<int> out;
  for (const auto& [path, part] : part_of_path) {
    if (part == part_number) out.push_back(path);
  }
  return out;
}

int count_words(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word;
  int n = 0;
  while (in >> word) ++n;
  return n;
}

std::vector<Violation> validate_annotation(const AnnotatedSketch& a) {
  std::vector<Violation> out;
  const int k = static_cast<int>(a.parts.size());
  if (k < kMinParts || k > kMaxParts) {
    out.push_back({"part-count", std::to_string(k) + " parts"});
  }
  for (int i = 0; i < k; ++i) {
    if (a.parts[static_cast<std::size_t>(i)].label != part_label(i + 1)) {
      out.push_back({"label-contiguity",
                     "expected " + part_label(i + 1) + ", got " + a.parts[static_cast<std::size_t>(i)].label});
    }
    if (count_words(a.parts[static_cast<std::size_t>(i)].description) == 0) {
      out.push_back({"empty-description", part_label(i + 1)});
    }
  }
  const int n = static_cast<int>(a.sketch.paths.size());
  for (int p = 1; p <= n; ++p) {
    if (!a.assignment.part_of_path.contains(p)) {
      out.push_back({"totality", path_label(p) + " unassigned"});
    }
  }
  std::set<int> used;
  for (const auto& [path, part] : a.assignment.part_of_path) {
    if (path < 1 || path > n) {
      out.push_back({"totality", path_label(path) + " does not exist"});
    }
    if (part < 1 || part > k) {
      out.push_back({"unknown-part", path_label(path) + " -> " + part_label(part)});
    } else {
      used.insert(part);
    }
  }
  for (int part = 1; part <= k; ++part) {
    if (!used.contains(part)) {
      out.push_back({"surjectivity", part_label(part) + " has no paths"});
    }
  }
  const int words = count_words(a.caption);
  if (words > kMaxCaptionWords) {
    out.push_back({"caption-length", std::to_string(words) + " words"});
  }
  return out;
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::invalid_argument(join_codes(violations)), violations_(std::move(violations)) {}

std::vector<int> partial_path_indices(const AnnotatedSketch& a,
                                      const std::vector<std::string>& order, int t) {
  check_order(a, order);
  if (t < 0 || t > static_cast<int>(order.size())) {
    throw std::out_of_range("partial step outside 0..K");
  }
  std::set<int> chosen_parts;
  for (int i = 0; i < t; ++i) chosen_parts.insert(index_of_label(a, order[static_cast<std::size_t>(i)]));
  std::vector<int> out;
  for (const auto& [path, part] : a.assignment.part_of_path) {
    if (chosen_parts.contains(part) && path >= 1 &&
        path <= static_cast<int>(a.sketch.paths.size())) {
      out.push_back(path - 1);
    }
  }
  return out;
}

Sketch assemble_partial_gt(const AnnotatedSketch& a,
                           const std::vector<std::string>& order, int t) {
  Sketch out;
  out.canvas = a.sketch.canvas;
  for (int idx : partial_path_indices(a, order, t)) {
    out.paths.push_back(a.sketch.paths[static_cast<std::size_t>(idx)]);
  }
  return out;
}

StrokeSequence part_strokes(const AnnotatedSketch& a, const std::string& label) {
  const int part = index_of_label(a, label);
  if (part == 0) throw OrderError("unknown part label " + label);
  StrokeSequence out;
  for (int path : a.assignment.paths_of(part)) {
    out.push_back(a.sketch.paths.at(static_cast<std::size_t>(path - 1)));
  }
  return out;
}

std::vector<std::vector<std::string>> sample_permutations(const AnnotatedSketch& a,
                                                          int max_perms,
                                                          std::uint64_t seed) {
  const int k = static_cast<int>(a.parts.size());
  long long factorial = 1;
  for (int i = 2; i <= k; ++i) factorial *= i;
  const long long wanted = std::min<long long>(std::max(0, max_perms), factorial);

  std::vector<std::string> labels;
  for (const auto& p : a.parts) labels.push_back(p.label);
  Rng rng(seed);
  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> out;
  while (static_cast<long long>(out.size()) < wanted) {
    std::vector<std::string> perm = labels;
    for (int i = k - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
      std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
    }
    if (seen.insert(perm).second) out.push_back(std::move(perm));
  }
  return out;
}

std::vector<TurnExample> permute_augment(const AnnotatedSketch& a, int max_perms,
                                         std::uint64_t seed) {
  if (auto violations = validate_annotation(a); !violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  const int k = static_cast<int>(a.parts.size());
  std::vector<TurnExample> out;
  for (const auto& order : sample_permutations(a, max_perms, seed)) {
    for (int t = 1; t <= k; ++t) {
      TurnExample ex;
      ex.order = order;
      ex.turn = t;
      ex.canvas_render = raster::rasterize(assemble_partial_gt(a, order, t - 1));
      ex.caption = a.caption;
      ex.next_part = a.parts[static_cast<std::size_t>(index_of_label(a, order[static_cast<std::size_t>(t - 1)]) - 1)];
      for (int prev = 0; prev < t - 1; ++prev) {
        const auto& label = order[static_cast<std::size_t>(prev)];
        ex.drawn_parts.emplace_back(a.parts[static_cast<std::size_t>(index_of_label(a, label) - 1)],
                                    part_strokes(a, label));
      }
      ex.remaining_after = k - t;
      ex.target = part_strokes(a, ex.next_part.label);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::string serialize_record(const AnnotatedSketch& a) {
  json j;
  j["id"] = a.id;
  j["canvas"] = {{"width", a.sketch.canvas.width}, {"height", a.sketch.canvas.height}};
  json paths = json::array();
  for (const auto& s : a.sketch.paths) paths.push_back(emit_stroke(s));
  j["paths"] = std::move(paths);
  j["caption"] = a.caption;
  json parts = json::array();
  for (const auto& p : a.parts) parts.push_back({{"label", p.label}, {"description", p.description}});
  j["parts"] = std::move(parts);
  json assignment = json::object();
  for (const auto& [path, part] : a.assignment.part_of_path) {
    assignment[path_label(path)] = part_label(part);
  }
  j["assignment"] = std::move(assignment);
  return j.dump();
}

AnnotatedSketch deserialize_record(std::string_view bytes) {
  AnnotatedSketch a;
  try {
    const json j = json::parse(bytes);
    a.id = j.at("id").get<std::string>();
    const auto& canvas = j.at("canvas");
    a.sketch.canvas.width = canvas.at("width").get<int>();
    a.sketch.canvas.height = canvas.at("height").get<int>();
    for (const auto& p : j.at("paths")) {
      const auto strokes = parse_strokes(p.get<std::string>());
      if (strokes.size() != 1) throw DecodeError("each path entry must hold one stroke");
      a.sketch.paths.push_back(strokes.front());
    }
    a.caption = j.at("caption").get<std::string>();
    for (const auto& p : j.at("parts")) {
      a.parts.push_back({p.at("label").get<std::string>(), p.at("description").get<std::string>()});
    }
    for (const auto& [key, value] : j.at("assignment").items()) {
      const auto path = parse_indexed_label(key, "Path");
      const auto part = parse_indexed_label(value.get<std::string>(), "Part");
      if (!path || !part) throw DecodeError("malformed assignment entry " + key);
      a.assignment.part_of_path[*path] = *part;
    }
  } catch (const DecodeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DecodeError(std::string("malformed record: ") + e.what());
  }
  try {
    a.sketch.canvas.check();
  } catch (const std::invalid_argument& e) {
    throw DecodeError(std::string("invariant: ") + e.what());
  }
  if (auto violations = validate_annotation(a); !violations.empty()) {
    throw DecodeError("invariant: " + join_codes(violations));
  }
  return a;
}

std::vector<AnnotatedSketch> load_records(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<AnnotatedSketch> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const std::exception& e) {
      throw DecodeError(std::string("malformed corpus: ") + e.what());
    }
    for (const auto& item : arr) out.push_back(deserialize_record(item.dump()));
    return out;
  }
  // Single object or JSON-Lines.
  try {
    out.push_back(deserialize_record(text));
    return out;
  } catch (const DecodeError&) {
    if (std::count(text.begin(), text.end(), '\n') <= 1) throw;
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(deserialize_record(line));
  }
  return out;
}

std::string turn_example_json(const TurnExample& ex, const std::string& record_id,
                              Rounding rounding) {
  json j;
  j["record_id"] = record_id;
  j["order"] = ex.order;
  j["turn"] = ex.turn;
  j["caption"] = ex.caption;
  j["next_part"] = {{"label", ex.next_part.label}, {"description", ex.next_part.description}};
  json drawn = json::array();
  for (const auto& [spec, strokes] : ex.drawn_parts) {
    drawn.push_back({{"label", spec.label},
                     {"description", spec.description},
                     {"paths", emit_strokes(strokes, rounding)}});
  }
  j["drawn_parts"] = std::move(drawn);
  j["remaining_after"] = ex.remaining_after;
  j["target"] = emit_strokes(ex.target, rounding);
  j["canvas_png_base64"] = base64_encode(raster::encode_png(ex.canvas_render));
  return j.dump();
}

}  // namespace partsketch
