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

#ifndef PARTSKETCH_PARTDATA_HPP_
#define PARTSKETCH_PARTDATA_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "partsketch/bitmap.hpp"
#include "partsketch/stroke.hpp"

namespace partsketch {

inline constexpr int kMinParts = 2;
inline constexpr int kMaxParts = 5;
inline constexpr int kMaxCaptionWords = 25;

struct PartSpec {
  std::string label;  // "PartN"
  std::string description;
  bool operator==(const PartSpec&) const = default;
};

using PartDecomposition = std::vector<PartSpec>;

/// Builds Part1..PartK from descriptions in order.
PartDecomposition make_parts(const std::vector<std::string>& descriptions);

/// "PartN" -> N, "PathN" -> N; nullopt if malformed or N < 1.
std::optional<int> parse_indexed_label(std::string_view text,
                                       std::string_view prefix);
std::string part_label(int number);
std::string path_label(int number);

/// 1-based path index -> 1-based part number.
struct PathAssignment {
  std::map<int, int> part_of_path;

  std::vector<int> paths_of(int part_number) const;
  bool operator==(const PathAssignment&) const = default;
};

struct AnnotatedSketch {
  std::string id;
  Sketch sketch;
  std::string caption;
  PartDecomposition parts;
  PathAssignment assignment;
  bool operator==(const AnnotatedSketch&) const = default;
};

struct TurnExample {
  std::vector<std::string> order;  // permutation this example belongs to
  int turn = 1;                    // 1-based position within `order`
  raster::Bitmap canvas_render;
  std::string caption;
  PartSpec next_part;
  std::vector<std::pair<PartSpec, StrokeSequence>> drawn_parts;
  int remaining_after = 0;
  StrokeSequence target;
};

struct Violation {
  std::string code;  // part-count, label-contiguity, empty-description,
                     // totality, unknown-part, surjectivity, caption-length
  std::string detail;
};

std::vector<Violation> validate_annotation(const AnnotatedSketch& a);

int count_words(std::string_view text);

class OrderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Paths of the first `t` parts of `order`, in original sketch order.
Sketch assemble_partial_gt(const AnnotatedSketch& a,
                           const std::vector<std::string>& order, int t);

/// Indices (0-based) of the paths that assemble_partial_gt selects.
std::vector<int> partial_path_indices(const AnnotatedSketch& a,
                                      const std::vector<std::string>& order,
                                      int t);

/// Strokes assigned to one part, in sketch order.
StrokeSequence part_strokes(const AnnotatedSketch& a, const std::string& label);

/// min(max_perms, K!) distinct part orders drawn by seeded Fisher-Yates with
/// duplicate rejection.
std::vector<std::vector<std::string>> sample_permutations(
    const AnnotatedSketch& a, int max_perms, std::uint64_t seed);

/// K turn examples per sampled permutation.
std::vector<TurnExample> permute_augment(const AnnotatedSketch& a,
                                         int max_perms, std::uint64_t seed);

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Record JSON: {"id", "canvas": {"width", "height"}, "paths": [...],
/// "caption", "parts": [{"label", "description"}], "assignment": {...}}.
std::string serialize_record(const AnnotatedSketch& a);
AnnotatedSketch deserialize_record(std::string_view bytes);

/// Reads a single-record JSON file, a JSON array, or a JSON-Lines corpus.
std::vector<AnnotatedSketch> load_records(const std::string& path);

/// SFT example as one JSON-Lines object; strokes printed with `rounding`,
/// canvas embedded as a base64 PNG.
std::string turn_example_json(const TurnExample& ex, const std::string& record_id,
                              Rounding rounding);

}  // namespace partsketch

#endif  // PARTSKETCH_PARTDATA_HPP_
