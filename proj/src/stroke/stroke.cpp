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

#include "partsketch/stroke.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "partsketch/rng.hpp"

namespace partsketch {
namespace {

constexpr int kTokensPerLine = 10;
constexpr int kMaxStrokesRandom = 32;
constexpr int kMaxCoordRandom = 512;

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::optional<int> parse_int(std::string_view tok) {
  if (tok.empty()) return std::nullopt;
  std::size_t start = tok[0] == '-' ? 1 : 0;
  if (start == tok.size()) return std::nullopt;
  for (std::size_t i = start; i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return std::nullopt;
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return value;
}

bool is_command_letter(std::string_view tok) {
  return tok.size() == 1 && std::isalpha(static_cast<unsigned char>(tok[0]));
}

// Checks one line positionally. Position 0 must be M, position 3 must be C,
// everything else an integer.
std::optional<FormatErrorKind> check_line(
    const std::vector<std::string_view>& tokens, std::array<int, 8>& out) {
  if (tokens.empty()) return FormatErrorKind::kEmptyLine;
  const int n = static_cast<int>(tokens.size());
  int coord = 0;
  for (int i = 0; i < std::min(n, kTokensPerLine); ++i) {
    const std::string_view tok = tokens[i];
    if (i == 0 || i == 3) {
      const char expected = i == 0 ? 'M' : 'C';
      if (tok.size() == 1 && tok[0] == expected) continue;
      // A number where a command belongs means the previous command had
      // the wrong number of arguments.
      if (parse_int(tok)) return FormatErrorKind::kBadArity;
      return FormatErrorKind::kBadCommandLetter;
    }
    auto value = parse_int(tok);
    if (!value) {
      if (is_command_letter(tok)) return FormatErrorKind::kBadArity;
      return FormatErrorKind::kNonIntegerToken;
    }
    out[coord++] = *value;
  }
  if (n < kTokensPerLine) return FormatErrorKind::kBadArity;
  if (n > kTokensPerLine) return FormatErrorKind::kTrailingGarbage;
  return std::nullopt;
}

struct ParseOutcome {
  StrokeSequence strokes;
  FormatVerdict verdict;
};

ParseOutcome parse_impl(std::string_view text) {
  ParseOutcome outcome;
  if (text.empty()) return outcome;
  if (text.back() == '\n') text.remove_suffix(1);
  int line_no = 0;
  std::size_t pos = 0;
  while (true) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    std::array<int, 8> coords{};
    if (auto err = check_line(split_spaces(line), coords)) {
      outcome.verdict = FormatVerdict::fail(*err, line_no);
      outcome.strokes.clear();
      return outcome;
    }
    outcome.strokes.push_back(CubicStroke::from_coords(coords));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return outcome;
}

std::string verdict_message(const FormatVerdict& v) {
  std::string msg = "stroke format error";
  if (v.error_kind) msg += ": " + std::string(to_string(*v.error_kind));
  if (v.line_index) msg += " at line " + std::to_string(*v.line_index);
  return msg;
}

}  // namespace

void CanvasConfig::check() const {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("canvas extent must be positive");
  }
  if (!(stroke_width > 0.0)) {
    throw std::invalid_argument("stroke width must be positive");
  }
}

std::string_view to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::kBadCommandLetter: return "bad-command-letter";
    case FormatErrorKind::kBadArity: return "bad-arity";
    case FormatErrorKind::kNonIntegerToken: return "non-integer-token";
    case FormatErrorKind::kEmptyLine: return "empty-line";
    case FormatErrorKind::kTrailingGarbage: return "trailing-garbage";
  }
  return "unknown";
}

FormatError::FormatError(FormatVerdict verdict)
    : std::runtime_error(verdict_message(verdict)), verdict_(verdict) {}

StrokeSequence parse_strokes(std::string_view text) {
  ParseOutcome outcome = parse_impl(text);
  if (!outcome.verdict.valid) throw FormatError(outcome.verdict);
  return std::move(outcome.strokes);
}

int round_to_ten(int value) {
  const int magnitude = (std::abs(value) + 5) / 10 * 10;
  return value < 0 ? -magnitude : magnitude;
}

std::string emit_stroke(const CubicStroke& stroke, Rounding rounding) {
  auto coords = stroke.coords();
  if (rounding == Rounding::kNearestTen) {
    for (int& c : coords) c = round_to_ten(c);
  }
  std::string line = "M";
  for (int i = 0; i < 8; ++i) {
    if (i == 2) line += " C";
    line += ' ';
    line += std::to_string(coords[i]);
  }
  return line;
}

std::string emit_strokes(const StrokeSequence& seq, Rounding rounding) {
  std::string out;
  for (const auto& stroke : seq) {
    out += emit_stroke(stroke, rounding);
    out += '\n';
  }
  return out;
}

FormatVerdict verify_response(std::string_view text) {
  ParseOutcome outcome = parse_impl(text);
  if (!outcome.verdict.valid) return outcome.verdict;
  if (outcome.strokes.empty()) {
    return FormatVerdict::fail(FormatErrorKind::kEmptyLine, 1);
  }
  return FormatVerdict::ok();
}

Sketch random_sketch(std::uint64_t seed, const CanvasConfig& canvas) {
  Rng rng(seed);
  Sketch sketch;
  sketch.canvas = canvas;
  const auto count = rng.uniform_int(0, kMaxStrokesRandom);
  sketch.paths.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    std::array<int, 8> coords{};
    for (int& c : coords) c = static_cast<int>(rng.uniform_int(0, kMaxCoordRandom));
    sketch.paths.push_back(CubicStroke::from_coords(coords));
  }
  return sketch;
}

}  // namespace partsketch
