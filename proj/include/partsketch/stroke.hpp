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

#ifndef PARTSKETCH_STROKE_HPP_
#define PARTSKETCH_STROKE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace partsketch {

struct CanvasConfig {
  int width = 512;
  int height = 512;
  double stroke_width = 3.0;
  std::uint8_t background = 255;

  /// Throws std::invalid_argument on a non-positive extent or width.
  void check() const;
  bool operator==(const CanvasConfig&) const = default;
};

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

/// One cubic Bezier path: start, two controls, end.
struct CubicStroke {
  Point p0, c1, c2, p1;

  std::array<int, 8> coords() const {
    return {p0.x, p0.y, c1.x, c1.y, c2.x, c2.y, p1.x, p1.y};
  }
  static CubicStroke from_coords(const std::array<int, 8>& v) {
    return {{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]}};
  }
  bool operator==(const CubicStroke&) const = default;
};

using StrokeSequence = std::vector<CubicStroke>;

/// A vector sketch. External path references are 1-based ("Path1").
struct Sketch {
  StrokeSequence paths;
  CanvasConfig canvas;
  bool operator==(const Sketch&) const = default;
};

enum class FormatErrorKind {
  kBadCommandLetter,
  kBadArity,
  kNonIntegerToken,
  kEmptyLine,
  kTrailingGarbage,
};

std::string_view to_string(FormatErrorKind kind);

struct FormatVerdict {
  bool valid = true;
  std::optional<FormatErrorKind> error_kind;
  std::optional<int> line_index;  // 1-based

  static FormatVerdict ok() { return {}; }
  static FormatVerdict fail(FormatErrorKind kind, int line) {
    return {false, kind, line};
  }
  bool operator==(const FormatVerdict&) const = default;
};

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(FormatVerdict verdict);
  const FormatVerdict& verdict() const { return verdict_; }

 private:
  FormatVerdict verdict_;
};

enum class Rounding { kNone, kNearestTen };

/// Parses newline-separated `M x y C x1 y1 x2 y2 x3 y3` lines.
/// All-or-nothing: the first offending line raises FormatError.
StrokeSequence parse_strokes(std::string_view text);

std::string emit_strokes(const StrokeSequence& seq,
                         Rounding rounding = Rounding::kNone);

/// Single stroke line without the trailing newline.
std::string emit_stroke(const CubicStroke& stroke,
                        Rounding rounding = Rounding::kNone);

/// Rounds to the closest multiple of ten, ties away from zero.
int round_to_ten(int value);

/// Grammar-only check; an empty response is invalid.
FormatVerdict verify_response(std::string_view text);

class SvgError : public std::runtime_error {
 public:
  enum class Kind { kUnsupportedCommand, kUnsupportedElement, kMalformedXml };
  SvgError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads the absolute M/C subset of SVG. Canvas extent comes from the
/// root's width/height (or viewBox) when present; presentation attributes
/// are ignored in favor of `base`.
Sketch import_svg(std::string_view svg_text, const CanvasConfig& base = {});

/// One <path> per stroke inside a group carrying the shared attributes.
std::string export_svg(const Sketch& sketch);

/// Stroke count uniform in 0..32, coordinates uniform in 0..512.
Sketch random_sketch(std::uint64_t seed, const CanvasConfig& canvas = {});

}  // namespace partsketch

#endif  // PARTSKETCH_STROKE_HPP_
