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

#ifndef PARTSKETCH_TESTS_ORACLES_HPP_
#define PARTSKETCH_TESTS_ORACLES_HPP_

// Fixtures and brute-force reference computations shared by the unit tests
// and the acceptance runner. Nothing here calls into the code it checks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "partsketch/partdata.hpp"
#include "partsketch/rng.hpp"
#include "partsketch/stroke.hpp"

namespace partsketch::testing {

inline const std::string kTwoStrokeExample =
    "M 212 146 C 6 89 303 88 322 14\nM 213 17 C 213 269 18 157 218 32\n";

inline CubicStroke stroke(int x0, int y0, int x1, int y1, int x2, int y2, int x3, int y3) {
  return CubicStroke::from_coords({x0, y0, x1, y1, x2, y2, x3, y3});
}

/// Six short strokes, three parts: Part1 {1, 2}, Part2 {3, 4}, Part3 {5, 6}.
inline AnnotatedSketch three_part_record() {
  AnnotatedSketch a;
  a.id = "dog";
  a.caption = "A small dog standing still";
  a.sketch.paths = {
      stroke(100, 100, 120, 80, 160, 80, 180, 100),  stroke(100, 100, 120, 130, 160, 130, 180, 100),
      stroke(200, 200, 260, 180, 320, 180, 380, 200), stroke(200, 260, 260, 280, 320, 280, 380, 260),
      stroke(220, 300, 220, 340, 220, 380, 220, 420), stroke(360, 300, 360, 340, 360, 380, 360, 420),
  };
  a.parts = make_parts({"round head", "long body", "four legs"});
  a.assignment.part_of_path = {{1, 1}, {2, 1}, {3, 2}, {4, 2}, {5, 3}, {6, 3}};
  return a;
}

/// Uniform cubic over [lo, hi]^8.
inline CubicStroke random_stroke(Rng& rng, int lo = 0, int hi = 512) {
  std::array<int, 8> v{};
  for (int& c : v) c = static_cast<int>(rng.uniform_int(lo, hi));
  return CubicStroke::from_coords(v);
}

/// A cubic whose control points stay within `reach` of a random anchor.
inline CubicStroke local_stroke(Rng& rng, int reach, const CanvasConfig& canvas = {}) {
  const int ax = static_cast<int>(rng.uniform_int(reach, canvas.width - 1 - reach));
  const int ay = static_cast<int>(rng.uniform_int(reach, canvas.height - 1 - reach));
  std::array<int, 8> v{};
  for (int i = 0; i < 8; i += 2) {
    v[i] = ax + static_cast<int>(rng.uniform_int(-reach, reach));
    v[i + 1] = ay + static_cast<int>(rng.uniform_int(-reach, reach));
  }
  return CubicStroke::from_coords(v);
}

/// K parts (2..5), every part owning at least one of the paths; paths are
/// local strokes in random part order.
inline AnnotatedSketch random_record(Rng& rng, int parts, int extra_paths, int reach = 40) {
  AnnotatedSketch a;
  a.id = "r" + std::to_string(rng.uniform_int(0, 1'000'000));
  a.caption = "a random sketch";
  std::vector<std::string> descriptions;
  for (int k = 1; k <= parts; ++k) descriptions.push_back("component number " + std::to_string(k));
  a.parts = make_parts(descriptions);
  std::vector<int> owner;
  for (int k = 1; k <= parts; ++k) owner.push_back(k);
  for (int e = 0; e < extra_paths; ++e) owner.push_back(static_cast<int>(rng.uniform_int(1, parts)));
  for (std::size_t i = owner.size(); i > 1; --i) {
    std::swap(owner[i - 1], owner[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  for (std::size_t i = 0; i < owner.size(); ++i) {
    a.sketch.paths.push_back(local_stroke(rng, reach));
    a.assignment.part_of_path[static_cast<int>(i) + 1] = owner[i];
  }
  return a;
}

/// Direct Bernstein evaluation.
inline Eigen::Vector2d bezier_point(const CubicStroke& s, double t) {
  const double u = 1.0 - t;
  const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t, b3 = t * t * t;
  return {b0 * s.p0.x + b1 * s.c1.x + b2 * s.c2.x + b3 * s.p1.x,
          b0 * s.p0.y + b1 * s.c1.y + b2 * s.c2.y + b3 * s.p1.y};
}

/// Parametric samples dense enough that neighbours are < 0.5 px apart.
inline std::vector<Eigen::Vector2d> dense_samples(const CubicStroke& s) {
  const auto c = s.coords();
  double hull = 0.0;
  for (int i = 0; i < 6; i += 2) hull += std::hypot(c[i + 2] - c[i], c[i + 3] - c[i + 1]);
  const int n = std::max(1000, static_cast<int>(std::ceil(hull * 2.5)));
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) out.push_back(bezier_point(s, static_cast<double>(i) / n));
  return out;
}

/// Distance from every pixel center to the sampled curve, exact up to
/// `radius`; anything farther reads as +inf.
inline Eigen::MatrixXd distance_field(const std::vector<Eigen::Vector2d>& samples, int width,
                                      int height, double radius) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(height, width, std::numeric_limits<double>::infinity());
  const int r = static_cast<int>(std::ceil(radius)) + 1;
  for (const auto& p : samples) {
    const int cx = static_cast<int>(std::floor(p.x())), cy = static_cast<int>(std::floor(p.y()));
    for (int y = std::max(0, cy - r); y <= std::min(height - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(width - 1, cx + r); ++x) {
        const double dist = std::hypot(x + 0.5 - p.x(), y + 0.5 - p.y());
        if (dist <= radius && dist < d(y, x)) d(y, x) = dist;
      }
    }
  }
  return d;
}

/// Canonical single-space stroke line.
inline std::string stroke_line(const std::array<int, 8>& v) {
  std::string s = "M";
  for (int i = 0; i < 8; ++i) s += (i == 2 ? " C " : " ") + std::to_string(v[i]);
  return s;
}

/// A grammar-valid response of 1..6 lines with runs of 1..3 spaces between
/// tokens, signed coordinates and an optional final newline.
inline std::string random_valid_response(Rng& rng, std::vector<std::array<int, 8>>* coords = nullptr) {
  const int lines = static_cast<int>(rng.uniform_int(1, 6));
  std::string out;
  for (int l = 0; l < lines; ++l) {
    std::array<int, 8> v{};
    for (int& c : v) c = static_cast<int>(rng.uniform_int(-600, 1200));
    if (coords) coords->push_back(v);
    auto gap = [&] { return std::string(static_cast<std::size_t>(rng.uniform_int(1, 3)), ' '); };
    std::string line = "M";
    for (int i = 0; i < 8; ++i) line += (i == 2 ? gap() + "C" + gap() : gap()) + std::to_string(v[i]);
    out += line;
    if (l + 1 < lines || rng.uniform_int(0, 1)) out += '\n';
  }
  return out;
}

struct Corruption {
  std::string text;
  FormatErrorKind kind;
  int line = 1;  // 1-based
};

/// One grammar violation on one line of a canonical response; the expected
/// verdict follows from the kind of edit made.
inline Corruption corrupt(Rng& rng) {
  const int lines = static_cast<int>(rng.uniform_int(1, 5));
  std::vector<std::vector<std::string>> tokens(static_cast<std::size_t>(lines));
  for (auto& t : tokens) {
    t = {"M", "", "", "C", "", "", "", "", "", ""};
    for (int i : {1, 2, 4, 5, 6, 7, 8, 9}) t[static_cast<std::size_t>(i)] = std::to_string(rng.uniform_int(0, 512));
  }
  const int target = static_cast<int>(rng.uniform_int(0, lines - 1));
  auto& t = tokens[static_cast<std::size_t>(target)];
  static const std::string kLetters = "ABDEFGHIJKLNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
  static const std::vector<std::string> kNonIntegers = {"1.5", "x7", "12a", "--3", "0x10", "+", "NaN", "1e3", "3,4"};
  Corruption c;
  c.line = target + 1;
  bool blank_line = false;
  switch (rng.uniform_int(0, 5)) {
    case 0: {  // wrong command letter
      const std::size_t slot = rng.uniform_int(0, 1) ? 0 : 3;
      std::string letter(1, kLetters[static_cast<std::size_t>(rng.uniform_int(0, kLetters.size() - 1))]);
      if (slot == 3 && letter == "M") letter = "Q";
      t[slot] = letter;
      c.kind = FormatErrorKind::kBadCommandLetter;
      break;
    }
    case 1: {  // a coordinate dropped
      static const std::vector<int> kCoordSlots = {1, 2, 4, 5, 6, 7, 8, 9};
      t.erase(t.begin() + kCoordSlots[static_cast<std::size_t>(rng.uniform_int(0, 7))]);
      c.kind = FormatErrorKind::kBadArity;
      break;
    }
    case 2:  // extra token at the end
      t.push_back(std::to_string(rng.uniform_int(0, 512)));
      c.kind = FormatErrorKind::kTrailingGarbage;
      break;
    case 3: {  // coordinate that is not an integer
      static const std::vector<int> kCoordSlots = {1, 2, 4, 5, 6, 7, 8, 9};
      t[static_cast<std::size_t>(kCoordSlots[static_cast<std::size_t>(rng.uniform_int(0, 7))])] =
          kNonIntegers[static_cast<std::size_t>(rng.uniform_int(0, kNonIntegers.size() - 1))];
      c.kind = FormatErrorKind::kNonIntegerToken;
      break;
    }
    case 4:  // blank line in place of the target line
      blank_line = true;
      c.kind = FormatErrorKind::kEmptyLine;
      break;
    default:  // command letter alone on the line
      t = {"M"};
      c.kind = FormatErrorKind::kBadArity;
      break;
  }
  for (int l = 0; l < lines; ++l) {
    if (l) c.text += '\n';
    if (blank_line && l == target) continue;
    const auto& row = tokens[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < row.size(); ++i) c.text += (i ? " " : "") + row[i];
  }
  c.text += '\n';
  // A blank final line is swallowed with the trailing newline, so the
  // blank must sit before real content.
  if (blank_line && target == lines - 1) c.text += "M 1 2 C 3 4 5 6 7 8\n";
  return c;
}

inline double population_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace partsketch::testing

#endif  // PARTSKETCH_TESTS_ORACLES_HPP_
