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

#ifndef PARTSKETCH_RASTER_HPP_
#define PARTSKETCH_RASTER_HPP_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "partsketch/bitmap.hpp"
#include "partsketch/partdata.hpp"
#include "partsketch/stroke.hpp"

namespace partsketch::raster {

/// Distinct colors, one per part index.
struct Palette {
  std::vector<Rgb> colors;

  /// Red, blue, green, orange, purple.
  static Palette standard();
  const Rgb& color(int part_number) const;  // 1-based
};

class AssignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Polyline = std::vector<Eigen::Vector2d>;

inline constexpr double kDefaultFlattenTolerance = 0.25;

/// Recursive De Casteljau subdivision until both control points lie within
/// `tolerance` of their chord. Endpoints are reproduced exactly; a stroke
/// whose four points coincide yields a single point.
Polyline flatten_cubic(const CubicStroke& stroke,
                       double tolerance = kDefaultFlattenTolerance);

/// Evaluates the Bezier at parameter t.
Eigen::Vector2d eval_cubic(const CubicStroke& stroke, double t);

/// Binary coverage: a pixel is inked iff its center lies within
/// stroke_width / 2 of the flattened path. Strokes are clipped to the canvas.
void draw_strokes(Bitmap& target, const StrokeSequence& strokes,
                  double stroke_width, const Rgb& ink);

/// White (background level) grayscale render, black strokes, no anti-aliasing.
Bitmap rasterize(const Sketch& sketch);

/// Path i drawn in the palette color of its part; later paths paint over
/// earlier ones.
Bitmap recolor_render(const Sketch& sketch, const PathAssignment& assignment,
                      const Palette& palette = Palette::standard());

/// Geometry of the legend panel. All values are in pixels relative to the
/// left panel's origin.
///
///   scale         = max(1, canvas.width / 256); glyph cell 8x12 * scale
///   margin        = 8 * scale
///   marker        = filled square of side 12 * scale at x = margin
///   text_x        = margin + marker + 8 * scale   ("PartN: description")
///   line_height   = 14 * scale; text wraps at the panel's right margin
///   row k         starts where row k-1 ended plus 6 * scale of spacing,
///                 first row at y = margin; a row is as tall as its text
struct LegendRow {
  int top = 0;
  int height = 0;
  int marker_x = 0, marker_y = 0, marker_size = 0;
  int text_x = 0;
  std::vector<std::string> lines;
};

std::vector<LegendRow> legend_layout(const PartDecomposition& parts,
                                     const CanvasConfig& canvas);

/// Left: color legend, one row per part. Right: recolor_render. Output is
/// 2 * canvas.width wide with no gap between panels.
Bitmap diagnostic_panel(const PartDecomposition& parts,
                        const PathAssignment& assignment, const Sketch& sketch,
                        const Palette& palette = Palette::standard());

/// Draws ASCII text with the embedded 8x12 font; returns the pen advance.
int draw_text(Bitmap& target, int x, int y, const std::string& text,
              const Rgb& color, int scale);

/// Standard PNG (8-bit, filter 0, zlib-deflated).
std::string encode_png(const Bitmap& bitmap);

/// Decodes the PNG subset produced by encode_png.
Bitmap decode_png(const std::string& bytes);

Bitmap to_gray(const Bitmap& bitmap);

}  // namespace partsketch::raster

#endif  // PARTSKETCH_RASTER_HPP_
