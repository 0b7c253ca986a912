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

#include "partsketch/raster.hpp"

#include <algorithm>
#include <cmath>

namespace partsketch::raster {
namespace {

using Eigen::Vector2d;

constexpr int kMaxSubdivisionDepth = 16;

Vector2d to_vec(const Point& p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }

double dist2_to_segment(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
  const Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - a).squaredNorm();
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).squaredNorm();
}

void subdivide(const Vector2d& p0, const Vector2d& c1, const Vector2d& c2,
               const Vector2d& p1, double tol2, int depth, Polyline& out) {
  const double dev = std::max(dist2_to_segment(c1, p0, p1),
                              dist2_to_segment(c2, p0, p1));
  if (dev <= tol2 || depth >= kMaxSubdivisionDepth) {
    out.push_back(p1);
    return;
  }
  const Vector2d p01 = 0.5 * (p0 + c1);
  const Vector2d p12 = 0.5 * (c1 + c2);
  const Vector2d p23 = 0.5 * (c2 + p1);
  const Vector2d p012 = 0.5 * (p01 + p12);
  const Vector2d p123 = 0.5 * (p12 + p23);
  const Vector2d mid = 0.5 * (p012 + p123);
  subdivide(p0, p01, p012, mid, tol2, depth + 1, out);
  subdivide(mid, p123, p23, p1, tol2, depth + 1, out);
}

// Visits every in-canvas pixel whose center is within `radius` of the
// polyline. Pixels may be visited more than once.
template <typename Visit>
void cover_polyline(const Polyline& line, double radius, int width, int height,
                    Visit&& visit) {
  const double r2 = radius * radius;
  auto cover_segment = [&](const Vector2d& a, const Vector2d& b) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - radius - 0.5)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + radius - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - radius - 0.5)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + radius - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vector2d c(x + 0.5, y + 0.5);
        if (dist2_to_segment(c, a, b) <= r2) visit(x, y);
      }
    }
  };
  if (line.size() == 1) {
    cover_segment(line[0], line[0]);
    return;
  }
  for (std::size_t i = 1; i < line.size(); ++i) cover_segment(line[i - 1], line[i]);
}

}  // namespace

Bitmap::Bitmap(int w, int h, Channels ch, std::uint8_t fill)
    : width(w), height(h), channels(ch),
      pixels(static_cast<std::size_t>(w) * h * static_cast<int>(ch), fill) {}

Rgb Bitmap::rgb(int x, int y) const {
  const std::uint8_t* p = at(x, y);
  if (channels == Channels::kGray) return {p[0], p[0], p[0]};
  return {p[0], p[1], p[2]};
}

Palette Palette::standard() {
  return {{{228, 26, 28}, {55, 126, 184}, {77, 175, 74}, {255, 127, 0}, {152, 78, 163}}};
}

const Rgb& Palette::color(int part_number) const {
  if (part_number < 1 || part_number > static_cast<int>(colors.size())) {
    throw AssignmentError("no palette color for part " + std::to_string(part_number));
  }
  return colors[static_cast<std::size_t>(part_number - 1)];
}

Eigen::Vector2d eval_cubic(const CubicStroke& s, double t) {
  const double u = 1.0 - t;
  return u * u * u * to_vec(s.p0) + 3.0 * u * u * t * to_vec(s.c1) +
         3.0 * u * t * t * to_vec(s.c2) + t * t * t * to_vec(s.p1);
}

Polyline flatten_cubic(const CubicStroke& stroke, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  Polyline out;
  const Vector2d p0 = to_vec(stroke.p0);
  out.push_back(p0);
  if (stroke.p0 == stroke.c1 && stroke.c1 == stroke.c2 && stroke.c2 == stroke.p1) {
    return out;
  }
  subdivide(p0, to_vec(stroke.c1), to_vec(stroke.c2), to_vec(stroke.p1),
            tolerance * tolerance, 0, out);
  return out;
}

void draw_strokes(Bitmap& target, const StrokeSequence& strokes,
                  double stroke_width, const Rgb& ink) {
  const double radius = 0.5 * stroke_width;
  const int channels = target.channel_count();
  for (const auto& stroke : strokes) {
    cover_polyline(flatten_cubic(stroke), radius, target.width, target.height,
                   [&](int x, int y) {
                     std::uint8_t* p = target.at(x, y);
                     if (channels == 1) {
                       p[0] = ink[0];
                     } else {
                       p[0] = ink[0];
                       p[1] = ink[1];
                       p[2] = ink[2];
                     }
                   });
  }
}

Bitmap rasterize(const Sketch& sketch) {
  sketch.canvas.check();
  Bitmap out(sketch.canvas.width, sketch.canvas.height, Bitmap::Channels::kGray,
             sketch.canvas.background);
  draw_strokes(out, sketch.paths, sketch.canvas.stroke_width, {0, 0, 0});
  return out;
}

Bitmap recolor_render(const Sketch& sketch, const PathAssignment& assignment,
                      const Palette& palette) {
  sketch.canvas.check();
  const std::uint8_t bg = sketch.canvas.background;
  Bitmap out(sketch.canvas.width, sketch.canvas.height, Bitmap::Channels::kRgb, bg);
  for (std::size_t i = 0; i < sketch.paths.size(); ++i) {
    const int path_number = static_cast<int>(i) + 1;
    auto it = assignment.part_of_path.find(path_number);
    if (it == assignment.part_of_path.end()) {
      throw AssignmentError("assignment is missing " + path_label(path_number));
    }
    draw_strokes(out, {sketch.paths[i]}, sketch.canvas.stroke_width,
                 palette.color(it->second));
  }
  return out;
}

Bitmap to_gray(const Bitmap& bitmap) {
  if (bitmap.channels == Bitmap::Channels::kGray) return bitmap;
  Bitmap out(bitmap.width, bitmap.height, Bitmap::Channels::kGray);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const unsigned sum = bitmap.pixels[3 * i] + bitmap.pixels[3 * i + 1] +
                         bitmap.pixels[3 * i + 2];
    out.pixels[i] = static_cast<std::uint8_t>((sum + 1) / 3);
  }
  return out;
}

}  // namespace partsketch::raster
