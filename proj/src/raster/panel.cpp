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

#include <algorithm>
#include <sstream>

#include "partsketch/raster.hpp"

namespace partsketch::raster {
namespace {

constexpr int kGlyphWidth = 8;
constexpr int kGlyphHeight = 12;
constexpr std::uint8_t kFont[95][kGlyphHeight] = {
#include "font_8x12.inc"
};

struct LegendMetrics {
  int scale, margin, marker, text_x, line_height, row_gap;
};

LegendMetrics metrics_for(const CanvasConfig& canvas) {
  const int s = std::max(1, canvas.width / 256);
  return {s, 8 * s, 12 * s, 8 * s + 12 * s + 8 * s, 14 * s, 6 * s};
}

std::vector<std::string> wrap(const std::string& text, int max_chars) {
  max_chars = std::max(1, max_chars);
  std::vector<std::string> lines;
  std::istringstream words(text);
  std::string word, line;
  while (words >> word) {
    while (static_cast<int>(word.size()) > max_chars) {
      if (!line.empty()) {
        lines.push_back(line);
        line.clear();
      }
      lines.push_back(word.substr(0, static_cast<std::size_t>(max_chars)));
      word.erase(0, static_cast<std::size_t>(max_chars));
    }
    if (line.empty()) {
      line = word;
    } else if (static_cast<int>(line.size() + 1 + word.size()) <= max_chars) {
      line += ' ' + word;
    } else {
      lines.push_back(line);
      line = word;
    }
  }
  if (!line.empty() || lines.empty()) lines.push_back(line);
  return lines;
}

void fill_rect(Bitmap& bmp, int x0, int y0, int w, int h, const Rgb& color) {
  for (int y = std::max(0, y0); y < std::min(bmp.height, y0 + h); ++y) {
    for (int x = std::max(0, x0); x < std::min(bmp.width, x0 + w); ++x) {
      std::uint8_t* p = bmp.at(x, y);
      for (int c = 0; c < bmp.channel_count(); ++c) p[c] = color[static_cast<std::size_t>(c)];
    }
  }
}

}  // namespace

int draw_text(Bitmap& target, int x, int y, const std::string& text,
              const Rgb& color, int scale) {
  int pen = x;
  for (const char raw : text) {
    unsigned char ch = static_cast<unsigned char>(raw);
    if (ch < 0x20 || ch > 0x7e) ch = '?';
    const auto& glyph = kFont[ch - 0x20];
    for (int row = 0; row < kGlyphHeight; ++row) {
      for (int col = 0; col < kGlyphWidth; ++col) {
        if (glyph[row] & (0x80 >> col)) {
          fill_rect(target, pen + col * scale, y + row * scale, scale, scale, color);
        }
      }
    }
    pen += kGlyphWidth * scale;
  }
  return pen - x;
}

std::vector<LegendRow> legend_layout(const PartDecomposition& parts,
                                     const CanvasConfig& canvas) {
  const LegendMetrics m = metrics_for(canvas);
  const int max_chars = (canvas.width - m.text_x - m.margin) / (kGlyphWidth * m.scale);
  std::vector<LegendRow> rows;
  int top = m.margin;
  for (const auto& part : parts) {
    LegendRow row;
    row.top = top;
    row.marker_x = m.margin;
    row.marker_y = top;
    row.marker_size = m.marker;
    row.text_x = m.text_x;
    row.lines = wrap(part.label + ": " + part.description, max_chars);
    row.height = std::max(m.marker, static_cast<int>(row.lines.size()) * m.line_height);
    top += row.height + m.row_gap;
    rows.push_back(std::move(row));
  }
  return rows;
}

Bitmap diagnostic_panel(const PartDecomposition& parts,
                        const PathAssignment& assignment, const Sketch& sketch,
                        const Palette& palette) {
  const Bitmap right = recolor_render(sketch, assignment, palette);
  const int w = sketch.canvas.width;
  const int h = sketch.canvas.height;
  Bitmap out(2 * w, h, Bitmap::Channels::kRgb, sketch.canvas.background);

  const LegendMetrics m = metrics_for(sketch.canvas);
  const auto rows = legend_layout(parts, sketch.canvas);
  // The legend is drawn into its own panel so long text cannot spill into
  // the sketch half.
  Bitmap left(w, h, Bitmap::Channels::kRgb, sketch.canvas.background);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Rgb& color = palette.color(static_cast<int>(k) + 1);
    const auto& row = rows[k];
    fill_rect(left, row.marker_x, row.marker_y, row.marker_size, row.marker_size, color);
    int y = row.top;
    for (const auto& line : row.lines) {
      draw_text(left, row.text_x, y, line, color, m.scale);
      y += m.line_height;
    }
  }
  for (int y = 0; y < h; ++y) {
    std::copy_n(left.at(0, y), 3 * w, out.at(0, y));
    std::copy_n(right.at(0, y), 3 * w, out.at(w, y));
  }
  return out;
}

}  // namespace partsketch::raster
