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

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <charconv>
#include <cmath>
#include <sstream>

#include "partsketch/stroke.hpp"

namespace partsketch {
namespace {

namespace pt = boost::property_tree;

// Splits path data into command letters and numbers. Separators are
// whitespace and commas; numbers may abut letters ("M0 0C1 1 2 2 3 3").
struct PathToken {
  char command = 0;  // nonzero for a command letter
  double number = 0.0;
};

std::vector<PathToken> tokenize_path(const std::string& d) {
  std::vector<PathToken> out;
  std::size_t i = 0;
  while (i < d.size()) {
    const char ch = d[i];
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) && ch != 'e' && ch != 'E') {
      out.push_back({ch, 0.0});
      ++i;
      continue;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(d.data() + i, d.data() + d.size(), value);
    if (ec != std::errc() || ptr == d.data() + i) {
      throw SvgError(SvgError::Kind::kUnsupportedCommand,
                     "unparseable path data near '" + d.substr(i, 8) + "'");
    }
    out.push_back({0, value});
    i = static_cast<std::size_t>(ptr - d.data());
  }
  return out;
}

int to_int(double v) { return static_cast<int>(std::lround(v)); }

void append_path_strokes(const std::string& d, StrokeSequence& out) {
  const auto tokens = tokenize_path(d);
  std::size_t i = 0;
  auto take_number = [&](const char* ctx) {
    if (i >= tokens.size() || tokens[i].command != 0) {
      throw SvgError(SvgError::Kind::kUnsupportedCommand,
                     std::string("missing coordinate after ") + ctx);
    }
    return tokens[i++].number;
  };
  std::optional<Point> current;
  while (i < tokens.size()) {
    const char cmd = tokens[i].command;
    if (cmd == 0) {
      throw SvgError(SvgError::Kind::kUnsupportedCommand,
                     "path data must start with a command letter");
    }
    ++i;
    if (cmd == 'M') {
      const int x = to_int(take_number("M"));
      const int y = to_int(take_number("M"));
      current = Point{x, y};
    } else if (cmd == 'C') {
      if (!current) {
        throw SvgError(SvgError::Kind::kUnsupportedCommand, "C without M");
      }
      // Repeated coordinate triples continue the curve from the last end.
      do {
        std::array<int, 6> v{};
        for (int& c : v) c = to_int(take_number("C"));
        CubicStroke s{*current, {v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}};
        out.push_back(s);
        current = s.p1;
      } while (i < tokens.size() && tokens[i].command == 0);
    } else {
      throw SvgError(SvgError::Kind::kUnsupportedCommand,
                     std::string("unsupported path command '") + cmd + "'");
    }
  }
}

std::optional<double> parse_length(const std::string& s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr == s.data()) return std::nullopt;
  const std::string unit(ptr, s.data() + s.size());
  if (!unit.empty() && unit != "px") return std::nullopt;
  return value;
}

void walk(const pt::ptree& node, StrokeSequence& out) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>" || name == "title" ||
        name == "desc" || name == "metadata" || name == "defs") {
      continue;
    }
    if (name == "path") {
      append_path_strokes(child.get<std::string>("<xmlattr>.d", ""), out);
    } else if (name == "g" || name == "svg") {
      walk(child, out);
    } else {
      throw SvgError(SvgError::Kind::kUnsupportedElement,
                     "unsupported SVG element <" + name + ">");
    }
  }
}

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Sketch import_svg(std::string_view svg_text, const CanvasConfig& base) {
  pt::ptree tree;
  std::istringstream in{std::string(svg_text)};
  try {
    pt::read_xml(in, tree, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw SvgError(SvgError::Kind::kMalformedXml, e.what());
  }
  auto root = tree.get_child_optional("svg");
  if (!root) {
    throw SvgError(SvgError::Kind::kMalformedXml, "missing <svg> root element");
  }
  Sketch sketch;
  sketch.canvas = base;
  const auto w = parse_length(root->get<std::string>("<xmlattr>.width", ""));
  const auto h = parse_length(root->get<std::string>("<xmlattr>.height", ""));
  if (w && h && *w > 0 && *h > 0) {
    sketch.canvas.width = static_cast<int>(std::lround(*w));
    sketch.canvas.height = static_cast<int>(std::lround(*h));
  } else if (auto vb = root->get_optional<std::string>("<xmlattr>.viewBox")) {
    std::istringstream vbs(*vb);
    double x0 = 0, y0 = 0, vw = 0, vh = 0;
    if (vbs >> x0 >> y0 >> vw >> vh && vw > 0 && vh > 0) {
      sketch.canvas.width = static_cast<int>(std::lround(vw));
      sketch.canvas.height = static_cast<int>(std::lround(vh));
    }
  }
  walk(*root, sketch.paths);
  return sketch;
}

std::string export_svg(const Sketch& sketch) {
  const auto& c = sketch.canvas;
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(c.width) + "\" height=\"" + std::to_string(c.height) +
         "\" viewBox=\"0 0 " + std::to_string(c.width) + " " +
         std::to_string(c.height) + "\">\n";
  out += "<g fill=\"none\" stroke=\"black\" stroke-width=\"" +
         format_real(c.stroke_width) +
         "\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n";
  for (const auto& stroke : sketch.paths) {
    out += "<path d=\"" + emit_stroke(stroke) + "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace partsketch
