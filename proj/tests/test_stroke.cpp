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

#include <gtest/gtest.h>

#include "partsketch/rng.hpp"
#include "partsketch/stroke.hpp"
#include "support/oracles.hpp"

namespace partsketch {
namespace {

using testing::kTwoStrokeExample;

TEST(ParseStrokes, TwoStrokeExample) {
  const auto seq = parse_strokes(kTwoStrokeExample);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0].p0, (Point{212, 146}));
  EXPECT_EQ(seq[0].c1, (Point{6, 89}));
  EXPECT_EQ(seq[0].p1, (Point{322, 14}));
  EXPECT_EQ(seq[1].p1, (Point{218, 32}));
}

TEST(ParseStrokes, EmptyInputIsEmptySequence) { EXPECT_TRUE(parse_strokes("").empty()); }

TEST(ParseStrokes, MissingFinalNewlineTolerated) {
  EXPECT_EQ(parse_strokes("M 1 2 C 3 4 5 6 7 8").size(), 1u);
}

TEST(ParseStrokes, MultipleSpacesAndNegatives) {
  const auto seq = parse_strokes("M  -5 2   C 3 4 5 6 7 -800\n");
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq[0].p0.x, -5);
  EXPECT_EQ(seq[0].p1.y, -800);
}

TEST(ParseStrokes, ShortLineIsBadArity) {
  try {
    parse_strokes("M 10 10 C 1 2 3\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.verdict(), FormatVerdict::fail(FormatErrorKind::kBadArity, 1));
  }
}

TEST(ParseStrokes, AllOrNothing) {
  EXPECT_THROW(parse_strokes("M 1 2 C 3 4 5 6 7 8\nM 1 2 C 3 4 5 6 7\n"), FormatError);
}

TEST(EmitStrokes, ReproducesExampleByteForByte) {
  EXPECT_EQ(emit_strokes(parse_strokes(kTwoStrokeExample)), kTwoStrokeExample);
}

TEST(EmitStrokes, ZeroStrokeRoundedToTen) {
  EXPECT_EQ(emit_strokes({CubicStroke{}}, Rounding::kNearestTen), "M 0 0 C 0 0 0 0 0 0\n");
}

TEST(EmitStrokes, RoundsToNearestTen) {
  const auto line = emit_stroke(testing::stroke(212, 146, 6, 89, 303, 88, 322, 14), Rounding::kNearestTen);
  EXPECT_EQ(line, "M 210 150 C 10 90 300 90 320 10");
}

TEST(RoundToTen, TiesAwayFromZero) {
  EXPECT_EQ(round_to_ten(5), 10);
  EXPECT_EQ(round_to_ten(15), 20);
  EXPECT_EQ(round_to_ten(-5), -10);
  EXPECT_EQ(round_to_ten(-14), -10);
  EXPECT_EQ(round_to_ten(4), 0);
}

TEST(EmitStrokes, RoundingIsIdempotent) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    StrokeSequence seq{testing::random_stroke(rng, -1000, 1000)};
    const auto once = emit_strokes(seq, Rounding::kNearestTen);
    EXPECT_EQ(emit_strokes(parse_strokes(once), Rounding::kNearestTen), once);
  }
}

TEST(StrokeRoundTrip, RandomSequences) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    StrokeSequence seq;
    const int n = static_cast<int>(rng.uniform_int(0, 8));
    for (int k = 0; k < n; ++k) seq.push_back(testing::random_stroke(rng, -100000, 100000));
    ASSERT_EQ(parse_strokes(emit_strokes(seq)), seq);
  }
}

TEST(VerifyResponse, Examples) {
  EXPECT_TRUE(verify_response(kTwoStrokeExample).valid);
  EXPECT_EQ(verify_response("hello"), FormatVerdict::fail(FormatErrorKind::kBadCommandLetter, 1));
  EXPECT_EQ(verify_response(""), FormatVerdict::fail(FormatErrorKind::kEmptyLine, 1));
}

TEST(VerifyResponse, VerdictFieldsPresentExactlyWhenInvalid) {
  const auto ok = verify_response(kTwoStrokeExample);
  EXPECT_FALSE(ok.error_kind.has_value());
  EXPECT_FALSE(ok.line_index.has_value());
  const auto bad = verify_response("M 1 2 C 3 4 5 6 7 8\nM 1 2 C 3 4 5 6 7 8 9\n");
  EXPECT_EQ(bad, FormatVerdict::fail(FormatErrorKind::kTrailingGarbage, 2));
}

TEST(VerifyResponse, OutOfCanvasCoordinatesAreLegal) {
  EXPECT_TRUE(verify_response("M -40 9000 C 0 0 0 0 600 600\n").valid);
}

TEST(VerifyResponse, AgreesWithParserOnGeneratedText) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::string text = rng.uniform_int(0, 1) ? testing::random_valid_response(rng) : testing::corrupt(rng).text;
    bool parsed_nonempty = false;
    try {
      parsed_nonempty = !parse_strokes(text).empty();
    } catch (const FormatError&) {
    }
    EXPECT_EQ(verify_response(text).valid, parsed_nonempty) << text;
  }
}

TEST(VerifyResponse, CorruptionKinds) {
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto c = testing::corrupt(rng);
    EXPECT_EQ(verify_response(c.text), FormatVerdict::fail(c.kind, c.line)) << c.text;
  }
}

TEST(ImportSvg, MinimalDocument) {
  const auto s = import_svg(R"(<svg xmlns="http://www.w3.org/2000/svg"><path d="M 0 0 C 1 1 2 2 3 3"/></svg>)");
  ASSERT_EQ(s.paths.size(), 1u);
  EXPECT_EQ(s.paths[0], testing::stroke(0, 0, 1, 1, 2, 2, 3, 3));
}

TEST(ImportSvg, CanvasFromRootAttributes) {
  const auto s = import_svg(R"(<svg width="256" height="128" stroke-width="9"><path d="M 0 0 C 1 1 2 2 3 3"/></svg>)");
  EXPECT_EQ(s.canvas.width, 256);
  EXPECT_EQ(s.canvas.height, 128);
  EXPECT_EQ(s.canvas.stroke_width, CanvasConfig{}.stroke_width);
}

TEST(ImportSvg, MultipleSegmentsPerPath) {
  const auto s = import_svg(R"(<svg><path d="M 0 0 C 1 1 2 2 3 3 M 9 9 C 8 8 7 7 6 6"/><path d="M1,2C3,4,5,6,7,8"/></svg>)");
  ASSERT_EQ(s.paths.size(), 3u);
  EXPECT_EQ(s.paths[2], testing::stroke(1, 2, 3, 4, 5, 6, 7, 8));
}

TEST(ImportSvg, LineCommandRejected) {
  try {
    import_svg(R"(<svg><path d="M 0 0 L 5 5"/></svg>)");
    FAIL();
  } catch (const SvgError& e) {
    EXPECT_EQ(e.kind(), SvgError::Kind::kUnsupportedCommand);
  }
}

TEST(ImportSvg, MalformedXmlRejected) {
  try {
    import_svg("<svg><path d=\"M 0 0 C 1 1 2 2 3 3\"></svg");
    FAIL();
  } catch (const SvgError& e) {
    EXPECT_EQ(e.kind(), SvgError::Kind::kMalformedXml);
  }
}

TEST(ExportSvg, EmptySketchHasNoPaths) {
  EXPECT_EQ(export_svg(Sketch{}).find("<path"), std::string::npos);
}

TEST(ExportSvg, RoundTripAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Sketch s = random_sketch(seed);
    const std::string svg = export_svg(s);
    EXPECT_EQ(svg, export_svg(s));
    EXPECT_EQ(import_svg(svg).paths, s.paths);
  }
}

TEST(RandomSketch, RangesAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Sketch s = random_sketch(seed);
    EXPECT_LE(s.paths.size(), 32u);
    for (const auto& p : s.paths) {
      for (int c : p.coords()) {
        EXPECT_GE(c, 0);
        EXPECT_LE(c, 512);
      }
    }
    EXPECT_EQ(s, random_sketch(seed));
  }
}

TEST(RandomSketch, MeanStrokeCount) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) total += random_sketch(seed).paths.size();
  EXPECT_NEAR(total / 10000.0, 16.0, 1.0);
}

TEST(Rng, SplitMix64ReferenceStream) {
  Rng rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}

TEST(RandomSketch, FollowsDocumentedDrawOrder) {
  // Stroke count first, then eight coordinates per stroke, each an unbiased
  // bounded draw from the SplitMix64 stream.
  auto bounded = [](std::uint64_t& state, std::uint64_t span) {
    const std::uint64_t max = ~0ULL;
    const std::uint64_t limit = max - (max % span + 1) % span;
    while (true) {
      std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      z ^= z >> 31;
      if (z <= limit) return z % span;
    }
  };
  for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
    std::uint64_t state = seed;
    const auto count = bounded(state, 33);
    std::string expected;
    for (std::uint64_t i = 0; i < count; ++i) {
      std::array<int, 8> v{};
      for (int& c : v) c = static_cast<int>(bounded(state, 513));
      expected += testing::stroke_line(v) + "\n";
    }
    EXPECT_EQ(emit_strokes(random_sketch(seed).paths), expected);
  }
}

TEST(CanvasConfig, RejectsNonPositive) {
  EXPECT_THROW((CanvasConfig{0, 5}.check()), std::invalid_argument);
  EXPECT_THROW((CanvasConfig{5, 5, 0.0}.check()), std::invalid_argument);
  EXPECT_NO_THROW(CanvasConfig{}.check());
}

}  // namespace
}  // namespace partsketch
