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

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <set>

#include "partsketch/partdata.hpp"
#include "partsketch/raster.hpp"
#include "partsketch/util.hpp"
#include "support/oracles.hpp"

namespace partsketch {
namespace {

using testing::three_part_record;

std::set<std::string> codes(const AnnotatedSketch& a) {
  std::set<std::string> out;
  for (const auto& v : validate_annotation(a)) out.insert(v.code);
  return out;
}

TEST(Labels, ParseAndFormat) {
  EXPECT_EQ(part_label(3), "Part3");
  EXPECT_EQ(path_label(12), "Path12");
  EXPECT_EQ(parse_indexed_label("Part7", "Part"), 7);
  EXPECT_FALSE(parse_indexed_label("Part0", "Part").has_value());
  EXPECT_FALSE(parse_indexed_label("Part", "Part").has_value());
  EXPECT_FALSE(parse_indexed_label("Path1", "Part").has_value());
  EXPECT_FALSE(parse_indexed_label("Part1x", "Part").has_value());
}

TEST(ValidateAnnotation, WellFormedRecord) { EXPECT_TRUE(validate_annotation(three_part_record()).empty()); }

TEST(ValidateAnnotation, PartWithoutPaths) {
  auto a = three_part_record();
  a.assignment.part_of_path[3] = 1;
  a.assignment.part_of_path[4] = 3;
  EXPECT_EQ(codes(a), std::set<std::string>{"surjectivity"});
}

TEST(ValidateAnnotation, SixParts) {
  auto a = three_part_record();
  a.parts = make_parts({"a", "b", "c", "d", "e", "f"});
  EXPECT_TRUE(codes(a).count("part-count"));
}

TEST(ValidateAnnotation, OnePart) {
  auto a = three_part_record();
  a.parts = make_parts({"everything"});
  for (auto& [path, part] : a.assignment.part_of_path) part = 1;
  EXPECT_EQ(codes(a), std::set<std::string>{"part-count"});
}

TEST(ValidateAnnotation, MissingPathIsTotality) {
  auto a = three_part_record();
  a.assignment.part_of_path.erase(6);
  EXPECT_TRUE(codes(a).count("totality"));
}

TEST(ValidateAnnotation, UnknownPartLabel) {
  auto a = three_part_record();
  a.assignment.part_of_path[6] = 4;
  EXPECT_TRUE(codes(a).count("unknown-part"));
}

TEST(ValidateAnnotation, LabelGap) {
  auto a = three_part_record();
  a.parts[2].label = "Part4";
  EXPECT_TRUE(codes(a).count("label-contiguity"));
}

TEST(ValidateAnnotation, CaptionLength) {
  auto a = three_part_record();
  a.caption.clear();
  for (int i = 0; i < 25; ++i) a.caption += "word ";
  EXPECT_TRUE(validate_annotation(a).empty());
  a.caption += "extra";
  EXPECT_EQ(codes(a), std::set<std::string>{"caption-length"});
}

TEST(ValidateAnnotation, EmptyDescription) {
  auto a = three_part_record();
  a.parts[1].description = "  ";
  EXPECT_TRUE(codes(a).count("empty-description"));
}

TEST(CountWords, WhitespaceTokens) {
  EXPECT_EQ(count_words(""), 0);
  EXPECT_EQ(count_words("  a  dog\tfacing\nleft "), 4);
}

std::set<int> path_set(const AnnotatedSketch& a, const std::vector<std::string>& order, int t) {
  const auto idx = partial_path_indices(a, order, t);
  return {idx.begin(), idx.end()};
}

TEST(AssemblePartialGt, Boundaries) {
  const auto a = three_part_record();
  const std::vector<std::string> order = {"Part1", "Part2", "Part3"};
  EXPECT_TRUE(assemble_partial_gt(a, order, 0).paths.empty());
  EXPECT_EQ(assemble_partial_gt(a, order, 3).paths, a.sketch.paths);
  EXPECT_EQ(assemble_partial_gt(a, order, 3).canvas, a.sketch.canvas);
}

TEST(AssemblePartialGt, UnionOfFirstParts) {
  const auto a = three_part_record();
  const std::vector<std::string> order = {"Part3", "Part1", "Part2"};
  const Sketch s = assemble_partial_gt(a, order, 2);
  // Part3 holds paths 5, 6 and Part1 holds 1, 2; original order kept.
  const StrokeSequence expected = {a.sketch.paths[0], a.sketch.paths[1], a.sketch.paths[4], a.sketch.paths[5]};
  EXPECT_EQ(s.paths, expected);
}

TEST(AssemblePartialGt, MonotoneInT) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = testing::random_record(rng, static_cast<int>(rng.uniform_int(2, 5)), 4);
    std::vector<std::string> order;
    for (const auto& p : a.parts) order.push_back(p.label);
    std::shuffle(order.begin(), order.end(), rng);
    for (int t = 0; t < static_cast<int>(order.size()); ++t) {
      const auto lo = path_set(a, order, t), hi = path_set(a, order, t + 1);
      EXPECT_TRUE(std::includes(hi.begin(), hi.end(), lo.begin(), lo.end()));
    }
    EXPECT_EQ(path_set(a, order, static_cast<int>(order.size())).size(), a.sketch.paths.size());
  }
}

TEST(AssemblePartialGt, RejectsNonPermutation) {
  const auto a = three_part_record();
  EXPECT_THROW(assemble_partial_gt(a, {"Part1", "Part1", "Part2"}, 1), OrderError);
  EXPECT_THROW(assemble_partial_gt(a, {"Part1", "Part2"}, 1), OrderError);
  EXPECT_THROW(assemble_partial_gt(a, {"Part1", "Part2", "Part9"}, 1), OrderError);
}

TEST(SamplePermutations, DistinctAndDeterministic) {
  const auto a = testing::random_record(*std::make_unique<Rng>(1), 5, 3);
  const auto perms = sample_permutations(a, 20, 42);
  EXPECT_EQ(perms.size(), 20u);
  EXPECT_EQ(std::set<std::vector<std::string>>(perms.begin(), perms.end()).size(), 20u);
  EXPECT_EQ(perms, sample_permutations(a, 20, 42));
  EXPECT_NE(perms, sample_permutations(a, 20, 43));
}

TEST(SamplePermutations, CappedByFactorial) {
  Rng rng(2);
  const auto a3 = testing::random_record(rng, 3, 1);
  EXPECT_EQ(sample_permutations(a3, 20, 0).size(), 6u);
  EXPECT_EQ(sample_permutations(a3, 4, 0).size(), 4u);
}

TEST(PermuteAugment, TwoPartRecordGivesFourExamples) {
  Rng rng(3);
  EXPECT_EQ(permute_augment(testing::random_record(rng, 2, 2), 20, 0).size(), 4u);
}

TEST(PermuteAugment, FivePartRecordGivesHundredExamples) {
  Rng rng(4);
  EXPECT_EQ(permute_augment(testing::random_record(rng, 5, 2), 20, 0).size(), 100u);
}

TEST(PermuteAugment, TurnContents) {
  const auto a = three_part_record();
  const auto examples = permute_augment(a, 20, 5);
  ASSERT_EQ(examples.size(), 18u);
  const raster::Bitmap blank = raster::rasterize(Sketch{{}, a.sketch.canvas});
  for (std::size_t i = 0; i < examples.size(); i += 3) {
    const auto& order = examples[i].order;
    std::multiset<std::array<int, 8>> targets;
    for (int t = 1; t <= 3; ++t) {
      const auto& ex = examples[i + static_cast<std::size_t>(t) - 1];
      EXPECT_EQ(ex.turn, t);
      EXPECT_EQ(ex.order, order);
      EXPECT_EQ(ex.caption, a.caption);
      EXPECT_EQ(ex.remaining_after, 3 - t);
      EXPECT_EQ(ex.next_part.label, order[static_cast<std::size_t>(t) - 1]);
      EXPECT_EQ(ex.drawn_parts.size(), static_cast<std::size_t>(t) - 1);
      EXPECT_FALSE(ex.target.empty());
      EXPECT_EQ(ex.canvas_render, raster::rasterize(assemble_partial_gt(a, order, t - 1)));
      if (t == 1) {
        EXPECT_EQ(ex.canvas_render, blank);
      }
      for (const auto& s : ex.target) targets.insert(s.coords());
    }
    std::multiset<std::array<int, 8>> all;
    for (const auto& s : a.sketch.paths) all.insert(s.coords());
    EXPECT_EQ(targets, all);
  }
}

TEST(PermuteAugment, InvalidRecordRejected) {
  auto a = three_part_record();
  a.assignment.part_of_path.erase(1);
  EXPECT_THROW(permute_augment(a, 20, 0), ValidationError);
}

TEST(RecordSerialization, RoundTrip) {
  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    const auto a = testing::random_record(rng, static_cast<int>(rng.uniform_int(2, 5)), 5);
    EXPECT_EQ(deserialize_record(serialize_record(a)), a);
  }
}

TEST(RecordSerialization, DocumentedShape) {
  const auto j = nlohmann::json::parse(serialize_record(three_part_record()));
  EXPECT_EQ(j["id"], "dog");
  EXPECT_EQ(j["canvas"]["width"], 512);
  EXPECT_EQ(j["paths"][0], "M 100 100 C 120 80 160 80 180 100");
  EXPECT_EQ(j["parts"][2]["label"], "Part3");
  EXPECT_EQ(j["assignment"]["Path6"], "Part3");
}

TEST(RecordSerialization, TruncatedInput) {
  const std::string bytes = serialize_record(three_part_record());
  EXPECT_THROW(deserialize_record(bytes.substr(0, bytes.size() / 2)), DecodeError);
}

TEST(RecordSerialization, InvariantViolation) {
  auto j = nlohmann::json::parse(serialize_record(three_part_record()));
  j["assignment"]["Path3"] = "Part1";
  j["assignment"]["Path4"] = "Part1";
  try {
    deserialize_record(j.dump());
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_NE(std::string(e.what()).find("surjectivity"), std::string::npos);
  }
}

TEST(LoadRecords, JsonLinesAndArrays) {
  const auto dir = std::filesystem::temp_directory_path() / "partsketch_load_records";
  std::filesystem::create_directories(dir);
  const auto a = three_part_record();
  auto b = a;
  b.id = "other";
  write_file((dir / "one.json").string(), serialize_record(a));
  write_file((dir / "many.jsonl").string(), serialize_record(a) + "\n\n" + serialize_record(b) + "\n");
  write_file((dir / "arr.json").string(), "[" + serialize_record(a) + "," + serialize_record(b) + "]");
  EXPECT_EQ(load_records((dir / "one.json").string()), std::vector<AnnotatedSketch>{a});
  EXPECT_EQ(load_records((dir / "many.jsonl").string()), (std::vector<AnnotatedSketch>{a, b}));
  EXPECT_EQ(load_records((dir / "arr.json").string()), (std::vector<AnnotatedSketch>{a, b}));
  std::filesystem::remove_all(dir);
}

TEST(TurnExampleJson, RoundedTargetsAndEmbeddedCanvas) {
  const auto a = three_part_record();
  const auto ex = permute_augment(a, 1, 0).at(1);
  const auto j = nlohmann::json::parse(turn_example_json(ex, a.id, Rounding::kNearestTen));
  const std::string target = j["target"];
  EXPECT_EQ(target, emit_strokes(ex.target, Rounding::kNearestTen));
  const std::string png = base64_decode(j["canvas_png_base64"].get<std::string>());
  EXPECT_EQ(raster::decode_png(png), ex.canvas_render);
  EXPECT_EQ(j["remaining_after"], 1);
}

}  // namespace
}  // namespace partsketch
