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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "partsketch/annopipe.hpp"
#include "partsketch/grpo.hpp"
#include "partsketch/json_schema.hpp"
#include "partsketch/partdata.hpp"
#include "partsketch/raster.hpp"
#include "partsketch/rewards.hpp"
#include "partsketch/session.hpp"
#include "partsketch/util.hpp"
#include "support/oracles.hpp"

// After Eigen: resolv.h defines a _res macro that collides with Eigen internals.
#include <httplib.h>

namespace partsketch {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;
using Script = std::map<std::string, std::vector<std::string>>;

// Pinned tolerances.
constexpr int kRoundTrips = 10'000;
constexpr double kRoundTripSeconds = 5.0;
constexpr int kFuzzCases = 1'000;
constexpr int kRasterSketches = 100;
constexpr int kDiagnosticRecords = 50;
constexpr double kDiagnosticHitRate = 0.99;
constexpr double kAnnotationSeconds = 30.0;
constexpr double kRewardTolerance = 1e-9;
constexpr double kNormalizationTolerance = 1e-4;
constexpr double kMomentTolerance = 1e-9;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kGradientRelativeError = 1e-3;
constexpr int kGradientInstances = 20;
constexpr double kKlTolerance = 1e-5;
constexpr int kTrainingSeeds = 5;
constexpr int kTrainingSteps = 500;
constexpr int kGroupSize = 8;
constexpr double kTrainingLambda = 1.0;
constexpr double kTrainingBeta = 0.0;
constexpr double kMinimumImprovement = 0.2;
constexpr double kTrainingMinutes = 15.0;
constexpr const char* kPinnedRasterDigest =
    "18ff8d550fef9ac608f5c612b9d9d663b32eb5bdd91a6789cfd6baa88d760541";

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) detail = why;
    pass = pass && ok;
  }
};

Outcome stroke_round_trip() {
  Outcome o;
  const auto start = Clock::now();
  o.require(emit_strokes(parse_strokes(testing::kTwoStrokeExample)) == testing::kTwoStrokeExample,
            "worked example not reproduced byte-for-byte");
  Rng rng(1);
  int failures = 0;
  for (int i = 0; i < kRoundTrips; ++i) {
    StrokeSequence seq;
    for (int k = 0, n = static_cast<int>(rng.uniform_int(0, 12)); k < n; ++k) {
      seq.push_back(testing::random_stroke(rng, -1000, 1000));
    }
    const std::string text = emit_strokes(seq);
    failures += parse_strokes(text) != seq || emit_strokes(parse_strokes(text)) != text;
  }
  const double secs = seconds_since(start);
  o.require(failures == 0, std::to_string(failures) + " round-trip failures");
  o.require(secs < kRoundTripSeconds, "took " + std::to_string(secs) + " s");
  if (o.pass) {
    o.detail = std::to_string(kRoundTrips) + " random round trips, 0 failures, " +
               std::to_string(secs).substr(0, 5) + " s";
  }
  return o;
}

Outcome verifier_fuzzing() {
  Outcome o;
  Rng rng(2);
  int rejected_valid = 0, misclassified = 0;
  for (int i = 0; i < kFuzzCases; ++i) rejected_valid += !verify_response(testing::random_valid_response(rng)).valid;
  for (int i = 0; i < kFuzzCases; ++i) {
    const auto c = testing::corrupt(rng);
    const FormatVerdict v = verify_response(c.text);
    misclassified += v.valid || v.error_kind != c.kind || v.line_index != c.line;
  }
  o.require(rejected_valid == 0, std::to_string(rejected_valid) + " valid strings rejected");
  o.require(misclassified == 0, std::to_string(misclassified) + " corruptions misclassified");
  if (o.pass) o.detail = "1000 valid accepted, 1000 corruptions rejected with the right kind and line";
  return o;
}

Outcome rasterizer_oracle() {
  Outcome o;
  Rng rng(3);
  int bad_pixels = 0;
  for (int i = 0; i < kRasterSketches; ++i) {
    Sketch sk;
    sk.paths = {testing::random_stroke(rng)};
    const double w = sk.canvas.stroke_width;
    const raster::Bitmap b = raster::rasterize(sk);
    const auto d = testing::distance_field(testing::dense_samples(sk.paths[0]), 512, 512, w / 2 + 1);
    for (int y = 0; y < 512; ++y) {
      for (int x = 0; x < 512; ++x) {
        const bool dark = b.at(x, y)[0] < 128;
        if (dark && !(d(y, x) <= w / 2 + 1)) ++bad_pixels;
        if (!dark && d(y, x) <= std::max(0.0, w / 2 - 1)) ++bad_pixels;
      }
    }
    if (raster::rasterize(sk) != b) o.require(false, "second render differs");
  }
  o.require(bad_pixels == 0, std::to_string(bad_pixels) + " pixels disagree with the distance oracle");
  Rng pinned(2026);
  Sketch s;
  for (int i = 0; i < 12; ++i) s.paths.push_back(testing::random_stroke(pinned, -40, 552));
  const raster::Bitmap b = raster::rasterize(s);
  o.require(sha256_hex(std::string(b.pixels.begin(), b.pixels.end())) == kPinnedRasterDigest,
            "render digest differs from the pinned cross-platform value");
  if (o.pass) o.detail = "100 strokes agree with the distance oracle both ways; runs and pinned digest identical";
  return o;
}

Outcome diagnostic_image() {
  Outcome o;
  Rng rng(4);
  const auto palette = raster::Palette::standard();
  int samples = 0, hits = 0;
  for (int i = 0; i < kDiagnosticRecords; ++i) {
    const auto rec = testing::random_record(rng, static_cast<int>(rng.uniform_int(kMinParts, kMaxParts)),
                                            static_cast<int>(rng.uniform_int(0, 6)));
    const raster::Bitmap panel = raster::diagnostic_panel(rec.parts, rec.assignment, rec.sketch);
    const int w = rec.sketch.canvas.width;
    o.require(panel.width == 2 * w, "panel width is not twice the canvas width");
    for (std::size_t p = 0; p < rec.sketch.paths.size(); ++p) {
      const Eigen::Vector2d mid = testing::bezier_point(rec.sketch.paths[p], 0.5);
      const int x = static_cast<int>(std::floor(mid.x())), y = static_cast<int>(std::floor(mid.y()));
      if (x < 0 || y < 0 || x >= w || y >= rec.sketch.canvas.height) continue;
      ++samples;
      hits += panel.rgb(w + x, y) == palette.color(rec.assignment.part_of_path.at(static_cast<int>(p) + 1));
    }
  }
  for (int width : {64, 256, 300, 512, 1000}) {
    auto rec = testing::three_part_record();
    rec.sketch.canvas.width = width;
    o.require(raster::diagnostic_panel(rec.parts, rec.assignment, rec.sketch).width == 2 * width,
              "panel width is not twice the canvas width at " + std::to_string(width));
  }
  const double rate = samples ? static_cast<double>(hits) / samples : 0.0;
  o.require(rate >= kDiagnosticHitRate, "midpoint color match " + std::to_string(rate));
  if (o.pass) {
    o.detail = std::to_string(hits) + "/" + std::to_string(samples) + " midpoints carry their part color; width 2x";
  }
  return o;
}

const std::string kParts = R"(["round head", "long body", "four legs"])";
const std::string kKeep = R"({"issues": [], "summary": "ok", "should_revise": false})";
const std::string kRevise =
    R"({"issues": [{"type": "granularity", "severity": "high", "reason": "legs merged"}], "summary": "split", "should_revise": true})";
const std::string kAssign =
    R"({"Path1": "Part1", "Path2": "Part1", "Path3": "Part2", "Path4": "Part2", "Path5": "Part3", "Path6": "Part3"})";
const std::string kAssignFour =
    R"({"Path1": "Part1", "Path2": "Part1", "Path3": "Part2", "Path4": "Part2", "Path5": "Part3", "Path6": "Part4"})";

// Every accepted JSON answer validates against the schema its request carried.
bool accepted_outputs_schema_valid(const annopipe::ScriptedClient& client, const annopipe::StageTrace& trace) {
  if (client.requests().size() != trace.size()) return false;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& schema = client.requests()[i].schema;
    if (!trace[i].accepted || schema.is_null()) continue;
    const json answer = json::parse(trace[i].raw_response, nullptr, false);
    if (answer.is_discarded() || schema::validate(schema, answer)) return false;
  }
  return true;
}

Outcome annotation_pipeline() {
  Outcome o;
  const auto start = Clock::now();
  const auto rec = testing::three_part_record();
  annopipe::PipelineConfig cfg;

  annopipe::ScriptedClient plain(Script{{"step1", {kParts}}, {"step2", {kKeep}}, {"step4", {kAssign}},
                                        {"step5", {kKeep}}, {"step7", {"A small dog."}}});
  const auto five = annopipe::annotate_sketch(plain, rec.sketch, cfg, "dog");
  o.require(plain.call_count() == 5 && five.trace.size() == 5, "no-revision run made " +
                                                                 std::to_string(plain.call_count()) + " calls");
  o.require(accepted_outputs_schema_valid(plain, five.trace), "accepted output failed its schema");
  o.require(validate_annotation(five.record).empty(), "no-revision record is invalid");

  annopipe::ScriptedClient revising(Script{
      {"step1", {kParts}},
      {"step2", {kRevise}},
      {"step3", {R"(["round head", "long body", "front legs", "back legs"])"}},
      {"step4", {kAssignFour}},
      {"step5", {kRevise}},
      {"step6", {R"({"Path1": "Part1", "Path2": "Part2", "Path3": "Part2", "Path4": "Part2", "Path5": "Part3", "Path6": "Part4"})"}},
      {"step7", {"A small dog."}}});
  const auto seven = annopipe::annotate_sketch(revising, rec.sketch, cfg, "dog");
  o.require(revising.call_count() == 7 && seven.trace.size() == 7, "revising run made " +
                                                                    std::to_string(revising.call_count()) + " calls");
  o.require(accepted_outputs_schema_valid(revising, seven.trace), "accepted output failed its schema");
  o.require(validate_annotation(seven.record).empty(), "revising record is invalid");

  // Random totality and surjectivity violations in both assignment stages.
  Rng rng(5);
  const raster::Bitmap rendering = raster::rasterize(rec.sketch);
  const auto parts = make_parts({"round head", "long body", "four legs"});
  int wrong = 0;
  for (int i = 0; i < 200; ++i) {
    json bad = json::object();
    const bool drop_path = rng.uniform_int(0, 1) == 0;
    const int skipped_path = static_cast<int>(rng.uniform_int(1, 6));
    const int unused_part = static_cast<int>(rng.uniform_int(1, 3));
    for (int p = 1; p <= 6; ++p) {
      if (drop_path && p == skipped_path) continue;
      int part = static_cast<int>(rng.uniform_int(1, 3));
      if (!drop_path && part == unused_part) part = unused_part % 3 + 1;
      bad[path_label(p)] = part_label(part);
    }
    const std::string expected = drop_path ? "totality" : "surjectivity";
    const bool refine = rng.uniform_int(0, 1) == 1;
    annopipe::ScriptedClient client(Script{{refine ? "step6" : "step4", {bad.dump()}}});
    try {
      if (refine) {
        annopipe::stage6_refine_assignment(client, rendering, rec.sketch, parts, rec.assignment,
                                           annopipe::CritiqueReport{{}, "fix", true}, cfg);
      } else {
        annopipe::stage4_assign(client, rendering, rec.sketch, parts, cfg);
      }
      ++wrong;
    } catch (const annopipe::SchemaError& e) {
      // Totality is checked first, so a dropped path that also leaves a part
      // unused still reports totality.
      wrong += e.code() != expected || client.call_count() != 1 + cfg.max_retries;
    }
    annopipe::ScriptedClient recovering(Script{{"step4", {bad.dump(), kAssign}}});
    const auto fixed = annopipe::stage4_assign(recovering, rendering, rec.sketch, parts, cfg);
    wrong += recovering.call_count() != 2 || fixed != rec.assignment;
  }
  o.require(wrong == 0, std::to_string(wrong) + " violations not handled as retry-then-error");
  const double secs = seconds_since(start);
  o.require(secs < kAnnotationSeconds, "took " + std::to_string(secs) + " s");
  if (o.pass) {
    o.detail = "call counts 5 and 7; outputs schema-valid; 200 violations retried then rejected; " +
               std::to_string(secs).substr(0, 4) + " s, no network";
  }
  return o;
}

Outcome augmentation_counts() {
  Outcome o;
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    for (int parts : {2, 5}) {
      const auto rec = testing::random_record(rng, parts, static_cast<int>(rng.uniform_int(0, 5)));
      const auto examples = permute_augment(rec, 20, static_cast<std::uint64_t>(trial));
      const std::size_t expected = parts == 2 ? 4 : 100;
      o.require(examples.size() == expected, std::to_string(parts) + "-part record gave " +
                                                 std::to_string(examples.size()) + " examples");
      std::map<std::vector<std::string>, std::vector<std::string>> targets;
      for (const auto& ex : examples) {
        for (const auto& s : ex.target) targets[ex.order].push_back(emit_stroke(s));
      }
      std::vector<std::string> all;
      for (const auto& s : rec.sketch.paths) all.push_back(emit_stroke(s));
      std::sort(all.begin(), all.end());
      for (auto& [order, lines] : targets) {
        std::sort(lines.begin(), lines.end());
        o.require(lines == all, "targets of one order do not partition the paths");
      }
    }
  }
  if (o.pass) o.detail = "2 parts -> 4, 5 parts -> 100; every order's targets partition the paths";
  return o;
}

Outcome reward_units() {
  Outcome o;
  using rewards::path_count_reward;
  o.require(path_count_reward(10, 10) == 1.0 && path_count_reward(8, 10) == 0.8 &&
                path_count_reward(0, 10) == 0.0 && path_count_reward(20, 10) == 0.0,
            "path-count examples differ");
  const rewards::BaselineEmbedder embedder;
  const raster::Bitmap gt = raster::rasterize(testing::three_part_record().sketch);
  const double same = rewards::similarity_reward(gt, gt, embedder);
  o.require(std::abs(same - 1.0) <= kRewardTolerance, "self-similarity " + std::to_string(same));
  const raster::Bitmap white(512, 512, raster::Bitmap::Channels::kGray, 255);
  const raster::Bitmap black(512, 512, raster::Bitmap::Channels::kGray, 0);
  const double opposite = rewards::similarity_reward(white, black, embedder);
  o.require(std::abs(opposite + 1.0) <= kRewardTolerance, "white vs black " + std::to_string(opposite));
  if (o.pass) o.detail = "path counts exact; identical 1.0, white vs black -1.0 within 1e-9";
  return o;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.uniform01() - 1.0);
  return m;
}

Outcome normalization_and_advantages() {
  using namespace grpo;
  Outcome o;
  const Eigen::MatrixXd col = (Eigen::MatrixXd(3, 1) << 0.2, 0.4, 0.6).finished();
  const Eigen::MatrixXd a = normalize_per_step(col);
  o.require(std::abs(a(0, 0) + 1.2247) <= kNormalizationTolerance && std::abs(a(1, 0)) <= kNormalizationTolerance &&
                std::abs(a(2, 0) - 1.2247) <= kNormalizationTolerance,
            "column example differs");
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = static_cast<Eigen::Index>(rng.uniform_int(2, 16));
    const auto t = static_cast<Eigen::Index>(rng.uniform_int(1, 6));
    const RewardTensor r = RewardTensor::dense(random_matrix(rng, g, t));
    const Eigen::MatrixXd process = advantages(r, Variant::kProcess);
    for (Eigen::Index c = 0; c < t; ++c) {
      o.require(std::abs(process.col(c).mean()) <= kMomentTolerance &&
                    std::abs(process.col(c).squaredNorm() / static_cast<double>(g) - 1.0) <= kMomentTolerance,
                "process column not standardized");
    }
    const Eigen::MatrixXd outcome = advantages(r, Variant::kOutcome);
    for (Eigen::Index row = 0; row < g; ++row) {
      o.require((outcome.row(row).array() == outcome(row, 0)).all(), "outcome advantages vary within a trajectory");
    }
    const Eigen::MatrixXd z = normalize_global(r.values);
    const Eigen::MatrixXd tail = advantages(r, Variant::kTailSum);
    for (Eigen::Index row = 0; row < g; ++row) {
      o.require(tail(row, t - 1) == z(row, t - 1), "tail-sum last step differs");
      for (Eigen::Index c = 0; c + 1 < t; ++c) {
        o.require(tail(row, c) == tail(row, c + 1) + z(row, c), "tail-sum suffix property broken");
      }
    }
  }
  if (o.pass) o.detail = "{0.2,0.4,0.6} -> +-1.2247; 200 random tensors satisfy every variant's property";
  return o;
}

bool away_from_kinks(const grpo::TrajectoryGroup& group, double eps) {
  for (const auto& traj : group.trajectories) {
    for (const auto& turn : traj.turns) {
      const Eigen::ArrayXd ratio = (turn.logp - turn.logp_old).array().exp();
      if (((ratio - (1 + eps)).abs() < 1e-3).any() || ((ratio - (1 - eps)).abs() < 1e-3).any()) return false;
    }
  }
  return true;
}

Outcome objective_correctness() {
  using namespace grpo;
  Outcome o;
  Rng rng(8);
  double worst = 0.0;
  int instances = 0;
  while (instances < kGradientInstances) {
    ToyStrokePolicy policy(2, 2, 2);
    policy.theta() = random_matrix(rng, policy.theta().rows(), policy.theta().cols(), 1.5);
    GrpoConfig cfg;
    cfg.kl_beta = instances % 2 ? 0.1 : 0.0;
    TrajectoryGroup group;
    group.steps = 2;
    for (int g = 0; g < 2; ++g) {
      Trajectory traj;
      for (int t = 0; t < 2; ++t) {
        traj.turns.push_back(policy.generate({t, 2, PartSpec{}}, rng));
        if (!traj.turns.back().valid) break;
      }
      group.trajectories.push_back(traj);
    }
    const ToyStrokePolicy reference = policy;
    policy.theta() += random_matrix(rng, policy.theta().rows(), policy.theta().cols(), 0.2);
    for (auto& traj : group.trajectories) {
      for (auto& turn : traj.turns) turn.logp_ref = reference.token_log_probs(turn);
    }
    policy.refresh_log_probs(group);
    if (!away_from_kinks(group, cfg.clip_eps)) continue;
    const Eigen::MatrixXd adv = random_matrix(rng, 2, 2);
    const auto res = grpo_objective(group, adv, cfg);
    if (res.turn_count == 0) continue;
    const Eigen::MatrixXd analytic = policy.gradient(group, res.logp_grad);
    Eigen::MatrixXd numeric(analytic.rows(), analytic.cols());
    auto value_at = [&](const ToyStrokePolicy& p) {
      TrajectoryGroup copy = group;
      p.refresh_log_probs(copy);
      return grpo_objective(copy, adv, cfg).value;
    };
    for (Eigen::Index i = 0; i < numeric.size(); ++i) {
      ToyStrokePolicy plus = policy, minus = policy;
      plus.theta().data()[i] += kFiniteDifferenceStep;
      minus.theta().data()[i] -= kFiniteDifferenceStep;
      numeric.data()[i] = (value_at(plus) - value_at(minus)) / (2 * kFiniteDifferenceStep);
    }
    worst = std::max(worst, (analytic - numeric).norm() / std::max(analytic.norm(), 1e-8));
    ++instances;
  }
  o.require(worst <= kGradientRelativeError, "gradient relative error " + std::to_string(worst));

  for (double eps : {0.1, 0.2, 0.3}) {
    for (double adv : {0.5, 1.0, 2.0}) {
      o.require(clipped_surrogate(1 + 2 * eps, adv, eps) == (1 + eps) * adv, "upper clip boundary differs");
      o.require(clipped_surrogate(1 - 2 * eps, -adv, eps) == -(1 - eps) * adv, "lower clip boundary differs");
    }
  }
  o.require(std::abs(kl_estimate(1.0)) <= kKlTolerance && std::abs(kl_estimate(2.0) - 0.30685) <= kKlTolerance &&
                std::abs(kl_estimate(0.5) - 0.19315) <= kKlTolerance,
            "KL estimate values differ");
  if (o.pass) {
    std::ostringstream d;
    d << "worst FD relative error " << worst << " over 20 instances; clip boundaries exact; KL values match";
    o.detail = d.str();
  }
  return o;
}

Outcome training_analogue() {
  using namespace grpo;
  Outcome o;
  const auto start = Clock::now();
  const std::vector<Variant> variants = {Variant::kProcess, Variant::kOutcome, Variant::kSingleTurn};
  struct Run {
    Variant variant;
    std::uint64_t seed;
    double initial = 0, final = 0;
  };
  std::vector<Run> runs;
  for (Variant v : variants) {
    for (int s = 1; s <= kTrainingSeeds; ++s) runs.push_back({v, static_cast<std::uint64_t>(s)});
  }
  const rewards::BaselineEmbedder embedder;
  const std::vector<AnnotatedSketch> corpus = {synthetic_task()};
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < runs.size();) {
      GrpoConfig cfg;
      cfg.variant = runs[i].variant;
      cfg.seed = runs[i].seed;
      cfg.steps_per_iteration = kTrainingSteps;
      cfg.group_size = kGroupSize;
      cfg.lambda = kTrainingLambda;
      cfg.kl_beta = kTrainingBeta;
      ToyStrokePolicy policy;
      const auto log = train_loop(policy, corpus, cfg, embedder);
      runs[i].initial = log.front().mean_reward;
      runs[i].final = log.back().mean_reward;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::max(1u, std::thread::hardware_concurrency()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::map<Variant, double> mean;
  for (const auto& r : runs) {
    mean[r.variant] += r.final / kTrainingSeeds;
    std::cerr << "  " << to_string(r.variant) << " seed " << r.seed << ": " << r.initial << " -> " << r.final << "\n";
    if (r.variant == Variant::kProcess) {
      o.require(r.final - r.initial >= kMinimumImprovement,
                "process seed " + std::to_string(r.seed) + " improved by only " + std::to_string(r.final - r.initial));
    }
  }
  const double p = mean[Variant::kProcess], oc = mean[Variant::kOutcome], st = mean[Variant::kSingleTurn];
  o.require(p >= oc && oc >= st, "seed-averaged ordering violated");
  const double minutes = seconds_since(start) / 60.0;
  o.require(minutes < kTrainingMinutes, "took " + std::to_string(minutes) + " min");
  std::ostringstream d;
  d << "seed means process " << p << " >= outcome " << oc << " >= single-turn " << st << "; "
    << minutes << " min";
  if (o.pass) o.detail = d.str();
  else o.detail += " (" + d.str() + ")";
  return o;
}

std::vector<std::string> sorted_lines(const StrokeSequence& s) {
  std::vector<std::string> out;
  for (const auto& stroke : s) out.push_back(emit_stroke(stroke));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome session_service() {
  using namespace session;
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("partsketch-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);

  // Pure transitions over random records.
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rec = testing::random_record(rng, static_cast<int>(rng.uniform_int(kMinParts, kMaxParts)),
                                            static_cast<int>(rng.uniform_int(0, 6)));
    std::vector<std::string> descriptions;
    for (const auto& p : rec.parts) descriptions.push_back(p.description);
    Session s = create_session("base", rec.caption, descriptions);
    ReplayBackend replay(rec);
    while (s.next_pending()) step(s, replay);
    o.require(sorted_lines(import_svg(export_svg(s.canvas_sketch())).paths) == sorted_lines(rec.sketch.paths),
              "replay did not reconstruct the record");
    const std::string ancestor = to_json(s).dump();
    RandomBackend random(static_cast<std::uint64_t>(trial));
    const int k = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(s.turns.size()) - 1));
    const Session branch = regenerate(s, k, random, "branch");
    o.require(to_json(s).dump() == ancestor, "branching changed its ancestor");
    o.require(std::equal(s.turns.begin(), s.turns.begin() + k, branch.turns.begin()), "branch lost its prefix");
    Session edited = s;
    const std::string victim = s.turns[static_cast<std::size_t>(k)].part.label;
    if (trial % 2) {
      remove_part(edited, victim);
    } else {
      replace_part(edited, victim, "something else", random);
    }
    for (const auto& t : s.turns) {
      if (t.part.label == victim) continue;
      const auto it = std::find_if(edited.turns.begin(), edited.turns.end(),
                                   [&](const SessionTurn& e) { return e.part.label == t.part.label; });
      o.require(it != edited.turns.end() && emit_strokes(it->strokes) == emit_strokes(t.strokes),
                "edit changed an untouched part");
    }
  }

  // Endpoints over loopback with the random and replay backends.
  BackendRegistry reg;
  reg.add_record(testing::three_part_record());
  SessionService service(SessionStore(dir), reg);
  HttpServer server(service);
  const int port = server.bind_any("127.0.0.1");
  o.require(port > 0, "could not bind a loopback port");
  if (port > 0) {
    std::thread serving([&] { server.serve(); });
    for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    httplib::Client client("127.0.0.1", port);
    auto post = [&](const std::string& path, const json& body) {
      auto res = client.Post(path, body.dump(), "application/json");
      return res ? std::make_pair(res->status, json::parse(res->body, nullptr, false)) : std::make_pair(0, json());
    };
    auto get = [&](const std::string& path) {
      auto res = client.Get(path);
      return res ? std::make_pair(res->status, json::parse(res->body, nullptr, false)) : std::make_pair(0, json());
    };
    auto created = post("/sessions", {{"caption", "A small dog"}, {"parts", {"round head", "long body", "four legs"}}});
    o.require(created.first == 201, "create returned " + std::to_string(created.first));
    const std::string id = created.second.value("id", "");
    for (int i = 0; i < 3; ++i) {
      o.require(post("/sessions/" + id + "/step", {{"backend", "replay:dog"}}).first == 200, "replay step failed");
    }
    o.require(post("/sessions/" + id + "/step", {{"backend", "random"}}).first == 409, "exhausted session not 409");
    auto svg = client.Get("/sessions/" + id + "/canvas.svg");
    o.require(svg && sorted_lines(import_svg(svg->body).paths) == sorted_lines(testing::three_part_record().sketch.paths),
              "served canvas differs from the record");
    const json before = get("/sessions/" + id).second;
    auto branch = post("/sessions/" + id + "/turns/1/regenerate", {{"backend", "random"}});
    o.require(branch.first == 201 && branch.second["parent"]["session_id"] == id, "regenerate endpoint failed");
    o.require(get("/sessions/" + id).second == before, "regenerate endpoint changed the ancestor");
    auto removed = client.Delete("/sessions/" + id + "/parts/Part2");
    o.require(removed && removed->status == 200, "remove endpoint failed");
    auto replaced = post("/sessions/" + id + "/parts/Part3/replace", {{"description", "three legs"}, {"backend", "random"}});
    o.require(replaced.first == 200 && replaced.second["parts"][0]["strokes"] == before["parts"][0]["strokes"],
              "replace endpoint touched another part");
    o.require(get("/sessions/missing").first == 404, "missing session not 404");
    server.stop();
    serving.join();
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = "30 records replayed exactly; ancestors and untouched parts byte-identical; endpoints on loopback";
  return o;
}

}  // namespace
}  // namespace partsketch

int main() {
  using namespace partsketch;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"stroke round-trip", stroke_round_trip},
      {"verifier fuzzing", verifier_fuzzing},
      {"rasterizer oracle", rasterizer_oracle},
      {"diagnostic image", diagnostic_image},
      {"annotation pipeline with scripted mocks", annotation_pipeline},
      {"augmentation counts", augmentation_counts},
      {"reward unit checks", reward_units},
      {"normalization and advantages", normalization_and_advantages},
      {"objective correctness", objective_correctness},
      {"training analogue", training_analogue},
      {"session service", session_service},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
