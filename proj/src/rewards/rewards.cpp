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

#include "partsketch/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "partsketch/raster.hpp"

namespace partsketch::rewards {

BaselineEmbedder::BaselineEmbedder(int side) : side_(side) {
  if (side < 1) throw std::invalid_argument("embedder side must be >= 1");
}

Eigen::VectorXd BaselineEmbedder::embed(const raster::Bitmap& image) const {
  const raster::Bitmap gray = raster::to_gray(image);
  const int w = gray.width;
  const int h = gray.height;
  if (w < 1 || h < 1) throw DimensionMismatch("cannot embed an empty bitmap");

  // Column sums per cell row, then collapse columns into cells.
  Eigen::MatrixXd cell_sum = Eigen::MatrixXd::Zero(side_, side_);
  Eigen::VectorXi col_cell(w);
  for (int x = 0; x < w; ++x) col_cell(x) = std::min(side_ - 1, x * side_ / w);
  Eigen::VectorXi cell_cols = Eigen::VectorXi::Zero(side_);
  Eigen::VectorXi cell_rows = Eigen::VectorXi::Zero(side_);
  for (int x = 0; x < w; ++x) ++cell_cols(col_cell(x));
  for (int y = 0; y < h; ++y) {
    const int cy = std::min(side_ - 1, y * side_ / h);
    ++cell_rows(cy);
    const std::uint8_t* row = gray.at(0, y);
    for (int x = 0; x < w; ++x) cell_sum(cy, col_cell(x)) += row[x];
  }

  Eigen::VectorXd out(side_ * side_);
  for (int cy = 0; cy < side_; ++cy) {
    for (int cx = 0; cx < side_; ++cx) {
      const double count = static_cast<double>(cell_rows(cy)) * cell_cols(cx);
      // Cells left empty by an image smaller than the grid read as white.
      const double mean = count > 0 ? cell_sum(cy, cx) / count : 255.0;
      out(cy * side_ + cx) = mean / 255.0 - 0.5;
    }
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& spec) {
  if (spec == "baseline") return std::make_unique<BaselineEmbedder>();
  const std::string prefix = "external:";
  if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size()) {
    return std::make_unique<ExternalEmbedder>(spec.substr(prefix.size()));
  }
  throw std::invalid_argument("unknown embedder '" + spec + "'");
}

double similarity_reward(const raster::Bitmap& generated, const raster::Bitmap& ground_truth,
                         const Embedder& embedder) {
  if (generated.width != ground_truth.width || generated.height != ground_truth.height) {
    throw DimensionMismatch("bitmaps differ in size: " + std::to_string(generated.width) + "x" +
                            std::to_string(generated.height) + " vs " +
                            std::to_string(ground_truth.width) + "x" +
                            std::to_string(ground_truth.height));
  }
  return cosine_similarity(embedder.embed(generated), embedder.embed(ground_truth));
}

double path_count_reward(int n, int n_gt) {
  if (n_gt < 1) throw DomainError("ground-truth path count must be >= 1");
  if (n < 0) throw DomainError("path count must be >= 0");
  const double miss = std::abs(n_gt - n) / static_cast<double>(n_gt);
  return std::max(0.0, 1.0 - miss);
}

TrajectoryScorer::TrajectoryScorer(AnnotatedSketch record, std::vector<std::string> order,
                                   const Embedder& embedder, ScoreConfig cfg)
    : record_(std::move(record)), order_(std::move(order)), embedder_(&embedder), cfg_(cfg) {
  const int steps = static_cast<int>(order_.size());
  if (steps < 1) throw OrderError("part order is empty");
  for (int t = 1; t <= steps; ++t) {
    const Sketch partial = assemble_partial_gt(record_, order_, t);
    gt_embeddings_.push_back(embedder.embed(raster::rasterize(partial)));
    gt_path_counts_.push_back(static_cast<int>(partial.paths.size()));
  }
}

std::vector<StepReward> TrajectoryScorer::score(const std::vector<std::string>& turn_texts) const {
  if (turn_texts.size() > order_.size()) {
    throw std::invalid_argument("trajectory has more turns than the record has parts");
  }
  const CanvasConfig& canvas = record_.sketch.canvas;
  raster::Bitmap current(canvas.width, canvas.height, raster::Bitmap::Channels::kGray,
                         canvas.background);
  std::vector<StepReward> out;
  int emitted = 0;
  for (std::size_t t = 0; t < turn_texts.size(); ++t) {
    StepReward step;
    if (!verify_response(turn_texts[t]).valid) {
      step.valid = false;
      step.r_sim = 0.0;
      step.r_pc = t == 0 ? 0.0 : path_count_reward(emitted, gt_path_counts_[t - 1]);
      step.combined = 0.0;
      out.push_back(step);
      break;
    }
    const StrokeSequence strokes = parse_strokes(turn_texts[t]);
    emitted += static_cast<int>(strokes.size());
    raster::draw_strokes(current, strokes, canvas.stroke_width, {0, 0, 0});
    step.r_sim = cosine_similarity(embedder_->embed(current), gt_embeddings_[t]);
    const bool last = t + 1 == order_.size();
    step.r_pc = last ? path_count_reward(emitted, total_paths()) : 0.0;
    step.combined = step.r_sim + (last ? cfg_.lambda * step.r_pc : 0.0);
    out.push_back(step);
  }
  return out;
}

std::vector<StepReward> score_trajectory(const std::vector<std::string>& turn_texts,
                                         const AnnotatedSketch& record,
                                         const std::vector<std::string>& order,
                                         const Embedder& embedder, double lambda) {
  ScoreConfig cfg;
  cfg.lambda = lambda;
  return TrajectoryScorer(record, order, embedder, cfg).score(turn_texts);
}

std::vector<double> assign_invalid_reward(const std::vector<double>& step_rewards,
                                          const std::vector<int>& invalid_indices,
                                          double floor) {
  std::vector<bool> invalid(step_rewards.size(), false);
  for (int i : invalid_indices) {
    if (i < 0 || i >= static_cast<int>(step_rewards.size())) {
      throw std::out_of_range("invalid index " + std::to_string(i) + " outside the group");
    }
    invalid[i] = true;
  }
  bool any_valid = false;
  double lowest = 0.0;
  for (std::size_t g = 0; g < step_rewards.size(); ++g) {
    if (invalid[g]) continue;
    lowest = any_valid ? std::min(lowest, step_rewards[g]) : step_rewards[g];
    any_valid = true;
  }
  std::vector<double> out = step_rewards;
  for (std::size_t g = 0; g < out.size(); ++g) {
    if (invalid[g]) out[g] = any_valid ? lowest : floor;
  }
  return out;
}

}  // namespace partsketch::rewards
