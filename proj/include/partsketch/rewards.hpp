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

#ifndef PARTSKETCH_REWARDS_HPP_
#define PARTSKETCH_REWARDS_HPP_

#include <Eigen/Core>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "partsketch/bitmap.hpp"
#include "partsketch/partdata.hpp"

namespace partsketch::rewards {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Maps a bitmap to a fixed-length feature vector.
///
/// embed() must be deterministic and const-safe: one embedder instance is
/// shared by concurrent scorers.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Eigen::VectorXd embed(const raster::Bitmap& image) const = 0;
  virtual std::string name() const = 0;
};

/// Grayscale, area-averaged down to side x side cells, each cell mapped to
/// mean / 255 - 0.5. Row-major cell order.
class BaselineEmbedder : public Embedder {
 public:
  explicit BaselineEmbedder(int side = 32);
  Eigen::VectorXd embed(const raster::Bitmap& image) const override;
  std::string name() const override { return "baseline"; }
  int side() const { return side_; }

 private:
  int side_;
};

/// POSTs {"image": <base64 png>} to an endpoint answering with a JSON array
/// of numbers (or {"embedding": [...]}).
class ExternalEmbedder : public Embedder {
 public:
  explicit ExternalEmbedder(std::string endpoint);
  Eigen::VectorXd embed(const raster::Bitmap& image) const override;
  std::string name() const override { return "external:" + endpoint_; }

 private:
  std::string endpoint_;
};

/// "baseline" or "external:<endpoint>".
std::unique_ptr<Embedder> make_embedder(const std::string& spec);

/// Cosine of two vectors of equal length; 0 when either has zero norm.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw DimensionMismatch("embedding lengths differ: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  const Scalar c = a.dot(b) / (na * nb);
  return std::max(Scalar(-1), std::min(Scalar(1), c));
}

double similarity_reward(const raster::Bitmap& generated, const raster::Bitmap& ground_truth,
                         const Embedder& embedder);

/// max(0, 1 - |n_gt - n| / n_gt).
double path_count_reward(int n, int n_gt);

struct StepReward {
  double r_sim = 0.0;
  double r_pc = 0.0;
  double combined = 0.0;
  bool valid = true;
};

struct ScoreConfig {
  double lambda = 1.0;
  double invalid_floor = -1.0;
};

/// Per-step scorer for one (record, part order) task. Ground-truth partial
/// renders and their embeddings are computed once.
///
/// Step t's canvas holds every stroke emitted up to t. At the last part the
/// combined reward adds lambda * path_count_reward against the record's
/// total path count. The first response failing verify_response ends the
/// trajectory: that step is returned with valid = false, r_sim = 0 and a
/// placeholder combined value of 0 that assign_invalid_reward replaces. Its
/// r_pc compares the paths emitted so far with the ground-truth paths of
/// the parts completed so far (0 when none were).
class TrajectoryScorer {
 public:
  TrajectoryScorer(AnnotatedSketch record, std::vector<std::string> order,
                   const Embedder& embedder, ScoreConfig cfg = {});

  std::vector<StepReward> score(const std::vector<std::string>& turn_texts) const;

  int steps() const { return static_cast<int>(order_.size()); }
  int total_paths() const { return static_cast<int>(record_.sketch.paths.size()); }
  const AnnotatedSketch& record() const { return record_; }
  const std::vector<std::string>& order() const { return order_; }
  const Embedder& embedder() const { return *embedder_; }
  const ScoreConfig& config() const { return cfg_; }
  /// Embedding of the full ground-truth render.
  const Eigen::VectorXd& final_embedding() const { return gt_embeddings_.back(); }

 private:
  AnnotatedSketch record_;
  std::vector<std::string> order_;
  const Embedder* embedder_;
  ScoreConfig cfg_;
  std::vector<Eigen::VectorXd> gt_embeddings_;  // one per step
  std::vector<int> gt_path_counts_;             // cumulative, one per step
};

std::vector<StepReward> score_trajectory(const std::vector<std::string>& turn_texts,
                                         const AnnotatedSketch& record,
                                         const std::vector<std::string>& order,
                                         const Embedder& embedder, double lambda = 1.0);

/// Invalid members take the minimum reward among the valid members of the
/// same step, or `floor` when no member is valid.
std::vector<double> assign_invalid_reward(const std::vector<double>& step_rewards,
                                          const std::vector<int>& invalid_indices,
                                          double floor = -1.0);

}  // namespace partsketch::rewards

#endif  // PARTSKETCH_REWARDS_HPP_
