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

#ifndef PARTSKETCH_GRPO_HPP_
#define PARTSKETCH_GRPO_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "partsketch/partdata.hpp"
#include "partsketch/rewards.hpp"
#include "partsketch/rng.hpp"

namespace partsketch::grpo {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class VariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using rewards::DomainError;

enum class Variant { kProcess, kOutcome, kTailSum, kSingleTurn };

std::string_view to_string(Variant v);
/// "process", "outcome", "tail-sum", "single-turn"; ConfigError otherwise.
Variant parse_variant(std::string_view name);

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 0.0;
  int inner_updates = 1;
  double lambda = 1.0;
  Variant variant = Variant::kProcess;
  int iterations = 1;
  int steps_per_iteration = 500;
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.95;
  double adam_eps = 1e-8;
  double std_floor = 1e-8;
  double invalid_floor = -1.0;
  int batch_size = 1;
  int eval_rollouts = 64;
  std::uint64_t seed = 0;

  int total_steps() const { return iterations * steps_per_iteration; }
  /// Throws ConfigError.
  void check() const;
};

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Group x step rewards. `present` is false for the padding that follows a
/// truncated trajectory; `valid` is false where the verifier rejected the
/// turn (such a turn is present and closes its trajectory).
struct RewardTensor {
  Eigen::MatrixXd values;
  Mask valid;
  Mask present;

  /// Every entry present and valid.
  static RewardTensor dense(const Eigen::MatrixXd& values);
  Eigen::Index groups() const { return values.rows(); }
  Eigen::Index steps() const { return values.cols(); }
  /// Throws ShapeError.
  void check() const;
};

namespace detail {

template <typename Scalar>
struct Moments {
  Scalar mean = Scalar(0);
  Scalar stddev = Scalar(0);
  Eigen::Index count = 0;
};

template <typename Derived, typename MaskDerived>
Moments<typename Derived::Scalar> masked_moments(const Eigen::DenseBase<Derived>& x,
                                                 const Eigen::DenseBase<MaskDerived>& mask) {
  using Scalar = typename Derived::Scalar;
  Moments<Scalar> m;
  m.count = mask.count();
  if (m.count == 0) return m;
  const auto selected = mask.derived().select(x.derived(), Scalar(0));
  m.mean = selected.sum() / Scalar(m.count);
  const auto centered = mask.derived().select(x.derived() - m.mean, Scalar(0));
  m.stddev = std::sqrt(centered.square().sum() / Scalar(m.count));
  return m;
}

}  // namespace detail

/// (r - mean) / max(std, floor) over the entries selected by `mask`, with
/// population std. Unselected entries come back as zero.
template <typename Derived, typename MaskDerived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalize_global(
    const Eigen::MatrixBase<Derived>& r, const Eigen::DenseBase<MaskDerived>& mask,
    typename Derived::Scalar floor = 1e-8) {
  using Scalar = typename Derived::Scalar;
  if (r.rows() != mask.rows() || r.cols() != mask.cols()) {
    throw ShapeError("reward and mask shapes differ");
  }
  const auto m = detail::masked_moments(r.array(), mask);
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.count == 0) return Matrix::Zero(r.rows(), r.cols());
  // Equal entries give an inexact mean; return exact zeros instead.
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  if (mask.derived().select(r.array(), inf).minCoeff() ==
      mask.derived().select(r.array(), -inf).maxCoeff()) {
    return Matrix::Zero(r.rows(), r.cols());
  }
  const Scalar scale = std::max(m.stddev, floor);
  return mask.derived().select((r.array() - m.mean) / scale, Scalar(0)).matrix();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalize_global(
    const Eigen::MatrixBase<Derived>& r, typename Derived::Scalar floor = 1e-8) {
  return normalize_global(r, Mask::Constant(r.rows(), r.cols(), true), floor);
}

/// Column-wise standardization over the selected entries of each column.
template <typename Derived, typename MaskDerived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalize_per_step(
    const Eigen::MatrixBase<Derived>& r, const Eigen::DenseBase<MaskDerived>& mask,
    typename Derived::Scalar floor = 1e-8) {
  using Scalar = typename Derived::Scalar;
  if (r.rows() != mask.rows() || r.cols() != mask.cols()) {
    throw ShapeError("reward and mask shapes differ");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(r.rows(), r.cols());
  for (Eigen::Index t = 0; t < r.cols(); ++t) {
    out.col(t) = normalize_global(r.col(t), mask.col(t), floor);
  }
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalize_per_step(
    const Eigen::MatrixBase<Derived>& r, typename Derived::Scalar floor = 1e-8) {
  return normalize_per_step(r, Mask::Constant(r.rows(), r.cols(), true), floor);
}

/// Row-wise sums from each selected step to the end of the row.
template <typename Derived, typename MaskDerived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> suffix_sums(
    const Eigen::MatrixBase<Derived>& x, const Eigen::DenseBase<MaskDerived>& mask) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(x.rows(), x.cols());
  for (Eigen::Index g = 0; g < x.rows(); ++g) {
    Scalar running(0);
    for (Eigen::Index t = x.cols() - 1; t >= 0; --t) {
      if (!mask(g, t)) continue;
      running += x(g, t);
      out(g, t) = running;
    }
  }
  return out;
}

Eigen::MatrixXd normalize_global(const RewardTensor& r, double floor = 1e-8);
Eigen::MatrixXd normalize_per_step(const RewardTensor& r, double floor = 1e-8);

/// process: per-step normalization. tail-sum: global normalization, then
/// suffix sums. outcome: the last column normalized across the group and
/// broadcast over each trajectory's steps, where a trajectory that stopped
/// early takes the column's lowest reward. single-turn: per-step
/// normalization of a one-column tensor. Absent entries are zero.
Eigen::MatrixXd advantages(const RewardTensor& r, Variant variant, double floor = 1e-8);

/// nu - log(nu) - 1.
template <typename Scalar>
Scalar kl_estimate(Scalar nu) {
  if (!(nu > Scalar(0))) throw DomainError("kl_estimate needs nu > 0");
  return nu - std::log(nu) - Scalar(1);
}

/// min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv).
template <typename Scalar>
Scalar clipped_surrogate(Scalar ratio, Scalar adv, Scalar eps) {
  const Scalar clipped = std::min(std::max(ratio, Scalar(1) - eps), Scalar(1) + eps);
  return std::min(ratio * adv, clipped * adv);
}

/// True where the clipped branch is strictly smaller, i.e. the token's
/// gradient through the ratio vanishes.
template <typename Scalar>
bool clip_active(Scalar ratio, Scalar adv, Scalar eps) {
  return (adv > Scalar(0) && ratio > Scalar(1) + eps) ||
         (adv < Scalar(0) && ratio < Scalar(1) - eps);
}

/// One generated turn. Token vectors are empty for policies without a
/// token model (replay).
struct Turn {
  std::string text;
  std::vector<int> contexts;
  std::vector<int> tokens;
  Eigen::VectorXd logp;
  Eigen::VectorXd logp_old;
  Eigen::VectorXd logp_ref;
  bool valid = true;

  int token_count() const { return static_cast<int>(tokens.size()); }
};

struct Trajectory {
  std::vector<Turn> turns;
  std::vector<std::string> texts() const;
};

/// G trajectories of at most `steps` turns each.
struct TrajectoryGroup {
  std::vector<Trajectory> trajectories;
  int steps = 0;

  int size() const { return static_cast<int>(trajectories.size()); }
};

struct ObjectiveResult {
  double value = 0.0;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;
  int turn_count = 0;
  int token_count = 0;
  /// d value / d logp per token, indexed [trajectory][turn](token).
  std::vector<std::vector<Eigen::VectorXd>> logp_grad;
};

/// Clipped token-level surrogate minus the KL penalty, averaged per turn
/// over its tokens and then over the counted turns. A turn counts when it is
/// valid and has at least one token.
ObjectiveResult grpo_objective(const TrajectoryGroup& group, const Eigen::MatrixXd& adv,
                               const GrpoConfig& cfg);

struct TurnPrompt {
  int turn_index = 0;  // 0-based
  int turns_total = 1;
  PartSpec part;
};

/// Anything that can produce a turn.
class TurnPolicy {
 public:
  virtual ~TurnPolicy() = default;
  virtual Turn generate(const TurnPrompt& prompt, Rng& rng) const = 0;
};

/// Categorical policy over coordinate buckets.
///
/// A turn is a run of strokes, each written as eight coordinate tokens.
/// Token b < 16 stands for coordinate 32 * b + 16; token 16 is end-of-part,
/// offered only where a stroke would begin. A turn whose first token is
/// end-of-part is empty and fails the verifier. A turn ends on its own after
/// `max_strokes` strokes.
///
/// Each token is drawn from the row for (turn, stroke, coordinate slot).
/// Turn and stroke are clamped to the table, so strokes from
/// `stroke_contexts` onward share rows.
class ToyStrokePolicy : public TurnPolicy {
 public:
  static constexpr int kSlots = 8;
  static constexpr int kBuckets = 16;
  static constexpr int kBucketWidth = 32;
  static constexpr int kEndOfPart = kBuckets;
  static constexpr int kVocabulary = kBuckets + 1;

  explicit ToyStrokePolicy(int max_turns = 5, int stroke_contexts = 4, int max_strokes = 8);

  static int coordinate(int token) { return token * kBucketWidth + kBucketWidth / 2; }
  /// Nearest bucket for a canvas coordinate.
  static int bucket(int coordinate);

  int max_turns() const { return max_turns_; }
  int stroke_contexts() const { return stroke_contexts_; }
  int max_strokes() const { return max_strokes_; }
  int context(int turn, int stroke, int slot) const;
  int contexts() const { return static_cast<int>(theta_.rows()); }
  /// Tokens a row can emit: all of them at a stroke start, buckets only
  /// inside a stroke.
  static int support(int context) { return context % kSlots == 0 ? kVocabulary : kBuckets; }

  Eigen::MatrixXd& theta() { return theta_; }
  const Eigen::MatrixXd& theta() const { return theta_; }

  /// Highest-probability token everywhere (ties to the lowest index).
  void set_greedy(bool greedy) { greedy_ = greedy; }
  bool greedy() const { return greedy_; }

  Turn generate(const TurnPrompt& prompt, Rng& rng) const override;

  double log_prob(int context, int token) const;
  Eigen::VectorXd token_log_probs(const Turn& turn) const;
  /// Fills turn.logp for every turn of the group.
  void refresh_log_probs(TrajectoryGroup& group) const;

  /// Chain rule from per-token d/dlogp to d/dtheta:
  /// sum over tokens of coef * (onehot(token) - softmax(row)).
  Eigen::MatrixXd gradient(const TrajectoryGroup& group,
                           const std::vector<std::vector<Eigen::VectorXd>>& logp_grad) const;

  nlohmann::json to_json(std::uint64_t seed) const;
  static ToyStrokePolicy from_json(const nlohmann::json& j);

 private:
  int max_turns_;
  int stroke_contexts_;
  int max_strokes_;
  Eigen::MatrixXd theta_;
  bool greedy_ = false;
};

/// Emits the record's strokes for each part of `order`.
class ReplayPolicy : public TurnPolicy {
 public:
  ReplayPolicy(AnnotatedSketch record, std::vector<std::string> order);
  Turn generate(const TurnPrompt& prompt, Rng& rng) const override;

 private:
  AnnotatedSketch record_;
  std::vector<std::string> order_;
};

struct Rollout {
  TrajectoryGroup group;
  RewardTensor rewards;  // after the group-minimum rule
  std::vector<std::vector<rewards::StepReward>> step_rewards;  // raw, per trajectory
  Eigen::VectorXd final_scores;  // final_output_reward per trajectory
};

/// Similarity of the canvas built from the turns that passed the verifier
/// to the full ground truth, plus lambda times the path-count reward of
/// that canvas.
double final_output_reward(const rewards::TrajectoryScorer& scorer,
                           const std::vector<std::string>& turn_texts);

/// G rollouts of up to scorer.steps() turns, each stopped at its first
/// invalid turn. Trajectory g draws from Rng(seed).fork(g).
Rollout rollout_group(const TurnPolicy& policy, const rewards::TrajectoryScorer& scorer,
                      const GrpoConfig& cfg, std::uint64_t seed);

/// One part holding every path, described by the joined descriptions of
/// `order`.
AnnotatedSketch collapse_to_single_turn(const AnnotatedSketch& record,
                                        const std::vector<std::string>& order);

/// Three parts of two strokes each on bucket-centered coordinates, drawn
/// with a thick pen so partial renders differ visibly.
AnnotatedSketch synthetic_task();

struct LogRecord {
  int step = 0;
  std::string phase;  // "eval" or "train"
  Variant variant = Variant::kProcess;
  double mean_reward = 0.0;
  double objective = 0.0;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

using LogSink = std::function<void(const LogRecord&)>;

/// Policy-gradient ascent on grpo_objective. The log opens with an
/// evaluation at step 0 and, when any step ran, closes with one at the
/// final step. Corpus records are used with their parts in listed order.
std::vector<LogRecord> train_loop(ToyStrokePolicy& policy,
                                  const std::vector<AnnotatedSketch>& corpus,
                                  const GrpoConfig& cfg, const rewards::Embedder& embedder,
                                  const LogSink& sink = {});

}  // namespace partsketch::grpo

#endif  // PARTSKETCH_GRPO_HPP_
