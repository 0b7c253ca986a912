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

#include "partsketch/grpo.hpp"

namespace partsketch::grpo {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kProcess: return "process";
    case Variant::kOutcome: return "outcome";
    case Variant::kTailSum: return "tail-sum";
    case Variant::kSingleTurn: return "single-turn";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kProcess, Variant::kOutcome, Variant::kTailSum, Variant::kSingleTurn}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected process, outcome, tail-sum or single-turn)");
}

void GrpoConfig::check() const {
  if (group_size < 2) throw ConfigError("group size must be >= 2");
  if (!(clip_eps > 0)) throw ConfigError("clip radius must be > 0");
  if (kl_beta < 0) throw ConfigError("KL weight must be >= 0");
  if (inner_updates < 1) throw ConfigError("inner update count must be >= 1");
  if (iterations < 0 || steps_per_iteration < 0) throw ConfigError("step counts must be >= 0");
  if (learning_rate < 0) throw ConfigError("learning rate must be >= 0");
  if (!(std_floor > 0)) throw ConfigError("std floor must be > 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (eval_rollouts < 1) throw ConfigError("evaluation rollouts must be >= 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw ConfigError("Adam moment decays must lie in [0, 1)");
  }
}

RewardTensor RewardTensor::dense(const Eigen::MatrixXd& values) {
  return {values, Mask::Constant(values.rows(), values.cols(), true),
          Mask::Constant(values.rows(), values.cols(), true)};
}

void RewardTensor::check() const {
  if (valid.rows() != values.rows() || valid.cols() != values.cols() ||
      present.rows() != values.rows() || present.cols() != values.cols()) {
    throw ShapeError("reward tensor masks do not match its values");
  }
}

Eigen::MatrixXd normalize_global(const RewardTensor& r, double floor) {
  r.check();
  return normalize_global(r.values, r.present, floor);
}

Eigen::MatrixXd normalize_per_step(const RewardTensor& r, double floor) {
  r.check();
  return normalize_per_step(r.values, r.present, floor);
}

Eigen::MatrixXd advantages(const RewardTensor& r, Variant variant, double floor) {
  r.check();
  const Eigen::Index groups = r.groups();
  const Eigen::Index steps = r.steps();
  if (groups < 1 || steps < 1) throw VariantError("reward tensor is empty");
  switch (variant) {
    case Variant::kProcess:
      return normalize_per_step(r.values, r.present, floor);
    case Variant::kSingleTurn:
      if (steps != 1) {
        throw VariantError("single-turn advantages need one step, got " + std::to_string(steps));
      }
      return normalize_per_step(r.values, r.present, floor);
    case Variant::kTailSum:
      return suffix_sums(normalize_global(r.values, r.present, floor), r.present);
    case Variant::kOutcome: {
      // Trajectories that never reached the last step are scored like an
      // invalid answer there: the lowest final reward in the group.
      const auto last_col = r.present.col(steps - 1);
      if (!last_col.any()) return Eigen::MatrixXd::Zero(groups, steps);
      const double lowest = last_col.select(r.values.col(steps - 1).array(),
                                            std::numeric_limits<double>::infinity())
                                .minCoeff();
      const Eigen::VectorXd final_rewards =
          last_col.select(r.values.col(steps - 1).array(), lowest).matrix();
      const Eigen::VectorXd scaled = normalize_global(final_rewards, floor);
      return r.present.select(scaled.replicate(1, steps), 0.0);
    }
  }
  throw VariantError("unknown variant");
}

std::vector<std::string> Trajectory::texts() const {
  std::vector<std::string> out;
  out.reserve(turns.size());
  for (const auto& t : turns) out.push_back(t.text);
  return out;
}

ObjectiveResult grpo_objective(const TrajectoryGroup& group, const Eigen::MatrixXd& adv,
                               const GrpoConfig& cfg) {
  if (adv.rows() != group.size() || adv.cols() != group.steps) {
    throw ShapeError("advantage tensor is " + std::to_string(adv.rows()) + "x" +
                     std::to_string(adv.cols()) + ", group is " + std::to_string(group.size()) +
                     "x" + std::to_string(group.steps));
  }
  ObjectiveResult out;
  out.logp_grad.resize(group.size());
  for (int g = 0; g < group.size(); ++g) {
    const auto& turns = group.trajectories[g].turns;
    if (static_cast<int>(turns.size()) > group.steps) {
      throw ShapeError("trajectory " + std::to_string(g) + " is longer than the group");
    }
    out.logp_grad[g].resize(turns.size());
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const Turn& turn = turns[t];
      const Eigen::Index n = turn.token_count();
      if (turn.logp.size() != n || turn.logp_old.size() != n || turn.logp_ref.size() != n) {
        throw ShapeError("turn log-probabilities do not match its tokens");
      }
      out.logp_grad[g][t] = Eigen::VectorXd::Zero(n);
      if (turn.valid && n > 0) ++out.turn_count;
    }
  }
  if (out.turn_count == 0) return out;

  const double eps = cfg.clip_eps;
  const double beta = cfg.kl_beta;
  int clipped = 0;
  double kl_sum = 0.0;
  for (int g = 0; g < group.size(); ++g) {
    const auto& turns = group.trajectories[g].turns;
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const Turn& turn = turns[t];
      const Eigen::Index n = turn.token_count();
      if (!turn.valid || n == 0) continue;
      const double a = adv(g, static_cast<Eigen::Index>(t));
      const double w = 1.0 / (static_cast<double>(out.turn_count) * static_cast<double>(n));
      const Eigen::ArrayXd ratio = (turn.logp - turn.logp_old).array().exp();
      const Eigen::ArrayXd nu = (turn.logp_ref - turn.logp).array().exp();
      Eigen::VectorXd& grad = out.logp_grad[g][t];
      double turn_sum = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double kl = kl_estimate(nu(k));
        turn_sum += clipped_surrogate(ratio(k), a, eps) - beta * kl;
        kl_sum += kl;
        const bool active = clip_active(ratio(k), a, eps);
        clipped += active;
        grad(k) = w * ((active ? 0.0 : ratio(k) * a) + beta * (nu(k) - 1.0));
      }
      out.value += turn_sum / static_cast<double>(n);
      out.token_count += static_cast<int>(n);
    }
  }
  out.value /= out.turn_count;
  out.clip_fraction = static_cast<double>(clipped) / out.token_count;
  out.mean_kl = kl_sum / out.token_count;
  return out;
}

}  // namespace partsketch::grpo
