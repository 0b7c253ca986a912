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
#include <cmath>
#include <limits>

#include "partsketch/grpo.hpp"

namespace partsketch::grpo {
namespace {

template <typename Row>
double log_sum_exp(const Row& row) {
  const double peak = row.maxCoeff();
  return peak + std::log((row.array() - peak).exp().sum());
}

}  // namespace

ToyStrokePolicy::ToyStrokePolicy(int max_turns, int stroke_contexts, int max_strokes)
    : max_turns_(max_turns), stroke_contexts_(stroke_contexts), max_strokes_(max_strokes) {
  if (max_turns < 1 || stroke_contexts < 1 || max_strokes < 1) {
    throw ConfigError("toy policy needs at least one turn and one stroke");
  }
  theta_ = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(max_turns) * stroke_contexts * kSlots, kVocabulary);
}

int ToyStrokePolicy::bucket(int coordinate) {
  return std::clamp(coordinate / kBucketWidth, 0, kBuckets - 1);
}

int ToyStrokePolicy::context(int turn, int stroke, int slot) const {
  const int t = std::clamp(turn, 0, max_turns_ - 1);
  const int s = std::clamp(stroke, 0, stroke_contexts_ - 1);
  return (t * stroke_contexts_ + s) * kSlots + slot;
}

double ToyStrokePolicy::log_prob(int context, int token) const {
  const int n = support(context);
  if (token >= n) return -std::numeric_limits<double>::infinity();
  const auto row = theta_.row(context).head(n);
  return row(token) - log_sum_exp(row);
}

Turn ToyStrokePolicy::generate(const TurnPrompt& prompt, Rng& rng) const {
  Turn turn;
  std::vector<double> logp;
  for (int s = 0; s < max_strokes_; ++s) {
    std::array<int, 8> coords{};
    bool ended = false;
    for (int slot = 0; slot < kSlots; ++slot) {
      const int ctx = context(prompt.turn_index, s, slot);
      const auto row = theta_.row(ctx).head(support(ctx));
      const double lse = log_sum_exp(row);
      int token = 0;
      if (greedy_) {
        row.maxCoeff(&token);
      } else {
        double u = rng.uniform01();
        token = static_cast<int>(row.size()) - 1;
        for (int v = 0; v < row.size(); ++v) {
          const double p = std::exp(row(v) - lse);
          if (u < p) {
            token = v;
            break;
          }
          u -= p;
        }
      }
      turn.contexts.push_back(ctx);
      turn.tokens.push_back(token);
      logp.push_back(row(token) - lse);
      if (token == kEndOfPart) {
        ended = true;
        break;
      }
      coords[slot] = coordinate(token);
    }
    if (ended) break;
    turn.text += emit_stroke(CubicStroke::from_coords(coords)) + "\n";
  }
  turn.logp = Eigen::Map<const Eigen::VectorXd>(logp.data(), static_cast<Eigen::Index>(logp.size()));
  turn.logp_old = turn.logp;
  turn.logp_ref = turn.logp;
  turn.valid = verify_response(turn.text).valid;
  return turn;
}

Eigen::VectorXd ToyStrokePolicy::token_log_probs(const Turn& turn) const {
  Eigen::VectorXd out(turn.token_count());
  for (int k = 0; k < turn.token_count(); ++k) out(k) = log_prob(turn.contexts[k], turn.tokens[k]);
  return out;
}

void ToyStrokePolicy::refresh_log_probs(TrajectoryGroup& group) const {
  for (auto& traj : group.trajectories) {
    for (auto& turn : traj.turns) turn.logp = token_log_probs(turn);
  }
}

Eigen::MatrixXd ToyStrokePolicy::gradient(
    const TrajectoryGroup& group, const std::vector<std::vector<Eigen::VectorXd>>& logp_grad) const {
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(theta_.rows(), theta_.cols());
  for (int g = 0; g < group.size(); ++g) {
    const auto& turns = group.trajectories[g].turns;
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const Eigen::VectorXd& coef = logp_grad.at(g).at(t);
      for (int k = 0; k < turns[t].token_count(); ++k) {
        if (coef(k) == 0.0) continue;
        const int ctx = turns[t].contexts[k];
        const int n = support(ctx);
        const auto row = theta_.row(ctx).head(n);
        grad.row(ctx).head(n).array() -= coef(k) * (row.array() - log_sum_exp(row)).exp();
        grad(ctx, turns[t].tokens[k]) += coef(k);
      }
    }
  }
  return grad;
}

nlohmann::json ToyStrokePolicy::to_json(std::uint64_t seed) const {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < theta_.rows(); ++r) {
    rows.push_back(std::vector<double>(theta_.row(r).begin(), theta_.row(r).end()));
  }
  return {{"kind", "toy-stroke-policy"},
          {"max_turns", max_turns_},
          {"stroke_contexts", stroke_contexts_},
          {"max_strokes", max_strokes_},
          {"slots", kSlots},
          {"vocabulary",
           {{"buckets", kBuckets}, {"bucket_width", kBucketWidth}, {"end_of_part", kEndOfPart}}},
          {"shape", {theta_.rows(), theta_.cols()}},
          {"seed", seed},
          {"theta", rows}};
}

ToyStrokePolicy ToyStrokePolicy::from_json(const nlohmann::json& j) {
  ToyStrokePolicy policy(j.at("max_turns").get<int>(), j.at("stroke_contexts").get<int>(),
                         j.at("max_strokes").get<int>());
  const auto& rows = j.at("theta");
  if (static_cast<Eigen::Index>(rows.size()) != policy.theta_.rows()) {
    throw ShapeError("checkpoint row count does not match its policy shape");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != policy.theta_.cols()) {
      throw ShapeError("checkpoint row " + std::to_string(r) + " has the wrong width");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      policy.theta_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c].get<double>();
    }
  }
  return policy;
}

ReplayPolicy::ReplayPolicy(AnnotatedSketch record, std::vector<std::string> order)
    : record_(std::move(record)), order_(std::move(order)) {}

Turn ReplayPolicy::generate(const TurnPrompt& prompt, Rng&) const {
  Turn turn;
  turn.text = emit_strokes(part_strokes(record_, order_.at(prompt.turn_index)));
  turn.valid = verify_response(turn.text).valid;
  return turn;
}

}  // namespace partsketch::grpo
