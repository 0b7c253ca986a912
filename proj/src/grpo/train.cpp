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
#include "partsketch/raster.hpp"

namespace partsketch::grpo {
namespace {

const PartSpec& find_part(const AnnotatedSketch& record, const std::string& label) {
  for (const auto& p : record.parts) {
    if (p.label == label) return p;
  }
  throw OrderError("order names unknown part " + label);
}

Trajectory sample_trajectory(const TurnPolicy& policy, const rewards::TrajectoryScorer& scorer,
                             Rng& rng) {
  Trajectory traj;
  const int steps = scorer.steps();
  for (int t = 0; t < steps; ++t) {
    const TurnPrompt prompt{t, steps, find_part(scorer.record(), scorer.order()[t])};
    traj.turns.push_back(policy.generate(prompt, rng));
    if (!traj.turns.back().valid) break;
  }
  return traj;
}

struct Task {
  AnnotatedSketch record;
  std::vector<std::string> order;
};

std::vector<Task> build_tasks(const std::vector<AnnotatedSketch>& corpus, Variant variant) {
  std::vector<Task> tasks;
  for (const auto& rec : corpus) {
    std::vector<std::string> order;
    for (const auto& p : rec.parts) order.push_back(p.label);
    if (variant == Variant::kSingleTurn) {
      tasks.push_back({collapse_to_single_turn(rec, order), {part_label(1)}});
    } else {
      tasks.push_back({rec, std::move(order)});
    }
  }
  return tasks;
}

struct Adam {
  Eigen::MatrixXd m, v;
  int t = 0;

  void ascend(Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, const GrpoConfig& cfg) {
    if (m.size() == 0) {
      m = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
      v = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
    }
    ++t;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
    theta.array() += cfg.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + cfg.adam_eps);
  }
};

}  // namespace

double final_output_reward(const rewards::TrajectoryScorer& scorer,
                           const std::vector<std::string>& turn_texts) {
  const CanvasConfig& canvas = scorer.record().sketch.canvas;
  raster::Bitmap image(canvas.width, canvas.height, raster::Bitmap::Channels::kGray,
                       canvas.background);
  int paths = 0;
  for (const auto& text : turn_texts) {
    if (!verify_response(text).valid) break;
    const StrokeSequence strokes = parse_strokes(text);
    paths += static_cast<int>(strokes.size());
    raster::draw_strokes(image, strokes, canvas.stroke_width, {0, 0, 0});
  }
  const double sim =
      rewards::cosine_similarity(scorer.embedder().embed(image), scorer.final_embedding());
  return sim + scorer.config().lambda * rewards::path_count_reward(paths, scorer.total_paths());
}

Rollout rollout_group(const TurnPolicy& policy, const rewards::TrajectoryScorer& scorer,
                      const GrpoConfig& cfg, std::uint64_t seed) {
  const int groups = cfg.group_size;
  const int steps = scorer.steps();
  Rollout out;
  out.group.steps = steps;
  out.rewards.values = Eigen::MatrixXd::Zero(groups, steps);
  out.rewards.valid = Mask::Constant(groups, steps, false);
  out.rewards.present = Mask::Constant(groups, steps, false);
  out.final_scores.resize(groups);

  Rng base(seed);
  for (int g = 0; g < groups; ++g) {
    Rng rng = base.fork(static_cast<std::uint64_t>(g));
    Trajectory traj = sample_trajectory(policy, scorer, rng);
    const auto texts = traj.texts();
    auto scored = scorer.score(texts);
    for (std::size_t t = 0; t < scored.size(); ++t) {
      out.rewards.values(g, t) = scored[t].combined;
      out.rewards.valid(g, t) = scored[t].valid;
      out.rewards.present(g, t) = true;
    }
    out.final_scores(g) = final_output_reward(scorer, texts);
    out.group.trajectories.push_back(std::move(traj));
    out.step_rewards.push_back(std::move(scored));
  }

  for (int t = 0; t < steps; ++t) {
    std::vector<int> members;
    std::vector<double> values;
    std::vector<int> invalid;
    for (int g = 0; g < groups; ++g) {
      if (!out.rewards.present(g, t)) continue;
      if (!out.rewards.valid(g, t)) invalid.push_back(static_cast<int>(members.size()));
      members.push_back(g);
      values.push_back(out.rewards.values(g, t));
    }
    if (invalid.empty()) continue;
    const auto fixed = rewards::assign_invalid_reward(values, invalid, scorer.config().invalid_floor);
    for (std::size_t i = 0; i < members.size(); ++i) out.rewards.values(members[i], t) = fixed[i];
  }
  return out;
}

AnnotatedSketch collapse_to_single_turn(const AnnotatedSketch& record,
                                        const std::vector<std::string>& order) {
  std::string description;
  for (const auto& label : order) {
    if (!description.empty()) description += "; ";
    description += find_part(record, label).description;
  }
  AnnotatedSketch out;
  out.id = record.id;
  out.sketch = record.sketch;
  out.caption = record.caption;
  out.parts = make_parts({description});
  for (std::size_t i = 0; i < record.sketch.paths.size(); ++i) {
    out.assignment.part_of_path[static_cast<int>(i) + 1] = 1;
  }
  return out;
}

AnnotatedSketch synthetic_task() {
  AnnotatedSketch rec;
  rec.id = "synthetic-three-part";
  rec.caption = "a small creature with a round head, a long body and a curled tail";
  rec.sketch.canvas.stroke_width = 16.0;
  rec.sketch.paths = parse_strokes(
      "M 208 112 C 176 48 336 48 304 112\n"
      "M 208 112 C 176 176 336 176 304 112\n"
      "M 240 176 C 208 240 208 336 240 400\n"
      "M 272 176 C 304 240 304 336 272 400\n"
      "M 272 368 C 336 400 400 368 432 304\n"
      "M 432 304 C 464 272 464 208 432 176\n");
  rec.parts = make_parts({"round head", "long body", "curled tail"});
  for (int path = 1; path <= 6; ++path) rec.assignment.part_of_path[path] = (path + 1) / 2;
  return rec;
}

nlohmann::json LogRecord::to_json() const {
  return {{"step", step},
          {"phase", phase},
          {"variant", std::string(grpo::to_string(variant))},
          {"mean_reward", mean_reward},
          {"objective", objective},
          {"clip_fraction", clip_fraction},
          {"mean_kl", mean_kl},
          {"seed", seed}};
}

std::vector<LogRecord> train_loop(ToyStrokePolicy& policy,
                                  const std::vector<AnnotatedSketch>& corpus,
                                  const GrpoConfig& cfg, const rewards::Embedder& embedder,
                                  const LogSink& sink) {
  cfg.check();
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  const std::vector<Task> tasks = build_tasks(corpus, cfg.variant);
  std::vector<rewards::TrajectoryScorer> scorers;
  scorers.reserve(tasks.size());
  for (const auto& task : tasks) {
    scorers.emplace_back(task.record, task.order, embedder,
                         rewards::ScoreConfig{cfg.lambda, cfg.invalid_floor});
  }

  std::vector<LogRecord> log;
  auto emit = [&](LogRecord rec) {
    rec.variant = cfg.variant;
    rec.seed = cfg.seed;
    if (sink) sink(rec);
    log.push_back(std::move(rec));
  };
  // Both evaluations replay the same random stream.
  auto evaluate = [&](int step) {
    Rng eval_rng(cfg.seed ^ 0x6a09e667f3bcc908ULL);
    double total = 0.0;
    for (int i = 0; i < cfg.eval_rollouts; ++i) {
      const auto& scorer = scorers[static_cast<std::size_t>(i) % scorers.size()];
      Rng rng = eval_rng.fork(static_cast<std::uint64_t>(i));
      total += final_output_reward(scorer, sample_trajectory(policy, scorer, rng).texts());
    }
    LogRecord rec;
    rec.step = step;
    rec.phase = "eval";
    rec.mean_reward = total / cfg.eval_rollouts;
    emit(rec);
  };

  evaluate(0);
  Rng rng(cfg.seed);
  Adam adam;
  int step = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const ToyStrokePolicy reference = policy;
    for (int m = 0; m < cfg.steps_per_iteration; ++m) {
      ++step;
      std::vector<Rollout> batch;
      std::vector<Eigen::MatrixXd> batch_adv;
      double reward_sum = 0.0;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const auto task = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(scorers.size()) - 1));
        Rollout r = rollout_group(policy, scorers[task], cfg, rng.next());
        for (auto& traj : r.group.trajectories) {
          for (auto& turn : traj.turns) turn.logp_ref = reference.token_log_probs(turn);
        }
        reward_sum += r.final_scores.mean();
        batch_adv.push_back(advantages(r.rewards, cfg.variant, cfg.std_floor));
        batch.push_back(std::move(r));
      }

      LogRecord rec;
      rec.step = step;
      rec.phase = "train";
      rec.mean_reward = reward_sum / cfg.batch_size;
      for (int u = 0; u < cfg.inner_updates; ++u) {
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(policy.theta().rows(), policy.theta().cols());
        for (std::size_t b = 0; b < batch.size(); ++b) {
          policy.refresh_log_probs(batch[b].group);
          const ObjectiveResult res = grpo_objective(batch[b].group, batch_adv[b], cfg);
          grad += policy.gradient(batch[b].group, res.logp_grad);
          const double share = 1.0 / (batch.size() * cfg.inner_updates);
          rec.objective += share * res.value;
          rec.clip_fraction += share * res.clip_fraction;
          rec.mean_kl += share * res.mean_kl;
        }
        adam.ascend(policy.theta(), grad / static_cast<double>(batch.size()), cfg);
      }
      emit(rec);
    }
  }
  if (step > 0) evaluate(step);
  return log;
}

}  // namespace partsketch::grpo
