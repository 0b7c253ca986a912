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

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <thread>

#include "partsketch/annopipe.hpp"
#include "partsketch/grpo.hpp"
#include "partsketch/partdata.hpp"
#include "partsketch/raster.hpp"
#include "partsketch/rewards.hpp"
#include "partsketch/session.hpp"
#include "partsketch/stroke.hpp"
#include "partsketch/util.hpp"

namespace partsketch::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_bytes(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << bytes;
  if (!f) throw DataError("write failed for " + path.string());
}

bool has_extension(const fs::path& p, const std::string& ext) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ext;
}

AnnotatedSketch single_record(const std::string& path, const std::string& id) {
  std::vector<AnnotatedSketch> records;
  try {
    records = load_records(path);
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (records.empty()) throw DataError(path + ": no records");
  if (id.empty()) return records.front();
  for (auto& r : records) {
    if (r.id == id) return r;
  }
  throw DataError(path + ": no record with id '" + id + "'");
}

struct PipelineFlags {
  std::string prompts;
  int min_parts = kMinParts;
  int max_parts = kMaxParts;
  int max_retries = 2;

  void add(CLI::App& cmd) {
    cmd.add_option("--prompts", prompts, "Directory overriding the built-in prompt templates");
    cmd.add_option("--min-parts", min_parts, "Smallest accepted part count")->capture_default_str();
    cmd.add_option("--max-parts", max_parts, "Largest accepted part count")->capture_default_str();
    cmd.add_option("--max-retries", max_retries, "Retries per stage after a rejected answer")
        ->capture_default_str();
  }

  annopipe::PipelineConfig config() const {
    annopipe::PipelineConfig cfg;
    if (!prompts.empty()) cfg.templates = annopipe::load_templates(prompts);
    cfg.min_parts = min_parts;
    cfg.max_parts = max_parts;
    cfg.max_retries = max_retries;
    return cfg;
  }
};

// mock:<script.json>, replay:<trace-dir> or remote.
annopipe::ClientFactory client_factory(const std::string& spec) {
  if (spec.rfind("mock:", 0) == 0) {
    const json script = json::parse(read_file(spec.substr(5)), nullptr, false);
    if (script.is_discarded() || !script.is_object()) {
      throw UsageError("mock script must be a JSON object of stage -> responses");
    }
    return [script] {
      return std::make_unique<annopipe::ScriptedClient>(annopipe::ScriptedClient::from_json(script));
    };
  }
  if (spec.rfind("replay:", 0) == 0) {
    annopipe::StageTrace merged;
    for (const auto& entry : fs::directory_iterator(spec.substr(7))) {
      const std::string name = entry.path().filename().string();
      if (name.size() < 11 || name.substr(name.size() - 11) != ".trace.json") continue;
      for (auto& rec : annopipe::trace_from_json(json::parse(read_file(entry.path().string())))) {
        merged.push_back(std::move(rec));
      }
    }
    return [merged] { return std::make_unique<annopipe::ReplayClient>(merged); };
  }
  if (spec == "remote") {
    try {
      annopipe::RemoteVlmClient::from_env();
    } catch (const annopipe::ClientError& e) {
      throw UsageError(e.what());
    }
    return [] { return annopipe::RemoteVlmClient::from_env(); };
  }
  throw UsageError("unknown client '" + spec + "' (expected mock:<script>, replay:<dir> or remote)");
}

int cmd_annotate(const std::string& in_dir, const std::string& out_dir,
                 const std::string& client, int concurrency, const PipelineFlags& flags,
                 std::ostream& out, std::ostream& err) {
  auto cfg = flags.config();
  const int cores = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  cfg.concurrency = std::max(1, std::min(cores, concurrency));
  try {
    cfg.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto factory = client_factory(client);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.is_regular_file() && has_extension(entry.path(), ".svg")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  int failures = 0;
  std::vector<annopipe::BatchItem> items;
  for (const auto& f : files) {
    try {
      items.push_back({f.stem().string(), import_svg(read_file(f.string()))});
    } catch (const std::exception& e) {
      err << "error: " << f.filename().string() << ": " << e.what() << "\n";
      ++failures;
    }
  }

  for (const auto& o : annopipe::annotate_batch(factory, items, cfg)) {
    const fs::path base = fs::path(out_dir) / o.id;
    write_bytes(base.string() + ".trace.json", annopipe::trace_to_json(o.trace).dump(2) + "\n");
    if (!o.record) {
      err << "error: " << o.id << ".svg: " << o.error << "\n";
      ++failures;
      continue;
    }
    write_bytes(base.string() + ".json", serialize_record(*o.record) + "\n");
  }
  out << files.size() - failures << " of " << files.size() << " sketches annotated\n";
  return failures == 0 ? kOk : kDataError;
}

int cmd_augment(const std::string& in, const std::string& out_path, int max_perms,
                std::uint64_t seed, bool round_ten, std::ostream& out, std::ostream& err) {
  if (max_perms < 1) throw UsageError("--max-perms must be >= 1");
  std::vector<AnnotatedSketch> records;
  try {
    records = load_records(in);
  } catch (const std::exception& e) {
    throw DataError(in + ": " + e.what());
  }
  std::string lines;
  std::size_t total = 0;
  for (const auto& r : records) {
    const auto violations = validate_annotation(r);
    if (!violations.empty()) {
      err << "error: record '" << r.id << "': " << violations.front().code << ": "
          << violations.front().detail << "\n";
      return kDataError;
    }
    const auto examples = permute_augment(r, max_perms, seed);
    for (const auto& ex : examples) {
      lines += turn_example_json(ex, r.id, round_ten ? Rounding::kNearestTen : Rounding::kNone);
      lines += '\n';
    }
    out << r.id << ": " << examples.size() << " examples\n";
    total += examples.size();
  }
  write_bytes(out_path, lines);
  out << total << " examples from " << records.size() << " records\n";
  return kOk;
}

struct GrpoFlags {
  std::string variant = "process";
  int steps = 500;
  int iterations = 1;
  int group_size = 8;
  int batch_size = 1;
  int inner_updates = grpo::GrpoConfig{}.inner_updates;
  double learning_rate = grpo::GrpoConfig{}.learning_rate;
  double clip_eps = 0.2;
  double kl_beta = 0.0;
  double lambda = 1.0;
  int eval_rollouts = 64;
  std::uint64_t seed = 0;
  std::string corpus = "synthetic";
  std::string embedder = "baseline";
  std::string log = "grpo_log.jsonl";
  std::string checkpoint = "grpo_checkpoint.json";
};

int cmd_grpo_toy(const GrpoFlags& f, std::ostream& out) {
  grpo::GrpoConfig cfg;
  try {
    cfg.variant = grpo::parse_variant(f.variant);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.steps_per_iteration = f.steps;
  cfg.iterations = f.iterations;
  cfg.group_size = f.group_size;
  cfg.batch_size = f.batch_size;
  cfg.inner_updates = f.inner_updates;
  cfg.learning_rate = f.learning_rate;
  cfg.clip_eps = f.clip_eps;
  cfg.kl_beta = f.kl_beta;
  cfg.lambda = f.lambda;
  cfg.eval_rollouts = f.eval_rollouts;
  cfg.seed = f.seed;
  try {
    cfg.check();
  } catch (const grpo::ConfigError& e) {
    throw UsageError(e.what());
  }

  std::vector<AnnotatedSketch> corpus;
  if (f.corpus == "synthetic") {
    corpus.push_back(grpo::synthetic_task());
  } else {
    try {
      corpus = load_records(f.corpus);
    } catch (const std::exception& e) {
      throw DataError(f.corpus + ": " + e.what());
    }
  }
  std::unique_ptr<rewards::Embedder> embedder;
  try {
    embedder = rewards::make_embedder(f.embedder);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::string log_text;
  grpo::ToyStrokePolicy policy;
  const auto log = grpo::train_loop(policy, corpus, cfg, *embedder, [&](const grpo::LogRecord& r) {
    log_text += r.to_json().dump() + "\n";
  });
  write_bytes(f.log, log_text);
  write_bytes(f.checkpoint, policy.to_json(cfg.seed).dump() + "\n");

  const grpo::LogRecord* first = nullptr;
  const grpo::LogRecord* last = nullptr;
  for (const auto& r : log) {
    if (r.phase != "eval") continue;
    if (!first) first = &r;
    last = &r;
  }
  out << "variant " << grpo::to_string(cfg.variant) << ", " << cfg.total_steps() << " steps\n";
  if (first) out << "initial mean reward: " << first->mean_reward << "\n";
  if (last) out << "final mean reward: " << last->mean_reward << "\n";
  return kOk;
}

int cmd_render(const std::string& in, const std::string& id, const std::string& out_path,
               bool colored, std::ostream& out) {
  const auto record = single_record(in, id);
  if (has_extension(out_path, ".svg")) {
    write_bytes(out_path, export_svg(record.sketch));
  } else {
    const auto bitmap = colored ? raster::recolor_render(record.sketch, record.assignment)
                                : raster::rasterize(record.sketch);
    write_bytes(out_path, raster::encode_png(bitmap));
  }
  out << "wrote " << out_path << "\n";
  return kOk;
}

int cmd_diagviz(const std::string& in, const std::string& id, const std::string& out_path,
                std::ostream& out) {
  const auto record = single_record(in, id);
  const auto panel = raster::diagnostic_panel(record.parts, record.assignment, record.sketch);
  write_bytes(out_path, raster::encode_png(panel));
  out << "wrote " << out_path << " (" << panel.width << "x" << panel.height << ")\n";
  return kOk;
}

int cmd_random(std::uint64_t seed, int count, const std::string& out_dir, bool png,
               std::ostream& out) {
  if (count < 1) throw UsageError("--count must be >= 1");
  for (int i = 0; i < count; ++i) {
    const Sketch sketch = random_sketch(seed + static_cast<std::uint64_t>(i));
    const fs::path base = fs::path(out_dir) / ("random_" + std::to_string(seed + i));
    write_bytes(base.string() + ".svg", export_svg(sketch));
    if (png) write_bytes(base.string() + ".png", raster::encode_png(raster::rasterize(sketch)));
  }
  out << "wrote " << count << " sketches to " << out_dir << "\n";
  return kOk;
}

session::HttpServer* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::string& data_dir,
              const std::vector<std::string>& record_files, const PipelineFlags& flags,
              std::ostream& out) {
  session::BackendRegistry backends;
  for (const auto& path : record_files) {
    try {
      backends.load_records(path);
    } catch (const std::exception& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  const auto pipeline = flags.config();
  std::string turn_template = annopipe::default_templates().at("turn");
  if (!flags.prompts.empty() && fs::exists(fs::path(flags.prompts) / "turn.txt")) {
    turn_template = read_file((fs::path(flags.prompts) / "turn.txt").string());
  }
  backends.set_vlm([] { return std::shared_ptr<annopipe::VlmClient>(annopipe::RemoteVlmClient::from_env()); },
                   turn_template);
  session::SessionService service(session::SessionStore(data_dir), std::move(backends));
  session::HttpServer server(service, pipeline);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  out << "serving on http://" << host << ":" << port << " (data in " << data_dir << ")"
      << std::endl;
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok) throw DataError("could not bind " + host + ":" + std::to_string(port));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Part-by-part vector sketch tooling: annotation, augmentation, toy GRPO training "
               "and an interactive session service.",
               "partsketch"};
  app.require_subcommand(1);

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Run the seven-stage part annotation over a directory of SVGs");
  std::string ann_in, ann_out, ann_client = "remote";
  int ann_concurrency = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  PipelineFlags ann_flags;
  annotate->add_option("input", ann_in, "Directory of SVG sketches")->required()->check(CLI::ExistingDirectory);
  annotate->add_option("output", ann_out, "Directory receiving <name>.json and <name>.trace.json")->required();
  annotate->add_option("--client", ann_client, "mock:<script.json>, replay:<trace-dir> or remote (VLM_ENDPOINT, VLM_API_KEY)")
      ->capture_default_str();
  annotate->add_option("--concurrency", ann_concurrency, "Sketches annotated in parallel (capped at the processor count)")
      ->capture_default_str();
  ann_flags.add(*annotate);

  // augment
  auto* augment = app.add_subcommand("augment", "Expand annotated records into per-turn training examples");
  std::string aug_in, aug_out;
  int aug_perms = 20;
  std::uint64_t aug_seed = 0;
  bool aug_exact = false;
  augment->add_option("records", aug_in, "Record JSON, JSON array or JSON-Lines corpus")->required()->check(CLI::ExistingFile);
  augment->add_option("output", aug_out, "JSON-Lines file of examples")->required();
  augment->add_option("--max-perms", aug_perms, "Part orders sampled per record")->capture_default_str();
  augment->add_option("--seed", aug_seed, "Permutation sampling seed")->capture_default_str();
  augment->add_flag("--exact", aug_exact, "Keep coordinates unrounded instead of rounding to multiples of ten");

  // grpo-toy
  auto* grpo_cmd = app.add_subcommand("grpo-toy", "Train the toy stroke policy with multi-turn GRPO");
  GrpoFlags g;
  grpo_cmd->add_option("--variant", g.variant, "process, outcome, tail-sum or single-turn")->capture_default_str();
  grpo_cmd->add_option("--steps", g.steps, "Training steps per iteration")->capture_default_str();
  grpo_cmd->add_option("--iterations", g.iterations, "Outer iterations (reference policy refresh)")->capture_default_str();
  grpo_cmd->add_option("--group-size", g.group_size, "Rollouts per group")->capture_default_str();
  grpo_cmd->add_option("--batch-size", g.batch_size, "Tasks per step")->capture_default_str();
  grpo_cmd->add_option("--inner-updates", g.inner_updates, "Ascent steps per sampled batch")->capture_default_str();
  grpo_cmd->add_option("--lr", g.learning_rate, "Adam learning rate")->capture_default_str();
  grpo_cmd->add_option("--clip-eps", g.clip_eps, "Ratio clip radius")->capture_default_str();
  grpo_cmd->add_option("--kl-beta", g.kl_beta, "KL penalty weight")->capture_default_str();
  grpo_cmd->add_option("--lambda", g.lambda, "Path-count reward weight")->capture_default_str();
  grpo_cmd->add_option("--eval-rollouts", g.eval_rollouts, "Rollouts per evaluation")->capture_default_str();
  grpo_cmd->add_option("--seed", g.seed, "Training seed")->capture_default_str();
  grpo_cmd->add_option("--corpus", g.corpus, "\"synthetic\" or a record file")->capture_default_str();
  grpo_cmd->add_option("--embedder", g.embedder, "baseline or external:<url>")->capture_default_str();
  grpo_cmd->add_option("--log", g.log, "JSON-Lines training log")->capture_default_str();
  grpo_cmd->add_option("--checkpoint", g.checkpoint, "Policy parameter checkpoint")->capture_default_str();

  // render
  auto* render = app.add_subcommand("render", "Render a record to PNG or SVG");
  std::string ren_in, ren_id, ren_out;
  bool ren_color = false;
  render->add_option("record", ren_in, "Record file")->required()->check(CLI::ExistingFile);
  render->add_option("--id", ren_id, "Record id when the file holds several");
  render->add_option("-o,--out", ren_out, "Output .png or .svg")->required();
  render->add_flag("--color", ren_color, "Color each path by its part");

  // diagviz
  auto* diagviz = app.add_subcommand("diagviz", "Write the legend plus part-colored diagnostic image");
  std::string dv_in, dv_id, dv_out;
  diagviz->add_option("record", dv_in, "Record file")->required()->check(CLI::ExistingFile);
  diagviz->add_option("--id", dv_id, "Record id when the file holds several");
  diagviz->add_option("-o,--out", dv_out, "Output PNG")->required();

  // random
  auto* random = app.add_subcommand("random", "Generate seeded random sketches");
  std::uint64_t rnd_seed = 0;
  int rnd_count = 1;
  std::string rnd_out = ".";
  bool rnd_png = false;
  random->add_option("--seed", rnd_seed, "Seed of the first sketch")->capture_default_str();
  random->add_option("--count", rnd_count, "Number of sketches (seeds seed..seed+count-1)")->capture_default_str();
  random->add_option("-o,--out", rnd_out, "Output directory")->capture_default_str();
  random->add_flag("--png", rnd_png, "Also write a PNG render per sketch");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the interactive session HTTP service");
  std::string srv_host = "127.0.0.1", srv_data = "sessions";
  int srv_port = 8080;
  std::vector<std::string> srv_records;
  PipelineFlags srv_flags;
  serve->add_option("--host", srv_host, "Bind address")->capture_default_str();
  serve->add_option("--port", srv_port, "Port")->capture_default_str();
  serve->add_option("--data-dir", srv_data, "Directory holding one JSON file per session")->capture_default_str();
  serve->add_option("--records", srv_records, "Record files available to replay:<id> backends");
  srv_flags.add(*serve);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == annotate) return cmd_annotate(ann_in, ann_out, ann_client, ann_concurrency, ann_flags, out, err);
    if (active == augment) return cmd_augment(aug_in, aug_out, aug_perms, aug_seed, !aug_exact, out, err);
    if (active == grpo_cmd) return cmd_grpo_toy(g, out);
    if (active == render) return cmd_render(ren_in, ren_id, ren_out, ren_color, out);
    if (active == diagviz) return cmd_diagviz(dv_in, dv_id, dv_out, out);
    if (active == random) return cmd_random(rnd_seed, rnd_count, rnd_out, rnd_png, out);
    if (active == serve) return cmd_serve(srv_host, srv_port, srv_data, srv_records, srv_flags, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace partsketch::cli
