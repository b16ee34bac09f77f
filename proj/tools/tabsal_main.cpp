// Copyright 2026 The Tabsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabsal/ablate.hpp"
#include "tabsal/augmentor.hpp"
#include "tabsal/config.hpp"
#include "tabsal/datamodel.hpp"
#include "tabsal/encoder.hpp"
#include "tabsal/error.hpp"
#include "tabsal/eval.hpp"
#include "tabsal/kernels.hpp"
#include "tabsal/network.hpp"
#include "tabsal/salience.hpp"
#include "tabsal/synthgen.hpp"
#include "tabsal/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tabsal;

namespace {

struct CommonOpts {
  std::string preset = "desk";
  std::string config_file;
  std::string run_dir = "runs/desk";
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--preset", opts.preset, "configuration preset: desk|paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--config", opts.config_file, "key=value config file");
  cmd->add_option("--run-dir", opts.run_dir,
                  "directory for pipeline artifacts");
  cmd->add_option("--set", opts.overrides,
                  "override a config key, e.g. --set train.total_steps=100");
  cmd->add_option("--seed", opts.seed, "seed for generation and training");
}

AppConfig resolve(const CommonOpts& opts) {
  std::optional<fs::path> file;
  if (!opts.config_file.empty()) file = fs::path(opts.config_file);
  return resolve_config(opts.preset, file, opts.overrides, opts.seed);
}

void print_summary(const std::string& command, json fields) {
  fields["command"] = command;
  fields["ok"] = true;
  std::cout << fields.dump() << std::endl;
}

Dataset load_run_dataset(const fs::path& run_dir) {
  return load_dataset(run_dir / "dataset" / "tables.json",
                      run_dir / "dataset" / "instances.jsonl");
}

Vocab load_or_build_vocab(const fs::path& run_dir, const Dataset& dataset) {
  fs::path vocab_path = run_dir / "vocab.txt";
  if (fs::exists(vocab_path)) return Vocab::load(vocab_path);
  Vocab vocab = Vocab::build(dataset);
  vocab.save(vocab_path);
  return vocab;
}

Params load_run_checkpoint(const fs::path& run_dir, const std::string& name) {
  fs::path p = name.find('/') != std::string::npos || name.ends_with(".ckpt")
                   ? fs::path(name)
                   : run_dir / (name + ".ckpt");
  if (!fs::exists(p))
    throw MissingCheckpoint("checkpoint not found: " + p.string());
  return load_checkpoint(p);
}

std::map<std::string, SalienceProfile> load_profile_map(const fs::path& p) {
  if (!fs::exists(p))
    throw IoError("salience file not found: " + p.string() +
                  " (run the salience command first)");
  std::map<std::string, SalienceProfile> out;
  for (auto& prof : load_salience_file(p))
    out.emplace(prof.instance_id, std::move(prof));
  return out;
}

ModelConfig assemble_model_config(const AppConfig& config, const Vocab& vocab) {
  ModelConfig mc = config.model;
  mc.vocab_size = vocab.size();
  mc.validate();
  return mc;
}

// ---- Subcommand bodies -----------------------------------------------------

int cmd_gen_data(const CommonOpts& opts) {
  AppConfig config = resolve(opts);
  GeneratedData data = generate_dataset(config.gen);
  fs::path run_dir(opts.run_dir);
  save_dataset(data.dataset, run_dir / "dataset");
  save_audit_file(data.audit, run_dir / "dataset" / "audit.jsonl");
  write_config_file(config, run_dir / "config.txt");

  SplitStats stats = split_stats(data.dataset);
  print_summary(
      "gen-data",
      json{{"seed", config.gen.seed},
           {"instances",
            {{"train", stats.train.instances},
             {"val", stats.val.instances},
             {"test", stats.test.instances}}},
           {"tables",
            {{"train", stats.train.tables},
             {"val", stats.val.tables},
             {"test", stats.test.tables}}},
           {"simple",
            {{"train", stats.train.simple},
             {"val", stats.val.simple},
             {"test", stats.test.simple}}},
           {"dataset_dir", (run_dir / "dataset").string()}});
  return 0;
}

int cmd_train_baseline(const CommonOpts& opts) {
  AppConfig config = resolve(opts);
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  ModelConfig mc = assemble_model_config(config, vocab);

  TrainResult result = train_stage_a(dataset, vocab, mc, config.train);
  save_checkpoint(result.final_params, run_dir / "stage_a.ckpt");
  save_checkpoint(result.best_params, run_dir / "stage_a_best.ckpt");
  save_metrics_log(result.log, run_dir / "metrics_stage_a.jsonl");

  EvalReport best_val = evaluate(result.best_params, vocab, dataset, Split::kVal);
  print_summary("train-baseline",
                json{{"seed", config.train.seed},
                     {"steps", config.train.total_steps},
                     {"vocab_size", vocab.size()},
                     {"kernels", kernels::active().name},
                     {"best_step", result.best_step},
                     {"best_val_accuracy", best_val.accuracy},
                     {"best_val_simple_accuracy", best_val.simple_accuracy},
                     {"best_val_complex_accuracy", best_val.complex_accuracy},
                     {"checkpoint", (run_dir / "stage_a_best.ckpt").string()}});
  return 0;
}

int cmd_train_mlm(const CommonOpts& opts) {
  AppConfig config = resolve(opts);
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  ModelConfig mc = assemble_model_config(config, vocab);

  TrainResult result = train_stage_a_prime(dataset, vocab, mc, config.train);
  save_checkpoint(result.best_params, run_dir / "mlm.ckpt");
  save_metrics_log(result.log, run_dir / "metrics_mlm.jsonl");

  double recovery = mlm_recovery_accuracy(result.best_params, vocab, dataset,
                                          Split::kVal, config.train.seed, 400);
  print_summary("train-mlm",
                json{{"seed", config.train.seed},
                     {"steps", config.train.total_steps},
                     {"val_recovery_accuracy", recovery},
                     {"chance_level", 1.0 / vocab.size()},
                     {"checkpoint", (run_dir / "mlm.ckpt").string()}});
  return 0;
}

int cmd_salience(const CommonOpts& opts, const std::string& split_name,
                 int limit) {
  AppConfig config = resolve(opts);
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  ProbeModel probe{load_run_checkpoint(run_dir, "stage_a_best"),
                   std::move(vocab)};

  Split split = split_from_string(split_name);
  std::vector<SalienceProfile> profiles = estimate_profiles(
      dataset, split, probe, limit, config.salience_threads);
  save_salience_file(profiles, run_dir / "salience.jsonl");

  double mean_top = 0.0;
  for (const auto& prof : profiles)
    mean_top += prof.scores.empty() ? 0.0 : prof.scores[most_salient(prof)];
  if (!profiles.empty()) mean_top /= static_cast<double>(profiles.size());

  // Observational check against the generator's audit trail: how often the
  // corrupted token of a refuted statement lands in the salience top 3.
  json top3 = nullptr;
  fs::path audit_path = run_dir / "dataset" / "audit.jsonl";
  if (fs::exists(audit_path)) {
    std::map<std::string, const SalienceProfile*> by_id;
    for (const auto& prof : profiles) by_id.emplace(prof.instance_id, &prof);
    int hits = 0, total = 0;
    for (const auto& rec : load_audit_file(audit_path)) {
      if (rec.corrupt_index < 0) continue;
      auto it = by_id.find(rec.id);
      if (it == by_id.end()) continue;
      const auto& scores = it->second->scores;
      if (rec.corrupt_index >= static_cast<int>(scores.size())) continue;
      int rank = 0;
      for (int j = 0; j < static_cast<int>(scores.size()); ++j) {
        if (scores[j] > scores[rec.corrupt_index] ||
            (scores[j] == scores[rec.corrupt_index] && j < rec.corrupt_index))
          ++rank;
      }
      ++total;
      hits += rank < 3 ? 1 : 0;
    }
    if (total > 0) top3 = static_cast<double>(hits) / total;
  }

  print_summary("salience",
                json{{"split", split_name},
                     {"profiles", profiles.size()},
                     {"mean_top_score", mean_top},
                     {"corrupted_token_top3_rate", top3},
                     {"output", (run_dir / "salience.jsonl").string()}});
  return 0;
}

int cmd_augment(const CommonOpts& opts, const std::string& mode_name) {
  AppConfig config = resolve(opts);
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  MlmModel mlm{load_run_checkpoint(run_dir, "mlm"), std::move(vocab)};
  auto profiles = load_profile_map(run_dir / "salience.jsonl");

  AugMode mode = aug_mode_from_string(mode_name);
  std::vector<AugmentedInstance> records =
      augment_dataset(dataset, profiles, mlm, config.train.k, mode);
  fs::path out = run_dir / (mode == AugMode::kUniform ? "augmented_uniform.jsonl"
                                                      : "augmented.jsonl");
  save_augmented_file(records, out);

  size_t originals = 0;
  for (const auto& r : records) originals += r.replaced_index < 0 ? 1 : 0;
  print_summary("augment", json{{"mode", mode_name},
                                {"k", config.train.k},
                                {"records", records.size()},
                                {"originals", originals},
                                {"augments", records.size() - originals},
                                {"output", out.string()}});
  return 0;
}

int cmd_train_joint(const CommonOpts& opts) {
  AppConfig config = resolve(opts);
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  Params stage_a = load_run_checkpoint(run_dir, "stage_a_best");

  std::map<std::string, SalienceProfile> profiles;
  if (config.train.alpha < 1.0)
    profiles = load_profile_map(run_dir / "salience.jsonl");

  std::vector<AugmentedInstance> augmented;
  if (config.train.aug_mode != AugMode::kOff) {
    fs::path p = run_dir / (config.train.aug_mode == AugMode::kUniform
                                ? "augmented_uniform.jsonl"
                                : "augmented.jsonl");
    if (!fs::exists(p))
      throw IoError("augmented file not found: " + p.string() +
                    " (run the augment command first)");
    augmented = load_augmented_file(p);
  }

  TrainResult result =
      train_joint(dataset, profiles, augmented, stage_a, vocab, config.train);
  save_checkpoint(result.final_params, run_dir / "joint.ckpt");
  save_checkpoint(result.best_params, run_dir / "joint_best.ckpt");
  save_metrics_log(result.log, run_dir / "metrics_joint.jsonl");

  EvalReport best_val = evaluate(result.best_params, vocab, dataset, Split::kVal);
  print_summary("train-joint",
                json{{"seed", config.train.seed},
                     {"alpha", config.train.alpha},
                     {"aug_mode", to_string(config.train.aug_mode)},
                     {"masking_strategy", to_string(config.train.masking_strategy)},
                     {"steps", config.train.total_steps},
                     {"best_step", result.best_step},
                     {"best_val_accuracy", best_val.accuracy},
                     {"best_val_simple_accuracy", best_val.simple_accuracy},
                     {"checkpoint", (run_dir / "joint_best.ckpt").string()}});
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint,
             const std::string& split_name) {
  resolve(opts);  // validates config/overrides even though eval needs none
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  Params params = load_run_checkpoint(run_dir, checkpoint);

  EvalReport report =
      evaluate(params, vocab, dataset, split_from_string(split_name));
  std::string stem = fs::path(checkpoint).stem().string();
  fs::path out = run_dir / ("eval_" + stem + "_" + split_name + ".json");
  save_eval_report(report, out);

  std::cout << render_eval_report(report);
  print_summary("eval", json{{"checkpoint", checkpoint},
                             {"split", split_name},
                             {"n_instances", report.n_instances},
                             {"accuracy", report.accuracy},
                             {"simple_accuracy", report.simple_accuracy},
                             {"complex_accuracy", report.complex_accuracy},
                             {"report", out.string()}});
  return 0;
}

int cmd_ablate(const CommonOpts& opts) {
  AppConfig config = resolve(opts);
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  Params stage_a = load_run_checkpoint(run_dir, "stage_a_best");
  MlmModel mlm{load_run_checkpoint(run_dir, "mlm"), vocab};
  auto profiles = load_profile_map(run_dir / "salience.jsonl");

  auto aug_prob = augment_dataset(dataset, profiles, mlm, config.train.k,
                                  AugMode::kProbabilistic);
  auto aug_uniform =
      augment_dataset(dataset, profiles, mlm, config.train.k, AugMode::kUniform);

  AblationReport report = ablate(dataset, profiles, aug_prob, aug_uniform,
                                 stage_a, vocab, config.train);
  {
    std::ofstream out(run_dir / "ablation.json", std::ios::trunc);
    if (!out) throw IoError("cannot write ablation.json");
    out << ablation_report_json(report) << "\n";
  }
  std::cout << render_ablation_report(report);

  json arms = json::array();
  for (const auto& a : report.arms)
    arms.push_back(json{{"group", a.group},
                        {"name", a.name},
                        {"ok", a.ok},
                        {"val_accuracy", a.val_accuracy},
                        {"test_accuracy", a.test_accuracy}});
  print_summary("ablate", json{{"seed", config.train.seed},
                               {"arms", arms},
                               {"report", (run_dir / "ablation.json").string()}});
  return 0;
}

int cmd_heatmap(const CommonOpts& opts, int limit) {
  AppConfig config = resolve(opts);
  fs::path run_dir(opts.run_dir);
  Dataset dataset = load_run_dataset(run_dir);
  Vocab vocab = load_or_build_vocab(run_dir, dataset);
  auto profiles = load_profile_map(run_dir / "salience.jsonl");
  MlmModel mlm{load_run_checkpoint(run_dir, "mlm"), vocab};

  std::map<std::string, const LabeledInstance*> by_id;
  for (const auto& inst : dataset.instances) by_id.emplace(inst.id, &inst);

  std::vector<HeatmapRecord> records;
  for (const auto& [id, prof] : profiles) {
    if (limit >= 0 && static_cast<int>(records.size()) >= limit) break;
    auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    const LabeledInstance& inst = *it->second;
    std::vector<HeatmapProposal> proposals;
    int least = least_salient(prof, inst.statement);
    if (least != kNoEligibleToken) {
      for (const auto& [tok, w] :
           propose(inst.statement, least, mlm, config.train.k))
        proposals.push_back({tok, w});
    }
    records.push_back(make_heatmap_record(prof, inst.statement, proposals));
  }
  save_heatmap_file(records, run_dir / "heatmap.jsonl");
  for (const auto& rec : records) std::cout << render_heatmap(rec);

  print_summary("heatmap", json{{"records", records.size()},
                                {"output", (run_dir / "heatmap.jsonl").string()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"salience-aware table fact verification, desk scale"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string split_name = "train";
  std::string eval_split = "val";
  std::string checkpoint = "joint_best";
  std::string aug_mode_name = "probabilistic";
  int limit = -1;
  int heatmap_limit = 5;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  add_common(gen, opts);
  auto* baseline =
      app.add_subcommand("train-baseline", "stage A: verification-only model");
  add_common(baseline, opts);
  auto* mlm = app.add_subcommand(
      "train-mlm", "stage A': statement-only masked-token model");
  add_common(mlm, opts);
  auto* sal =
      app.add_subcommand("salience", "counterfactual salience profiles");
  add_common(sal, opts);
  sal->add_option("--split", split_name, "split to probe")
      ->check(CLI::IsMember({"train", "val", "test"}));
  sal->add_option("--limit", limit, "probe only the first N instances");
  auto* aug = app.add_subcommand("augment", "least-salient token augmentation");
  add_common(aug, opts);
  aug->add_option("--mode", aug_mode_name, "probabilistic|uniform")
      ->check(CLI::IsMember({"probabilistic", "uniform"}));
  auto* joint = app.add_subcommand(
      "train-joint", "salience-aware joint training from the stage A model");
  add_common(joint, opts);
  auto* ev = app.add_subcommand("eval", "accuracy report for a checkpoint");
  add_common(ev, opts);
  ev->add_option("--checkpoint", checkpoint, "checkpoint name or path");
  ev->add_option("--split", eval_split, "split to evaluate")
      ->check(CLI::IsMember({"train", "val", "test"}));
  auto* ab = app.add_subcommand("ablate", "masking/augmentation ablation arms");
  add_common(ab, opts);
  auto* heat = app.add_subcommand("heatmap", "render salience heatmaps");
  add_common(heat, opts);
  heat->add_option("--limit", heatmap_limit, "number of instances to render");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(opts);
    if (baseline->parsed()) return cmd_train_baseline(opts);
    if (mlm->parsed()) return cmd_train_mlm(opts);
    if (sal->parsed()) return cmd_salience(opts, split_name, limit);
    if (aug->parsed()) return cmd_augment(opts, aug_mode_name);
    if (joint->parsed()) return cmd_train_joint(opts);
    if (ev->parsed()) return cmd_eval(opts, checkpoint, eval_split);
    if (ab->parsed()) return cmd_ablate(opts);
    if (heat->parsed()) return cmd_heatmap(opts, heatmap_limit);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error [UsageError] " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error [" << e.category() << "] " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [Unexpected] " << e.what() << "\n";
    return 1;
  }
}
