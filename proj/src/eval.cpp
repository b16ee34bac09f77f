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

#include "tabsal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tabsal/error.hpp"

namespace tabsal {

using nlohmann::json;

std::string params_fingerprint(const Params& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  visit_params(params, [&](const std::string&, const Mat& m, ParamKind) {
    const unsigned char* bytes =
        reinterpret_cast<const unsigned char*>(m.data());
    for (size_t i = 0; i < m.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  });
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

EvalReport evaluate(const Params& params, const Vocab& vocab,
                    const Dataset& dataset, Split split) {
  EvalReport report;
  report.split = to_string(split);
  report.checkpoint_id = params_fingerprint(params);
  {
    json echo{{"d_model", params.config.d_model},
              {"n_layers", params.config.n_layers},
              {"n_heads", params.config.n_heads},
              {"d_ffn", params.config.d_ffn},
              {"max_len", params.config.max_len},
              {"vocab_size", params.config.vocab_size},
              {"dropout", params.config.dropout}};
    report.config_echo = echo.dump();
  }

  ForwardOptions opts;
  opts.want_token_logits = false;
  std::vector<EncodedInput> batch;
  std::vector<const LabeledInstance*> batch_insts;
  auto flush = [&]() {
    if (batch.empty()) return;
    BatchOutput out = forward(params, batch, opts);
    for (size_t i = 0; i < batch.size(); ++i) {
      const LabeledInstance& inst = *batch_insts[i];
      const int pred = out.entail_prob[i] > 0.5 ? 1 : 0;
      const bool correct = pred == inst.label;
      report.n_instances += 1;
      report.n_correct += correct ? 1 : 0;
      if (inst.difficulty == Difficulty::kSimple) {
        report.n_simple += 1;
        report.n_simple_correct += correct ? 1 : 0;
      } else {
        report.n_complex += 1;
        report.n_complex_correct += correct ? 1 : 0;
      }
    }
    batch.clear();
    batch_insts.clear();
  };

  for (const LabeledInstance* inst : dataset.split_instances(split)) {
    batch.push_back(encode(inst->statement, dataset.table_for(*inst), vocab,
                           params.config.max_len));
    batch_insts.push_back(inst);
    if (batch.size() == 64) flush();
  }
  flush();

  auto ratio = [](int num, int den) {
    return den > 0 ? static_cast<double>(num) / den : 0.0;
  };
  report.accuracy = ratio(report.n_correct, report.n_instances);
  report.simple_accuracy = ratio(report.n_simple_correct, report.n_simple);
  report.complex_accuracy = ratio(report.n_complex_correct, report.n_complex);
  return report;
}

std::string eval_report_json(const EvalReport& r) {
  json j{{"split", r.split},
         {"n_instances", r.n_instances},
         {"n_correct", r.n_correct},
         {"n_simple", r.n_simple},
         {"n_simple_correct", r.n_simple_correct},
         {"n_complex", r.n_complex},
         {"n_complex_correct", r.n_complex_correct},
         {"accuracy", r.accuracy},
         {"simple_accuracy", r.simple_accuracy},
         {"complex_accuracy", r.complex_accuracy},
         {"checkpoint_id", r.checkpoint_id},
         {"config_echo", json::parse(r.config_echo)}};
  return j.dump();
}

std::string render_eval_report(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  out << "split      n      acc     simple   complex   checkpoint\n";
  std::snprintf(line, sizeof(line), "%-8s %5d   %6.4f   %6.4f   %6.4f   %s\n",
                r.split.c_str(), r.n_instances, r.accuracy, r.simple_accuracy,
                r.complex_accuracy, r.checkpoint_id.c_str());
  out << line;
  return out.str();
}

void save_eval_report(const EvalReport& report,
                      const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << eval_report_json(report) << "\n";
  if (!out) throw IoError("failed writing " + p.string());
}

HeatmapRecord make_heatmap_record(const SalienceProfile& profile,
                                  const std::vector<std::string>& tokens,
                                  std::vector<HeatmapProposal> proposals) {
  if (profile.scores.size() != tokens.size())
    throw MissingProfile("heatmap scores/tokens length mismatch for " +
                         profile.instance_id);
  HeatmapRecord rec;
  rec.instance_id = profile.instance_id;
  rec.tokens = tokens;
  rec.scores = profile.scores;
  rec.most_salient = most_salient(profile);
  rec.least_salient = least_salient(profile, tokens);
  rec.proposals = std::move(proposals);
  return rec;
}

namespace {

int score_bucket(double score) {
  int b = static_cast<int>(score * 10.0);
  return std::clamp(b, 0, 9);
}

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", w);
  return buf;
}

}  // namespace

std::string render_heatmap(const HeatmapRecord& rec) {
  std::ostringstream out;
  out << "heatmap " << rec.instance_id << "\n  ";
  for (size_t i = 0; i < rec.tokens.size(); ++i) {
    if (i > 0) out << " ";
    out << rec.tokens[i];
  }
  out << "\n  ";
  for (size_t i = 0; i < rec.tokens.size(); ++i) {
    if (i > 0) out << " ";
    out << std::string(rec.tokens[i].size(),
                       static_cast<char>('0' + score_bucket(rec.scores[i])));
  }
  out << "\n  most=" << rec.most_salient << " '"
      << rec.tokens[rec.most_salient] << "'";
  if (rec.least_salient == kNoEligibleToken) {
    out << "  least=none";
  } else {
    out << "  least=" << rec.least_salient << " '"
        << rec.tokens[rec.least_salient] << "'";
  }
  out << "\n";
  if (!rec.proposals.empty()) {
    out << "  replacements:";
    for (const auto& p : rec.proposals)
      out << " " << p.token << "=" << format_weight(p.weight);
    out << "\n";
  }
  return out.str();
}

namespace {

json heatmap_to_json(const HeatmapRecord& rec) {
  json props = json::array();
  for (const auto& p : rec.proposals)
    props.push_back(json{{"token", p.token}, {"weight", p.weight}});
  return json{{"instance_id", rec.instance_id}, {"tokens", rec.tokens},
              {"scores", rec.scores},           {"most_salient", rec.most_salient},
              {"least_salient", rec.least_salient}, {"proposals", props}};
}

HeatmapRecord heatmap_from_json(const json& j) {
  HeatmapRecord rec;
  rec.instance_id = j.at("instance_id").get<std::string>();
  rec.tokens = j.at("tokens").get<std::vector<std::string>>();
  rec.scores = j.at("scores").get<std::vector<double>>();
  rec.most_salient = j.at("most_salient").get<int>();
  rec.least_salient = j.at("least_salient").get<int>();
  for (const auto& p : j.at("proposals"))
    rec.proposals.push_back({p.at("token").get<std::string>(),
                             p.at("weight").get<double>()});
  return rec;
}

}  // namespace

void save_heatmap_file(const std::vector<HeatmapRecord>& records,
                       const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  for (const auto& rec : records) out << heatmap_to_json(rec).dump() << "\n";
  if (!out) throw IoError("failed writing " + p.string());
}

std::vector<HeatmapRecord> load_heatmap_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + " for reading");
  std::vector<HeatmapRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(heatmap_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(p.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  return out;
}

}  // namespace tabsal
