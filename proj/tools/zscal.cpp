/* Copyright 2026 The zscal Authors. All Rights Reserved.

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

// Command-line front end: calibration, CTC scoring, evaluation, reporting and
// synthetic fixtures.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "zscal/zscal.hpp"

namespace fs = std::filesystem;
using namespace zscal;

namespace {

std::optional<std::vector<double>> load_prior(const std::string& spec) {
  if (spec.empty() || spec == "uniform") return std::nullopt;
  return io::read_prior(spec);
}

std::vector<ScoreMatrix> load_scores(const std::vector<std::string>& paths) {
  std::vector<ScoreMatrix> out;
  for (const auto& p : paths) out.push_back(io::read_scores(fs::path(p)));
  return out;
}

// Null-input posteriors in a file: its NULL: row when it has one, otherwise
// every row.
std::vector<ClassPosterior> null_posteriors(const ScoreMatrix& m) {
  std::vector<ClassPosterior> out;
  if (const auto* row = m.null_row()) {
    out.push_back(posterior(row->ll));
    return out;
  }
  for (const auto& row : m.rows()) out.push_back(posterior(row.ll));
  return out;
}

struct CommonFlags {
  std::vector<std::string> scores;
  std::vector<std::string> null_scores;
  std::vector<std::string> weights;
  std::string mode = "uncalibrated";
  std::string prior = "uniform";
  std::string positive;
  bool ensemble = false;
  std::string ensemble_stage = "post";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
};

void add_eval_flags(CLI::App* cmd, CommonFlags& f, bool multi_scores) {
  if (multi_scores)
    cmd->add_option("--scores", f.scores, "score files")->required()->expected(1, -1);
  else
    cmd->add_option("--scores", f.scores, "score file")->required()->expected(1);
  cmd->add_option("--weights", f.weights, "precomputed weights files (matched by task)")
      ->expected(1, -1);
  cmd->add_option("--mode", f.mode, "uncalibrated|prior-match|null-zero|null-noise")
      ->check(CLI::IsMember({"uncalibrated", "prior-match", "null-zero", "null-noise"}));
  cmd->add_option("--prior", f.prior, "target prior for prior matching: uniform or a file");
  cmd->add_option("--null-scores", f.null_scores, "score files of null inputs")->expected(1, -1);
  cmd->add_option("--out", f.out, "output path")->required();
}

PipelineOptions options_from(const CommonFlags& f) {
  PipelineOptions opts;
  opts.method = parse_calibration_method(f.mode);
  opts.prior = load_prior(f.prior);
  opts.ensemble = f.ensemble;
  opts.ensemble_stage =
      f.ensemble_stage == "pre" ? EnsembleStage::kPreCalibration : EnsembleStage::kPostCalibration;
  for (const auto& w : f.weights) opts.weights.push_back(io::read_weights(w));
  if (!f.positive.empty()) opts.positive_class = f.positive;
  if (f.seed_set) opts.seed = f.seed;
  return opts;
}

PipelineResult run(const CommonFlags& f, bool evaluate = true) {
  auto opts = options_from(f);
  opts.evaluate = evaluate;
  return Pipeline(opts).run({load_scores(f.scores), load_scores(f.null_scores)});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated zero-shot classification from label-sequence log-likelihoods"};
  app.require_subcommand(1);

  // calibrate prior-match | null-input
  auto* calibrate = app.add_subcommand("calibrate", "estimate calibration weights");
  calibrate->require_subcommand(1);
  std::string cal_scores, cal_prior = "uniform", cal_out, null_method = "null-noise";
  std::vector<std::string> cal_null;
  auto* pm = calibrate->add_subcommand("prior-match", "weights matching a target output prior");
  pm->add_option("--scores", cal_scores, "score file")->required();
  pm->add_option("--prior", cal_prior, "uniform or a prior file");
  pm->add_option("--out", cal_out, "weights file")->required();
  auto* ni = calibrate->add_subcommand("null-input", "weights from null-input posteriors");
  ni->add_option("--null-scores", cal_null, "score files of null inputs")
      ->required()
      ->expected(1, -1);
  ni->add_option("--method", null_method, "null-zero|null-noise")
      ->check(CLI::IsMember({"null-zero", "null-noise"}));
  ni->add_option("--out", cal_out, "weights file")->required();

  // null-audio gen
  auto* null_audio = app.add_subcommand("null-audio", "synthesize null inputs");
  null_audio->require_subcommand(1);
  auto* gen = null_audio->add_subcommand("gen", "write null-input clips or marker");
  std::string kind = "gaussian", audio_out;
  NullInputSpec spec;
  gen->add_option("--kind", kind, "gaussian|zero")->check(CLI::IsMember({"gaussian", "zero"}));
  gen->add_option("--sigma", spec.sigma, "noise standard deviation");
  gen->add_option("--duration", spec.duration_s, "clip length in seconds");
  gen->add_option("--rate", spec.sample_rate, "sample rate in Hz");
  gen->add_option("--n", spec.num_clips, "number of clips");
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--out", audio_out, "output directory")->required();

  // ctc-score
  auto* ctc = app.add_subcommand("ctc-score", "score class prompts against CTC frame files");
  std::string frames_dir, prompts_file, labels_file, ctc_out, prompt_id, ctc_model = "ctc";
  TokenizerOptions tok;
  bool keep_case = false;
  ctc->add_option("--frames", frames_dir, "directory of frame files")->required();
  ctc->add_option("--prompts", prompts_file, "prompt file")->required();
  ctc->add_option("--labels", labels_file, "label set file")->required();
  ctc->add_option("--out", ctc_out, "score file")->required();
  ctc->add_option("--prompt-id", prompt_id, "prompt to use (default: first)");
  ctc->add_option("--model", ctc_model, "model id for the manifest");
  ctc->add_option("--space-symbol", tok.space_symbol, "vocabulary symbol for a space");
  ctc->add_flag("--keep-case", keep_case, "do not lowercase prompts");

  // predict / evaluate / pr-curve / ensemble / pipeline
  CommonFlags pf, ef, rf, nf, pl;
  auto* predict_cmd = app.add_subcommand("predict", "write per-utterance predictions");
  add_eval_flags(predict_cmd, pf, false);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "write report records");
  add_eval_flags(evaluate_cmd, ef, true);
  evaluate_cmd->add_option("--positive", ef.positive, "positive class for a PR curve");
  auto* pr_cmd = app.add_subcommand("pr-curve", "precision-recall curve for a binary task");
  add_eval_flags(pr_cmd, rf, false);
  pr_cmd->add_option("--positive", rf.positive, "positive class name")->required();
  auto* ens_cmd = app.add_subcommand("ensemble", "average posteriors across prompts");
  add_eval_flags(ens_cmd, nf, true);
  ens_cmd->add_option("--ensemble-stage", nf.ensemble_stage, "pre|post calibration")
      ->check(CLI::IsMember({"pre", "post"}));
  auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage and write all artifacts");
  add_eval_flags(pipe_cmd, pl, true);
  pipe_cmd->add_flag("--ensemble", pl.ensemble, "ensemble prompts per (task, model)");
  pipe_cmd->add_option("--ensemble-stage", pl.ensemble_stage, "pre|post calibration")
      ->check(CLI::IsMember({"pre", "post"}));
  pipe_cmd->add_option("--positive", pl.positive, "positive class for a PR curve");
  pipe_cmd->add_option("--seed", pl.seed, "recorded in every report");

  // report
  auto* report_cmd = app.add_subcommand("report", "render report records as tables");
  std::vector<std::string> report_in;
  std::string report_out;
  report_cmd->add_option("--in", report_in, "report files")->required()->expected(1, -1);
  report_cmd->add_option("--out", report_out, "output directory")->required();

  // synth gen
  auto* synth_cmd = app.add_subcommand("synth", "synthetic biased instances");
  synth_cmd->require_subcommand(1);
  auto* synth_gen = synth_cmd->add_subcommand("gen", "write a synthetic score file");
  std::uint64_t synth_seed = 0;
  std::size_t synth_k = 0, synth_n = 0, synth_null = 32;
  std::string bias_file, synth_prior = "uniform", synth_out;
  synth_gen->add_option("--seed", synth_seed, "seed")->required();
  synth_gen->add_option("--k", synth_k, "number of classes")->required();
  synth_gen->add_option("--n", synth_n, "number of utterances")->required();
  synth_gen->add_option("--bias", bias_file, "bias file (JSON array of K positives)");
  synth_gen->add_option("--prior", synth_prior, "gold prior: uniform or a file");
  synth_gen->add_option("--null-clips", synth_null, "noisy null-input rows to emit");
  synth_gen->add_option("--out", synth_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (pm->parsed()) {
      const auto scores = io::read_scores(fs::path(cal_scores));
      const auto table = to_posteriors(scores);
      const auto prior = load_prior(cal_prior);
      const auto w = prior ? prior_match(table.posteriors(), *prior)
                           : prior_match(table.posteriors());
      io::write_weights(cal_out, scores.task_id(), w);
      std::cout << "prior matching converged in " << w.solver().iters << " sweeps, L1 gap "
                << w.solver().l1_gap << '\n';
    } else if (ni->parsed()) {
      std::vector<ClassPosterior> rows;
      std::string task_id;
      for (const auto& m : load_scores(cal_null)) {
        if (task_id.empty()) task_id = m.task_id();
        if (m.task_id() != task_id) throw InvalidInput("null score files mix tasks");
        for (auto& p : null_posteriors(m)) rows.push_back(std::move(p));
      }
      const auto w = null_input_weights(rows, parse_calibration_method(null_method));
      io::write_weights(cal_out, task_id, w);
    } else if (gen->parsed()) {
      spec.kind = kind == "zero" ? NullInputKind::kZeroEncoderInput : NullInputKind::kGaussianNoise;
      for (const auto& p : generate_null_audio(spec, audio_out)) std::cout << p.string() << '\n';
    } else if (ctc->parsed()) {
      tok.lowercase = !keep_case;
      const auto labels = io::read_labels(labels_file);
      const auto prompts = io::read_prompts(fs::path(prompts_file));
      if (prompts.empty()) throw InvalidInput("prompt file is empty");
      auto prompt = prompts.front();
      if (!prompt_id.empty()) {
        auto it = std::find_if(prompts.begin(), prompts.end(),
                               [&](const auto& p) { return p.prompt_id == prompt_id; });
        if (it == prompts.end()) throw InvalidInput("no prompt '" + prompt_id + "'");
        prompt = *it;
      }
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(frames_dir))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      std::vector<CtcUtterance> utts;
      std::optional<std::vector<std::string>> vocab_symbols;
      for (const auto& f : files) {
        auto frame_file = io::read_frames(f);
        if (!vocab_symbols) vocab_symbols = frame_file.vocab;
        if (frame_file.vocab != *vocab_symbols)
          throw InvalidInput("'" + f.string() + "' uses a different vocabulary");
        if (frame_file.gold_name) {
          frame_file.utterance.gold = labels.index_of(*frame_file.gold_name);
          if (!frame_file.utterance.gold)
            throw InvalidInput("'" + f.string() + "' gold '" + *frame_file.gold_name +
                               "' is not a class");
        }
        utts.push_back(std::move(frame_file.utterance));
      }
      if (!vocab_symbols) throw InvalidInput("no frame files in '" + frames_dir + "'");
      std::unordered_map<std::string, std::size_t> vocab;
      for (std::size_t i = 0; i < vocab_symbols->size(); ++i) vocab[(*vocab_symbols)[i]] = i;
      io::write_scores(fs::path(ctc_out),
                       ctc_score_matrix(utts, labels, prompt, vocab, ctc_model, tok));
    } else if (predict_cmd->parsed()) {
      const auto result = run(pf, false);
      auto os = io::open_out(pf.out);
      const auto& art = result.artifacts.back();
      io::write_predictions_csv(os, art.calibrated.labels, art.predictions);
    } else if (evaluate_cmd->parsed()) {
      const auto result = run(ef);
      auto os = io::open_out(ef.out);
      io::write_reports(os, result.reports);
      std::cout << render_table(tabulate(result.reports));
    } else if (pr_cmd->parsed()) {
      const auto result = run(rf);
      io::open_out(rf.out) << render_report(result.reports).pr;
    } else if (ens_cmd->parsed()) {
      auto f = nf;
      f.ensemble = true;
      const auto result = run(f, false);
      io::write_posteriors(fs::path(f.out), result.artifacts.back().calibrated);
    } else if (pipe_cmd->parsed()) {
      pl.seed_set = pipe_cmd->count("--seed") > 0;
      const auto result = run(pl);
      write_pipeline_outputs(pl.out, result);
      std::cout << render_table(tabulate(result.reports));
    } else if (report_cmd->parsed()) {
      std::vector<EvalReport> reports;
      for (const auto& f : report_in)
        for (auto& r : io::read_reports(f)) reports.push_back(std::move(r));
      const auto rendered = render_report(reports);
      write_report(report_out, rendered);
      std::cout << rendered.table;
    } else if (synth_gen->parsed()) {
      std::vector<double> bias(synth_k, 1.0);
      if (!bias_file.empty()) bias = io::read_prior(bias_file);
      auto prior = load_prior(synth_prior);
      const auto inst = prior ? synth::gen_instance(synth_seed, synth_k, synth_n, bias, *prior)
                              : synth::gen_instance(synth_seed, synth_k, synth_n, bias);
      fs::create_directories(synth_out);
      io::write_scores(fs::path(synth_out) / "scores.jsonl", inst.scores);
      if (synth_null > 0)
        io::write_scores(fs::path(synth_out) / "null_scores.jsonl",
                         synth::gen_null_scores(inst, synth_null, synth_seed + 1));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
