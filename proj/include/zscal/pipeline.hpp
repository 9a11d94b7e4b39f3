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

// End-to-end flow: scores -> posteriors -> calibration -> ensemble ->
// predictions -> report. Each stage's output can be written to disk so a run
// can be audited after the fact.

#ifndef ZSCAL_PIPELINE_HPP_
#define ZSCAL_PIPELINE_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zscal/calibration.hpp"
#include "zscal/error.hpp"
#include "zscal/eval.hpp"
#include "zscal/io.hpp"
#include "zscal/report.hpp"
#include "zscal/score_core.hpp"

namespace zscal {

// Raised when a pipeline stage fails; names the stage and the input.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& subject, const std::string& cause)
      : Error("stage '" + stage + "' failed for " + subject + ": " + cause),
        stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class EnsembleStage {
  kPreCalibration,   // average raw posteriors, then calibrate the average
  kPostCalibration,  // calibrate each prompt, then average
};

struct PipelineOptions {
  CalibrationMethod method = CalibrationMethod::kNone;
  // Target for prior matching; uniform when unset.
  std::optional<std::vector<double>> prior;
  bool ensemble = false;
  EnsembleStage ensemble_stage = EnsembleStage::kPostCalibration;
  // Precomputed weights, applied instead of estimating them (matched by task).
  std::vector<io::WeightsFile> weights;
  // Name of the positive class; produces a PR curve for binary tasks.
  std::optional<std::string> positive_class;
  std::optional<std::uint64_t> seed;
  // Off for unlabelled data: stop after predictions, produce no reports.
  bool evaluate = true;
};

// One posterior table per input file plus extra null-input posteriors from
// separately scored null clips (all rows of a null score file count as null
// inputs).
struct PipelineInput {
  std::vector<ScoreMatrix> scores;
  std::vector<ScoreMatrix> null_scores;
};

struct PipelineArtifacts {
  std::string subject;  // task/model/prompt
  PosteriorTable raw;
  std::optional<CalibrationWeights> weights;
  PosteriorTable calibrated;
  std::vector<Prediction> predictions;
};

struct PipelineResult {
  std::vector<EvalReport> reports;
  std::vector<PipelineArtifacts> artifacts;
};

namespace detail {

inline std::string subject_of(const PosteriorTable& t) {
  return t.labels.task_id() + "/" + t.model_id + "/" + t.prompt_id;
}

template <class F>
auto run_stage(const std::string& stage, const std::string& subject, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, subject, e.what());
  }
}

inline std::string method_label(CalibrationMethod m) {
  switch (m) {
    case CalibrationMethod::kNone: return "uncalibrated";
    case CalibrationMethod::kPriorMatch: return "prior-match";
    case CalibrationMethod::kNullZero: return "null-zero";
    case CalibrationMethod::kNullNoise: return "null-noise";
  }
  return "uncalibrated";
}

}  // namespace detail

class Pipeline {
 public:
  explicit Pipeline(PipelineOptions opts) : opts_(std::move(opts)) {}

  PipelineResult run(const PipelineInput& input) const {
    if (input.scores.empty()) throw InvalidInput("pipeline needs at least one score matrix");
    std::vector<PosteriorTable> tables;
    for (const auto& m : input.scores) {
      const auto subject = m.task_id() + "/" + m.model_id() + "/" + m.prompt_id();
      tables.push_back(detail::run_stage("posterior", subject, [&] {
        auto t = to_posteriors(m);
        for (const auto& n : input.null_scores) {
          if (n.task_id() != m.task_id() || n.model_id() != m.model_id() ||
              n.prompt_id() != m.prompt_id())
            continue;
          if (n.labels() != m.labels())
            throw AlignmentError("null scores disagree with the task's class names");
          for (const auto& row : n.rows()) t.null_rows.push_back(posterior(row.ll));
        }
        return t;
      }));
    }

    PipelineResult result;
    if (!opts_.ensemble) {
      for (const auto& t : tables) finish(calibrate(t), result);
      return result;
    }

    // Group by (task, model), keeping first-seen order.
    std::vector<std::pair<std::string, std::vector<PosteriorTable>>> groups;
    for (auto& t : tables) {
      const auto key = t.labels.task_id() + "/" + t.model_id;
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.first == key; });
      if (it == groups.end()) {
        groups.emplace_back(key, std::vector<PosteriorTable>{});
        it = groups.end() - 1;
      }
      it->second.push_back(std::move(t));
    }
    for (const auto& [key, members] : groups) {
      if (opts_.ensemble_stage == EnsembleStage::kPreCalibration) {
        const auto pooled = detail::run_stage("ensemble", key, [&] { return ensemble(members); });
        finish(calibrate(pooled), result);
      } else {
        std::vector<PosteriorTable> calibrated;
        std::vector<PipelineArtifacts> parts;
        for (const auto& m : members) {
          parts.push_back(calibrate(m));
          calibrated.push_back(parts.back().calibrated);
        }
        auto pooled = detail::run_stage("ensemble", key, [&] { return ensemble(calibrated); });
        PipelineArtifacts art{key + "/ensemble", pooled, std::nullopt, pooled, {}};
        for (auto& p : parts) result.artifacts.push_back(std::move(p));
        finish(std::move(art), result);
      }
    }
    return result;
  }

  // Estimates (or looks up) weights for one table and applies them.
  PipelineArtifacts calibrate(const PosteriorTable& t) const {
    const auto subject = detail::subject_of(t);
    PipelineArtifacts art{subject, t, std::nullopt, t, {}};
    if (const auto* w = supplied_weights(t)) {
      art.weights = w->weights;
    } else if (opts_.method == CalibrationMethod::kPriorMatch) {
      art.weights = detail::run_stage("calibrate", subject, [&] {
        return prior_match(t.posteriors(), target_for(t));
      });
    } else if (opts_.method == CalibrationMethod::kNullZero ||
               opts_.method == CalibrationMethod::kNullNoise) {
      art.weights = detail::run_stage("calibrate", subject, [&] {
        if (t.null_rows.empty())
          throw InvalidInput("no null-input rows available for null-input calibration");
        return null_input_weights(t.null_rows, opts_.method);
      });
    }
    if (art.weights)
      art.calibrated =
          detail::run_stage("reweight", subject, [&] { return reweight_table(t, *art.weights); });
    return art;
  }

 private:
  std::vector<double> target_for(const PosteriorTable& t) const {
    if (!opts_.prior) return uniform_prior(t.num_classes());
    validate_prior(*opts_.prior, t.num_classes());
    return *opts_.prior;
  }

  const io::WeightsFile* supplied_weights(const PosteriorTable& t) const {
    for (const auto& w : opts_.weights)
      if (w.task_id == t.labels.task_id()) return &w;
    return nullptr;
  }

  void finish(PipelineArtifacts art, PipelineResult& result) const {
    const auto& t = art.calibrated;
    const auto subject = art.subject;
    art.predictions = detail::run_stage("predict", subject, [&] { return predict_all(t); });
    if (!opts_.evaluate) {
      result.artifacts.push_back(std::move(art));
      return;
    }
    auto report = detail::run_stage("evaluate", subject, [&] {
      std::optional<std::size_t> positive;
      if (opts_.positive_class) {
        positive = t.labels.index_of(*opts_.positive_class);
        if (!positive)
          throw InvalidInput("positive class '" + *opts_.positive_class + "' is not a class");
      }
      const auto* supplied = supplied_weights(t);
      const auto method = supplied ? detail::method_label(supplied->weights.method())
                                   : detail::method_label(opts_.method);
      auto r = evaluate_table(t, method, positive);
      if (opts_.method != CalibrationMethod::kNone || supplied) {
        const auto target = opts_.method == CalibrationMethod::kPriorMatch
                                 ? target_for(t)
                                 : uniform_prior(t.num_classes());
        const auto ps = t.posteriors();
        const auto identity = std::vector<double>(t.num_classes(), 1.0);
        r.prior_l1_gap = detail::l1_distance(output_prior(ps, identity), target);
      }
      r.seed = opts_.seed;
      return r;
    });
    result.reports.push_back(std::move(report));
    result.artifacts.push_back(std::move(art));
  }

  PipelineOptions opts_;
};

namespace detail {

// Keeps path components readable and free of separators.
inline std::string path_component(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

}  // namespace detail

// Writes every stage's artifact plus the rendered report under `out_dir`:
//   stages/<task>/<model>/<prompt>/{posteriors.jsonl, weights.json,
//                                   calibrated.jsonl, predictions.csv}
//   report.txt, reports.jsonl, distribution.csv, pr_curve.csv
inline void write_pipeline_outputs(const std::filesystem::path& out_dir,
                                   const PipelineResult& result) {
  for (const auto& art : result.artifacts) {
    auto dir = out_dir / "stages";
    std::string part;
    for (char c : art.subject + "/") {
      if (c == '/') {
        dir /= detail::path_component(part);
        part.clear();
      } else {
        part += c;
      }
    }
    std::filesystem::create_directories(dir);
    io::write_posteriors(dir / "posteriors.jsonl", art.raw);
    if (art.weights) io::write_weights(dir / "weights.json", art.raw.labels.task_id(), *art.weights);
    io::write_posteriors(dir / "calibrated.jsonl", art.calibrated);
    if (!art.predictions.empty()) {
      auto os = io::open_out(dir / "predictions.csv");
      io::write_predictions_csv(os, art.calibrated.labels, art.predictions);
    }
  }
  write_report(out_dir, render_report(result.reports));
}

}  // namespace zscal

#endif  // ZSCAL_PIPELINE_HPP_
