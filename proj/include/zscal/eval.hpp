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

#ifndef ZSCAL_EVAL_HPP_
#define ZSCAL_EVAL_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zscal/calibration.hpp"
#include "zscal/error.hpp"
#include "zscal/score_core.hpp"

namespace zscal {

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

struct CalibrationGaps {
  double top1_gap = 0.0;
  std::vector<double> all_label_gaps;
};

struct EvalReport {
  std::string task_id;
  std::string model_id;
  std::string prompt_id;
  std::string method;
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::vector<std::string> class_names;
  std::vector<double> class_distribution;
  CalibrationGaps calibration;
  // L1 distance of the calibrated output prior from the target prior; only
  // set for calibrated methods.
  std::optional<double> prior_l1_gap;
  std::optional<std::string> positive_class;
  std::vector<PrPoint> pr_curve;
  std::optional<std::uint64_t> seed;
};

struct EvalCore {
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::vector<double> class_distribution;
};

// Top-1 accuracy and the fraction of predictions landing on each class.
inline EvalCore evaluate(std::span<const Prediction> predictions,
                         std::span<const std::optional<std::size_t>> golds, std::size_t k) {
  if (predictions.size() != golds.size())
    throw AlignmentError("predictions and golds have different lengths");
  if (predictions.empty()) throw InvalidInput("nothing to evaluate");
  std::string missing;
  for (std::size_t i = 0; i < golds.size(); ++i)
    if (!golds[i]) missing += (missing.empty() ? "" : ", ") + predictions[i].utt_id;
  if (!missing.empty()) throw InvalidInput("missing gold labels for: " + missing);

  EvalCore core;
  core.n = predictions.size();
  core.class_distribution.assign(k, 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto c = predictions[i].class_index;
    if (c >= k || *golds[i] >= k) throw InvalidInput("class index out of range");
    core.class_distribution[c] += 1.0;
    if (c == *golds[i]) ++core.correct;
  }
  for (double& f : core.class_distribution) f /= static_cast<double>(core.n);
  core.accuracy = static_cast<double>(core.correct) / static_cast<double>(core.n);
  return core;
}

// Accuracy of guessing uniformly at random on balanced classes.
inline double random_baseline(std::size_t k) {
  if (k < 2) throw InvalidInput("random baseline needs K >= 2");
  return 1.0 / static_cast<double>(k);
}

// Precision and recall of `positive_class` when predicting positive for
// score >= threshold, at every distinct observed positive-class probability.
// Points come back in ascending threshold order, so recall never increases.
inline std::vector<PrPoint> precision_recall_curve(std::span<const ClassPosterior> posteriors,
                                                   std::span<const std::size_t> golds,
                                                   std::size_t positive_class) {
  if (posteriors.size() != golds.size())
    throw AlignmentError("posteriors and golds have different lengths");
  if (positive_class > 1) throw InvalidInput("positive class must be 0 or 1");
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(posteriors.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    if (posteriors[i].size() != 2) throw InvalidInput("PR curve needs binary posteriors");
    const bool pos = golds[i] == positive_class;
    positives += pos ? 1 : 0;
    scored.emplace_back(posteriors[i][positive_class], pos);
  }
  if (positives == 0) throw InvalidInput("PR curve needs at least one positive gold");

  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<PrPoint> curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const double threshold = scored[i].first;
    for (; i < scored.size() && scored[i].first == threshold; ++i)
      (scored[i].second ? tp : fp) += 1;
    curve.push_back({threshold, static_cast<double>(tp) / static_cast<double>(tp + fp),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  }
  std::reverse(curve.begin(), curve.end());
  return curve;
}

namespace detail {

inline std::vector<std::size_t> require_golds(const PosteriorTable& table) {
  std::vector<std::size_t> golds;
  golds.reserve(table.rows.size());
  std::string missing;
  for (const auto& r : table.rows) {
    if (r.gold)
      golds.push_back(*r.gold);
    else
      missing += (missing.empty() ? "" : ", ") + r.utt_id;
  }
  if (!missing.empty()) throw InvalidInput("missing gold labels for: " + missing);
  return golds;
}

}  // namespace detail

// Full report for an already calibrated posterior table.
inline EvalReport evaluate_table(const PosteriorTable& table, std::string method,
                                 std::optional<std::size_t> positive_class = std::nullopt) {
  const auto predictions = predict_all(table);
  std::vector<std::optional<std::size_t>> golds;
  golds.reserve(table.rows.size());
  for (const auto& r : table.rows) golds.push_back(r.gold);
  const auto core = evaluate(predictions, golds, table.num_classes());

  const auto dense_golds = detail::require_golds(table);
  const auto ps = table.posteriors();
  EvalReport report;
  report.task_id = table.labels.task_id();
  report.model_id = table.model_id;
  report.prompt_id = table.prompt_id;
  report.method = std::move(method);
  report.accuracy = core.accuracy;
  report.n = core.n;
  report.correct = core.correct;
  report.class_names = table.labels.class_names();
  report.class_distribution = core.class_distribution;
  report.calibration.top1_gap = top1_calibration_gap(ps, dense_golds);
  report.calibration.all_label_gaps = all_label_calibration_gap(ps, dense_golds);
  if (positive_class) {
    report.positive_class = table.labels[*positive_class];
    report.pr_curve = precision_recall_curve(ps, dense_golds, *positive_class);
  }
  return report;
}

}  // namespace zscal

#endif  // ZSCAL_EVAL_HPP_
