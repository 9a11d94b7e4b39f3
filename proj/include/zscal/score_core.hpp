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

// Tasks, prompts and score matrices, and the mapping from label-sequence
// log-likelihoods to class posteriors and decisions.
//
// A score matrix holds, for every utterance s and class w_k, the natural-log
// likelihood log P(t(w_k) | s) that the speech model generates the rendered
// prompt of w_k. The class posterior is that likelihood normalized over the
// K classes, with no length normalization, and the decision is its argmax.

#ifndef ZSCAL_SCORE_CORE_HPP_
#define ZSCAL_SCORE_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "zscal/error.hpp"

namespace zscal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Rows whose utt id starts with this prefix are null-input rows, scored on an
// information-free input rather than a real test utterance.
inline constexpr std::string_view kNullPrefix = "NULL:";

inline constexpr double kPosteriorTolerance = 1e-12;

inline bool is_null_utt(std::string_view utt_id) {
  return utt_id.substr(0, kNullPrefix.size()) == kNullPrefix;
}

// log(sum(exp(x))) with the max subtracted. Returns -inf when every entry is
// -inf (or the span is empty).
inline double logsumexp(std::span<const double> x) {
  double max = kNegInf;
  for (double v : x) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - max);
  return max + std::log(acc);
}

class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::string task_id, std::vector<std::string> class_names)
      : task_id_(std::move(task_id)), class_names_(std::move(class_names)) {
    if (class_names_.size() < 2)
      throw InvalidInput("label set '" + task_id_ + "' needs at least 2 classes");
    std::unordered_set<std::string> seen;
    for (const auto& name : class_names_) {
      if (name.empty())
        throw InvalidInput("label set '" + task_id_ + "' has an empty class name");
      if (!seen.insert(name).second)
        throw InvalidInput("label set '" + task_id_ + "' repeats class '" + name + "'");
    }
  }

  const std::string& task_id() const { return task_id_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t size() const { return class_names_.size(); }
  const std::string& operator[](std::size_t k) const { return class_names_.at(k); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    auto it = std::find(class_names_.begin(), class_names_.end(), name);
    if (it == class_names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - class_names_.begin());
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::string task_id_;
  std::vector<std::string> class_names_;
};

// A prompt pattern with "{c}" standing for the class label and, for question
// answering, "{q}" standing for the per-utterance question.
struct PromptTemplate {
  std::string prompt_id;
  std::string pattern;
};

inline constexpr std::string_view kClassPlaceholder = "{c}";
inline constexpr std::string_view kQuestionPlaceholder = "{q}";

namespace detail {

inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++count;
  return count;
}

inline void replace_all(std::string& text, std::string_view needle, std::string_view value) {
  for (auto pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + value.size()))
    text.replace(pos, needle.size(), value);
}

}  // namespace detail

// Substitutes the placeholders verbatim. The pattern must contain exactly one
// class placeholder, and exactly one question placeholder iff a question is
// supplied.
inline std::string render_prompt(const PromptTemplate& tmpl, std::string_view class_name,
                                 std::optional<std::string_view> question = std::nullopt) {
  const auto n_class = detail::count_occurrences(tmpl.pattern, kClassPlaceholder);
  const auto n_question = detail::count_occurrences(tmpl.pattern, kQuestionPlaceholder);
  if (n_class != 1)
    throw ArityError("prompt '" + tmpl.prompt_id + "' has " + std::to_string(n_class) +
                     " class placeholders, expected 1");
  if (question.has_value() != (n_question == 1) || n_question > 1)
    throw ArityError("prompt '" + tmpl.prompt_id + "' has " + std::to_string(n_question) +
                     " question placeholders but " + (question ? "a" : "no") +
                     " question was supplied");
  // Question first, so a class name containing "{q}" is left alone.
  std::string out = tmpl.pattern;
  if (question) detail::replace_all(out, kQuestionPlaceholder, *question);
  detail::replace_all(out, kClassPlaceholder, class_name);
  if (out.empty()) throw ArityError("prompt '" + tmpl.prompt_id + "' rendered to empty text");
  return out;
}

struct ScoreRow {
  std::string utt_id;
  std::optional<std::size_t> gold;
  std::vector<double> ll;  // natural log; -inf allowed
};

// Log-likelihoods of every class label sequence for every utterance, for one
// (task, model, prompt) triple.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(LabelSet labels, std::string model_id, std::string prompt_id,
              std::vector<ScoreRow> rows)
      : labels_(std::move(labels)),
        model_id_(std::move(model_id)),
        prompt_id_(std::move(prompt_id)),
        rows_(std::move(rows)) {
    validate();
  }

  const LabelSet& labels() const { return labels_; }
  const std::string& task_id() const { return labels_.task_id(); }
  const std::string& model_id() const { return model_id_; }
  const std::string& prompt_id() const { return prompt_id_; }
  std::size_t num_classes() const { return labels_.size(); }
  const std::vector<ScoreRow>& rows() const { return rows_; }

  const ScoreRow* null_row() const {
    for (const auto& row : rows_)
      if (is_null_utt(row.utt_id)) return &row;
    return nullptr;
  }

 private:
  void validate() const {
    const auto k = labels_.size();
    std::unordered_set<std::string> seen;
    std::size_t null_rows = 0;
    for (const auto& row : rows_) {
      if (row.ll.size() != k)
        throw InvalidInput("row '" + row.utt_id + "' has " + std::to_string(row.ll.size()) +
                           " scores, expected " + std::to_string(k));
      if (!seen.insert(row.utt_id).second)
        throw InvalidInput("duplicate utt id '" + row.utt_id + "'");
      if (row.gold && *row.gold >= k)
        throw InvalidInput("row '" + row.utt_id + "' gold index out of range");
      for (double v : row.ll)
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
          throw InvalidInput("row '" + row.utt_id + "' has a NaN or +inf log-likelihood");
      if (is_null_utt(row.utt_id)) ++null_rows;
    }
    if (null_rows > 1) throw InvalidInput("score matrix has more than one null-input row");
  }

  LabelSet labels_;
  std::string model_id_;
  std::string prompt_id_;
  std::vector<ScoreRow> rows_;
};

class ClassPosterior {
 public:
  ClassPosterior() = default;
  explicit ClassPosterior(std::vector<double> probs) : probs_(std::move(probs)) {
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw InvalidInput("posterior entries must be finite and non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kPosteriorTolerance)
      throw InvalidInput("posterior does not sum to 1");
  }

  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::size_t size() const { return probs_.size(); }

  friend bool operator==(const ClassPosterior&, const ClassPosterior&) = default;

 private:
  std::vector<double> probs_;
};

// probs_k = exp(ll_k - logsumexp(ll)); -inf entries get probability 0.
inline ClassPosterior posterior(std::span<const double> row_ll) {
  for (double v : row_ll)
    if (std::isnan(v)) throw InvalidInput("NaN log-likelihood");
  const double norm = logsumexp(row_ll);
  if (norm == kNegInf) throw DegenerateInput("every log-likelihood in the row is -inf");
  std::vector<double> probs(row_ll.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < row_ll.size(); ++k) {
    probs[k] = std::exp(row_ll[k] - norm);
    sum += probs[k];
  }
  // exp rounding leaves the sum a few ulps off 1; fold it back in.
  for (double& p : probs) p /= sum;
  return ClassPosterior(std::move(probs));
}

// Argmax; ties go to the lowest class index.
inline std::size_t predict(const ClassPosterior& p) {
  const auto probs = p.probs();
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

struct Prediction {
  std::string utt_id;
  std::size_t class_index = 0;
  double confidence = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct PosteriorRow {
  std::string utt_id;
  std::optional<std::size_t> gold;
  ClassPosterior p;
};

// Per-utterance class posteriors for one (task, model, prompt), plus the
// null-input posteriors that came with it, if any.
struct PosteriorTable {
  LabelSet labels;
  std::string model_id;
  std::string prompt_id;
  std::vector<PosteriorRow> rows;
  std::vector<ClassPosterior> null_rows;

  std::size_t num_classes() const { return labels.size(); }

  std::vector<ClassPosterior> posteriors() const {
    std::vector<ClassPosterior> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.p);
    return out;
  }
};

inline PosteriorTable to_posteriors(const ScoreMatrix& scores) {
  PosteriorTable table{scores.labels(), scores.model_id(), scores.prompt_id(), {}, {}};
  for (const auto& row : scores.rows()) {
    if (is_null_utt(row.utt_id))
      table.null_rows.push_back(posterior(row.ll));
    else
      table.rows.push_back({row.utt_id, row.gold, posterior(row.ll)});
  }
  return table;
}

inline std::vector<Prediction> predict_all(const PosteriorTable& table) {
  std::vector<Prediction> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto k = predict(row.p);
    out.push_back({row.utt_id, k, row.p[k]});
  }
  return out;
}

namespace detail {

// Each component is summed in ascending order of value, so the mean is
// bit-identical under any permutation of the parts. Identical parts give back
// the part itself, and renormalization only kicks in once rounding drift
// exceeds a few ulps.
inline ClassPosterior mean_posterior(std::span<const ClassPosterior* const> parts) {
  const auto k = parts.front()->size();
  std::vector<double> acc(k, 0.0);
  std::vector<double> column(parts.size());
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t m = 0; m < parts.size(); ++m) column[m] = (*parts[m])[j];
    std::sort(column.begin(), column.end());
    if (column.front() == column.back()) {
      acc[j] = column.front();
      continue;
    }
    for (double v : column) acc[j] += v;
    acc[j] /= static_cast<double>(parts.size());
  }
  double sum = 0.0;
  for (double v : acc) sum += v;
  if (std::abs(sum - 1.0) > 4.0 * static_cast<double>(k) * std::numeric_limits<double>::epsilon())
    for (double& v : acc) v /= sum;
  return ClassPosterior(std::move(acc));
}

}  // namespace detail

// Per-utterance arithmetic mean of the per-prompt posteriors, renormalized.
// Null-input rows are pooled the same way when every set carries the same
// number of them.
inline PosteriorTable ensemble(std::span<const PosteriorTable> sets) {
  if (sets.empty()) throw AlignmentError("ensemble needs at least one posterior set");
  const auto& first = sets.front();
  for (const auto& s : sets) {
    if (s.labels != first.labels)
      throw AlignmentError("prompt set '" + s.prompt_id + "' has a different label set");
    if (s.rows.size() != first.rows.size())
      throw AlignmentError("prompt set '" + s.prompt_id + "' has " +
                           std::to_string(s.rows.size()) + " rows, expected " +
                           std::to_string(first.rows.size()));
    for (std::size_t i = 0; i < s.rows.size(); ++i)
      if (s.rows[i].utt_id != first.rows[i].utt_id)
        throw AlignmentError("prompt set '" + s.prompt_id + "' row " + std::to_string(i) +
                             " is '" + s.rows[i].utt_id + "', expected '" +
                             first.rows[i].utt_id + "'");
  }
  if (sets.size() == 1) return first;

  PosteriorTable out{first.labels, first.model_id, "ensemble", {}, {}};
  out.rows.reserve(first.rows.size());
  std::vector<const ClassPosterior*> parts(sets.size());
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    for (std::size_t j = 0; j < sets.size(); ++j) parts[j] = &sets[j].rows[i].p;
    out.rows.push_back({first.rows[i].utt_id, first.rows[i].gold, detail::mean_posterior(parts)});
  }
  const bool null_aligned = std::all_of(sets.begin(), sets.end(), [&](const auto& s) {
    return s.null_rows.size() == first.null_rows.size();
  });
  if (null_aligned) {
    for (std::size_t i = 0; i < first.null_rows.size(); ++i) {
      for (std::size_t j = 0; j < sets.size(); ++j) parts[j] = &sets[j].null_rows[i];
      out.null_rows.push_back(detail::mean_posterior(parts));
    }
  }
  return out;
}

}  // namespace zscal

#endif  // ZSCAL_SCORE_CORE_HPP_
