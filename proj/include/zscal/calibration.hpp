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

// Task calibration by class reweighting.
//
// A zero-shot generative classifier is biased toward label sequences that are
// a priori likely under the speech model. Rescaling the class posteriors by
// positive weights alpha_k,
//
//   p'_k = alpha_k p_k / sum_j alpha_j p_j,
//
// can move the decision boundary, which temperature-style calibrators cannot.
// The weights are scale free, so alpha_1 is pinned to 1. Two estimators are
// provided:
//
//  * prior matching: choose alpha so the mean reweighted posterior over an
//    unlabelled set equals a target prior (uniform by default);
//  * null input: alpha_k = 1 / P(w_k | null input), using the posterior of an
//    information-free input (all-zero encoder input or white noise).
//
// The gap metrics measure top-1 calibration (mean confidence vs. accuracy)
// and all-label calibration (per-class mean probability vs. class frequency).

#ifndef ZSCAL_CALIBRATION_HPP_
#define ZSCAL_CALIBRATION_HPP_

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zscal/error.hpp"
#include "zscal/score_core.hpp"

namespace zscal {

enum class CalibrationMethod { kNone, kPriorMatch, kNullZero, kNullNoise };

inline std::string_view to_string(CalibrationMethod m) {
  switch (m) {
    case CalibrationMethod::kNone: return "none";
    case CalibrationMethod::kPriorMatch: return "prior_match";
    case CalibrationMethod::kNullZero: return "null_zero";
    case CalibrationMethod::kNullNoise: return "null_noise";
  }
  return "none";
}

inline CalibrationMethod parse_calibration_method(std::string_view s) {
  if (s == "none" || s == "uncalibrated") return CalibrationMethod::kNone;
  if (s == "prior_match" || s == "prior-match") return CalibrationMethod::kPriorMatch;
  if (s == "null_zero" || s == "null-zero") return CalibrationMethod::kNullZero;
  if (s == "null_noise" || s == "null-noise") return CalibrationMethod::kNullNoise;
  throw InvalidInput("unknown calibration method '" + std::string(s) + "'");
}

struct SolverStats {
  int iters = 0;
  double l1_gap = 0.0;
};

inline std::vector<double> uniform_prior(std::size_t k) {
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

inline void validate_prior(std::span<const double> prior, std::size_t k) {
  if (prior.size() != k)
    throw InvalidInput("prior has " + std::to_string(prior.size()) + " entries, expected " +
                       std::to_string(k));
  double sum = 0.0;
  for (double v : prior) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("prior entries must be >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kPosteriorTolerance) throw InvalidInput("prior does not sum to 1");
}

// Reweighting vector with alpha_1 == 1, tagged with how it was obtained.
class CalibrationWeights {
 public:
  CalibrationWeights() = default;

  // Rescales alpha so that alpha_1 == 1 exactly.
  CalibrationWeights(std::vector<double> alpha, CalibrationMethod method,
                     std::vector<double> target_prior, SolverStats solver = {})
      : alpha_(std::move(alpha)),
        method_(method),
        target_prior_(std::move(target_prior)),
        solver_(solver) {
    if (alpha_.size() < 2) throw InvalidInput("weights need at least 2 classes");
    for (double a : alpha_)
      if (!(a > 0.0) || !std::isfinite(a))
        throw InvalidInput("weights must be positive and finite");
    const double first = alpha_.front();
    for (double& a : alpha_) a /= first;
    alpha_.front() = 1.0;
    validate_prior(target_prior_, alpha_.size());
  }

  static CalibrationWeights identity(std::size_t k) {
    return CalibrationWeights(std::vector<double>(k, 1.0), CalibrationMethod::kNone,
                              uniform_prior(k));
  }

  std::span<const double> alpha() const { return alpha_; }
  double operator[](std::size_t k) const { return alpha_[k]; }
  std::size_t size() const { return alpha_.size(); }
  CalibrationMethod method() const { return method_; }
  std::span<const double> target_prior() const { return target_prior_; }
  const SolverStats& solver() const { return solver_; }

 private:
  std::vector<double> alpha_;
  CalibrationMethod method_ = CalibrationMethod::kNone;
  std::vector<double> target_prior_;
  SolverStats solver_;
};

// p'_k = alpha_k p_k / sum_j alpha_j p_j. Accepts any positive vector; the
// overload taking CalibrationWeights is the usual entry point.
inline ClassPosterior reweight(const ClassPosterior& p, std::span<const double> alpha) {
  if (p.size() != alpha.size())
    throw InvalidInput("posterior has " + std::to_string(p.size()) + " classes, weights have " +
                       std::to_string(alpha.size()));
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = alpha[k] * p[k];
    sum += out[k];
  }
  if (!(sum > 0.0)) throw DegenerateInput("reweighted posterior has zero total mass");
  for (double& v : out) v /= sum;
  return ClassPosterior(std::move(out));
}

inline ClassPosterior reweight(const ClassPosterior& p, const CalibrationWeights& w) {
  return reweight(p, w.alpha());
}

inline std::vector<ClassPosterior> reweight_all(std::span<const ClassPosterior> ps,
                                                const CalibrationWeights& w) {
  std::vector<ClassPosterior> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(reweight(p, w));
  return out;
}

inline PosteriorTable reweight_table(const PosteriorTable& table, const CalibrationWeights& w) {
  PosteriorTable out{table.labels, table.model_id, table.prompt_id, {}, {}};
  out.rows.reserve(table.rows.size());
  for (const auto& r : table.rows) out.rows.push_back({r.utt_id, r.gold, reweight(r.p, w)});
  for (const auto& p : table.null_rows) out.null_rows.push_back(reweight(p, w));
  return out;
}

namespace detail {

inline std::vector<double> mean_of(std::span<const ClassPosterior> ps) {
  if (ps.empty()) throw InvalidInput("posterior table is empty");
  const auto k = ps.front().size();
  std::vector<double> acc(k, 0.0);
  for (const auto& p : ps) {
    if (p.size() != k) throw InvalidInput("posterior rows disagree on the number of classes");
    for (std::size_t j = 0; j < k; ++j) acc[j] += p[j];
  }
  for (double& v : acc) v /= static_cast<double>(ps.size());
  return acc;
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

// Mean over rows of the reweighted posteriors, without materializing them.
inline std::vector<double> output_prior_raw(std::span<const ClassPosterior> ps,
                                            std::span<const double> alpha) {
  const auto k = alpha.size();
  std::vector<double> acc(k, 0.0);
  for (const auto& p : ps) {
    double norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) norm += alpha[j] * p[j];
    if (!(norm > 0.0)) throw DegenerateInput("reweighted posterior has zero total mass");
    for (std::size_t j = 0; j < k; ++j) acc[j] += alpha[j] * p[j] / norm;
  }
  for (double& v : acc) v /= static_cast<double>(ps.size());
  return acc;
}

}  // namespace detail

// Expected reweighted posterior over the rows.
inline std::vector<double> output_prior(std::span<const ClassPosterior> posteriors,
                                        std::span<const double> alpha) {
  if (posteriors.empty()) throw InvalidInput("output prior of an empty table");
  for (const auto& p : posteriors)
    if (p.size() != alpha.size()) throw InvalidInput("posterior and weights disagree on K");
  return detail::output_prior_raw(posteriors, alpha);
}

inline std::vector<double> output_prior(std::span<const ClassPosterior> posteriors,
                                        const CalibrationWeights& w) {
  return output_prior(posteriors, w.alpha());
}

struct PriorMatchOptions {
  int max_iter = 10000;
  double tolerance = 1e-6;  // on the L1 gap between output prior and target
};

// Finds alpha (alpha_1 = 1) whose output prior matches `target_prior`.
//
// The update alpha_k <- alpha_k * target_k / output_prior_k is Sinkhorn
// scaling of the N x K posterior matrix toward row sums 1 and column sums
// N * target, so it converges whenever every class has some mass.
inline CalibrationWeights prior_match(std::span<const ClassPosterior> posteriors,
                                      std::span<const double> target_prior,
                                      const PriorMatchOptions& opts = {}) {
  if (posteriors.empty()) throw InvalidInput("prior matching needs at least one row");
  const auto k = posteriors.front().size();
  validate_prior(target_prior, k);
  for (double v : target_prior)
    if (!(v > 0.0) || !(v < 1.0))
      throw InvalidInput("prior matching needs a target prior strictly inside (0, 1)");

  const auto mass = detail::mean_of(posteriors);
  for (std::size_t j = 0; j < k; ++j)
    if (mass[j] == 0.0)
      throw InfeasibleError("class " + std::to_string(j) +
                            " has zero posterior mass in every row but a nonzero target");

  std::vector<double> alpha(k, 1.0);
  int iters = 0;
  for (;; ++iters) {
    const auto prior = detail::output_prior_raw(posteriors, alpha);
    const double gap = detail::l1_distance(prior, target_prior);
    if (gap <= opts.tolerance)
      return CalibrationWeights(std::move(alpha), CalibrationMethod::kPriorMatch,
                                std::vector<double>(target_prior.begin(), target_prior.end()),
                                SolverStats{iters, gap});
    if (iters >= opts.max_iter)
      throw ConvergenceError("prior matching did not converge in " + std::to_string(iters) +
                                 " sweeps (L1 gap " + std::to_string(gap) + ")",
                             iters, gap);
    for (std::size_t j = 0; j < k; ++j) alpha[j] *= target_prior[j] / prior[j];
    const double first = alpha.front();
    for (double& a : alpha) a /= first;
    for (double a : alpha)
      if (!(a > 0.0) || !std::isfinite(a))
        throw ConvergenceError("prior matching weights left the positive reals", iters, gap);
  }
}

inline CalibrationWeights prior_match(std::span<const ClassPosterior> posteriors,
                                      const PriorMatchOptions& opts = {}) {
  if (posteriors.empty()) throw InvalidInput("prior matching needs at least one row");
  const auto target = uniform_prior(posteriors.front().size());
  return prior_match(posteriors, target, opts);
}

// alpha_k = 1 / mean_m P(w_k | null_m), then rescaled to alpha_1 = 1. The
// solver slot records the L1 distance of the reweighted mean null posterior
// from uniform.
inline CalibrationWeights null_input_weights(
    std::span<const ClassPosterior> null_posteriors,
    CalibrationMethod method = CalibrationMethod::kNullNoise) {
  if (null_posteriors.empty()) throw InvalidInput("null-input weights need at least one row");
  const auto mean = detail::mean_of(null_posteriors);
  std::vector<double> alpha(mean.size());
  for (std::size_t j = 0; j < mean.size(); ++j) {
    if (mean[j] == 0.0)
      throw DegenerateInput("class " + std::to_string(j) +
                            " has zero mean null-input probability");
    alpha[j] = 1.0 / mean[j];
  }
  const auto uniform = uniform_prior(mean.size());
  CalibrationWeights w(std::move(alpha), method, uniform);
  const auto flat = reweight(ClassPosterior(std::vector<double>(mean)), w);
  const double gap = detail::l1_distance(flat.probs(), uniform);
  return CalibrationWeights(std::vector<double>(w.alpha().begin(), w.alpha().end()), method,
                            uniform, SolverStats{0, gap});
}

namespace detail {

inline void check_golds(std::span<const ClassPosterior> ps, std::span<const std::size_t> golds) {
  if (ps.size() != golds.size())
    throw AlignmentError("posteriors and golds have different lengths");
  if (ps.empty()) throw InvalidInput("calibration gap of an empty table");
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (golds[i] >= ps[i].size()) throw InvalidInput("gold index out of range");
}

}  // namespace detail

// |mean top-1 confidence - top-1 accuracy|.
inline double top1_calibration_gap(std::span<const ClassPosterior> posteriors,
                                   std::span<const std::size_t> golds) {
  detail::check_golds(posteriors, golds);
  double confidence = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const auto k = predict(posteriors[i]);
    confidence += posteriors[i][k];
    if (k == golds[i]) ++correct;
  }
  const auto n = static_cast<double>(posteriors.size());
  return std::abs(confidence / n - static_cast<double>(correct) / n);
}

// gap_k = |mean_i p_i[k] - frequency of class k among the golds|.
inline std::vector<double> all_label_calibration_gap(std::span<const ClassPosterior> posteriors,
                                                     std::span<const std::size_t> golds) {
  detail::check_golds(posteriors, golds);
  const auto mean = detail::mean_of(posteriors);
  std::vector<double> freq(mean.size(), 0.0);
  for (auto g : golds) freq[g] += 1.0;
  std::vector<double> gaps(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k)
    gaps[k] = std::abs(mean[k] - freq[k] / static_cast<double>(golds.size()));
  return gaps;
}

// Class frequencies of the golds, for prior matching against labelled data.
inline std::vector<double> empirical_prior(std::span<const std::size_t> golds, std::size_t k) {
  if (golds.empty()) throw InvalidInput("empirical prior of no golds");
  std::vector<double> freq(k, 0.0);
  for (auto g : golds) {
    if (g >= k) throw InvalidInput("gold index out of range");
    freq[g] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(golds.size());
  return freq;
}

}  // namespace zscal

#endif  // ZSCAL_CALIBRATION_HPP_
