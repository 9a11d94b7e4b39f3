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

// Brute-force references for the fast paths. Slow on purpose: each one
// evaluates its quantity straight from the definition and shares no code with
// the implementation it checks.

#ifndef ZSCAL_ORACLE_HPP_
#define ZSCAL_ORACLE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "zscal/calibration.hpp"
#include "zscal/ctc.hpp"
#include "zscal/error.hpp"
#include "zscal/eval.hpp"
#include "zscal/score_core.hpp"

namespace zscal::oracle {

// L1 distance between the mean reweighted posterior and `target`.
inline double prior_gap(std::span<const ClassPosterior> ps, std::span<const double> alpha,
                        std::span<const double> target) {
  std::vector<double> mean(alpha.size(), 0.0);
  for (const auto& p : ps) {
    double z = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) z += alpha[k] * p[k];
    for (std::size_t k = 0; k < alpha.size(); ++k) mean[k] += alpha[k] * p[k] / z;
  }
  double gap = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k)
    gap += std::abs(mean[k] / static_cast<double>(ps.size()) - target[k]);
  return gap;
}

// Exhaustive search for alpha (alpha_1 = 1) minimizing the L1 prior gap.
//
// K = 2: bisection on log alpha_2, whose output prior is monotone in it,
// until the bracket is narrower than `resolution`.
// K = 3: full grid over (log alpha_2, log alpha_3), re-gridded around the
// best cell until cells are narrower than `resolution`.
inline CalibrationWeights oracle_prior_match(std::span<const ClassPosterior> posteriors,
                                             std::span<const double> target,
                                             double resolution = 1e-9) {
  if (posteriors.empty()) throw InvalidInput("oracle needs at least one row");
  const auto k = posteriors.front().size();
  if (k < 2 || k > 3) throw Unsupported("prior-matching oracle handles K = 2 or 3 only");
  std::vector<double> target_v(target.begin(), target.end());
  constexpr double kSpan = 30.0;  // log-alpha search box [-kSpan, kSpan]
  int evals = 0;

  if (k == 2) {
    // mean reweighted mass on class 2 rises with alpha_2.
    auto mass2 = [&](double log_a) {
      const double a = std::exp(log_a);
      double m = 0.0;
      for (const auto& p : posteriors) m += a * p[1] / (p[0] + a * p[1]);
      ++evals;
      return m / static_cast<double>(posteriors.size());
    };
    double lo = -kSpan, hi = kSpan;
    while (hi - lo > resolution) {
      const double mid = 0.5 * (lo + hi);
      (mass2(mid) < target_v[1] ? lo : hi) = mid;
    }
    const std::array<double, 2> alpha{1.0, std::exp(0.5 * (lo + hi))};
    return CalibrationWeights({alpha.begin(), alpha.end()}, CalibrationMethod::kPriorMatch,
                              target_v, {evals, prior_gap(posteriors, alpha, target_v)});
  }

  constexpr int kGrid = 40;
  double c2 = 0.0, c3 = 0.0, half = kSpan;
  double best_gap = prior_gap(posteriors, std::array<double, 3>{1.0, 1.0, 1.0}, target_v);
  double best2 = 0.0, best3 = 0.0;
  while (2.0 * half / kGrid > resolution) {
    const double step = 2.0 * half / kGrid;
    for (int i = 0; i <= kGrid; ++i) {
      for (int j = 0; j <= kGrid; ++j) {
        const double l2 = c2 - half + i * step;
        const double l3 = c3 - half + j * step;
        const std::array<double, 3> alpha{1.0, std::exp(l2), std::exp(l3)};
        const double gap = prior_gap(posteriors, alpha, target_v);
        ++evals;
        if (gap < best_gap) {
          best_gap = gap;
          best2 = l2;
          best3 = l3;
        }
      }
    }
    c2 = best2;
    c3 = best3;
    half = 2.0 * step;
  }
  return CalibrationWeights({1.0, std::exp(best2), std::exp(best3)},
                            CalibrationMethod::kPriorMatch, target_v, {evals, best_gap});
}

inline constexpr double kMaxCtcPaths = 1e6;

// log of the summed probability of every length-T frame path that collapses
// to `label`, by listing all V^T paths.
inline double oracle_ctc(const CtcFrameLogits& frames, const CtcLabelSequence& label) {
  const auto t_len = frames.num_frames();
  const auto v = frames.vocab_size();
  if (std::pow(static_cast<double>(v), static_cast<double>(t_len)) > kMaxCtcPaths)
    throw Unsupported("too many CTC paths to enumerate");
  const auto target = label.ids();

  std::vector<std::size_t> path(t_len, 0);
  std::vector<std::size_t> collapsed;
  double total = 0.0;
  bool any = false;
  for (;;) {
    collapsed.clear();
    for (std::size_t t = 0; t < t_len; ++t) {
      if (path[t] == frames.blank_id()) continue;
      if (t > 0 && path[t] == path[t - 1]) continue;
      collapsed.push_back(path[t]);
    }
    if (std::equal(collapsed.begin(), collapsed.end(), target.begin(), target.end())) {
      double lp = 0.0;
      for (std::size_t t = 0; t < t_len; ++t) lp += frames.at(t, path[t]);
      total += std::exp(lp);
      any = true;
    }
    // Odometer increment.
    std::size_t t = 0;
    for (; t < t_len; ++t) {
      if (++path[t] < v) break;
      path[t] = 0;
    }
    if (t == t_len) break;
  }
  return any && total > 0.0 ? std::log(total) : kNegInf;
}

// PR curve from the definition: for each distinct threshold, count over all
// rows. O(N^2).
inline std::vector<PrPoint> oracle_pr_curve(std::span<const ClassPosterior> posteriors,
                                            std::span<const std::size_t> golds,
                                            std::size_t positive_class) {
  std::vector<double> thresholds;
  for (const auto& p : posteriors) thresholds.push_back(p[positive_class]);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::size_t positives = 0;
  for (auto g : golds) positives += g == positive_class ? 1 : 0;

  std::vector<PrPoint> out;
  for (double th : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
      if (posteriors[i][positive_class] < th) continue;
      if (golds[i] == positive_class) ++tp;
      else ++fp;
    }
    out.push_back({th, static_cast<double>(tp) / static_cast<double>(tp + fp),
                   static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return out;
}

}  // namespace zscal::oracle

#endif  // ZSCAL_ORACLE_HPP_
