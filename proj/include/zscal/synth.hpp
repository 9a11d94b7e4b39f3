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

// Synthetic generative-classifier instances with a planted class bias.
//
// Utterance i has gold class g_i drawn from `prior`. Its score for class k is
//
//   ll[i][k] = log bias_k + log base(g_i, k) + eps_ik,   eps ~ N(0, sigma^2)
//
// where base(g, k) is `correct_weight` on the diagonal and 1 elsewhere. With
// uniform bias the argmax recovers the gold class far more often than 1/K;
// with skewed bias the raw decisions pile onto the high-bias classes.

#ifndef ZSCAL_SYNTH_HPP_
#define ZSCAL_SYNTH_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "zscal/calibration.hpp"
#include "zscal/error.hpp"
#include "zscal/score_core.hpp"

namespace zscal::synth {

struct SynthOptions {
  double correct_weight = 3.0;
  double noise_sigma = 0.25;
};

struct SyntheticInstance {
  std::uint64_t seed = 0;
  std::size_t num_classes = 0;
  std::size_t num_rows = 0;
  std::vector<double> bias;
  std::vector<double> prior;
  SynthOptions options;
  std::vector<std::size_t> golds;
  ScoreMatrix scores;
};

inline LabelSet synthetic_labels(std::uint64_t seed, std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < k; ++j) names.push_back("class_" + std::to_string(j));
  return LabelSet("synth-" + std::to_string(seed), std::move(names));
}

// Posterior of an input that carries no class evidence: the base likelihood
// averaged over the gold prior, times the bias.
inline ClassPosterior bias_only_posterior(const SyntheticInstance& inst) {
  std::vector<double> ll(inst.num_classes);
  for (std::size_t k = 0; k < ll.size(); ++k) {
    const double marginal = 1.0 + (inst.options.correct_weight - 1.0) * inst.prior[k];
    ll[k] = std::log(inst.bias[k]) + std::log(marginal);
  }
  return posterior(ll);
}

inline SyntheticInstance gen_instance(std::uint64_t seed, std::size_t k, std::size_t n,
                                      std::vector<double> bias, std::vector<double> prior,
                                      const SynthOptions& opts = {}) {
  if (k < 2) throw InvalidInput("synthetic instance needs K >= 2");
  if (n < k) throw InvalidInput("synthetic instance needs N >= K");
  if (bias.size() != k) throw InvalidInput("bias needs K entries");
  for (double b : bias)
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidInput("bias entries must be positive");
  validate_prior(prior, k);
  if (!(opts.correct_weight > 0.0) || !(opts.noise_sigma >= 0.0))
    throw InvalidInput("invalid synthetic kernel options");

  SyntheticInstance inst{seed, k, n, std::move(bias), std::move(prior), opts, {}, {}};
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> draw_gold(inst.prior.begin(), inst.prior.end());
  std::normal_distribution<double> noise(0.0, opts.noise_sigma > 0.0 ? opts.noise_sigma : 1.0);

  std::vector<ScoreRow> rows;
  rows.reserve(n + 1);
  const double log_correct = std::log(opts.correct_weight);
  for (std::size_t i = 0; i < n; ++i) {
    const auto gold = draw_gold(rng);
    inst.golds.push_back(gold);
    ScoreRow row;
    char utt[32];
    std::snprintf(utt, sizeof(utt), "utt-%06zu", i);
    row.utt_id = utt;
    row.gold = gold;
    row.ll.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const double eps = opts.noise_sigma > 0.0 ? noise(rng) : 0.0;
      row.ll[j] = std::log(inst.bias[j]) + (j == gold ? log_correct : 0.0) + eps;
    }
    rows.push_back(std::move(row));
  }
  // A noise-free null-input row, the analogue of an all-zero encoder input.
  const auto null_p = bias_only_posterior(inst);
  ScoreRow null_row{"NULL:zero", std::nullopt, std::vector<double>(k)};
  for (std::size_t j = 0; j < k; ++j) null_row.ll[j] = std::log(null_p[j]);
  rows.push_back(std::move(null_row));

  inst.scores = ScoreMatrix(synthetic_labels(seed, k), "synthetic", "default", std::move(rows));
  return inst;
}

inline SyntheticInstance gen_instance(std::uint64_t seed, std::size_t k, std::size_t n,
                                      std::vector<double> bias, const SynthOptions& opts = {}) {
  return gen_instance(seed, k, n, std::move(bias), uniform_prior(k), opts);
}

// M noisy null-input rows (bias-only scores plus per-class noise), as a
// separate score matrix whose every row is a null input.
inline ScoreMatrix gen_null_scores(const SyntheticInstance& inst, std::size_t m,
                                   std::uint64_t seed) {
  if (m < 1) throw InvalidInput("need at least one null row");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, inst.options.noise_sigma > 0.0
                                                  ? inst.options.noise_sigma
                                                  : 1.0);
  const auto base = bias_only_posterior(inst);
  std::vector<ScoreRow> rows;
  for (std::size_t i = 0; i < m; ++i) {
    char utt[32];
    std::snprintf(utt, sizeof(utt), "noise-%03zu", i);
    ScoreRow row{utt, std::nullopt, std::vector<double>(inst.num_classes)};
    for (std::size_t j = 0; j < inst.num_classes; ++j)
      row.ll[j] = std::log(base[j]) + (inst.options.noise_sigma > 0.0 ? noise(rng) : 0.0);
    rows.push_back(std::move(row));
  }
  return ScoreMatrix(inst.scores.labels(), inst.scores.model_id(), inst.scores.prompt_id(),
                     std::move(rows));
}

}  // namespace zscal::synth

#endif  // ZSCAL_SYNTH_HPP_
