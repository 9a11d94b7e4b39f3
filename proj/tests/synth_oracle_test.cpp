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


#include "zscal/synth.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "zscal/eval.hpp"
#include "zscal/oracle.hpp"

namespace zscal {
namespace {

std::vector<double> UncalibratedDistribution(const synth::SyntheticInstance& inst) {
  const auto table = to_posteriors(inst.scores);
  return evaluate_table(table, "uncalibrated").class_distribution;
}

TEST(GenInstanceTest, SameSeedSameMatrix) {
  const auto a = synth::gen_instance(9, 4, 300, {1.0, 2.0, 3.0, 4.0});
  const auto b = synth::gen_instance(9, 4, 300, {1.0, 2.0, 3.0, 4.0});
  ASSERT_EQ(a.scores.rows().size(), b.scores.rows().size());
  for (std::size_t i = 0; i < a.scores.rows().size(); ++i) {
    EXPECT_EQ(a.scores.rows()[i].ll, b.scores.rows()[i].ll);
    EXPECT_EQ(a.scores.rows()[i].gold, b.scores.rows()[i].gold);
  }
  const auto c = synth::gen_instance(10, 4, 300, {1.0, 2.0, 3.0, 4.0});
  EXPECT_NE(a.scores.rows()[0].ll, c.scores.rows()[0].ll);
}

TEST(GenInstanceTest, UniformBiasFollowsPrior) {
  const std::vector<double> prior{0.5, 0.3, 0.2};
  const auto inst = synth::gen_instance(1, 3, 5000, {1.0, 1.0, 1.0}, prior);
  const auto dist = UncalibratedDistribution(inst);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(dist[k], prior[k], 0.05) << k;
}

TEST(GenInstanceTest, SkewedBiasPilesOntoFirstClass) {
  const auto inst = synth::gen_instance(2, 3, 5000, {10.0, 1.0, 1.0});
  EXPECT_GT(UncalibratedDistribution(inst)[0], 0.5);
}

TEST(GenInstanceTest, RejectsBadArguments) {
  EXPECT_THROW(synth::gen_instance(0, 1, 10, {1.0}), InvalidInput);
  EXPECT_THROW(synth::gen_instance(0, 2, 10, {1.0, 0.0}), InvalidInput);
  EXPECT_THROW(synth::gen_instance(0, 2, 10, {1.0}), InvalidInput);
  EXPECT_THROW(synth::gen_instance(0, 2, 10, {1.0, 1.0}, std::vector<double>{0.9, 0.9}), InvalidInput);
}

TEST(GenInstanceTest, NullRowRecoversInverseBias) {
  const std::vector<double> bias{1.0, 4.0, 2.5, 7.0};
  const auto inst = synth::gen_instance(3, 4, 100, bias);
  const auto table = to_posteriors(inst.scores);
  ASSERT_EQ(table.null_rows.size(), 1u);
  const auto w = null_input_weights(table.null_rows);
  for (std::size_t k = 0; k < bias.size(); ++k)
    EXPECT_NEAR(w[k] * bias[k] / bias[0], 1.0, 1e-12) << k;
}

TEST(GenInstanceTest, NoisyNullRowsAreDeterministic) {
  const auto inst = synth::gen_instance(4, 3, 50, {1.0, 2.0, 3.0});
  const auto a = synth::gen_null_scores(inst, 8, 99);
  const auto b = synth::gen_null_scores(inst, 8, 99);
  ASSERT_EQ(a.rows().size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(a.rows()[i].ll, b.rows()[i].ll);
}

TEST(OraclePriorMatchTest, TwoClassExample) {
  const std::vector<ClassPosterior> rows{ClassPosterior({0.9, 0.1}), ClassPosterior({0.7, 0.3})};
  const auto w = oracle::oracle_prior_match(rows, uniform_prior(2), 1e-6);
  EXPECT_GE(w[1], 4.57);
  EXPECT_LE(w[1], 4.60);
}

TEST(OraclePriorMatchTest, AlreadyMatched) {
  const std::vector<ClassPosterior> rows{ClassPosterior({0.8, 0.2}), ClassPosterior({0.2, 0.8})};
  const auto w = oracle::oracle_prior_match(rows, uniform_prior(2), 1e-12);
  EXPECT_NEAR(w[1], 1.0, 1e-9);
}

TEST(OraclePriorMatchTest, ThreeClassGapNotBelowSolver) {
  std::mt19937_64 rng(91);
  std::normal_distribution<double> ll(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<ClassPosterior> rows;
    for (int i = 0; i < 40; ++i) rows.push_back(posterior(std::vector<double>{ll(rng), ll(rng), ll(rng)}));
    const auto target = uniform_prior(3);
    const auto fast = prior_match(rows, target);
    const auto slow = oracle::oracle_prior_match(rows, target, 1e-6);
    EXPECT_GE(slow.solver().l1_gap, fast.solver().l1_gap - 1e-5);
    EXPECT_NEAR(oracle::prior_gap(rows, fast.alpha(), target), fast.solver().l1_gap, 1e-12);
  }
}

TEST(OraclePriorMatchTest, LargeKUnsupported) {
  const std::vector<ClassPosterior> rows{ClassPosterior({0.25, 0.25, 0.25, 0.25})};
  EXPECT_THROW(oracle::oracle_prior_match(rows, uniform_prior(4)), Unsupported);
}

TEST(OracleCtcTest, RefusesHugeEnumerations) {
  const CtcFrameLogits frames(20, 4, 3, std::vector<double>(80, -std::log(4.0)));
  EXPECT_THROW(oracle::oracle_ctc(frames, CtcLabelSequence({0})), Unsupported);
}

}  // namespace
}  // namespace zscal
