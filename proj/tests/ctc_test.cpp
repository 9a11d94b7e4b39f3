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


#include "zscal/ctc.hpp"

#include <cmath>
#include <random>
#include <unordered_map>
#include <vector>

#include <gtest/gtest.h>

#include "zscal/oracle.hpp"

namespace zscal {
namespace {

const std::unordered_map<std::string, std::size_t> kVocab{{"a", 0}, {"b", 1}, {" ", 2}};

CtcFrameLogits Uniform(std::size_t t, std::size_t v, std::size_t blank) {
  return CtcFrameLogits(t, v, blank, std::vector<double>(t * v, -std::log(double(v))));
}

CtcFrameLogits RandomFrames(std::mt19937_64& rng, std::size_t t, std::size_t v,
                            std::size_t blank) {
  std::normal_distribution<double> logit(0.0, 2.0);
  std::vector<double> lp;
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<double> row(v);
    for (double& x : row) x = logit(rng);
    const double z = logsumexp(row);
    for (double x : row) lp.push_back(x - z);
  }
  return CtcFrameLogits(t, v, blank, std::move(lp));
}

TEST(TokenizeTest, Examples) {
  EXPECT_EQ(tokenize_label("ab", kVocab).ids().size(), 2u);
  EXPECT_EQ(tokenize_label("ab", kVocab), CtcLabelSequence({0, 1}));
  EXPECT_EQ(tokenize_label("a b", kVocab), CtcLabelSequence({0, 2, 1}));
  EXPECT_EQ(tokenize_label("AB", kVocab), CtcLabelSequence({0, 1}));
  EXPECT_THROW(tokenize_label("AB", kVocab, {.lowercase = false}), OutOfVocabulary);
}

TEST(TokenizeTest, OutOfVocabularyNamesCharacter) {
  try {
    tokenize_label("añ", kVocab);
    FAIL() << "expected an OOV error";
  } catch (const OutOfVocabulary& e) {
    EXPECT_EQ(e.symbol(), "ñ");
  }
}

TEST(TokenizeTest, CustomSpaceSymbol) {
  const std::unordered_map<std::string, std::size_t> vocab{{"a", 1}, {"|", 2}, {"b", 3}};
  EXPECT_EQ(tokenize_label("a b", vocab, {.space_symbol = "|"}), CtcLabelSequence({1, 2, 3}));
}

TEST(CtcFrameLogitsTest, Validation) {
  EXPECT_THROW(CtcFrameLogits(0, 2, 0, {}), InvalidInput);
  EXPECT_THROW(CtcFrameLogits(1, 2, 2, {std::log(0.5), std::log(0.5)}), InvalidInput);
  EXPECT_THROW(CtcFrameLogits(1, 2, 1, {std::log(0.5)}), InvalidInput);
  EXPECT_THROW(CtcFrameLogits(1, 2, 1, {std::log(0.5), std::log(0.6)}), InvalidInput);
  EXPECT_THROW(CtcFrameLogits(1, 2, 1, {0.1, kNegInf}), InvalidInput);
}

TEST(CtcForwardTest, Examples) {
  // T=2, V=3: aa, a-, -a.
  EXPECT_NEAR(ctc_forward(Uniform(2, 3, 2), CtcLabelSequence({0})), std::log(1.0 / 3.0), 1e-12);
  // T=3, V=2 {a, blank}: every path except --- and a-a.
  EXPECT_NEAR(ctc_forward(Uniform(3, 2, 1), CtcLabelSequence({0})), std::log(3.0 / 4.0), 1e-12);
  // T=3, V=3 {a, b, blank}.
  EXPECT_NEAR(ctc_forward(Uniform(3, 3, 2), CtcLabelSequence({0})), std::log(2.0 / 9.0), 1e-12);
  EXPECT_EQ(ctc_forward(Uniform(2, 3, 2), CtcLabelSequence({0, 0})), kNegInf);
  EXPECT_THROW(ctc_forward(Uniform(2, 3, 2), CtcLabelSequence({2})), InvalidInput);
}

TEST(CtcForwardTest, OracleAgreesOnHandCases) {
  EXPECT_NEAR(oracle::oracle_ctc(Uniform(3, 2, 1), CtcLabelSequence({0})), std::log(0.75),
              1e-12);
  EXPECT_NEAR(oracle::oracle_ctc(Uniform(3, 3, 2), CtcLabelSequence({0})), std::log(2.0 / 9.0),
              1e-12);
  EXPECT_NEAR(oracle::oracle_ctc(Uniform(2, 3, 2), CtcLabelSequence({0})), std::log(1.0 / 3.0),
              1e-12);
  EXPECT_EQ(oracle::oracle_ctc(Uniform(2, 3, 2), CtcLabelSequence({0, 0})), kNegInf);
}

TEST(CtcForwardTest, MatchesEnumerationOracle) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t v = 2 + trial % 3;
    const std::size_t t = 1 + (trial / 3) % 6;
    const std::size_t blank = trial % v;
    const auto frames = RandomFrames(rng, t, v, blank);
    std::uniform_int_distribution<std::size_t> len(1, 3), sym(0, v - 2);
    std::vector<std::size_t> ids(len(rng));
    for (auto& id : ids) {
      id = sym(rng);
      if (id >= blank) ++id;
    }
    const CtcLabelSequence label(ids);
    const double fast = ctc_forward(frames, label);
    const double slow = oracle::oracle_ctc(frames, label);
    if (slow == kNegInf) {
      EXPECT_EQ(fast, kNegInf) << trial;
    } else {
      EXPECT_NEAR(fast, slow, 1e-9) << trial;
    }
  }
}

TEST(CtcForwardTest, IsALogProbability) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const auto frames = RandomFrames(rng, 1 + trial % 10, 4, 3);
    EXPECT_LE(ctc_forward(frames, CtcLabelSequence({0, 1})), 0.0);
  }
}

TEST(CtcForwardTest, SymbolRelabelingInvariance) {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    const auto frames = RandomFrames(rng, 5, 4, 0);
    // Swap symbols 1 and 3 in both the frames and the label.
    std::vector<double> swapped;
    for (std::size_t t = 0; t < 5; ++t) {
      auto row = frames.frame(t);
      swapped.insert(swapped.end(), {row[0], row[3], row[2], row[1]});
    }
    const CtcFrameLogits relabeled(5, 4, 0, swapped);
    EXPECT_NEAR(ctc_forward(frames, CtcLabelSequence({1, 2, 1})),
                ctc_forward(relabeled, CtcLabelSequence({3, 2, 3})), 1e-12);
  }
}

TEST(CtcForwardTest, FeasibilityBoundary) {
  const CtcLabelSequence label({0, 0, 1});
  EXPECT_EQ(min_ctc_frames(label), 4u);
  EXPECT_EQ(ctc_forward(Uniform(3, 3, 2), label), kNegInf);
  EXPECT_GT(ctc_forward(Uniform(4, 3, 2), label), kNegInf);
}

TEST(CtcScoreMatrixTest, SymmetricPrompts) {
  const std::vector<CtcUtterance> utts{{"u0", 0, Uniform(2, 3, 2)}};
  const auto m = ctc_score_matrix(utts, LabelSet("t", {"a", "b"}), {"bare", "{c}"}, kVocab);
  ASSERT_EQ(m.rows().size(), 1u);
  EXPECT_NEAR(m.rows()[0].ll[0], std::log(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(m.rows()[0].ll[1], std::log(1.0 / 3.0), 1e-12);
  const auto p = posterior(m.rows()[0].ll);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
}

TEST(CtcScoreMatrixTest, InfeasibleClassGetsZeroPosterior) {
  const std::vector<CtcUtterance> utts{{"u0", 0, Uniform(2, 3, 2)}};
  const auto m = ctc_score_matrix(utts, LabelSet("t", {"a", "aba"}), {"bare", "{c}"}, kVocab);
  EXPECT_EQ(m.rows()[0].ll[1], kNegInf);
  const auto p = posterior(m.rows()[0].ll);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
}

TEST(CtcScoreMatrixTest, MatchesEnumerationOracle) {
  std::mt19937_64 rng(64);
  const LabelSet labels("t", {"a", "ab", "b a"});
  const PromptTemplate prompt{"bare", "{c}"};
  std::vector<CtcUtterance> utts;
  for (int i = 0; i < 20; ++i)
    utts.push_back({"u" + std::to_string(i), 0, RandomFrames(rng, 1 + i % 6, 4, 3)});
  const std::unordered_map<std::string, std::size_t> vocab{
      {"a", 0}, {"b", 1}, {" ", 2}, {"<blank>", 3}};
  const auto m = ctc_score_matrix(utts, labels, prompt, vocab);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const double slow = oracle::oracle_ctc(
          utts[i].frames, tokenize_label(render_prompt(prompt, labels.class_names()[k]), vocab));
      if (slow == kNegInf) EXPECT_EQ(m.rows()[i].ll[k], kNegInf);
      else EXPECT_NEAR(m.rows()[i].ll[k], slow, 1e-9);
    }
  }
}

}  // namespace
}  // namespace zscal
