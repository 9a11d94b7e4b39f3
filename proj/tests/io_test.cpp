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


#include "zscal/io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace zscal {
namespace {

ScoreMatrix RandomScores(std::mt19937_64& rng, std::size_t k, std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < k; ++j) names.push_back("c" + std::to_string(j));
  std::uniform_real_distribution<double> ll(-1e3, 0.0);
  std::bernoulli_distribution hole(0.05);
  std::vector<ScoreRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    ScoreRow r{"utt " + std::to_string(i), i % k, std::vector<double>(k)};
    for (auto& v : r.ll) v = hole(rng) ? kNegInf : ll(rng);
    r.ll[i % k] = ll(rng);
    rows.push_back(std::move(r));
  }
  rows.push_back({"NULL:zero", std::nullopt, std::vector<double>(k, -1.0 / 3.0)});
  return ScoreMatrix(LabelSet("task", names), "model", "prompt", std::move(rows));
}

TEST(FormatDoubleTest, RoundTripsBitExact) {
  std::mt19937_64 rng(81);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 5000; ++i) {
    double x;
    const auto b = bits(rng);
    std::memcpy(&x, &b, sizeof(x));
    if (!std::isfinite(x)) continue;
    const auto j = io::parse_line(io::format_double(x), "t");
    const double back = io::parse_number(j, "t");
    EXPECT_EQ(std::memcmp(&x, &back, sizeof(x)), 0) << io::format_double(x);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_EQ(io::format_double(kNegInf), "\"-inf\"");
  EXPECT_THROW(io::format_double(std::numeric_limits<double>::quiet_NaN()), InvalidInput);
}

TEST(ScoreFileTest, RoundTripIsExact) {
  std::mt19937_64 rng(82);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = RandomScores(rng, 2 + trial % 6, 30);
    std::stringstream ss;
    io::write_scores(ss, m);
    const auto back = io::read_scores(ss);
    ASSERT_EQ(back.rows().size(), m.rows().size());
    EXPECT_EQ(back.labels(), m.labels());
    EXPECT_EQ(back.model_id(), m.model_id());
    EXPECT_EQ(back.prompt_id(), m.prompt_id());
    for (std::size_t i = 0; i < m.rows().size(); ++i) {
      EXPECT_EQ(back.rows()[i].utt_id, m.rows()[i].utt_id);
      EXPECT_EQ(back.rows()[i].gold, m.rows()[i].gold);
      EXPECT_EQ(back.rows()[i].ll, m.rows()[i].ll);
    }
    std::stringstream again;
    io::write_scores(again, back);
    std::stringstream first;
    io::write_scores(first, m);
    EXPECT_EQ(again.str(), first.str());
  }
}

TEST(ScoreFileTest, ParseErrorsNameTheLine) {
  std::istringstream bad(
      "{\"task_id\":\"t\",\"model_id\":\"m\",\"prompt_id\":\"p\",\"class_names\":[\"a\",\"b\"]}\n"
      "{\"utt\":\"u\",\"gold\":0,\"ll\":[0.0,\"oops\"]}\n");
  try {
    io::read_scores(bad, "f.jsonl");
    FAIL() << "expected a parse error";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("f.jsonl:2"), std::string::npos) << e.what();
  }
  std::istringstream garbage("not json\n");
  EXPECT_THROW(io::read_scores(garbage), InvalidInput);
  std::istringstream empty("");
  EXPECT_THROW(io::read_scores(empty), InvalidInput);
}

TEST(PosteriorFileTest, RoundTripIsExact) {
  std::mt19937_64 rng(83);
  const auto table = to_posteriors(RandomScores(rng, 4, 25));
  std::stringstream ss;
  io::write_posteriors(ss, table);
  const auto back = io::read_posteriors(ss);
  ASSERT_EQ(back.rows.size(), table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].utt_id, table.rows[i].utt_id);
    EXPECT_EQ(back.rows[i].p, table.rows[i].p);
  }
  ASSERT_EQ(back.null_rows.size(), 1u);
  EXPECT_EQ(back.null_rows[0], table.null_rows[0]);
}

TEST(WeightsFileTest, RoundTrip) {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "zscal_io_test" / "w.json";
  const CalibrationWeights w({1.0, 4.58257569495584, 0.1}, CalibrationMethod::kPriorMatch,
                             {0.2, 0.3, 0.5}, {17, 3e-7});
  io::write_weights(path, "task", w);
  const auto back = io::read_weights(path);
  EXPECT_EQ(back.task_id, "task");
  EXPECT_EQ(back.weights.method(), CalibrationMethod::kPriorMatch);
  EXPECT_EQ(std::vector<double>(back.weights.alpha().begin(), back.weights.alpha().end()),
            std::vector<double>(w.alpha().begin(), w.alpha().end()));
  EXPECT_EQ(back.weights.solver().iters, 17);
  EXPECT_EQ(back.weights.solver().l1_gap, 3e-7);
}

TEST(FrameFileTest, BothRowFormats) {
  const double h = std::log(0.5);
  std::ostringstream os;
  os << R"({"utt":"u1","T":2,"V":2,"blank_id":1,"vocab":["a","<b>"],"gold":"a"})" << '\n';
  os << '[' << io::format_double(h) << ',' << io::format_double(h) << "]\n";
  os << io::format_double(h) << ' ' << io::format_double(h) << '\n';
  std::istringstream in(os.str());
  const auto f = io::read_frames(in);
  EXPECT_EQ(f.utterance.utt_id, "u1");
  EXPECT_EQ(f.utterance.frames.num_frames(), 2u);
  EXPECT_EQ(f.utterance.frames.at(1, 0), h);
  EXPECT_EQ(f.vocab, (std::vector<std::string>{"a", "<b>"}));

  std::ostringstream short_file;
  short_file << R"({"utt":"u1","T":3,"V":2,"blank_id":1,"vocab":["a","<b>"]})" << '\n'
             << "[-0.6931471805599453,-0.6931471805599453]\n";
  std::istringstream in2(short_file.str());
  EXPECT_THROW(io::read_frames(in2), InvalidInput);
}

TEST(FrameFileTest, WriteThenRead) {
  const CtcFrameLogits frames(2, 3, 2, std::vector<double>(6, -std::log(3.0)));
  std::stringstream ss;
  io::write_frames(ss, "u", {"a", "b", "_"}, frames);
  const auto back = io::read_frames(ss);
  EXPECT_EQ(back.utterance.frames.at(1, 2), frames.at(1, 2));
  EXPECT_EQ(back.utterance.frames.blank_id(), 2u);
}

TEST(PromptFileTest, ReadsJsonLines) {
  std::istringstream in(
      "{\"prompt_id\":\"sec\",\"pattern\":\"This is a sound of {c}.\"}\n\n"
      "{\"prompt_id\":\"bare\",\"pattern\":\"{c}\"}\n");
  const auto prompts = io::read_prompts(in);
  ASSERT_EQ(prompts.size(), 2u);
  EXPECT_EQ(prompts[0].prompt_id, "sec");
  EXPECT_EQ(prompts[1].pattern, "{c}");
}

TEST(CsvTest, QuotesWhenNeeded) {
  EXPECT_EQ(io::csv_field("plain"), "plain");
  EXPECT_EQ(io::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(io::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

}  // namespace
}  // namespace zscal
