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


#include "zscal/null_audio.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace zscal {
namespace {

namespace fs = std::filesystem;

fs::path ScratchDir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("zscal_null_audio_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

TEST(QuantizeTest, ClipsAndRounds) {
  EXPECT_EQ(quantize_pcm16(0.0), 0);
  EXPECT_EQ(quantize_pcm16(1.0), 32767);
  EXPECT_EQ(quantize_pcm16(-1.0), -32767);
  EXPECT_EQ(quantize_pcm16(7.5), 32767);
  EXPECT_EQ(quantize_pcm16(-7.5), -32767);
  EXPECT_EQ(quantize_pcm16(0.5), 16384);
}

TEST(NullAudioTest, OneFiveSecondClip) {
  NullInputSpec spec;
  spec.num_clips = 1;
  const auto dir = ScratchDir("one");
  const auto files = generate_null_audio(spec, dir);
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(spec.num_samples(), 80000u);
  EXPECT_EQ(fs::file_size(files[0]), 44u + 2u * 80000u);
  const auto bytes = Slurp(files[0]);
  EXPECT_EQ(bytes.substr(0, 4), "RIFF");
  EXPECT_EQ(bytes.substr(8, 8), "WAVEfmt ");
  EXPECT_EQ(bytes.substr(36, 4), "data");
}

TEST(NullAudioTest, SameSeedIsByteIdentical) {
  NullInputSpec spec;
  spec.num_clips = 3;
  spec.duration_s = 0.5;
  spec.seed = 7;
  const auto a = generate_null_audio(spec, ScratchDir("a"));
  const auto b = generate_null_audio(spec, ScratchDir("b"));
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].filename(), b[i].filename());
    EXPECT_EQ(Slurp(a[i]), Slurp(b[i]));
  }
  EXPECT_NE(Slurp(a[0]), Slurp(a[1]));
  spec.seed = 8;
  const auto c = generate_null_audio(spec, ScratchDir("c"));
  EXPECT_NE(Slurp(a[0]), Slurp(c[0]));
}

TEST(NullAudioTest, ZeroInputWritesMarkerOnly) {
  NullInputSpec spec;
  spec.kind = NullInputKind::kZeroEncoderInput;
  const auto dir = ScratchDir("zero");
  const auto files = generate_null_audio(spec, dir);
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(files[0].extension(), ".json");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
  const auto marker = nlohmann::json::parse(Slurp(files[0]));
  EXPECT_EQ(marker["kind"], "zero_encoder_input");
  EXPECT_EQ(marker["utt"], "NULL:zero");
}

TEST(NullAudioTest, RejectsBadSpecs) {
  NullInputSpec spec;
  spec.sigma = 0.0;
  EXPECT_THROW(spec.validate(), InvalidInput);
  spec = {};
  spec.num_clips = 0;
  EXPECT_THROW(spec.validate(), InvalidInput);
  spec = {};
  spec.duration_s = -1.0;
  EXPECT_THROW(spec.validate(), InvalidInput);
}

}  // namespace
}  // namespace zscal
