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

#ifndef ZSCAL_NULL_AUDIO_HPP_
#define ZSCAL_NULL_AUDIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zscal/error.hpp"

namespace zscal {

enum class NullInputKind { kZeroEncoderInput, kGaussianNoise };

struct NullInputSpec {
  NullInputKind kind = NullInputKind::kGaussianNoise;
  double sigma = 1.0;
  double duration_s = 5.0;
  int sample_rate = 16000;
  int num_clips = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(duration_s > 0.0)) throw InvalidInput("null-input duration must be > 0");
    if (sample_rate <= 0) throw InvalidInput("sample rate must be > 0");
    if (num_clips < 1) throw InvalidInput("need at least one null-input clip");
    if (kind == NullInputKind::kGaussianNoise && !(sigma > 0.0))
      throw InvalidInput("noise sigma must be > 0");
  }

  std::size_t num_samples() const {
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  }
};

// Full-scale float in [-1, 1] to PCM16. Out-of-range input is clipped.
inline std::int16_t quantize_pcm16(double x) {
  x = std::clamp(x, -1.0, 1.0);
  return static_cast<std::int16_t>(std::lround(x * 32767.0));
}

namespace detail {

inline void put_le(std::ostream& os, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

// Canonical 44-byte-header mono PCM16 RIFF/WAVE file.
inline void write_wav_pcm16(const std::filesystem::path& path, std::span<const std::int16_t> pcm,
                            int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  os.write("RIFF", 4);
  detail::put_le(os, 36 + data_bytes, 4);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  detail::put_le(os, 16, 4);
  detail::put_le(os, 1, 2);  // PCM
  detail::put_le(os, 1, 2);  // mono
  detail::put_le(os, static_cast<std::uint32_t>(sample_rate), 4);
  detail::put_le(os, static_cast<std::uint32_t>(sample_rate) * 2, 4);
  detail::put_le(os, 2, 2);
  detail::put_le(os, 16, 2);
  os.write("data", 4);
  detail::put_le(os, data_bytes, 4);
  for (auto s : pcm) detail::put_le(os, static_cast<std::uint16_t>(s), 2);
  if (!os) throw IoError("short write to '" + path.string() + "'");
}

// Writes the null inputs described by `spec` into `out_dir`.
//
// Gaussian noise: num_clips files null_noise_NNN.wav, each with
// round(duration_s * sample_rate) i.i.d. N(0, sigma^2) samples, clipped to
// [-1, 1] and quantized to PCM16. One generator seeded with `seed` is drawn
// from sequentially across clips.
//
// Zero encoder input: a single null_zero.json marker telling the scoring
// adapter to feed all-zero encoder features. No waveform is written.
inline std::vector<std::filesystem::path> generate_null_audio(
    const NullInputSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  if (spec.kind == NullInputKind::kZeroEncoderInput) {
    const auto path = out_dir / "null_zero.json";
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    nlohmann::ordered_json marker;
    marker["kind"] = "zero_encoder_input";
    marker["utt"] = "NULL:zero";
    marker["duration_s"] = spec.duration_s;
    marker["sample_rate"] = spec.sample_rate;
    os << marker.dump() << '\n';
    written.push_back(path);
    return written;
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.sigma);
  std::vector<std::int16_t> pcm(spec.num_samples());
  for (int c = 0; c < spec.num_clips; ++c) {
    for (auto& s : pcm) s = quantize_pcm16(noise(rng));
    char name[32];
    std::snprintf(name, sizeof(name), "null_noise_%03d.wav", c);
    const auto path = out_dir / name;
    write_wav_pcm16(path, pcm, spec.sample_rate);
    written.push_back(path);
  }
  return written;
}

}  // namespace zscal

#endif  // ZSCAL_NULL_AUDIO_HPP_
