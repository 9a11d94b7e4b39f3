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

// Label-sequence likelihoods for CTC acoustic models.
//
// A CTC head emits, per frame, a distribution over V symbols one of which is
// blank. A label's probability is the sum over every length-T frame path that
// collapses to it (merge repeats, then drop blanks). The forward recursion
// below runs over the blank-interleaved label  _ l1 _ l2 _ ... lL _  in log
// space.

#ifndef ZSCAL_CTC_HPP_
#define ZSCAL_CTC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "zscal/error.hpp"
#include "zscal/score_core.hpp"

namespace zscal {

inline constexpr double kFrameSumTolerance = 1e-6;

// T x V frame log-probabilities, row-major.
class CtcFrameLogits {
 public:
  CtcFrameLogits() = default;
  CtcFrameLogits(std::size_t num_frames, std::size_t vocab_size, std::size_t blank_id,
                 std::vector<double> log_probs)
      : num_frames_(num_frames),
        vocab_size_(vocab_size),
        blank_id_(blank_id),
        log_probs_(std::move(log_probs)) {
    if (num_frames_ < 1) throw InvalidInput("CTC input needs at least one frame");
    if (vocab_size_ < 2) throw InvalidInput("CTC vocabulary needs a blank and a symbol");
    if (blank_id_ >= vocab_size_) throw InvalidInput("blank id outside the vocabulary");
    if (log_probs_.size() != num_frames_ * vocab_size_)
      throw InvalidInput("frame table has " + std::to_string(log_probs_.size()) +
                         " entries, expected T*V = " + std::to_string(num_frames_ * vocab_size_));
    for (std::size_t t = 0; t < num_frames_; ++t) {
      double sum = 0.0;
      for (double v : frame(t)) {
        if (std::isnan(v) || v > 0.0)
          throw InvalidInput("frame " + std::to_string(t) + " has an invalid log-probability");
        sum += std::exp(v);
      }
      if (std::abs(sum - 1.0) > kFrameSumTolerance)
        throw InvalidInput("frame " + std::to_string(t) + " probabilities sum to " +
                           std::to_string(sum));
    }
  }

  std::size_t num_frames() const { return num_frames_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t blank_id() const { return blank_id_; }

  std::span<const double> frame(std::size_t t) const {
    return std::span<const double>(log_probs_).subspan(t * vocab_size_, vocab_size_);
  }
  double at(std::size_t t, std::size_t v) const { return log_probs_[t * vocab_size_ + v]; }

 private:
  std::size_t num_frames_ = 0;
  std::size_t vocab_size_ = 0;
  std::size_t blank_id_ = 0;
  std::vector<double> log_probs_;
};

class CtcLabelSequence {
 public:
  CtcLabelSequence() = default;
  explicit CtcLabelSequence(std::vector<std::size_t> token_ids)
      : token_ids_(std::move(token_ids)) {
    if (token_ids_.empty()) throw InvalidInput("CTC label sequence is empty");
  }

  // Checks ids against a concrete vocabulary and blank.
  void validate(std::size_t vocab_size, std::size_t blank_id) const {
    for (auto id : token_ids_) {
      if (id >= vocab_size) throw InvalidInput("label token id outside the vocabulary");
      if (id == blank_id) throw InvalidInput("label contains the blank symbol");
    }
  }

  std::span<const std::size_t> ids() const { return token_ids_; }
  std::size_t size() const { return token_ids_.size(); }

  friend bool operator==(const CtcLabelSequence&, const CtcLabelSequence&) = default;

 private:
  std::vector<std::size_t> token_ids_;
};

// Frames needed to emit the label at all: one per symbol plus a separating
// blank between each pair of equal neighbours.
inline std::size_t min_ctc_frames(const CtcLabelSequence& label) {
  std::size_t n = label.size();
  const auto ids = label.ids();
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i] == ids[i - 1]) ++n;
  return n;
}

struct TokenizerOptions {
  bool lowercase = true;
  std::string space_symbol = " ";
};

namespace detail {

// Splits UTF-8 text into code point substrings. Invalid lead bytes are kept
// as single-byte units so the OOV error can still name them.
inline std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((lead & 0xE0) == 0xC0) len = 2;
    else if ((lead & 0xF0) == 0xE0) len = 3;
    else if ((lead & 0xF8) == 0xF0) len = 4;
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace detail

// Character-level tokenization against a symbol -> id map. Only ASCII is
// case folded; anything else must appear in the vocabulary as written.
inline CtcLabelSequence tokenize_label(std::string_view text,
                                       const std::unordered_map<std::string, std::size_t>& vocab,
                                       const TokenizerOptions& opts = {}) {
  std::vector<std::size_t> ids;
  for (auto ch : detail::utf8_chars(text)) {
    if (opts.lowercase && ch.size() == 1 && ch[0] >= 'A' && ch[0] <= 'Z')
      ch[0] = static_cast<char>(ch[0] - 'A' + 'a');
    const std::string& key = ch == " " ? opts.space_symbol : ch;
    auto it = vocab.find(key);
    if (it == vocab.end())
      throw OutOfVocabulary("character '" + ch + "' is not in the CTC vocabulary", ch);
    ids.push_back(it->second);
  }
  return CtcLabelSequence(std::move(ids));
}

namespace detail {

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace detail

// log P(label | frames), summed over all alignments. Returns -inf when the
// label needs more frames than there are.
inline double ctc_forward(const CtcFrameLogits& frames, const CtcLabelSequence& label) {
  label.validate(frames.vocab_size(), frames.blank_id());
  if (min_ctc_frames(label) > frames.num_frames()) return kNegInf;

  const auto ids = label.ids();
  const std::size_t ext_len = 2 * ids.size() + 1;
  auto symbol = [&](std::size_t s) { return s % 2 == 0 ? frames.blank_id() : ids[s / 2]; };

  std::vector<double> alpha(ext_len, kNegInf);
  std::vector<double> next(ext_len);
  alpha[0] = frames.at(0, frames.blank_id());
  alpha[1] = frames.at(0, ids[0]);

  for (std::size_t t = 1; t < frames.num_frames(); ++t) {
    for (std::size_t s = 0; s < ext_len; ++s) {
      double acc = alpha[s];
      if (s >= 1) acc = detail::log_add(acc, alpha[s - 1]);
      // Skipping the blank between two labels is only allowed when they differ.
      if (s >= 2 && s % 2 == 1 && symbol(s) != symbol(s - 2))
        acc = detail::log_add(acc, alpha[s - 2]);
      next[s] = acc == kNegInf ? kNegInf : acc + frames.at(t, symbol(s));
    }
    std::swap(alpha, next);
  }
  return detail::log_add(alpha[ext_len - 1], alpha[ext_len - 2]);
}

struct CtcUtterance {
  std::string utt_id;
  std::optional<std::size_t> gold;
  CtcFrameLogits frames;
};

// ll[i][k] = ctc_forward(frames_i, tokenize(rendered prompt of class k)).
// All utterances must share `vocab`.
inline ScoreMatrix ctc_score_matrix(std::span<const CtcUtterance> utterances,
                                    const LabelSet& labels, const PromptTemplate& prompt,
                                    const std::unordered_map<std::string, std::size_t>& vocab,
                                    std::string model_id = "ctc",
                                    const TokenizerOptions& opts = {}) {
  std::vector<CtcLabelSequence> targets;
  targets.reserve(labels.size());
  for (const auto& name : labels.class_names())
    targets.push_back(tokenize_label(render_prompt(prompt, name), vocab, opts));

  std::vector<ScoreRow> rows;
  rows.reserve(utterances.size());
  for (const auto& utt : utterances) {
    if (utt.frames.vocab_size() != vocab.size())
      throw InvalidInput("utterance '" + utt.utt_id + "' uses a different vocabulary size");
    ScoreRow row{utt.utt_id, utt.gold, {}};
    row.ll.reserve(targets.size());
    for (const auto& target : targets) row.ll.push_back(ctc_forward(utt.frames, target));
    rows.push_back(std::move(row));
  }
  return ScoreMatrix(labels, std::move(model_id), prompt.prompt_id, std::move(rows));
}

}  // namespace zscal

#endif  // ZSCAL_CTC_HPP_
