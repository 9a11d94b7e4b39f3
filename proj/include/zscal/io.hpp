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

// File formats. Everything is UTF-8, newline-delimited JSON unless noted.
//
//   score file      manifest {"task_id","model_id","prompt_id","class_names"}
//                   then one {"utt","gold","ll"} record per utterance;
//                   ll entries are numbers or the string "-inf"
//   prompt file     one {"prompt_id","pattern"} record per line
//   weights file    {"task_id","method","alpha","target_prior",
//                    "solver":{"iters","l1_gap"}}
//   frame file      header {"utt","T","V","blank_id","vocab"[,"gold"]} then T
//                   lines of V log-probabilities (JSON array or whitespace
//                   separated)
//   posterior file  like a score file with "p" instead of "ll" and
//                   "kind":"posteriors" in the manifest
//   report file     one EvalReport record per line

#ifndef ZSCAL_IO_HPP_
#define ZSCAL_IO_HPP_

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "zscal/calibration.hpp"
#include "zscal/ctc.hpp"
#include "zscal/error.hpp"
#include "zscal/eval.hpp"
#include "zscal/score_core.hpp"

namespace zscal::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kNegInfToken = "-inf";

// 17 significant digits: enough for any double to read back bit-exactly.
inline std::string format_double(double x) {
  if (x == kNegInf) return "\"-inf\"";
  if (!std::isfinite(x)) throw InvalidInput("cannot serialize a NaN or +inf value");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_number(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == kNegInfToken || s == "-Infinity") return kNegInf;
  }
  throw InvalidInput(where + ": expected a number or \"-inf\", got " + v.dump());
}

inline json parse_line(const std::string& line, const std::string& where) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw InvalidInput(where + ": " + e.what());
  }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw InvalidInput(where + ": missing field \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(where + ": field \"" + key + "\": " + e.what());
  }
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

namespace detail {

// Yields (line number, line) for non-blank lines.
template <class F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    f(lineno, line);
  }
}

inline std::optional<std::size_t> parse_gold(const json& rec, const std::string& where) {
  if (!rec.contains("gold") || rec.at("gold").is_null()) return std::nullopt;
  const auto& g = rec.at("gold");
  if (!g.is_number_integer() || g.get<long long>() < 0)
    throw InvalidInput(where + ": gold must be a non-negative integer or null");
  return static_cast<std::size_t>(g.get<long long>());
}

inline std::string gold_field(const std::optional<std::size_t>& gold) {
  return gold ? std::to_string(*gold) : "null";
}

struct Manifest {
  LabelSet labels;
  std::string model_id;
  std::string prompt_id;
};

inline Manifest parse_manifest(const json& m, const std::string& where) {
  return {LabelSet(require<std::string>(m, "task_id", where),
                   require<std::vector<std::string>>(m, "class_names", where)),
          m.contains("model_id") ? require<std::string>(m, "model_id", where) : "",
          m.contains("prompt_id") ? require<std::string>(m, "prompt_id", where) : ""};
}

inline void write_manifest(std::ostream& os, const LabelSet& labels, const std::string& model_id,
                           const std::string& prompt_id, const char* kind = nullptr) {
  ordered_json m;
  if (kind) m["kind"] = kind;
  m["task_id"] = labels.task_id();
  m["model_id"] = model_id;
  m["prompt_id"] = prompt_id;
  m["class_names"] = labels.class_names();
  os << m.dump() << '\n';
}

template <class Range>
void write_vector(std::ostream& os, const Range& values) {
  os << '[';
  bool first = true;
  for (double v : values) {
    if (!first) os << ',';
    os << format_double(v);
    first = false;
  }
  os << ']';
}

}  // namespace detail

// ---- score files ----------------------------------------------------------

inline ScoreMatrix read_scores(std::istream& in, const std::string& name = "<scores>") {
  std::optional<detail::Manifest> manifest;
  std::vector<ScoreRow> rows;
  detail::for_each_line(in, [&](std::size_t lineno, const std::string& line) {
    const auto where = name + ":" + std::to_string(lineno);
    const auto rec = parse_line(line, where);
    if (!manifest) {
      manifest = detail::parse_manifest(rec, where);
      return;
    }
    ScoreRow row{require<std::string>(rec, "utt", where), detail::parse_gold(rec, where), {}};
    if (!rec.contains("ll") || !rec.at("ll").is_array())
      throw InvalidInput(where + ": missing array field \"ll\"");
    for (const auto& v : rec.at("ll")) row.ll.push_back(parse_number(v, where));
    rows.push_back(std::move(row));
  });
  if (!manifest) throw InvalidInput(name + ": empty score file");
  return ScoreMatrix(manifest->labels, manifest->model_id, manifest->prompt_id, std::move(rows));
}

inline ScoreMatrix read_scores(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_scores(in, path.string());
}

inline void write_scores(std::ostream& os, const ScoreMatrix& scores) {
  detail::write_manifest(os, scores.labels(), scores.model_id(), scores.prompt_id());
  for (const auto& row : scores.rows()) {
    os << "{\"utt\":" << json(row.utt_id).dump() << ",\"gold\":" << detail::gold_field(row.gold)
       << ",\"ll\":";
    detail::write_vector(os, row.ll);
    os << "}\n";
  }
}

inline void write_scores(const std::filesystem::path& path, const ScoreMatrix& scores) {
  auto out = open_out(path);
  write_scores(out, scores);
}

// ---- posterior files ------------------------------------------------------

inline void write_posteriors(std::ostream& os, const PosteriorTable& table) {
  detail::write_manifest(os, table.labels, table.model_id, table.prompt_id, "posteriors");
  for (const auto& row : table.rows) {
    os << "{\"utt\":" << json(row.utt_id).dump() << ",\"gold\":" << detail::gold_field(row.gold)
       << ",\"p\":";
    detail::write_vector(os, row.p.probs());
    os << "}\n";
  }
  for (std::size_t i = 0; i < table.null_rows.size(); ++i) {
    os << "{\"utt\":\"NULL:" << i << "\",\"gold\":null,\"p\":";
    detail::write_vector(os, table.null_rows[i].probs());
    os << "}\n";
  }
}

inline void write_posteriors(const std::filesystem::path& path, const PosteriorTable& table) {
  auto out = open_out(path);
  write_posteriors(out, table);
}

inline PosteriorTable read_posteriors(std::istream& in, const std::string& name = "<posteriors>") {
  std::optional<PosteriorTable> table;
  detail::for_each_line(in, [&](std::size_t lineno, const std::string& line) {
    const auto where = name + ":" + std::to_string(lineno);
    const auto rec = parse_line(line, where);
    if (!table) {
      auto m = detail::parse_manifest(rec, where);
      table = PosteriorTable{m.labels, m.model_id, m.prompt_id, {}, {}};
      return;
    }
    const auto utt = require<std::string>(rec, "utt", where);
    std::vector<double> p;
    for (const auto& v : require<json>(rec, "p", where)) p.push_back(parse_number(v, where));
    if (p.size() != table->num_classes()) throw InvalidInput(where + ": wrong number of classes");
    if (is_null_utt(utt))
      table->null_rows.emplace_back(std::move(p));
    else
      table->rows.push_back({utt, detail::parse_gold(rec, where), ClassPosterior(std::move(p))});
  });
  if (!table) throw InvalidInput(name + ": empty posterior file");
  return *table;
}

inline PosteriorTable read_posteriors(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_posteriors(in, path.string());
}

// ---- prompt files ---------------------------------------------------------

inline std::vector<PromptTemplate> read_prompts(std::istream& in,
                                                const std::string& name = "<prompts>") {
  std::vector<PromptTemplate> prompts;
  detail::for_each_line(in, [&](std::size_t lineno, const std::string& line) {
    const auto where = name + ":" + std::to_string(lineno);
    const auto rec = parse_line(line, where);
    prompts.push_back({require<std::string>(rec, "prompt_id", where),
                       require<std::string>(rec, "pattern", where)});
  });
  return prompts;
}

inline std::vector<PromptTemplate> read_prompts(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_prompts(in, path.string());
}

// ---- label and prior files ------------------------------------------------

// {"task_id", "class_names": [...]}
inline LabelSet read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto rec = parse_line(ss.str(), path.string());
  return LabelSet(require<std::string>(rec, "task_id", path.string()),
                  require<std::vector<std::string>>(rec, "class_names", path.string()));
}

// Either a bare JSON array or {"prior": [...]}.
inline std::vector<double> read_prior(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto rec = parse_line(ss.str(), path.string());
  if (rec.is_object()) rec = require<json>(rec, "prior", path.string());
  if (!rec.is_array()) throw InvalidInput(path.string() + ": prior must be an array");
  std::vector<double> prior;
  for (const auto& v : rec) prior.push_back(parse_number(v, path.string()));
  return prior;
}

// ---- weights files --------------------------------------------------------

struct WeightsFile {
  std::string task_id;
  CalibrationWeights weights;
};

inline std::string weights_to_json(const std::string& task_id, const CalibrationWeights& w) {
  ordered_json j;
  j["task_id"] = task_id;
  j["method"] = to_string(w.method());
  j["alpha"] = std::vector<double>(w.alpha().begin(), w.alpha().end());
  j["target_prior"] = std::vector<double>(w.target_prior().begin(), w.target_prior().end());
  j["solver"] = {{"iters", w.solver().iters}, {"l1_gap", w.solver().l1_gap}};
  return j.dump();
}

inline void write_weights(const std::filesystem::path& path, const std::string& task_id,
                          const CalibrationWeights& w) {
  auto out = open_out(path);
  out << weights_to_json(task_id, w) << '\n';
}

inline WeightsFile read_weights(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto where = path.string();
  const auto rec = parse_line(ss.str(), where);
  SolverStats stats;
  if (rec.contains("solver")) {
    const auto& s = rec.at("solver");
    stats.iters = require<int>(s, "iters", where);
    stats.l1_gap = require<double>(s, "l1_gap", where);
  }
  return {require<std::string>(rec, "task_id", where),
          CalibrationWeights(require<std::vector<double>>(rec, "alpha", where),
                             parse_calibration_method(require<std::string>(rec, "method", where)),
                             require<std::vector<double>>(rec, "target_prior", where), stats)};
}

// ---- CTC frame files ------------------------------------------------------

struct FrameFile {
  CtcUtterance utterance;
  std::vector<std::string> vocab;
  std::optional<std::string> gold_name;
};

inline FrameFile read_frames(std::istream& in, const std::string& name = "<frames>") {
  std::optional<json> header;
  std::vector<double> log_probs;
  std::size_t vocab_size = 0;
  std::size_t frames_seen = 0;
  detail::for_each_line(in, [&](std::size_t lineno, const std::string& line) {
    const auto where = name + ":" + std::to_string(lineno);
    if (!header) {
      header = parse_line(line, where);
      vocab_size = require<std::size_t>(*header, "V", where);
      return;
    }
    std::vector<double> row;
    const auto first = line.find_first_not_of(" \t");
    if (line[first] == '[') {
      for (const auto& v : parse_line(line, where)) row.push_back(parse_number(v, where));
    } else {
      std::istringstream fields(line);
      std::string tok;
      while (fields >> tok) {
        if (tok == kNegInfToken) {
          row.push_back(kNegInf);
          continue;
        }
        try {
          std::size_t used = 0;
          row.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw InvalidInput(where + ": bad log-probability '" + tok + "'");
        }
      }
    }
    if (row.size() != vocab_size)
      throw InvalidInput(where + ": frame has " + std::to_string(row.size()) +
                         " entries, expected V = " + std::to_string(vocab_size));
    log_probs.insert(log_probs.end(), row.begin(), row.end());
    ++frames_seen;
  });
  if (!header) throw InvalidInput(name + ": empty frame file");
  const auto where = name + ":1";
  const auto num_frames = require<std::size_t>(*header, "T", where);
  if (frames_seen != num_frames)
    throw InvalidInput(name + ": header says T = " + std::to_string(num_frames) + " but " +
                       std::to_string(frames_seen) + " frames follow");
  FrameFile f;
  f.vocab = require<std::vector<std::string>>(*header, "vocab", where);
  if (f.vocab.size() != vocab_size) throw InvalidInput(where + ": vocab length differs from V");
  f.utterance.utt_id = require<std::string>(*header, "utt", where);
  if (header->contains("gold") && !header->at("gold").is_null()) {
    const auto& g = header->at("gold");
    if (g.is_string())
      f.gold_name = g.get<std::string>();
    else
      f.utterance.gold = detail::parse_gold(*header, where);
  }
  f.utterance.frames = CtcFrameLogits(num_frames, vocab_size,
                                      require<std::size_t>(*header, "blank_id", where),
                                      std::move(log_probs));
  return f;
}

inline FrameFile read_frames(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_frames(in, path.string());
}

inline void write_frames(std::ostream& os, const std::string& utt_id,
                         const std::vector<std::string>& vocab, const CtcFrameLogits& frames) {
  ordered_json h;
  h["utt"] = utt_id;
  h["T"] = frames.num_frames();
  h["V"] = frames.vocab_size();
  h["blank_id"] = frames.blank_id();
  h["vocab"] = vocab;
  os << h.dump() << '\n';
  for (std::size_t t = 0; t < frames.num_frames(); ++t) {
    detail::write_vector(os, frames.frame(t));
    os << '\n';
  }
}

// ---- reports --------------------------------------------------------------

inline ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  j["task_id"] = r.task_id;
  j["model_id"] = r.model_id;
  j["prompt_id"] = r.prompt_id;
  j["method"] = r.method;
  j["accuracy"] = r.accuracy;
  j["n"] = r.n;
  j["correct"] = r.correct;
  j["class_names"] = r.class_names;
  j["class_distribution"] = r.class_distribution;
  j["calibration"] = {{"top1_gap", r.calibration.top1_gap},
                      {"all_label_gaps", r.calibration.all_label_gaps}};
  j["prior_l1_gap"] = r.prior_l1_gap ? ordered_json(*r.prior_l1_gap) : ordered_json(nullptr);
  j["positive_class"] =
      r.positive_class ? ordered_json(*r.positive_class) : ordered_json(nullptr);
  auto pr = ordered_json::array();
  for (const auto& p : r.pr_curve)
    pr.push_back({{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
  j["pr_curve"] = pr;
  j["seed"] = r.seed ? ordered_json(*r.seed) : ordered_json(nullptr);
  return j;
}

inline EvalReport report_from_json(const json& j, const std::string& where) {
  EvalReport r;
  r.task_id = require<std::string>(j, "task_id", where);
  r.model_id = require<std::string>(j, "model_id", where);
  r.prompt_id = j.value("prompt_id", std::string{});
  r.method = require<std::string>(j, "method", where);
  r.accuracy = require<double>(j, "accuracy", where);
  r.n = require<std::size_t>(j, "n", where);
  r.correct = j.value("correct", std::size_t{0});
  r.class_names = require<std::vector<std::string>>(j, "class_names", where);
  r.class_distribution = require<std::vector<double>>(j, "class_distribution", where);
  if (j.contains("calibration")) {
    const auto& c = j.at("calibration");
    r.calibration.top1_gap = require<double>(c, "top1_gap", where);
    r.calibration.all_label_gaps = require<std::vector<double>>(c, "all_label_gaps", where);
  }
  if (j.contains("prior_l1_gap") && !j.at("prior_l1_gap").is_null())
    r.prior_l1_gap = j.at("prior_l1_gap").get<double>();
  if (j.contains("positive_class") && !j.at("positive_class").is_null())
    r.positive_class = j.at("positive_class").get<std::string>();
  if (j.contains("pr_curve"))
    for (const auto& p : j.at("pr_curve"))
      r.pr_curve.push_back({require<double>(p, "threshold", where),
                            require<double>(p, "precision", where),
                            require<double>(p, "recall", where)});
  if (j.contains("seed") && !j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

inline void write_reports(std::ostream& os, const std::vector<EvalReport>& reports) {
  for (const auto& r : reports) os << report_to_json(r).dump() << '\n';
}

inline std::vector<EvalReport> read_reports(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<EvalReport> out;
  detail::for_each_line(in, [&](std::size_t lineno, const std::string& line) {
    const auto where = path.string() + ":" + std::to_string(lineno);
    out.push_back(report_from_json(parse_line(line, where), where));
  });
  return out;
}

// ---- CSV ------------------------------------------------------------------

// RFC 4180 quoting, only when needed.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void write_predictions_csv(std::ostream& os, const LabelSet& labels,
                                  const std::vector<Prediction>& predictions) {
  os << "utt,class_index,class_name,confidence\n";
  for (const auto& p : predictions)
    os << csv_field(p.utt_id) << ',' << p.class_index << ',' << csv_field(labels[p.class_index])
       << ',' << format_double(p.confidence) << '\n';
}

}  // namespace zscal::io

#endif  // ZSCAL_IO_HPP_
