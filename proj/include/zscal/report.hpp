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

#ifndef ZSCAL_REPORT_HPP_
#define ZSCAL_REPORT_HPP_

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "zscal/error.hpp"
#include "zscal/eval.hpp"
#include "zscal/io.hpp"

namespace zscal {

struct ReportRowKey {
  std::string model_id;
  std::string method;
  std::string prompt_id;

  friend bool operator==(const ReportRowKey&, const ReportRowKey&) = default;

  std::string label() const {
    std::string s = model_id + " / " + method;
    if (!prompt_id.empty()) s += " / " + prompt_id;
    return s;
  }
};

// Accuracies laid out datasets x (model, method, prompt) rows, in order of
// first appearance. Values are fractions; rounding happens when rendering.
struct ReportTable {
  std::vector<std::string> datasets;
  std::vector<ReportRowKey> rows;
  std::vector<std::vector<std::optional<double>>> cells;  // [row][dataset]
  // Mean over datasets; empty when any cell in the row is missing.
  std::vector<std::optional<double>> average;
  // Row summary minus the first row's summary. The summary is the average
  // with several datasets and the single cell otherwise.
  std::vector<std::optional<double>> delta;

  std::optional<double> summary(std::size_t row) const {
    return datasets.size() > 1 ? average[row] : cells[row][0];
  }
};

inline ReportTable tabulate(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw InvalidInput("no reports to render");
  ReportTable t;
  auto index_of = [](auto& vec, const auto& value) {
    auto it = std::find(vec.begin(), vec.end(), value);
    if (it != vec.end()) return static_cast<std::size_t>(it - vec.begin());
    vec.push_back(value);
    return vec.size() - 1;
  };
  std::vector<std::tuple<std::size_t, std::size_t, double>> placed;
  for (const auto& r : reports) {
    const auto row = index_of(t.rows, ReportRowKey{r.model_id, r.method, r.prompt_id});
    const auto col = index_of(t.datasets, r.task_id);
    placed.emplace_back(row, col, r.accuracy);
  }
  t.cells.assign(t.rows.size(), std::vector<std::optional<double>>(t.datasets.size()));
  for (const auto& [row, col, acc] : placed) {
    if (t.cells[row][col])
      throw InvalidInput("two reports for " + t.rows[row].label() + " on " + t.datasets[col]);
    t.cells[row][col] = acc;
  }
  for (const auto& row : t.cells) {
    double sum = 0.0;
    bool complete = true;
    for (const auto& c : row) {
      if (!c) complete = false;
      else sum += *c;
    }
    t.average.push_back(complete ? std::optional<double>(sum / static_cast<double>(row.size()))
                                 : std::nullopt);
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto base = t.summary(0);
    const auto mine = t.summary(i);
    t.delta.push_back(base && mine ? std::optional<double>(*mine - *base) : std::nullopt);
  }
  return t;
}

namespace detail {

inline std::string percent(std::optional<double> v, bool signed_value = false) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), signed_value ? "%+.1f" : "%.1f", *v * 100.0);
  return buf;
}

}  // namespace detail

// Aligned plain-text table, accuracies in percent with one decimal.
inline std::string render_table(const ReportTable& t) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"system"};
  header.insert(header.end(), t.datasets.begin(), t.datasets.end());
  const bool with_avg = t.datasets.size() > 1;
  const bool with_delta = t.rows.size() > 1;
  if (with_avg) header.push_back("Avg.");
  if (with_delta) header.push_back("delta");
  grid.push_back(header);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::vector<std::string> line{t.rows[i].label()};
    for (const auto& c : t.cells[i]) line.push_back(detail::percent(c));
    if (with_avg) line.push_back(detail::percent(t.average[i]));
    if (with_delta) line.push_back(detail::percent(t.delta[i], true));
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());

  std::ostringstream os;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      const auto& cell = grid[r][c];
      const auto pad = std::string(width[c] - cell.size(), ' ');
      if (c == 0)
        os << cell << pad;
      else
        os << " | " << pad << cell;
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = width[0];
      for (std::size_t c = 1; c < width.size(); ++c) total += width[c] + 3;
      os << std::string(total, '-') << '\n';
    }
  }
  return os.str();
}

struct RenderedReport {
  std::string table;         // human-readable
  std::string records;       // one JSON record per report
  std::string distribution;  // CSV, per-class prediction fractions
  std::string pr;            // CSV, precision-recall points
};

inline RenderedReport render_report(const std::vector<EvalReport>& reports) {
  RenderedReport out;
  out.table = render_table(tabulate(reports));

  std::ostringstream rec;
  io::write_reports(rec, reports);
  out.records = rec.str();

  std::ostringstream dist;
  dist << "task_id,model_id,prompt_id,method,class_index,class_name,fraction\n";
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.class_distribution.size(); ++k)
      dist << io::csv_field(r.task_id) << ',' << io::csv_field(r.model_id) << ','
           << io::csv_field(r.prompt_id) << ',' << io::csv_field(r.method) << ',' << k << ','
           << io::csv_field(k < r.class_names.size() ? r.class_names[k] : "") << ','
           << io::format_double(r.class_distribution[k]) << '\n';
  out.distribution = dist.str();

  std::ostringstream pr;
  pr << "task_id,model_id,prompt_id,method,threshold,precision,recall\n";
  for (const auto& r : reports)
    for (const auto& p : r.pr_curve)
      pr << io::csv_field(r.task_id) << ',' << io::csv_field(r.model_id) << ','
         << io::csv_field(r.prompt_id) << ',' << io::csv_field(r.method) << ','
         << io::format_double(p.threshold) << ',' << io::format_double(p.precision) << ','
         << io::format_double(p.recall) << '\n';
  out.pr = pr.str();
  return out;
}

// report.txt, reports.jsonl, distribution.csv and pr_curve.csv under `dir`.
inline void write_report(const std::filesystem::path& dir, const RenderedReport& r) {
  std::filesystem::create_directories(dir);
  io::open_out(dir / "report.txt") << r.table;
  io::open_out(dir / "reports.jsonl") << r.records;
  io::open_out(dir / "distribution.csv") << r.distribution;
  io::open_out(dir / "pr_curve.csv") << r.pr;
}

}  // namespace zscal

#endif  // ZSCAL_REPORT_HPP_
