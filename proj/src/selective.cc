/* Copyright 2026 The respclass Authors. All Rights Reserved.

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

#include "respclass/selective.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace respclass {

SuggestionResult suggest_from_proba(std::span<const double> proba,
                                    const Catalog& catalog, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must lie in [0, 1]");
  }
  SuggestionResult out;
  if (proba.empty()) return out;
  const int32_t best = argmax(proba);
  out.confidence = proba[best];
  if (out.confidence >= threshold) {
    const ResponseClass* rc = catalog.find(best);
    if (rc == nullptr) {
      throw Error(ErrorKind::kFailedPrecondition,
                  "predicted class " + std::to_string(best) + " not in catalog");
    }
    out.opted_out = false;
    out.class_id = best;
    out.exemplar_text = rc->exemplar_text;
  }
  return out;
}

SuggestionResult suggest(const SoftmaxModel& model, const Catalog& catalog,
                         std::span<const Turn> turns, double threshold,
                         const PlaceholderSet& placeholders) {
  const auto proba = predict_proba(model, catalog, turns, placeholders);
  return suggest_from_proba(proba, catalog, threshold);
}

const char* judgment_letter(Judgment j) {
  switch (j) {
    case Judgment::kEquivalent:
      return "a";
    case Judgment::kBetter:
      return "b";
    case Judgment::kEqual:
      return "c";
    case Judgment::kWorse:
      return "d";
  }
  return "?";
}

const char* judgment_label(Judgment j) {
  switch (j) {
    case Judgment::kEquivalent:
      return "a. Equivalent to Dr.";
    case Judgment::kBetter:
      return "b. Different, higher quality";
    case Judgment::kEqual:
      return "c. Different, equal quality";
    case Judgment::kWorse:
      return "d. Different, lower quality";
  }
  return "?";
}

Judgment parse_judgment(std::string_view letter) {
  if (letter == "a") return Judgment::kEquivalent;
  if (letter == "b") return Judgment::kBetter;
  if (letter == "c") return Judgment::kEqual;
  if (letter == "d") return Judgment::kWorse;
  throw Error(ErrorKind::kDataError,
              "judgment category must be one of a, b, c, d; got \"" +
                  std::string(letter) + "\"");
}

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%ld%%", std::lround(fraction * 100.0));
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  if (v == std::round(v)) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f", v);
  }
  return buf;
}

std::string pad(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render(const std::vector<std::vector<std::string>>& cells) {
  std::vector<size_t> widths;
  for (const auto& row : cells) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (size_t i = 0; i < row.size(); ++i) {
      line += i + 1 < row.size() ? pad(row[i], widths[i] + 2) : row[i];
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::vector<JudgmentRecord> parse_judgments(std::string_view content) {
  std::vector<JudgmentRecord> out;
  std::istringstream in{std::string(content)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).starts_with("#")) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 3) {
      throw Error(ErrorKind::kDataError, "judgment line " + std::to_string(line_no) +
                                             ": expected context_id, model, category");
    }
    try {
      out.push_back({fields[0], fields[1], parse_judgment(fields[2])});
    } catch (const Error& e) {
      throw Error(ErrorKind::kDataError,
                  "judgment line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string judgments_to_text(std::span<const JudgmentRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.context_id + ", " + r.model + ", " + judgment_letter(r.category) + "\n";
  }
  return out;
}

std::vector<RiskCoveragePoint> risk_coverage_curve(
    std::span<const double> confidences, std::span<const JudgmentRecord> judgments,
    std::span<const double> thresholds) {
  if (confidences.size() != judgments.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "risk_coverage_curve: " + std::to_string(confidences.size()) +
                    " confidences vs " + std::to_string(judgments.size()) +
                    " judgments");
  }
  std::vector<RiskCoveragePoint> out;
  const size_t n = confidences.size();
  for (double t : thresholds) {
    RiskCoveragePoint p;
    p.threshold = t;
    size_t bad = 0;
    for (size_t i = 0; i < n; ++i) {
      if (confidences[i] >= t) {
        ++p.answered;
        if (judgments[i].category == Judgment::kWorse) ++bad;
      }
    }
    p.coverage = n ? static_cast<double>(p.answered) / static_cast<double>(n) : 0.0;
    if (p.answered > 0)
      p.bad_rate = static_cast<double>(bad) / static_cast<double>(p.answered);
    out.push_back(p);
  }
  return out;
}

double threshold_for_coverage(std::span<const double> confidences,
                              double target_coverage) {
  if (confidences.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no confidences");
  }
  if (!(target_coverage >= 0.0 && target_coverage <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "target coverage must lie in [0, 1]");
  }
  std::vector<double> sorted(confidences.begin(), confidences.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto rank = static_cast<size_t>(
      std::ceil(target_coverage * static_cast<double>(sorted.size())));
  if (rank == 0) {
    return std::nextafter(sorted.front(), std::numeric_limits<double>::infinity());
  }
  return sorted[rank - 1];
}

double uniqueness_per_100(std::span<const std::string> suggestions) {
  if (suggestions.empty() || suggestions.size() % 100 != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "uniqueness_per_100 needs a positive multiple of 100 suggestions, got " +
                    std::to_string(suggestions.size()));
  }
  size_t distinct_total = 0;
  for (size_t b = 0; b < suggestions.size(); b += 100) {
    std::set<std::string_view> distinct;
    for (size_t i = b; i < b + 100; ++i) distinct.insert(suggestions[i]);
    distinct_total += distinct.size();
  }
  return static_cast<double>(distinct_total) /
         static_cast<double>(suggestions.size() / 100);
}

std::vector<JudgmentRow> tabulate_judgments(std::span<const JudgmentRecord> records) {
  if (records.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "tabulate_judgments: no records");
  }
  std::vector<std::string> order;
  std::map<std::string, std::array<size_t, 4>> counts;
  for (const auto& r : records) {
    auto [it, inserted] = counts.try_emplace(r.model, std::array<size_t, 4>{});
    if (inserted) order.push_back(r.model);
    ++it->second[static_cast<size_t>(r.category)];
  }
  std::vector<JudgmentRow> rows;
  for (const auto& model : order) {
    JudgmentRow row;
    row.model = model;
    const auto& c = counts[model];
    for (size_t k : c) row.total += k;
    for (size_t k = 0; k < 4; ++k) {
      row.percent[k] = static_cast<int>(std::lround(
          100.0 * static_cast<double>(c[k]) / static_cast<double>(row.total)));
    }
    rows.push_back(row);
  }
  return rows;
}

ProcedureRun make_procedure_run(std::string name, const Catalog& catalog,
                                const SoftmaxModel& model,
                                std::vector<JudgmentRecord> judgments,
                                std::vector<std::string> suggestions) {
  ProcedureRun run;
  run.name = std::move(name);
  run.num_classes = catalog.size();
  run.train_examples = static_cast<size_t>(model.train_examples);
  run.judgments = std::move(judgments);
  run.suggestions = std::move(suggestions);
  return run;
}

std::vector<ProcedureRow> compare_labeling_procedures(
    std::span<const ProcedureRun> runs) {
  std::vector<ProcedureRow> rows;
  for (const ProcedureRun& run : runs) {
    ProcedureRow row;
    row.name = run.name;
    row.num_classes = run.num_classes;
    row.train_examples = run.train_examples;
    if (!run.judgments.empty()) {
      const auto worse = std::count_if(
          run.judgments.begin(), run.judgments.end(),
          [](const JudgmentRecord& r) { return r.category == Judgment::kWorse; });
      row.bad_rate = static_cast<double>(worse) /
                     static_cast<double>(run.judgments.size());
    }
    if (!run.suggestions.empty()) row.unique_per_100 = uniqueness_per_100(run.suggestions);
    rows.push_back(row);
  }
  return rows;
}

std::string format_thousands(size_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  for (size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string format_judgment_table(std::span<const JudgmentRow> rows) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {""};
  for (const auto& r : rows) header.push_back(r.model);
  cells.push_back(header);
  for (size_t k = 0; k < 4; ++k) {
    std::vector<std::string> line = {judgment_label(static_cast<Judgment>(k))};
    for (const auto& r : rows) line.push_back(std::to_string(r.percent[k]) + "%");
    cells.push_back(line);
  }
  return render(cells);
}

std::string format_procedure_table(std::span<const ProcedureRow> rows) {
  std::vector<std::vector<std::string>> cells = {
      {"Run", "# Classes", "Train Examples", "Bad Responses",
       "Unique per 100 responses"}};
  for (const auto& r : rows) {
    cells.push_back({r.name, format_thousands(r.num_classes),
                     format_thousands(r.train_examples),
                     r.bad_rate ? format_percent(*r.bad_rate) : "-",
                     r.unique_per_100 ? format_number(*r.unique_per_100) : "-"});
  }
  return render(cells);
}

std::string format_risk_coverage(std::span<const RiskCoveragePoint> points) {
  std::vector<std::vector<std::string>> cells = {
      {"Threshold", "Coverage", "Opt Out Frequency", "Bad Rate",
       "Usable Suggestion Rate"}};
  char buf[64];
  for (const auto& p : points) {
    std::vector<std::string> row;
    std::snprintf(buf, sizeof(buf), "%.3f", p.threshold);
    row.push_back(buf);
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * p.coverage);
    row.push_back(buf);
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * (1.0 - p.coverage));
    row.push_back(buf);
    if (p.bad_rate) {
      std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * *p.bad_rate);
      row.push_back(buf);
      std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * (1.0 - *p.bad_rate));
      row.push_back(buf);
    } else {
      row.push_back("-");
      row.push_back("-");
    }
    cells.push_back(row);
  }
  return render(cells);
}

}  // namespace respclass
