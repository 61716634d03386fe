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

#ifndef RESPCLASS_SELECTIVE_H_
#define RESPCLASS_SELECTIVE_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "respclass/classifier.h"
#include "respclass/responseclasses.h"

namespace respclass {

struct SuggestionResult {
  bool opted_out = true;
  std::optional<int32_t> class_id;
  std::optional<std::string> exemplar_text;
  double confidence = 0.0;  // maximum predicted probability
};

// Answers when the top probability reaches the threshold (ties answer).
SuggestionResult suggest_from_proba(std::span<const double> proba,
                                    const Catalog& catalog, double threshold);
SuggestionResult suggest(const SoftmaxModel& model, const Catalog& catalog,
                         std::span<const Turn> turns, double threshold,
                         const PlaceholderSet& placeholders = {});

// The four expert judgment outcomes, in table order (a)-(d).
enum class Judgment { kEquivalent, kBetter, kEqual, kWorse };

const char* judgment_letter(Judgment j);
const char* judgment_label(Judgment j);
Judgment parse_judgment(std::string_view letter);

struct JudgmentRecord {
  std::string context_id;
  std::string model;
  Judgment category = Judgment::kEquivalent;
};

// Lines of `context_id, model, category` with category in {a, b, c, d}.
std::vector<JudgmentRecord> parse_judgments(std::string_view content);
std::string judgments_to_text(std::span<const JudgmentRecord> records);

struct RiskCoveragePoint {
  double threshold = 0.0;
  double coverage = 0.0;
  std::optional<double> bad_rate;  // absent when nothing is answered
  size_t answered = 0;
};

std::vector<RiskCoveragePoint> risk_coverage_curve(
    std::span<const double> confidences, std::span<const JudgmentRecord> judgments,
    std::span<const double> thresholds);

// Nearest-rank threshold answering at least `target_coverage` of contexts.
double threshold_for_coverage(std::span<const double> confidences,
                              double target_coverage);

// Mean number of distinct texts per consecutive block of 100 suggestions.
double uniqueness_per_100(std::span<const std::string> suggestions);

struct JudgmentRow {
  std::string model;
  size_t total = 0;
  std::array<int, 4> percent{};  // rounded, categories (a)-(d)
};

// One row per model, in order of first appearance.
std::vector<JudgmentRow> tabulate_judgments(std::span<const JudgmentRecord> records);

struct ProcedureRun {
  std::string name;
  size_t num_classes = 0;
  size_t train_examples = 0;
  std::vector<JudgmentRecord> judgments;
  std::vector<std::string> suggestions;
};

ProcedureRun make_procedure_run(std::string name, const Catalog& catalog,
                                const SoftmaxModel& model,
                                std::vector<JudgmentRecord> judgments,
                                std::vector<std::string> suggestions);

struct ProcedureRow {
  std::string name;
  size_t num_classes = 0;
  size_t train_examples = 0;
  std::optional<double> bad_rate;
  std::optional<double> unique_per_100;
};

std::vector<ProcedureRow> compare_labeling_procedures(
    std::span<const ProcedureRun> runs);

// Aligned text with thousands separators and whole percentages.
std::string format_judgment_table(std::span<const JudgmentRow> rows);
std::string format_procedure_table(std::span<const ProcedureRow> rows);
std::string format_risk_coverage(std::span<const RiskCoveragePoint> points);
std::string format_thousands(size_t value);

}  // namespace respclass

#endif  // RESPCLASS_SELECTIVE_H_
