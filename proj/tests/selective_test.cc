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

#include <gtest/gtest.h>

#include <algorithm>

#include "testing.h"

namespace respclass {
namespace {

Catalog three_classes() {
  Catalog c;
  for (int32_t k = 0; k < 3; ++k) {
    c.classes.push_back({k, "class " + std::to_string(k), "exemplar " + std::to_string(k),
                         {k}, {k}});
  }
  return c;
}

TEST(Suggest, Examples) {
  const Catalog c = three_classes();
  const std::vector<double> p = {0.7, 0.2, 0.1};
  const SuggestionResult a = suggest_from_proba(p, c, 0.5);
  EXPECT_FALSE(a.opted_out);
  EXPECT_EQ(a.class_id, 0);
  EXPECT_EQ(a.exemplar_text, "exemplar 0");
  EXPECT_DOUBLE_EQ(a.confidence, 0.7);

  const SuggestionResult b = suggest_from_proba(p, c, 0.8);
  EXPECT_TRUE(b.opted_out);
  EXPECT_FALSE(b.class_id.has_value());
  EXPECT_FALSE(b.exemplar_text.has_value());
  EXPECT_DOUBLE_EQ(b.confidence, 0.7);

  EXPECT_FALSE(suggest_from_proba(p, c, 0.7).opted_out);
  EXPECT_THROW(suggest_from_proba(p, c, 1.5), Error);
}

TEST(Suggest, Properties) {
  const Catalog c = three_classes();
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p = {rng.uniform(), rng.uniform(), rng.uniform()};
    double s = p[0] + p[1] + p[2];
    for (double& v : p) v /= s;
    const double t = rng.uniform();
    const SuggestionResult r = suggest_from_proba(p, c, t);
    EXPECT_EQ(r.opted_out, r.confidence < t);
    EXPECT_EQ(r.opted_out, !r.class_id.has_value());
    EXPECT_FALSE(suggest_from_proba(p, c, 0.0).opted_out);
    if (r.exemplar_text) {
      EXPECT_TRUE(std::any_of(c.classes.begin(), c.classes.end(), [&](const ResponseClass& k) {
        return k.exemplar_text == *r.exemplar_text;
      }));
    }
  }
}

TEST(Suggest, TieGoesToLowestClass) {
  const std::vector<double> p = {0.25, 0.375, 0.375};
  EXPECT_EQ(suggest_from_proba(p, three_classes(), 0.1).class_id, 1);
}

std::vector<JudgmentRecord> records(std::initializer_list<Judgment> cats) {
  std::vector<JudgmentRecord> out;
  int i = 0;
  for (Judgment j : cats) out.push_back({"ctx" + std::to_string(i++), "m", j});
  return out;
}

TEST(RiskCoverage, Examples) {
  const std::vector<double> conf = {0.9, 0.6, 0.3};
  const auto judg = records({Judgment::kEqual, Judgment::kWorse, Judgment::kWorse});
  const std::vector<double> thresholds = {0.5, 0.0, 0.95};
  const auto curve = risk_coverage_curve(conf, judg, thresholds);
  EXPECT_DOUBLE_EQ(curve[0].coverage, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*curve[0].bad_rate, 0.5);
  EXPECT_EQ(curve[1].coverage, 1.0);
  EXPECT_DOUBLE_EQ(*curve[1].bad_rate, 2.0 / 3.0);
  EXPECT_EQ(curve[2].coverage, 0.0);
  EXPECT_FALSE(curve[2].bad_rate.has_value());
  const std::vector<double> short_conf = {0.5};
  EXPECT_THROW(risk_coverage_curve(short_conf, judg, thresholds), Error);
}

TEST(RiskCoverage, MatchesSortThenScan) {
  Rng rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = rng.below(51);
    std::vector<double> conf;
    std::vector<JudgmentRecord> judg;
    for (size_t i = 0; i < n; ++i) {
      conf.push_back(std::round(rng.uniform() * 20.0) / 20.0);
      judg.push_back({"c" + std::to_string(i), "m", static_cast<Judgment>(rng.below(4))});
    }
    std::vector<double> thresholds = {0.0};
    for (int t = 0; t < 6; ++t) thresholds.push_back(std::round(rng.uniform() * 20.0) / 20.0);
    std::sort(thresholds.begin(), thresholds.end());
    const auto curve = risk_coverage_curve(conf, judg, thresholds);
    const auto oracle = testing::sort_scan_risk_coverage(conf, judg, thresholds);
    ASSERT_EQ(curve.size(), oracle.size());
    for (size_t i = 0; i < curve.size(); ++i) {
      EXPECT_EQ(curve[i].coverage, oracle[i].coverage);
      EXPECT_EQ(curve[i].bad_rate, oracle[i].bad_rate);
      EXPECT_EQ(curve[i].answered, oracle[i].answered);
      if (i > 0) EXPECT_LE(curve[i].coverage, curve[i - 1].coverage);
    }
    if (n > 0) EXPECT_EQ(curve[0].coverage, 1.0);
  }
}

TEST(ThresholdForCoverage, NearestRank) {
  const std::vector<double> conf = {0.9, 0.1, 0.5, 0.7};
  EXPECT_DOUBLE_EQ(threshold_for_coverage(conf, 0.5), 0.7);
  EXPECT_DOUBLE_EQ(threshold_for_coverage(conf, 0.6), 0.5);
  EXPECT_DOUBLE_EQ(threshold_for_coverage(conf, 1.0), 0.1);
  EXPECT_THROW(threshold_for_coverage(conf, 1.5), Error);
}

TEST(UniquenessPer100, Examples) {
  EXPECT_EQ(uniqueness_per_100(std::vector<std::string>(100, "same")), 1.0);
  std::vector<std::string> distinct;
  for (int i = 0; i < 100; ++i) distinct.push_back(std::to_string(i));
  EXPECT_EQ(uniqueness_per_100(distinct), 100.0);
  EXPECT_EQ(uniqueness_per_100(testing::suggestions_with_distinct({30, 20})), 25.0);
  EXPECT_THROW(uniqueness_per_100(std::vector<std::string>(150, "x")), Error);
  EXPECT_THROW(uniqueness_per_100(std::vector<std::string>{}), Error);
}

TEST(TabulateJudgments, ReferenceCounts) {
  auto recs = testing::judgments_with_counts("discriminative", {550, 47, 85, 93});
  const auto gen = testing::judgments_with_counts("generative", {434, 8, 194, 139});
  recs.insert(recs.end(), gen.begin(), gen.end());
  const auto rows = tabulate_judgments(recs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].total, 775u);
  EXPECT_EQ(rows[0].percent, (std::array<int, 4>{71, 6, 11, 12}));
  EXPECT_EQ(rows[1].percent, (std::array<int, 4>{56, 1, 25, 18}));
}

TEST(TabulateJudgments, SmallCases) {
  const auto one = tabulate_judgments(records({Judgment::kEquivalent}));
  EXPECT_EQ(one[0].percent, (std::array<int, 4>{100, 0, 0, 0}));
  std::vector<JudgmentRecord> mixed = {{"1", "b", Judgment::kWorse},
                                       {"1", "a", Judgment::kBetter},
                                       {"2", "b", Judgment::kWorse}};
  const auto rows = tabulate_judgments(mixed);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].model, "b");
  EXPECT_EQ(rows[0].percent[3], 100);
  EXPECT_EQ(rows[1].percent[1], 100);
  EXPECT_THROW(tabulate_judgments({}), Error);
}

TEST(Judgments, ParseAndPrint) {
  const auto recs = parse_judgments("c1, disc, a\n\nc2,disc,d\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].category, Judgment::kWorse);
  EXPECT_EQ(parse_judgments(judgments_to_text(recs)).size(), 2u);
  EXPECT_THROW(parse_judgments("c1, disc, e\n"), Error);
  EXPECT_THROW(parse_judgments("c1, disc\n"), Error);
}

TEST(CompareProcedures, ReferenceRows) {
  const auto runs = testing::reference_procedure_runs();
  const auto rows = compare_labeling_procedures(runs);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].num_classes, 40u);
  EXPECT_EQ(rows[0].train_examples, 19300u);
  EXPECT_DOUBLE_EQ(*rows[0].bad_rate, 0.38);
  EXPECT_EQ(*rows[0].unique_per_100, 17.0);
  EXPECT_EQ(*rows[2].unique_per_100, 49.0);
  const std::string table = format_procedure_table(rows);
  EXPECT_NE(table.find("19,300"), std::string::npos) << table;
  EXPECT_NE(table.find("72,981"), std::string::npos);
  EXPECT_NE(table.find("86,941"), std::string::npos);
  EXPECT_NE(table.find("11%"), std::string::npos);
}

TEST(CompareProcedures, MissingJudgments) {
  ProcedureRun r;
  r.name = "solo";
  r.num_classes = 3;
  const auto rows = compare_labeling_procedures(std::vector<ProcedureRun>{r});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].bad_rate.has_value());
  EXPECT_NE(format_procedure_table(rows).find("-"), std::string::npos);
}

TEST(Format, Thousands) {
  EXPECT_EQ(format_thousands(1234), "1,234");
  EXPECT_EQ(format_thousands(999), "999");
  EXPECT_EQ(format_thousands(1000000), "1,000,000");
  EXPECT_EQ(format_thousands(0), "0");
}

}  // namespace
}  // namespace respclass
