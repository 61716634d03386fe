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

// Acceptance checks for the whole system. Prints one PASS/FAIL line per
// criterion and exits non-zero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "respclass/classifier.h"
#include "respclass/clustering.h"
#include "respclass/pipeline.h"
#include "respclass/responseclasses.h"
#include "respclass/selective.h"
#include "respclass/synthetic.h"
#include "testing.h"

namespace respclass {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

size_t clique_violations_random = 0;

void clustering_oracle() {
  Rng rng(20260101);
  const auto start = Clock::now();
  size_t mismatches = 0;
  size_t merged = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = testing::random_distance_instance(rng, 12);
    const ClusterSet fast = complete_linkage_cluster(inst.sparse, inst.threshold, inst.counts);
    const ClusterSet slow =
        naive_complete_linkage_oracle(inst.dense, inst.threshold, inst.counts);
    if (!(fast == slow)) ++mismatches;
    if (fast.size() < static_cast<size_t>(inst.n)) ++merged;
    clique_violations_random += testing::clique_violations(fast, inst.sparse, inst.threshold);
  }
  const double elapsed = seconds_since(start);
  report(mismatches == 0 && elapsed < 60.0, "clustering-oracle",
         fmt("1000 instances, %zu mismatches, %zu with merges, %.2fs", mismatches, merged,
             elapsed));
}

void knn_oracle() {
  Rng rng(424242);
  size_t mismatches = 0;
  size_t queries = 0;
  for (int i = 0; i < 500; ++i) {
    const EmbeddingMatrix m = testing::random_matrix(rng, 200, 16);
    const int k = 1 + static_cast<int>(rng.below(20));
    for (ResponseId q = 0; q < static_cast<ResponseId>(m.size()); ++q) {
      ++queries;
      if (cosine_knn(m, q, k) != testing::brute_force_knn(m, q, k)) ++mismatches;
    }
  }
  report(mismatches == 0, "knn-oracle",
         fmt("500 instances, %zu queries, %zu mismatches", queries, mismatches));
}

void gradient_check() {
  Rng rng(777);
  double worst = 0.0;
  size_t coords = 0;
  for (int i = 0; i < 100; ++i) {
    const auto r = testing::random_gradient_check(rng, 1e-5);
    worst = std::max(worst, r.max_relative_error);
    coords += r.coordinates;
  }
  report(worst < 1e-4, "gradient-check",
         fmt("100 instances, %zu coordinates, max relative error %.3g", coords, worst));
}

void label_smoothing() {
  Rng rng(99);
  double worst_sum = 0.0;
  double worst_ce = 0.0;
  double worst_uniform = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int32_t K = 2 + static_cast<int32_t>(rng.below(50));
    const double t = rng.uniform();
    const auto q = smoothed_targets(static_cast<int32_t>(rng.below(K)), K, t);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0));

    const int32_t F = 1 + static_cast<int32_t>(rng.below(10));
    SoftmaxModel m = SoftmaxModel::zeros(std::min<int32_t>(K, 6), F);
    std::vector<FeaturizedExample> batch(1 + rng.below(5));
    for (auto& ex : batch) {
      std::vector<double> x(F);
      for (double& v : x) v = rng.normal();
      ex.features = SparseVector::from_dense(x);
      ex.class_id = static_cast<int32_t>(rng.below(m.num_classes));
    }
    m.smoothing = t;
    worst_uniform = std::max(
        worst_uniform,
        std::abs(loss_and_grad(m, batch).loss - std::log(static_cast<double>(m.num_classes))));
    m.smoothing = 0.0;
    for (double& w : m.weights) w = 2.0 * rng.normal();
    for (double& b : m.bias) b = rng.normal();
    worst_ce = std::max(worst_ce, std::abs(loss_and_grad(m, batch).loss -
                                           testing::plain_cross_entropy(m, batch)));
  }
  report(worst_sum < 1e-12 && worst_ce < 1e-12 && worst_uniform < 1e-9, "label-smoothing",
         fmt("|sum q - 1| %.2g, t=0 vs cross entropy %.2g, uniform vs ln K %.2g", worst_sum,
             worst_ce, worst_uniform));
}

void tables() {
  auto recs = testing::judgments_with_counts("discriminative", {550, 47, 85, 93});
  const auto gen = testing::judgments_with_counts("generative", {434, 8, 194, 139});
  recs.insert(recs.end(), gen.begin(), gen.end());
  const auto rows = tabulate_judgments(recs);
  const bool judgments_ok = rows.size() == 2 &&
                            rows[0].percent == std::array<int, 4>{71, 6, 11, 12} &&
                            rows[1].percent == std::array<int, 4>{56, 1, 25, 18} &&
                            rows[0].total == 775 && rows[1].total == 775;

  const auto runs = testing::reference_procedure_runs();
  const auto proc = compare_labeling_procedures(runs);
  const std::string table = format_procedure_table(proc);
  bool procedures_ok = proc.size() == 3;
  const std::vector<std::vector<std::string>> expected = {
      {"40", "19,300", "38%", "17"}, {"187", "72,981", "11%", "28"}, {"879", "86,941", "34%", "49"}};
  for (size_t r = 0; procedures_ok && r < proc.size(); ++r) {
    const std::string line = table.substr(table.find(runs[r].name));
    const std::string row = line.substr(0, line.find('\n'));
    std::vector<std::string> cells;
    for (size_t pos = runs[r].name.size(); pos < row.size();) {
      const size_t start = row.find_first_not_of(' ', pos);
      if (start == std::string::npos) break;
      const size_t end = row.find_first_of(' ', start);
      cells.push_back(row.substr(start, end - start));
      pos = end == std::string::npos ? row.size() : end;
    }
    procedures_ok = cells == expected[r];
  }

  const bool uniqueness_ok =
      uniqueness_per_100(std::vector<std::string>(100, "x")) == 1.0 &&
      uniqueness_per_100(testing::suggestions_with_distinct({30, 20})) == 25.0 &&
      uniqueness_per_100(testing::suggestions_with_distinct({1, 100, 7, 12})) == 30.0;

  report(judgments_ok && procedures_ok && uniqueness_ok, "table-shapes",
         fmt("judgments %s, procedure rows %s, uniqueness %s", judgments_ok ? "ok" : "wrong",
             procedures_ok ? "ok" : "wrong", uniqueness_ok ? "ok" : "wrong"));
}

void replay() {
  Rng rng(31337);
  const auto dir = testing::temp_dir("acceptance_replay");
  size_t live_mismatch = 0;
  size_t crash_mismatch = 0;
  size_t actions = 0;
  size_t rejected = 0;
  size_t prefixes = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    const auto fx = testing::random_session_fixture(rng);
    MergeSession live(fx.clusters, fx.table, fx.top_n);
    const MergeSession base = live;
    const auto log_path = dir / ("seq" + std::to_string(seq) + ".jsonl");
    const ActionLog log(log_path);
    std::vector<MergeSession> snapshots = {base};
    const size_t steps = 1 + rng.below(40);
    for (size_t s = 0; s < steps; ++s) {
      try {
        live.apply(testing::random_action(rng, live));
      } catch (const Error&) {
        ++rejected;
        continue;
      }
      ++actions;
      log.append(live.log().back());
      snapshots.push_back(live);
      if (!base.replay(live.log()).same_state(live)) ++live_mismatch;
    }
    // A crash after the p-th acknowledged write leaves the first p records.
    const std::string content = std::filesystem::exists(log_path) ? read_file(log_path) : "";
    size_t offset = 0;
    for (size_t p = 0; p < snapshots.size(); ++p) {
      const auto crash_path = dir / "crash.jsonl";
      write_file_atomic(crash_path, content.substr(0, offset));
      const MergeSession recovered = base.replay(ActionLog(crash_path).read_all());
      if (!recovered.same_state(snapshots[p])) ++crash_mismatch;
      ++prefixes;
      if (p + 1 < snapshots.size()) offset = content.find('\n', offset) + 1;
    }
    std::filesystem::remove(log_path);
  }
  std::filesystem::remove_all(dir);
  report(live_mismatch == 0 && crash_mismatch == 0, "event-sourcing-replay",
         fmt("1000 sequences, %zu applied, %zu rejected, %zu crash prefixes, %zu+%zu mismatches",
             actions, rejected, prefixes, live_mismatch, crash_mismatch));
}

void pipeline_checks() {
  const auto start = Clock::now();
  const SyntheticCorpus corpus = generate_synthetic_corpus(SyntheticOptions{});
  const auto dir_a = testing::temp_dir("acceptance_a");
  const PipelineConfig cfg = testing::write_synthetic_workspace(dir_a, corpus);
  testing::PipelineRun run;
  std::string error;
  try {
    run = testing::run_full_pipeline(cfg, corpus);
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double elapsed = seconds_since(start);
  if (!error.empty()) {
    report(false, "clique-postcondition", "pipeline failed: " + error);
    report(false, "end-to-end-synthetic", "pipeline failed: " + error);
    report(false, "selective-prediction", "pipeline failed: " + error);
    report(false, "determinism", "pipeline failed: " + error);
    return;
  }

  const size_t pipeline_violations =
      testing::clique_violations(run.clusters, run.distances, cfg.threshold);
  report(clique_violations_random == 0 && pipeline_violations == 0, "clique-postcondition",
         fmt("random outputs %zu violations, pipeline (%zu clusters) %zu violations",
             clique_violations_random, run.clusters.size(), pipeline_violations));

  const size_t recovered = recovered_classes(run.catalog, run.table, corpus.truth);
  const double acc = run.train.validation_accuracy;
  report(recovered >= 10 && acc >= 0.90 && elapsed < 300.0, "end-to-end-synthetic",
         fmt("%zu conversations, %zu/12 classes recovered, validation accuracy %.4f "
             "(%zu examples), %.2fs",
             corpus.conversations.size(), recovered, acc, run.train.validation_size, elapsed));

  std::vector<double> thresholds;
  for (int i = 0; i <= 19; ++i) thresholds.push_back(0.05 * i);
  const EvaluationReport rep = run_evaluate(cfg, thresholds);
  const auto oracle = testing::sort_scan_risk_coverage(rep.confidences, rep.judgments, thresholds);
  bool matches = oracle.size() == rep.curve.size();
  for (size_t i = 0; matches && i < oracle.size(); ++i) {
    matches = oracle[i].coverage == rep.curve[i].coverage &&
              oracle[i].bad_rate == rep.curve[i].bad_rate &&
              oracle[i].answered == rep.curve[i].answered;
  }
  size_t defined = 0;
  bool monotone = true;
  std::string rises;
  std::optional<double> previous;
  double previous_threshold = 0.0;
  for (size_t i = 0; i < rep.curve.size(); ++i) {
    const auto& p = rep.curve[i];
    if (!p.bad_rate) continue;
    ++defined;
    if (previous && *p.bad_rate > *previous) {
      monotone = false;
      rises += fmt(", rise %.4f at t=%.2f to %.4f at t=%.2f", *previous, previous_threshold,
                   *p.bad_rate, thresholds[i]);
    }
    previous = p.bad_rate;
    previous_threshold = thresholds[i];
  }
  const bool full = !rep.curve.empty() && rep.curve[0].coverage == 1.0;
  report(matches && monotone && defined >= 5 && full, "selective-prediction",
         fmt("%zu points with answers, bad rate %.4f at t=0 to %.4f, coverage(0)=%.17g, "
             "oracle %s",
             defined, rep.curve[0].bad_rate.value_or(-1.0), previous.value_or(-1.0),
             rep.curve[0].coverage, matches ? "match" : "mismatch") +
             rises);

  const auto dir_b = testing::temp_dir("acceptance_b");
  const PipelineConfig cfg_b = testing::write_synthetic_workspace(dir_b, corpus);
  testing::run_full_pipeline(cfg_b, corpus);
  const WorkLayout a{cfg.work_dir};
  const WorkLayout b{cfg_b.work_dir};
  const bool catalogs = read_file(a.catalog()) == read_file(b.catalog());
  const bool models = read_file(a.model()) == read_file(b.model());
  const bool others = read_file(a.clusters()) == read_file(b.clusters()) &&
                      read_file(a.distances()) == read_file(b.distances()) &&
                      read_file(a.dataset()) == read_file(b.dataset());
  report(catalogs && models && others, "determinism",
         fmt("catalog %s, model %s, other artifacts %s", catalogs ? "identical" : "differs",
             models ? "identical" : "differs", others ? "identical" : "differ"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

}  // namespace
}  // namespace respclass

int main() {
  using namespace respclass;
  try {
    clustering_oracle();
    knn_oracle();
    gradient_check();
    label_smoothing();
    pipeline_checks();
    tables();
    replay();
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
