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

#ifndef RESPCLASS_TESTS_TESTING_H_
#define RESPCLASS_TESTS_TESTING_H_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "respclass/classifier.h"
#include "respclass/clustering.h"
#include "respclass/common.h"
#include "respclass/embeddings.h"
#include "respclass/pipeline.h"
#include "respclass/responseclasses.h"
#include "respclass/selective.h"
#include "respclass/similarity.h"
#include "respclass/synthetic.h"

namespace respclass::testing {

// Table whose responses are `texts` with the given counts, ids in order.
ResponseTable make_table(const std::vector<std::string>& texts,
                         const std::vector<int64_t>& counts = {});

// Dense embedding matrix from explicit rows.
EmbeddingMatrix make_matrix(const std::vector<std::vector<double>>& rows,
                            const std::string& name = "test");

struct DistanceInstance {
  int n = 0;
  double threshold = 0.25;
  SparseDistanceMatrix sparse;
  std::vector<std::vector<double>> dense;
  std::vector<int64_t> counts;
};

// n in [1, max_n], candidate density in [0.3, 1.0], threshold drawn from
// {0.1, 0.25, 0.5}. Half the instances snap distances to a coarse grid so
// ties are common.
DistanceInstance random_distance_instance(Rng& rng, int max_n = 12);

// Pairs inside one cluster that are unscored or not strictly below the
// threshold.
size_t clique_violations(const ClusterSet& cs, const SparseDistanceMatrix& d,
                         double threshold);

// Rows with small integer coordinates (ties likely), R in [2, max_rows],
// d in [1, max_dim]; all-zero rows are avoided.
EmbeddingMatrix random_matrix(Rng& rng, int max_rows = 200, int max_dim = 16);

// Full sort of every other row by (cosine desc, id asc), cut to k.
std::vector<Neighbor> brute_force_knn(const EmbeddingMatrix& mat, ResponseId query,
                                      int k);

struct GradientCheck {
  double max_relative_error = 0.0;
  size_t coordinates = 0;
};

// Random model (K in [2, 5], F in [1, 20]) and batch; compares loss_and_grad
// against central differences with the given step.
GradientCheck random_gradient_check(Rng& rng, double step = 1e-5);

// Plain cross entropy -log p_y over the batch mean, written independently.
double plain_cross_entropy(const SoftmaxModel& model,
                           std::span<const FeaturizedExample> batch);

// Sort by confidence desc and scan thresholds.
std::vector<RiskCoveragePoint> sort_scan_risk_coverage(
    std::span<const double> confidences, std::span<const JudgmentRecord> judgments,
    std::span<const double> thresholds);

// Judgment records with the given per-category counts for one model.
std::vector<JudgmentRecord> judgments_with_counts(const std::string& model,
                                                  const std::array<size_t, 4>& counts);

// `blocks` blocks of 100 suggestions, block b holding distinct[b] texts.
std::vector<std::string> suggestions_with_distinct(const std::vector<size_t>& distinct);

// Three labeling-procedure runs: (classes, train examples, worse per 100
// judgments, distinct suggestions per block of 100 over 10 blocks).
std::vector<ProcedureRun> reference_procedure_runs();

// Random merge-session fixture: ClusterSet over a random table.
struct SessionFixture {
  ResponseTable table;
  ClusterSet clusters;
  size_t top_n = 0;
};
SessionFixture random_session_fixture(Rng& rng);

// One random action against the session's current state; may be invalid.
MergeAction random_action(Rng& rng, const MergeSession& session);

// Writes the synthetic corpus into `dir` and returns a default config over it
// with its work directory at dir/work.
PipelineConfig write_synthetic_workspace(const std::filesystem::path& dir,
                                         const SyntheticCorpus& corpus);

struct PipelineRun {
  ResponseTable table;
  ClusterSet clusters;
  SparseDistanceMatrix distances;
  Catalog catalog;
  TrainReport train;
};

// ingest through train with the scripted merge step in the middle.
PipelineRun run_full_pipeline(const PipelineConfig& cfg, const SyntheticCorpus& corpus);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace respclass::testing

#endif  // RESPCLASS_TESTS_TESTING_H_
