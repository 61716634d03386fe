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

#ifndef RESPCLASS_PIPELINE_H_
#define RESPCLASS_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "respclass/classifier.h"
#include "respclass/clustering.h"
#include "respclass/corpus.h"
#include "respclass/embeddings.h"
#include "respclass/selective.h"
#include "respclass/similarity.h"

namespace respclass {

struct PipelineConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path word_vectors_path;
  std::filesystem::path work_dir = "work";
  PlaceholderSet placeholders;
  // Empty selects tf-idf plus, when word vectors are configured, the two
  // word-vector encoders.
  std::vector<EncoderSpec> encoders;
  ScorerSpec scorer;
  int k = 10;
  double threshold = 0.25;
  size_t top_n = 3000;
  TrainingConfig training;
  std::string bind_address = "127.0.0.1:8080";
  std::filesystem::path static_dir;
  uint64_t seed = 1;
  int jobs = 1;
  bool force = false;

  std::vector<EncoderSpec> effective_encoders() const;
  void validate() const;
};

PipelineConfig config_from_json(std::string_view content);
std::string config_to_json(const PipelineConfig& cfg);

enum class Stage { kIngest, kEmbed, kCandidates, kScore, kCluster, kDataset, kTrain };

const char* stage_name(Stage stage);
// Hash of every setting that can influence the artifact of `stage`, chained
// through the upstream stages.
std::string stage_hash(const PipelineConfig& cfg, Stage stage);

// Artifact locations under the work directory.
struct WorkLayout {
  std::filesystem::path root;

  std::filesystem::path responses() const { return root / "responses.json"; }
  std::filesystem::path responses_tsv() const { return root / "responses.tsv"; }
  std::filesystem::path embedding(const std::string& name) const {
    return root / "embeddings" / (name + ".json");
  }
  std::filesystem::path candidates() const { return root / "candidates.tsv"; }
  std::filesystem::path distances() const { return root / "distances.tsv"; }
  std::filesystem::path clusters() const { return root / "clusters.json"; }
  std::filesystem::path action_log() const { return root / "session" / "actions.jsonl"; }
  std::filesystem::path catalog() const { return root / "catalog.json"; }
  std::filesystem::path dataset() const { return root / "dataset.jsonl"; }
  std::filesystem::path model() const { return root / "model.json"; }
  std::filesystem::path training_report() const { return root / "training.json"; }
};

// Each stage reads its upstream artifacts (verifying their config hash unless
// cfg.force) and writes its own.
ResponseTable run_ingest(const PipelineConfig& cfg);
std::vector<EmbeddingMatrix> run_embed(const PipelineConfig& cfg);
CandidatePairSet run_candidates(const PipelineConfig& cfg);
SparseDistanceMatrix run_score(const PipelineConfig& cfg);
ClusterSet run_cluster(const PipelineConfig& cfg);

// Session seeded from the cluster artifact (the merge service's base state).
MergeSession load_session_base(const PipelineConfig& cfg);
// Replays the persisted action log and writes the catalog.
Catalog run_export_classes(const PipelineConfig& cfg);
// Appends the actions of scripted_merge() to the action log, then exports.
Catalog run_scripted_merge(const PipelineConfig& cfg,
                           const std::map<std::string, int>& truth,
                           const std::vector<std::string>& class_names);
// Every k-means cluster becomes a class named after its centroid.
Catalog run_kmeans_catalog(const PipelineConfig& cfg, int k,
                           const std::filesystem::path& out);

std::vector<LabeledExample> run_dataset(const PipelineConfig& cfg);

struct TrainReport {
  SoftmaxModel model;
  std::vector<double> loss_curve;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  size_t train_size = 0;
  size_t validation_size = 0;
};
TrainReport run_train(const PipelineConfig& cfg);

std::vector<AblationRow> run_ablate_history(const PipelineConfig& cfg,
                                            const std::vector<int>& turn_counts);

struct EvaluationReport {
  double accuracy = 0.0;
  size_t examples = 0;
  std::vector<double> confidences;
  std::vector<JudgmentRecord> judgments;
  std::vector<RiskCoveragePoint> curve;
  // Exemplar of the top class for every context, answered or not.
  std::vector<std::string> suggestions;
};
// Scores the validation split. Without a judgment file, judgments follow the
// label oracle: a wrong class is "worse", the right class "equivalent".
EvaluationReport run_evaluate(const PipelineConfig& cfg,
                              const std::vector<double>& thresholds,
                              const std::filesystem::path& judgments_path = {});

ResponseTable load_response_table(const PipelineConfig& cfg);
Catalog load_catalog(const PipelineConfig& cfg, const std::filesystem::path& path = {});
SoftmaxModel load_model(const std::filesystem::path& path);

}  // namespace respclass

#endif  // RESPCLASS_PIPELINE_H_
