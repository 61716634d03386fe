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

#ifndef RESPCLASS_CLASSIFIER_H_
#define RESPCLASS_CLASSIFIER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "respclass/corpus.h"
#include "respclass/embeddings.h"
#include "respclass/responseclasses.h"

namespace respclass {

// Reserved speaker markers. Both contain punctuation, so no normalized word
// can ever equal them.
inline constexpr std::string_view kPatientMarker = "\xE2\x9F\xA8pat\xE2\x9F\xA9";
inline constexpr std::string_view kDoctorMarker = "\xE2\x9F\xA8" "doc\xE2\x9F\xA9";

struct TrainingConfig {
  int max_tokens = 304;
  int max_turns = 6;  // <= 0 keeps every turn
  double smoothing = 0.1;
  double learning_rate = 4.0;
  int epochs = 40;
  int batch_size = 32;
  uint64_t seed = 1;
  double validation_fraction = 0.2;
  int hash_bits = 18;

  void validate() const;
};

struct ContextWindow {
  std::vector<std::string> tokens;
  std::string source_conversation;
  int position = 0;  // turn index of the response being predicted
};

struct LabeledExample {
  ContextWindow context;
  int32_t class_id = 0;
};

// Keeps the last max_turns speaker turns, prefixes each with its speaker
// marker, normalizes the words and keeps the last max_tokens tokens.
// Consecutive messages from one speaker count as a single turn.
ContextWindow featurize_context(std::span<const Turn> turns,
                                const TrainingConfig& cfg,
                                const PlaceholderSet& placeholders = {});

// Hashed unigram + bigram features. Slots [0, 2^bits) take hashed n-grams;
// the two speaker-marker unigrams own the last two slots.
class FeatureHasher {
 public:
  explicit FeatureHasher(int bits = 18, uint64_t seed = 0x2545f4914f6cdd1dULL);

  int bits() const { return bits_; }
  uint64_t seed() const { return seed_; }
  int32_t dimension() const { return (int32_t{1} << bits_) + 2; }
  int32_t slot(std::string_view key) const;
  // L2-normalized n-gram counts.
  SparseVector featurize(const ContextWindow& window) const;

 private:
  int bits_;
  uint64_t seed_;
  uint64_t multiplier_;
};

struct FeaturizedExample {
  SparseVector features;
  int32_t class_id = 0;
};

// Label-smoothed multinomial logistic regression over hashed features.
// Weights are stored feature-major: weight(f, k) = weights[f * K + k].
struct SoftmaxModel {
  int32_t num_classes = 0;
  int32_t feature_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  double smoothing = 0.1;
  std::string catalog_hash;  // Catalog::structure_hash() at training time
  FeatureHasher hasher;
  TrainingConfig config;
  int64_t train_examples = 0;
  std::string config_hash;  // pipeline provenance, optional

  static SoftmaxModel zeros(int32_t num_classes, int32_t feature_dim);

  double weight(int32_t feature, int32_t k) const {
    return weights[static_cast<size_t>(feature) * num_classes + k];
  }
  std::vector<double> logits(const SparseVector& x) const;
  std::vector<double> probabilities(const SparseVector& x) const;
};

std::vector<double> softmax(std::span<const double> logits);

// q[c] = (1 - t) + t / K, every other entry t / K.
std::vector<double> smoothed_targets(int32_t class_id, int32_t num_classes,
                                     double smoothing);

struct Gradient {
  std::map<int32_t, std::vector<double>> columns;  // feature -> dL/dW[f, :]
  std::vector<double> bias;

  // Expands to the feature-major layout of SoftmaxModel::weights.
  std::vector<double> dense_weights(int32_t feature_dim, int32_t num_classes) const;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradient gradient;
};

// Mean smoothed cross entropy over the batch and its exact gradient.
LossAndGrad loss_and_grad(const SoftmaxModel& model,
                          std::span<const FeaturizedExample> batch);

std::vector<FeaturizedExample> featurize_examples(
    const FeatureHasher& hasher, std::span<const LabeledExample> examples);

// Doctor turns whose normalized text belongs to a catalog class become
// (preceding context, class) examples; everything else is dropped.
std::vector<LabeledExample> build_dataset(std::span<const Conversation> convs,
                                          const Catalog& catalog,
                                          const ResponseTable& table,
                                          const TrainingConfig& cfg,
                                          const PlaceholderSet& placeholders = {});

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
};

// Splits by conversation so no conversation contributes to both sides.
DatasetSplit split_dataset(std::span<const LabeledExample> examples,
                           double validation_fraction, uint64_t seed);

struct TrainResult {
  SoftmaxModel model;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

// Mini-batch gradient descent from zero weights with seeded shuffling.
// Requires at least two distinct classes among the examples.
TrainResult train(std::span<const LabeledExample> examples,
                  const TrainingConfig& cfg, int32_t num_classes,
                  std::string catalog_hash);
// Same, on already-featurized examples of dimension `feature_dim`.
TrainResult train_featurized(std::span<const FeaturizedExample> examples,
                             const TrainingConfig& cfg, int32_t num_classes,
                             int32_t feature_dim);

// Throws kFailedPrecondition when the model was trained on a catalog with a
// different label structure.
void check_catalog(const SoftmaxModel& model, const Catalog& catalog);

std::vector<double> predict_proba(const SoftmaxModel& model,
                                  const Catalog& catalog,
                                  std::span<const Turn> turns,
                                  const PlaceholderSet& placeholders = {});

// Lowest index among the maxima.
int32_t argmax(std::span<const double> values);

double evaluate_accuracy(const SoftmaxModel& model,
                         std::span<const LabeledExample> examples);

struct AblationRow {
  int max_turns = 0;  // <= 0 means all turns
  double accuracy = 0.0;
  size_t train_size = 0;
  size_t validation_size = 0;
};

// Retrains with each history length on one fixed conversation split.
std::vector<AblationRow> history_ablation(std::span<const Conversation> convs,
                                          const Catalog& catalog,
                                          const ResponseTable& table,
                                          const TrainingConfig& cfg,
                                          std::span<const int> turn_counts,
                                          const PlaceholderSet& placeholders = {});

std::string model_to_json(const SoftmaxModel& model);
SoftmaxModel model_from_json(std::string_view content);

// One JSON record per line: conversation, position, class_id, tokens.
std::string dataset_to_jsonl(std::span<const LabeledExample> examples);
std::vector<LabeledExample> dataset_from_jsonl(std::string_view content);

}  // namespace respclass

#endif  // RESPCLASS_CLASSIFIER_H_
