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

#ifndef RESPCLASS_SIMILARITY_H_
#define RESPCLASS_SIMILARITY_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "respclass/candidates.h"
#include "respclass/corpus.h"
#include "respclass/embeddings.h"
#include "respclass/http_client.h"

namespace respclass {

enum class ScorerKind { kCosineCalibrated, kExternal };

const char* scorer_kind_name(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

// Stand-in for a supervised pair-similarity model. The calibrated-cosine kind
// maps the mean encoder cosine c to sigmoid(slope * c + intercept).
struct ScorerSpec {
  ScorerKind kind = ScorerKind::kCosineCalibrated;
  double slope = 8.0;
  double intercept = -4.0;
  std::string endpoint;
  int batch_size = 256;
  int max_in_flight = 4;
  RetryPolicy retry;

  void validate() const;
};

using PairScores = std::map<PairKey, double>;

double logistic(double x);

PairScores score_pairs(const CandidatePairSet& pairs, const ResponseTable& table,
                       const ScorerSpec& spec,
                       std::span<const EmbeddingMatrix> mats = {});

// Dissimilarities on candidate pairs; every other off-diagonal entry reads 1.
class SparseDistanceMatrix {
 public:
  SparseDistanceMatrix() = default;
  explicit SparseDistanceMatrix(int32_t size) : size_(size) {}

  int32_t size() const { return size_; }
  // Stores d(a, b). Throws unless a != b, both in range and d in [0, 1].
  void set(ResponseId a, ResponseId b, double distance);
  double at(ResponseId a, ResponseId b) const;
  bool stored(ResponseId a, ResponseId b) const;
  const std::map<PairKey, double>& entries() const { return entries_; }

 private:
  int32_t size_ = 0;
  std::map<PairKey, double> entries_;
};

// D = 1 - p on every scored pair. `size` defaults to one past the largest id.
SparseDistanceMatrix build_distance_matrix(const PairScores& scores,
                                           int32_t size = -1);

// "i<TAB>j<TAB>distance" sorted by (i, j), with `# size=` and
// `# config_hash=` header comments.
std::string distance_matrix_to_tsv(const SparseDistanceMatrix& d,
                                   std::string_view config_hash = "");
SparseDistanceMatrix distance_matrix_from_tsv(std::string_view content,
                                              std::string* config_hash = nullptr);

}  // namespace respclass

#endif  // RESPCLASS_SIMILARITY_H_
