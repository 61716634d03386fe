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

#ifndef RESPCLASS_EMBEDDINGS_H_
#define RESPCLASS_EMBEDDINGS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "respclass/common.h"
#include "respclass/corpus.h"
#include "respclass/http_client.h"

namespace respclass {

// Sorted-index sparse vector.
struct SparseVector {
  std::vector<int32_t> indices;
  std::vector<double> values;

  size_t nnz() const { return indices.size(); }
  double dot(const SparseVector& other) const;
  double norm() const;
  std::vector<double> to_dense(int32_t dimension) const;
  static SparseVector from_dense(const std::vector<double>& dense);
};

struct TfidfModel {
  std::unordered_map<std::string, int32_t> vocabulary;
  std::vector<double> idf;
  int64_t num_documents = 0;

  // Returns -1 for out-of-vocabulary tokens.
  int32_t index_of(const std::string& token) const;
  double idf_of(const std::string& token) const;
};

// idf_t = ln((1 + N) / (1 + df_t)) + 1 over the table's responses.
TfidfModel fit_tfidf(const ResponseTable& table);

struct WordVectorTable {
  int32_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> entries;

  const std::vector<double>* find(const std::string& token) const;
};

// Text format: one `token v1 ... vd` per line. Duplicate tokens overwrite
// earlier entries and append a message to `warnings` when provided.
WordVectorTable parse_word_vectors(std::string_view content,
                                   std::vector<std::string>* warnings = nullptr);
WordVectorTable load_word_vectors(const std::filesystem::path& path,
                                  std::vector<std::string>* warnings = nullptr);

enum class EncoderKind { kTfidf, kAvgWordVec, kTfidfWeightedWordVec, kExternal };

const char* encoder_kind_name(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct EncoderSpec {
  std::string name;
  EncoderKind kind = EncoderKind::kTfidf;
  std::string word_vectors_path;  // word-vector kinds
  std::string endpoint;           // external kind, e.g. "http://localhost:8500"
  int batch_size = 64;
  int max_in_flight = 4;
  RetryPolicy retry;

  // Throws kInvalidArgument when required parameters are missing.
  void validate() const;
};

// One row per response id.
struct EmbeddingMatrix {
  EncoderSpec encoder;
  int32_t dimension = 0;
  std::vector<SparseVector> rows;
  std::vector<double> row_norms;
  // Rows whose encoder produced nothing usable and hold the seeded fallback.
  std::vector<bool> fallback;

  size_t size() const { return rows.size(); }
  double cosine(ResponseId a, ResponseId b) const;
};

// Deterministic pseudo-random unit vector for an all-OOV response.
SparseVector fallback_unit_vector(ResponseId id, int32_t dimension);

EmbeddingMatrix embed(const ResponseTable& table, const EncoderSpec& spec,
                      const TfidfModel* tfidf, const WordVectorTable* word_vectors);

// Issues the `/encode` protocol in batches with bounded concurrency; rows come
// back in request order.
std::vector<std::vector<double>> fetch_external_embeddings(
    const EncoderSpec& spec, const std::vector<std::string>& texts,
    int32_t* dimension);

struct Neighbor {
  ResponseId id;
  double similarity;

  bool operator==(const Neighbor&) const = default;
};

// Exact top-k by cosine excluding the query; descending similarity, ties by
// ascending id. Length is min(k, R - 1).
std::vector<Neighbor> cosine_knn(const EmbeddingMatrix& mat, ResponseId query,
                                 int k);
// cosine_knn for every row, split across `jobs` threads.
std::vector<std::vector<Neighbor>> knn_all(const EmbeddingMatrix& mat, int k,
                                           int jobs = 1);

std::string embedding_matrix_to_json(const EmbeddingMatrix& mat,
                                     std::string_view config_hash = "");
EmbeddingMatrix embedding_matrix_from_json(std::string_view content,
                                           std::string* config_hash = nullptr);

}  // namespace respclass

#endif  // RESPCLASS_EMBEDDINGS_H_
