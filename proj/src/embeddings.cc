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

#include "respclass/embeddings.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "json.hpp"

namespace respclass {
namespace {

using nlohmann::json;

std::map<std::string, int> token_counts(const std::string& text) {
  std::map<std::string, int> tf;
  for (auto& tok : split_whitespace(text)) ++tf[tok];
  return tf;
}

void finalize_row(EmbeddingMatrix& mat, ResponseId id, SparseVector row) {
  double n = row.norm();
  bool fallback = false;
  if (!(n > 0.0) || !std::isfinite(n)) {
    row = fallback_unit_vector(id, mat.dimension);
    n = row.norm();
    fallback = true;
  }
  mat.rows[id] = std::move(row);
  mat.row_norms[id] = n;
  mat.fallback[id] = fallback;
}

}  // namespace

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  size_t i = 0, j = 0;
  while (i < indices.size() && j < other.indices.size()) {
    if (indices[i] == other.indices[j]) {
      sum += values[i] * other.values[j];
      ++i;
      ++j;
    } else if (indices[i] < other.indices[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return sum;
}

double SparseVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

std::vector<double> SparseVector::to_dense(int32_t dimension) const {
  std::vector<double> out(static_cast<size_t>(dimension), 0.0);
  for (size_t i = 0; i < indices.size(); ++i) out[indices[i]] = values[i];
  return out;
}

SparseVector SparseVector::from_dense(const std::vector<double>& dense) {
  SparseVector v;
  for (size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      v.indices.push_back(static_cast<int32_t>(i));
      v.values.push_back(dense[i]);
    }
  }
  return v;
}

int32_t TfidfModel::index_of(const std::string& token) const {
  auto it = vocabulary.find(token);
  return it == vocabulary.end() ? -1 : it->second;
}

double TfidfModel::idf_of(const std::string& token) const {
  int32_t idx = index_of(token);
  return idx < 0 ? 0.0 : idf[idx];
}

TfidfModel fit_tfidf(const ResponseTable& table) {
  if (table.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "fit_tfidf: empty response table");
  }
  std::map<std::string, int64_t> df;
  for (const Response& r : table.responses) {
    std::set<std::string> unique;
    for (auto& tok : split_whitespace(r.normalized_text)) unique.insert(tok);
    for (const auto& tok : unique) ++df[tok];
  }
  TfidfModel model;
  model.num_documents = static_cast<int64_t>(table.size());
  const double n = static_cast<double>(model.num_documents);
  for (const auto& [tok, count] : df) {
    model.vocabulary.emplace(tok, static_cast<int32_t>(model.idf.size()));
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) +
                        1.0);
  }
  return model;
}

const std::vector<double>* WordVectorTable::find(const std::string& token) const {
  auto it = entries.find(token);
  return it == entries.end() ? nullptr : &it->second;
}

WordVectorTable parse_word_vectors(std::string_view content,
                                   std::vector<std::string>* warnings) {
  WordVectorTable table;
  size_t line_no = 0;
  size_t start = 0;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto fields = split_whitespace(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (fields.empty()) continue;
    const auto d = static_cast<int32_t>(fields.size() - 1);
    if (d == 0) {
      throw Error(ErrorKind::kDataError, "word vectors line " +
                                             std::to_string(line_no) +
                                             ": token without values");
    }
    if (table.dimension == 0) {
      table.dimension = d;
    } else if (d != table.dimension) {
      throw Error(ErrorKind::kDataError,
                  "word vectors line " + std::to_string(line_no) +
                      ": dimension " + std::to_string(d) + " != " +
                      std::to_string(table.dimension));
    }
    std::vector<double> vec;
    vec.reserve(d);
    for (size_t i = 1; i < fields.size(); ++i) {
      try {
        size_t used = 0;
        vec.push_back(std::stod(fields[i], &used));
        if (used != fields[i].size()) throw std::invalid_argument(fields[i]);
      } catch (const std::exception&) {
        throw Error(ErrorKind::kDataError, "word vectors line " +
                                               std::to_string(line_no) +
                                               ": bad number \"" + fields[i] +
                                               "\"");
      }
    }
    auto [it, inserted] = table.entries.insert_or_assign(fields[0], std::move(vec));
    if (!inserted && warnings) {
      warnings->push_back("word vectors line " + std::to_string(line_no) +
                          ": duplicate token \"" + fields[0] +
                          "\" overwrites earlier entry");
    }
  }
  if (table.dimension == 0) {
    throw Error(ErrorKind::kDataError, "word vectors file is empty");
  }
  return table;
}

WordVectorTable load_word_vectors(const std::filesystem::path& path,
                                  std::vector<std::string>* warnings) {
  return parse_word_vectors(read_file(path), warnings);
}

const char* encoder_kind_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kTfidf:
      return "tfidf";
    case EncoderKind::kAvgWordVec:
      return "avg_wordvec";
    case EncoderKind::kTfidfWeightedWordVec:
      return "tfidf_weighted_wordvec";
    case EncoderKind::kExternal:
      return "external";
  }
  return "unknown";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "tfidf") return EncoderKind::kTfidf;
  if (name == "avg_wordvec") return EncoderKind::kAvgWordVec;
  if (name == "tfidf_weighted_wordvec") return EncoderKind::kTfidfWeightedWordVec;
  if (name == "external") return EncoderKind::kExternal;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown encoder kind \"" + std::string(name) + "\"");
}

void EncoderSpec::validate() const {
  if (kind == EncoderKind::kExternal && endpoint.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "encoder \"" + name + "\": external kind requires an endpoint");
  }
  if (batch_size < 1 || max_in_flight < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "encoder \"" + name + "\": batch_size and max_in_flight must be >= 1");
  }
}

double EmbeddingMatrix::cosine(ResponseId a, ResponseId b) const {
  return rows[a].dot(rows[b]) / (row_norms[a] * row_norms[b]);
}

SparseVector fallback_unit_vector(ResponseId id, int32_t dimension) {
  Rng rng(0x5eed0000ULL ^ static_cast<uint64_t>(id) * 0x9e3779b97f4a7c15ULL);
  std::vector<double> v(static_cast<size_t>(std::max(dimension, 1)));
  double norm = 0.0;
  while (!(norm > 0.0)) {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  }
  for (double& x : v) x /= norm;
  return SparseVector::from_dense(v);
}

std::vector<std::vector<double>> fetch_external_embeddings(
    const EncoderSpec& spec, const std::vector<std::string>& texts,
    int32_t* dimension) {
  spec.validate();
  const size_t batch = static_cast<size_t>(spec.batch_size);
  const size_t num_batches = (texts.size() + batch - 1) / batch;
  std::vector<json> replies(num_batches);
  // Batches are issued in waves of at most max_in_flight concurrent requests.
  for (size_t wave = 0; wave < num_batches;
       wave += static_cast<size_t>(spec.max_in_flight)) {
    const size_t wave_end =
        std::min(num_batches, wave + static_cast<size_t>(spec.max_in_flight));
    std::vector<std::future<json>> pending;
    for (size_t b = wave; b < wave_end; ++b) {
      json body = {{"texts", json::array()}};
      for (size_t i = b * batch; i < std::min(texts.size(), (b + 1) * batch); ++i)
        body["texts"].push_back(texts[i]);
      pending.push_back(std::async(std::launch::async, [&spec, body]() {
        return post_json(spec.endpoint, "/encode", body, spec.retry);
      }));
    }
    for (size_t b = wave; b < wave_end; ++b) replies[b] = pending[b - wave].get();
  }
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  int32_t dim = -1;
  for (size_t b = 0; b < num_batches; ++b) {
    const size_t expected = std::min(texts.size(), (b + 1) * batch) - b * batch;
    try {
      const auto reply_dim = replies[b].at("dimension").get<int32_t>();
      if (dim >= 0 && reply_dim != dim) {
        throw Error(ErrorKind::kDataError,
                    "external encoder changed dimension between batches");
      }
      dim = reply_dim;
      const json& vectors = replies[b].at("vectors");
      if (vectors.size() != expected) {
        throw Error(ErrorKind::kDataError,
                    "external encoder returned " + std::to_string(vectors.size()) +
                        " vectors for " + std::to_string(expected) + " texts");
      }
      for (const json& v : vectors) {
        auto row = v.get<std::vector<double>>();
        if (static_cast<int32_t>(row.size()) != dim) {
          throw Error(ErrorKind::kDataError,
                      "external encoder vector length " +
                          std::to_string(row.size()) + " != dimension " +
                          std::to_string(dim));
        }
        out.push_back(std::move(row));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kDataError,
                  std::string("malformed /encode reply: ") + e.what());
    }
  }
  if (dimension) *dimension = std::max(dim, 0);
  return out;
}

EmbeddingMatrix embed(const ResponseTable& table, const EncoderSpec& spec,
                      const TfidfModel* tfidf, const WordVectorTable* word_vectors) {
  spec.validate();
  const bool needs_tfidf = spec.kind == EncoderKind::kTfidf ||
                           spec.kind == EncoderKind::kTfidfWeightedWordVec;
  const bool needs_wv = spec.kind == EncoderKind::kAvgWordVec ||
                        spec.kind == EncoderKind::kTfidfWeightedWordVec;
  if (needs_tfidf && tfidf == nullptr) {
    throw Error(ErrorKind::kInvalidArgument,
                "encoder \"" + spec.name + "\" requires a tf-idf model");
  }
  if (needs_wv && word_vectors == nullptr) {
    throw Error(ErrorKind::kInvalidArgument,
                "encoder \"" + spec.name + "\" requires word vectors");
  }

  EmbeddingMatrix mat;
  mat.encoder = spec;
  const size_t n = table.size();
  mat.rows.resize(n);
  mat.row_norms.resize(n);
  mat.fallback.resize(n);

  if (spec.kind == EncoderKind::kExternal) {
    std::vector<std::string> texts;
    texts.reserve(n);
    for (const Response& r : table.responses) texts.push_back(r.normalized_text);
    auto dense = fetch_external_embeddings(spec, texts, &mat.dimension);
    for (size_t i = 0; i < n; ++i) {
      finalize_row(mat, static_cast<ResponseId>(i),
                   SparseVector::from_dense(dense[i]));
    }
    return mat;
  }

  mat.dimension = spec.kind == EncoderKind::kTfidf
                      ? static_cast<int32_t>(tfidf->idf.size())
                      : word_vectors->dimension;
  for (size_t i = 0; i < n; ++i) {
    const auto tf = token_counts(table.responses[i].normalized_text);
    SparseVector row;
    if (spec.kind == EncoderKind::kTfidf) {
      std::vector<std::pair<int32_t, double>> entries;
      for (const auto& [tok, count] : tf) {
        int32_t idx = tfidf->index_of(tok);
        if (idx >= 0) entries.emplace_back(idx, count * tfidf->idf[idx]);
      }
      std::sort(entries.begin(), entries.end());
      for (auto& [idx, v] : entries) {
        row.indices.push_back(idx);
        row.values.push_back(v);
      }
    } else {
      std::vector<double> acc(static_cast<size_t>(mat.dimension), 0.0);
      double total_weight = 0.0;
      for (const auto& [tok, count] : tf) {
        const std::vector<double>* vec = word_vectors->find(tok);
        if (vec == nullptr) continue;
        double w = count;
        if (spec.kind == EncoderKind::kTfidfWeightedWordVec) {
          int32_t idx = tfidf->index_of(tok);
          if (idx < 0) continue;
          w = count * tfidf->idf[idx];
        }
        for (size_t d = 0; d < acc.size(); ++d) acc[d] += w * (*vec)[d];
        total_weight += w;
      }
      if (total_weight > 0.0) {
        for (double& x : acc) x /= total_weight;
      }
      row = SparseVector::from_dense(acc);
    }
    finalize_row(mat, static_cast<ResponseId>(i), std::move(row));
  }
  return mat;
}

std::vector<Neighbor> cosine_knn(const EmbeddingMatrix& mat, ResponseId query,
                                 int k) {
  const auto n = static_cast<ResponseId>(mat.size());
  if (query < 0 || query >= n) {
    throw Error(ErrorKind::kInvalidArgument,
                "cosine_knn: query id " + std::to_string(query) + " out of range");
  }
  std::vector<Neighbor> all;
  all.reserve(mat.size());
  for (ResponseId j = 0; j < n; ++j) {
    if (j == query) continue;
    all.push_back({j, mat.cosine(query, j)});
  }
  const size_t keep = std::min(all.size(), static_cast<size_t>(std::max(k, 0)));
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<ptrdiff_t>(keep),
                    all.end(), better);
  all.resize(keep);
  return all;
}

std::vector<std::vector<Neighbor>> knn_all(const EmbeddingMatrix& mat, int k,
                                           int jobs) {
  std::vector<std::vector<Neighbor>> out(mat.size());
  const size_t workers =
      std::clamp<size_t>(static_cast<size_t>(std::max(jobs, 1)), 1,
                         std::max<size_t>(mat.size(), 1));
  auto work = [&](size_t worker) {
    for (size_t i = worker; i < mat.size(); i += workers)
      out[i] = cosine_knn(mat, static_cast<ResponseId>(i), k);
  };
  if (workers == 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> threads;
  for (size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
  for (auto& t : threads) t.join();
  return out;
}

std::string embedding_matrix_to_json(const EmbeddingMatrix& mat,
                                     std::string_view config_hash) {
  json rows = json::array();
  for (size_t i = 0; i < mat.size(); ++i) {
    rows.push_back({{"indices", mat.rows[i].indices},
                    {"values", mat.rows[i].values},
                    {"fallback", static_cast<bool>(mat.fallback[i])}});
  }
  json doc = {{"config_hash", config_hash},
              {"encoder",
               {{"name", mat.encoder.name},
                {"kind", encoder_kind_name(mat.encoder.kind)},
                {"word_vectors_path", mat.encoder.word_vectors_path},
                {"endpoint", mat.encoder.endpoint}}},
              {"dimension", mat.dimension},
              {"rows", std::move(rows)}};
  return doc.dump() + "\n";
}

EmbeddingMatrix embedding_matrix_from_json(std::string_view content,
                                           std::string* config_hash) {
  EmbeddingMatrix mat;
  try {
    json doc = json::parse(content);
    if (config_hash) *config_hash = doc.value("config_hash", "");
    const json& enc = doc.at("encoder");
    mat.encoder.name = enc.at("name").get<std::string>();
    mat.encoder.kind = parse_encoder_kind(enc.at("kind").get<std::string>());
    mat.encoder.word_vectors_path = enc.value("word_vectors_path", "");
    mat.encoder.endpoint = enc.value("endpoint", "");
    mat.dimension = doc.at("dimension").get<int32_t>();
    for (const json& row : doc.at("rows")) {
      SparseVector v;
      v.indices = row.at("indices").get<std::vector<int32_t>>();
      v.values = row.at("values").get<std::vector<double>>();
      if (v.indices.size() != v.values.size())
        throw Error(ErrorKind::kDataError, "embedding row length mismatch");
      mat.row_norms.push_back(v.norm());
      mat.fallback.push_back(row.value("fallback", false));
      mat.rows.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataError,
                std::string("malformed embedding matrix: ") + e.what());
  }
  return mat;
}

}  // namespace respclass
