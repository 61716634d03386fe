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

#include "respclass/similarity.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

#include "json.hpp"

namespace respclass {

using nlohmann::json;

const char* scorer_kind_name(ScorerKind kind) {
  return kind == ScorerKind::kExternal ? "external" : "cosine_calibrated";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "cosine_calibrated") return ScorerKind::kCosineCalibrated;
  if (name == "external") return ScorerKind::kExternal;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown scorer kind \"" + std::string(name) + "\"");
}

void ScorerSpec::validate() const {
  if (kind == ScorerKind::kExternal && endpoint.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "external scorer requires an endpoint");
  }
  if (kind == ScorerKind::kCosineCalibrated && !(slope > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "calibration slope must be positive");
  }
  if (batch_size < 1 || max_in_flight < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "scorer batch_size and max_in_flight must be >= 1");
  }
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

PairScores score_external(const std::vector<PairKey>& pairs,
                          const ResponseTable& table, const ScorerSpec& spec) {
  const size_t batch = static_cast<size_t>(spec.batch_size);
  const size_t num_batches = (pairs.size() + batch - 1) / batch;
  PairScores out;
  std::vector<PairKey> unscored;
  std::string first_failure;
  for (size_t wave = 0; wave < num_batches;
       wave += static_cast<size_t>(spec.max_in_flight)) {
    const size_t wave_end =
        std::min(num_batches, wave + static_cast<size_t>(spec.max_in_flight));
    std::vector<std::future<json>> pending;
    for (size_t b = wave; b < wave_end; ++b) {
      json body = {{"pairs", json::array()}};
      for (size_t i = b * batch; i < std::min(pairs.size(), (b + 1) * batch); ++i) {
        body["pairs"].push_back({{"a", table[pairs[i].lo].normalized_text},
                                 {"b", table[pairs[i].hi].normalized_text}});
      }
      pending.push_back(std::async(std::launch::async, [&spec, body]() {
        return post_json(spec.endpoint, "/score", body, spec.retry);
      }));
    }
    for (size_t b = wave; b < wave_end; ++b) {
      const size_t lo = b * batch;
      const size_t hi = std::min(pairs.size(), (b + 1) * batch);
      try {
        json reply = pending[b - wave].get();
        auto probs = reply.at("prob_similar").get<std::vector<double>>();
        if (probs.size() != hi - lo) {
          throw Error(ErrorKind::kDataError,
                      "/score returned " + std::to_string(probs.size()) +
                          " scores for " + std::to_string(hi - lo) + " pairs");
        }
        for (size_t i = lo; i < hi; ++i) out[pairs[i]] = probs[i - lo];
      } catch (const std::exception& e) {
        if (first_failure.empty()) first_failure = e.what();
        for (size_t i = lo; i < hi; ++i) unscored.push_back(pairs[i]);
      }
    }
  }
  if (!unscored.empty()) {
    std::ostringstream msg;
    msg << "external scorer failed (" << first_failure << "); "
        << unscored.size() << " unscored pairs:";
    for (const PairKey& p : unscored) msg << " (" << p.lo << "," << p.hi << ")";
    throw Error(ErrorKind::kUnavailable, msg.str());
  }
  return out;
}

}  // namespace

PairScores score_pairs(const CandidatePairSet& pairs, const ResponseTable& table,
                       const ScorerSpec& spec,
                       std::span<const EmbeddingMatrix> mats) {
  spec.validate();
  PairScores out;
  if (pairs.pairs.empty()) return out;
  if (spec.kind == ScorerKind::kExternal) {
    return score_external({pairs.pairs.begin(), pairs.pairs.end()}, table, spec);
  }
  if (mats.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "calibrated cosine scorer needs at least one embedding matrix");
  }
  for (const PairKey& p : pairs.pairs) {
    double sum = 0.0;
    for (const EmbeddingMatrix& m : mats) sum += m.cosine(p.lo, p.hi);
    const double mean = sum / static_cast<double>(mats.size());
    out[p] = logistic(spec.slope * mean + spec.intercept);
  }
  return out;
}

void SparseDistanceMatrix::set(ResponseId a, ResponseId b, double distance) {
  if (a == b || a < 0 || b < 0 || a >= size_ || b >= size_) {
    throw Error(ErrorKind::kInvalidArgument,
                "distance entry (" + std::to_string(a) + "," +
                    std::to_string(b) + ") outside a " + std::to_string(size_) +
                    "-response matrix");
  }
  if (!(distance >= 0.0 && distance <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "distance outside [0,1]");
  }
  entries_[PairKey::of(a, b)] = distance;
}

double SparseDistanceMatrix::at(ResponseId a, ResponseId b) const {
  if (a == b) return 0.0;
  auto it = entries_.find(PairKey::of(a, b));
  return it == entries_.end() ? 1.0 : it->second;
}

bool SparseDistanceMatrix::stored(ResponseId a, ResponseId b) const {
  return a != b && entries_.count(PairKey::of(a, b)) > 0;
}

SparseDistanceMatrix build_distance_matrix(const PairScores& scores,
                                           int32_t size) {
  if (size < 0) {
    size = 0;
    for (const auto& [p, prob] : scores) size = std::max(size, p.hi + 1);
  }
  SparseDistanceMatrix d(size);
  for (const auto& [p, prob] : scores) {
    if (!(prob >= 0.0 && prob <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "probability for pair (" + std::to_string(p.lo) + "," +
                      std::to_string(p.hi) + ") outside [0,1]");
    }
    d.set(p.lo, p.hi, 1.0 - prob);
  }
  return d;
}

std::string distance_matrix_to_tsv(const SparseDistanceMatrix& d,
                                   std::string_view config_hash) {
  std::string out = "# config_hash=" + std::string(config_hash) + "\n";
  out += "# size=" + std::to_string(d.size()) + "\n";
  char buf[64];
  for (const auto& [p, dist] : d.entries()) {
    std::snprintf(buf, sizeof(buf), "%d\t%d\t%.17g\n", p.lo, p.hi, dist);
    out += buf;
  }
  return out;
}

SparseDistanceMatrix distance_matrix_from_tsv(std::string_view content,
                                              std::string* config_hash) {
  if (config_hash) *config_hash = tsv_header_value(content, "config_hash");
  const std::string size_str = tsv_header_value(content, "size");
  if (size_str.empty()) {
    throw Error(ErrorKind::kDataError, "distance matrix missing size header");
  }
  SparseDistanceMatrix d(std::stoi(size_str));
  std::istringstream in{std::string(content)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.starts_with("#")) continue;
    std::istringstream fields(line);
    long long a, b;
    double dist;
    if (!(fields >> a >> b >> dist)) {
      throw Error(ErrorKind::kDataError, "distance matrix line " +
                                             std::to_string(line_no) +
                                             ": expected i j distance");
    }
    d.set(static_cast<ResponseId>(a), static_cast<ResponseId>(b), dist);
  }
  return d;
}

}  // namespace respclass
