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

#include "respclass/candidates.h"

#include <sstream>

namespace respclass {

CandidatePairSet generate_candidate_pairs(std::span<const EmbeddingMatrix> mats,
                                          int k, int jobs) {
  if (k < 1) {
    throw Error(ErrorKind::kInvalidArgument, "candidate generation needs k >= 1");
  }
  CandidatePairSet out;
  if (mats.empty()) return out;
  const size_t rows = mats.front().size();
  for (const EmbeddingMatrix& m : mats) {
    if (m.size() != rows) {
      throw Error(ErrorKind::kInvalidArgument,
                  "encoder \"" + m.encoder.name + "\" has " +
                      std::to_string(m.size()) + " rows, expected " +
                      std::to_string(rows));
    }
  }
  for (const EmbeddingMatrix& m : mats) {
    std::set<PairKey> mine;
    const auto neighbors = knn_all(m, k, jobs);
    for (size_t i = 0; i < rows; ++i) {
      if (m.fallback[i]) continue;
      for (const Neighbor& nb : neighbors[i]) {
        if (m.fallback[nb.id]) continue;
        mine.insert(PairKey::of(static_cast<ResponseId>(i), nb.id));
      }
    }
    out.per_encoder_counts[m.encoder.name] += mine.size();
    out.pairs.insert(mine.begin(), mine.end());
  }
  return out;
}

std::string candidate_pairs_to_tsv(const CandidatePairSet& pairs,
                                   std::string_view config_hash) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << "\n";
  for (const auto& [name, n] : pairs.per_encoder_counts) {
    out << "# encoder_pairs." << name << "=" << n << "\n";
  }
  for (const PairKey& p : pairs.pairs) out << p.lo << '\t' << p.hi << '\n';
  return out.str();
}

std::string tsv_header_value(std::string_view content, std::string_view key) {
  std::istringstream in{std::string(content)};
  std::string line;
  const std::string prefix = "# " + std::string(key) + "=";
  while (std::getline(in, line)) {
    if (!line.starts_with("#")) break;
    if (line.starts_with(prefix)) return line.substr(prefix.size());
  }
  return "";
}

CandidatePairSet candidate_pairs_from_tsv(std::string_view content,
                                          std::string* config_hash) {
  CandidatePairSet out;
  if (config_hash) *config_hash = tsv_header_value(content, "config_hash");
  std::istringstream in{std::string(content)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.starts_with("# encoder_pairs.")) {
      auto eq = line.find('=');
      out.per_encoder_counts[line.substr(16, eq - 16)] =
          std::stoull(line.substr(eq + 1));
      continue;
    }
    if (line.starts_with("#")) continue;
    std::istringstream fields(line);
    long long a = -1, b = -1;
    if (!(fields >> a >> b) || a < 0 || b < 0 || a == b) {
      throw Error(ErrorKind::kDataError,
                  "pair file line " + std::to_string(line_no) + ": bad pair");
    }
    out.pairs.insert(
        PairKey::of(static_cast<ResponseId>(a), static_cast<ResponseId>(b)));
  }
  return out;
}

}  // namespace respclass
