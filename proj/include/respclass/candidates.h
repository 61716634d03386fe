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

#ifndef RESPCLASS_CANDIDATES_H_
#define RESPCLASS_CANDIDATES_H_

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "respclass/common.h"
#include "respclass/embeddings.h"

namespace respclass {

// Unordered response pair stored as (min id, max id).
struct PairKey {
  ResponseId lo;
  ResponseId hi;

  static PairKey of(ResponseId a, ResponseId b) {
    return a < b ? PairKey{a, b} : PairKey{b, a};
  }
  auto operator<=>(const PairKey&) const = default;
};

struct CandidatePairSet {
  std::set<PairKey> pairs;
  // Pairs contributed by each encoder before the cross-encoder union.
  std::map<std::string, size_t> per_encoder_counts;

  size_t size() const { return pairs.size(); }
  bool contains(ResponseId a, ResponseId b) const {
    return a != b && pairs.count(PairKey::of(a, b)) > 0;
  }
};

// Union over encoders and responses of each response's k nearest neighbours.
// Pairs touching a fallback row of an encoder are not contributed by that
// encoder.
CandidatePairSet generate_candidate_pairs(std::span<const EmbeddingMatrix> mats,
                                          int k, int jobs = 1);

// "i<TAB>j" lines sorted ascending, preceded by a `# config_hash=` comment.
std::string candidate_pairs_to_tsv(const CandidatePairSet& pairs,
                                   std::string_view config_hash = "");
CandidatePairSet candidate_pairs_from_tsv(std::string_view content,
                                          std::string* config_hash = nullptr);

// Reads `# key=value` header comments shared by the TSV artifacts.
std::string tsv_header_value(std::string_view content, std::string_view key);

}  // namespace respclass

#endif  // RESPCLASS_CANDIDATES_H_
