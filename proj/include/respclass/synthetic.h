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

#ifndef RESPCLASS_SYNTHETIC_H_
#define RESPCLASS_SYNTHETIC_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "respclass/corpus.h"
#include "respclass/responseclasses.h"

namespace respclass {

struct SyntheticOptions {
  int num_conversations = 200;
  int min_labeled_rounds = 3;
  int max_labeled_rounds = 6;
  double chatter_probability = 0.3;  // unlabeled doctor small talk per round
  double vague_cue_probability = 0.05;  // patient turn without class cue words
  int word_vector_dim = 16;
  uint64_t seed = 7;
};

// A corpus with planted response classes. A doctor reply that belongs to a
// class follows a patient turn carrying that class's cue words, except for a
// vague_cue_probability share of replies that follow a cue-free question.
struct SyntheticCorpus {
  std::vector<Conversation> conversations;
  std::vector<std::string> class_names;
  // Normalized doctor response -> planted class index.
  std::map<std::string, int> truth;
  PlaceholderSet placeholders;
  std::string word_vectors;  // text format accepted by load_word_vectors
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options);

// Drives a merge session the way a careful labeler would: the first cluster
// of each planted class creates it, later ones are assigned to it, and
// clusters whose centroid is not planted are skipped.
void scripted_merge(MergeSession& session, const std::map<std::string, int>& truth,
                    const std::vector<std::string>& class_names,
                    const std::string& actor = "scripted");

// Number of planted classes represented by a distinct catalog class, where a
// catalog class represents the planted class holding the majority of its
// member occurrences.
size_t recovered_classes(const Catalog& catalog, const ResponseTable& table,
                         const std::map<std::string, int>& truth);

std::string truth_to_json(const SyntheticCorpus& corpus);
void truth_from_json(std::string_view content, std::map<std::string, int>* truth,
                     std::vector<std::string>* class_names);

}  // namespace respclass

#endif  // RESPCLASS_SYNTHETIC_H_
