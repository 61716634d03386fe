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

#ifndef RESPCLASS_CORPUS_H_
#define RESPCLASS_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "respclass/common.h"

namespace respclass {

// One message as it appears in the corpus file.
struct Turn {
  Speaker speaker = Speaker::kPatient;
  std::string text;

  bool operator==(const Turn&) const = default;
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
};

// A normalized doctor utterance and how often it occurs corpus-wide.
struct Response {
  std::string normalized_text;
  // Raw surface form -> occurrences.
  std::map<std::string, int64_t> raw_variants;
  int64_t count = 0;

  // Raw variant with the most occurrences; ties go to the lexicographically
  // smallest variant.
  const std::string& most_frequent_variant() const;
};

// Canonical response table. Position in `responses` is the response id used
// everywhere downstream.
struct ResponseTable {
  std::vector<Response> responses;

  size_t size() const { return responses.size(); }
  bool empty() const { return responses.empty(); }
  const Response& operator[](ResponseId id) const { return responses.at(id); }
  std::vector<int64_t> counts() const;
  // Returns -1 when the text is not in the table.
  ResponseId find(std::string_view normalized_text) const;
};

using PlaceholderSet = std::set<std::string, std::less<>>;

// Parses the JSON-lines corpus format. Errors name the offending line.
std::vector<Conversation> parse_conversations(std::string_view content);
std::vector<Conversation> load_conversations(const std::filesystem::path& path);
std::string conversation_to_json_line(const Conversation& conv);

// Lowercase, drop placeholder markers and Unicode punctuation, collapse
// whitespace. Digits are kept.
std::string normalize_text(std::string_view raw,
                           const PlaceholderSet& placeholders = {});

// Groups consecutive same-speaker messages into one turn, joining their text
// with a single space.
std::vector<Turn> merge_consecutive_turns(std::span<const Turn> messages);

ResponseTable extract_response_table(std::span<const Conversation> convs,
                                     Speaker speaker,
                                     const PlaceholderSet& placeholders = {});

// JSON document: {"config_hash", "responses": [{id, normalized_text, count,
// raw_variants: [{text, count}]}]}.
std::string response_table_to_json(const ResponseTable& table,
                                   std::string_view config_hash = "");
ResponseTable response_table_from_json(std::string_view content,
                                       std::string* config_hash = nullptr);
// Tab-separated id, normalized_text, count.
std::string response_table_to_tsv(const ResponseTable& table);

}  // namespace respclass

#endif  // RESPCLASS_CORPUS_H_
