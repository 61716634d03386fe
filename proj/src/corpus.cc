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

#include "respclass/corpus.h"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <map>
#include <unordered_set>

#include "json.hpp"

namespace respclass {
namespace {

using nlohmann::json;

bool is_space_cp(UChar32 c) { return u_isUWhiteSpace(c) || c == 0; }

std::string remove_placeholders(std::string_view text,
                                const PlaceholderSet& placeholders) {
  std::string out(text);
  for (const std::string& marker : placeholders) {
    if (split_whitespace(marker).empty()) continue;
    size_t pos = 0;
    while ((pos = out.find(marker, pos)) != std::string::npos) {
      out.replace(pos, marker.size(), " ");
      pos += 1;
    }
  }
  return out;
}

// One lowercase / depunctuate / collapse pass over UTF-8 text. Invalid bytes
// are dropped.
std::string normalize_pass(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  int32_t i = 0;
  const int32_t n = static_cast<int32_t>(text.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(bytes, i, n, c);
    if (c < 0) continue;
    if (is_space_cp(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (U_GET_GC_MASK(c) & U_GC_P_MASK) continue;
    c = u_tolower(c);
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool err = false;
    U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, c, err);
    if (!err) out.append(buf, static_cast<size_t>(len));
  }
  return out;
}

}  // namespace

const std::string& Response::most_frequent_variant() const {
  static const std::string kEmpty;
  const std::string* best = nullptr;
  int64_t best_count = -1;
  for (const auto& [text, n] : raw_variants) {
    if (n > best_count) {
      best = &text;
      best_count = n;
    }
  }
  return best ? *best : kEmpty;
}

std::vector<int64_t> ResponseTable::counts() const {
  std::vector<int64_t> out;
  out.reserve(responses.size());
  for (const auto& r : responses) out.push_back(r.count);
  return out;
}

ResponseId ResponseTable::find(std::string_view normalized_text) const {
  for (size_t i = 0; i < responses.size(); ++i) {
    if (responses[i].normalized_text == normalized_text)
      return static_cast<ResponseId>(i);
  }
  return -1;
}

std::vector<Conversation> parse_conversations(std::string_view content) {
  std::vector<Conversation> out;
  std::unordered_set<std::string> seen;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (split_whitespace(line).empty()) {
      if (end == content.size()) break;
      continue;
    }
    auto fail = [&](const std::string& why) -> Error {
      return Error(ErrorKind::kDataError,
                   "corpus line " + std::to_string(line_no) + ": " + why);
    };
    Conversation conv;
    try {
      json j = json::parse(line);
      if (!j.is_object() || !j.contains("id") || !j.contains("turns"))
        throw fail("expected object with \"id\" and \"turns\"");
      conv.id = j.at("id").get<std::string>();
      const json& turns = j.at("turns");
      if (!turns.is_array() || turns.empty())
        throw fail("\"turns\" must be a non-empty array");
      for (const json& t : turns) {
        Turn turn;
        turn.speaker = parse_speaker(t.at("speaker").get<std::string>());
        turn.text = t.at("text").get<std::string>();
        if (split_whitespace(turn.text).empty())
          throw fail("turn text is empty");
        conv.turns.push_back(std::move(turn));
      }
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with("corpus line")) throw;
      throw fail(e.what());
    } catch (const json::exception& e) {
      throw fail(e.what());
    }
    if (!seen.insert(conv.id).second)
      throw fail("duplicate conversation id \"" + conv.id + "\"");
    out.push_back(std::move(conv));
    if (end == content.size()) break;
  }
  return out;
}

std::vector<Conversation> load_conversations(const std::filesystem::path& path) {
  return parse_conversations(read_file(path));
}

std::string conversation_to_json_line(const Conversation& conv) {
  json turns = json::array();
  for (const Turn& t : conv.turns) {
    turns.push_back({{"speaker", speaker_name(t.speaker)}, {"text", t.text}});
  }
  json j = {{"id", conv.id}, {"turns", std::move(turns)}};
  return j.dump();
}

std::string normalize_text(std::string_view raw,
                           const PlaceholderSet& placeholders) {
  std::string current = normalize_pass(remove_placeholders(raw, placeholders));
  // Marker removal can expose new matches only by shrinking the string, so
  // this reaches a fixed point quickly.
  while (true) {
    std::string next =
        normalize_pass(remove_placeholders(current, placeholders));
    if (next == current) return current;
    current = std::move(next);
  }
}

std::vector<Turn> merge_consecutive_turns(std::span<const Turn> messages) {
  std::vector<Turn> out;
  for (const Turn& m : messages) {
    if (!out.empty() && out.back().speaker == m.speaker) {
      out.back().text += ' ';
      out.back().text += m.text;
    } else {
      out.push_back(m);
    }
  }
  return out;
}

ResponseTable extract_response_table(std::span<const Conversation> convs,
                                     Speaker speaker,
                                     const PlaceholderSet& placeholders) {
  std::map<std::string, Response> by_text;
  for (const Conversation& conv : convs) {
    for (const Turn& turn : merge_consecutive_turns(conv.turns)) {
      if (turn.speaker != speaker) continue;
      std::string norm = normalize_text(turn.text, placeholders);
      if (norm.empty()) continue;
      Response& r = by_text[norm];
      r.normalized_text = norm;
      ++r.raw_variants[turn.text];
      ++r.count;
    }
  }
  ResponseTable table;
  for (auto& [text, r] : by_text) {
    if (r.count >= 2) table.responses.push_back(std::move(r));
  }
  std::stable_sort(table.responses.begin(), table.responses.end(),
                   [](const Response& a, const Response& b) {
                     if (a.count != b.count) return a.count > b.count;
                     return a.normalized_text < b.normalized_text;
                   });
  return table;
}

std::string response_table_to_json(const ResponseTable& table,
                                   std::string_view config_hash) {
  json rows = json::array();
  for (size_t i = 0; i < table.responses.size(); ++i) {
    const Response& r = table.responses[i];
    json variants = json::array();
    for (const auto& [text, n] : r.raw_variants)
      variants.push_back({{"text", text}, {"count", n}});
    rows.push_back({{"id", i},
                    {"normalized_text", r.normalized_text},
                    {"count", r.count},
                    {"raw_variants", std::move(variants)}});
  }
  json doc = {{"config_hash", config_hash}, {"responses", std::move(rows)}};
  return doc.dump(1) + "\n";
}

ResponseTable response_table_from_json(std::string_view content,
                                       std::string* config_hash) {
  ResponseTable table;
  try {
    json doc = json::parse(content);
    if (config_hash) *config_hash = doc.value("config_hash", "");
    const json& rows = doc.at("responses");
    for (size_t i = 0; i < rows.size(); ++i) {
      const json& row = rows[i];
      if (row.at("id").get<size_t>() != i)
        throw Error(ErrorKind::kDataError, "response ids must be 0..R-1 in order");
      Response r;
      r.normalized_text = row.at("normalized_text").get<std::string>();
      r.count = row.at("count").get<int64_t>();
      for (const json& v : row.at("raw_variants"))
        r.raw_variants[v.at("text").get<std::string>()] =
            v.at("count").get<int64_t>();
      table.responses.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataError,
                std::string("malformed response table: ") + e.what());
  }
  return table;
}

std::string response_table_to_tsv(const ResponseTable& table) {
  std::string out = "id\tnormalized_text\tcount\n";
  for (size_t i = 0; i < table.responses.size(); ++i) {
    out += std::to_string(i) + "\t" + table.responses[i].normalized_text +
           "\t" + std::to_string(table.responses[i].count) + "\n";
  }
  return out;
}

}  // namespace respclass
