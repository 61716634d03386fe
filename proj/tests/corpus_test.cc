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

#include <gtest/gtest.h>

#include "respclass/common.h"

namespace respclass {
namespace {

const PlaceholderSet kMarkers = {"[PATIENT_NAME]", "[DOCTOR_NAME]"};

TEST(ParseConversations, OneLineTwoTurns) {
  const auto convs = parse_conversations(
      R"({"id":"c1","turns":[{"speaker":"patient","text":"hi"},{"speaker":"doctor","text":"hello"}]})");
  ASSERT_EQ(convs.size(), 1u);
  EXPECT_EQ(convs[0].id, "c1");
  ASSERT_EQ(convs[0].turns.size(), 2u);
  EXPECT_EQ(convs[0].turns[0].speaker, Speaker::kPatient);
  EXPECT_EQ(convs[0].turns[1].text, "hello");
}

TEST(ParseConversations, EmptyInput) {
  EXPECT_TRUE(parse_conversations("").empty());
  EXPECT_TRUE(parse_conversations("\n\n").empty());
}

TEST(ParseConversations, UnknownSpeakerNamesLine) {
  const std::string content =
      "{\"id\":\"a\",\"turns\":[{\"speaker\":\"patient\",\"text\":\"x\"}]}\n"
      "{\"id\":\"b\",\"turns\":[{\"speaker\":\"nurse\",\"text\":\"x\"}]}\n";
  try {
    parse_conversations(content);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDataError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ParseConversations, RejectsDuplicateIdsAndEmptyTurns) {
  EXPECT_THROW(parse_conversations(
                   "{\"id\":\"a\",\"turns\":[{\"speaker\":\"doctor\",\"text\":\"x\"}]}\n"
                   "{\"id\":\"a\",\"turns\":[{\"speaker\":\"doctor\",\"text\":\"y\"}]}\n"),
               Error);
  EXPECT_THROW(parse_conversations("{\"id\":\"a\",\"turns\":[]}"), Error);
  EXPECT_THROW(parse_conversations("not json"), Error);
}

TEST(ParseConversations, RoundTrip) {
  Conversation c{"x", {{Speaker::kPatient, "a \"quoted\" line"}, {Speaker::kDoctor, "ok"}}};
  const auto back = parse_conversations(conversation_to_json_line(c));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].turns[0].text, c.turns[0].text);
}

TEST(NormalizeText, Examples) {
  EXPECT_EQ(normalize_text("Take care!!!!", {}), "take care");
  EXPECT_EQ(normalize_text("Hello [PATIENT_NAME], how are you?", kMarkers),
            "hello how are you");
  EXPECT_EQ(normalize_text("", {}), "");
  EXPECT_EQ(normalize_text("  Many   spaces\there ", {}), "many spaces here");
  EXPECT_EQ(normalize_text("ÉCOLE, «Ça va?»", {}), "école ça va");
}

TEST(NormalizeText, NestedMarkerReachesFixedPoint) {
  // Removing the inner marker exposes the outer one.
  const std::string raw = "[PATIENT[PATIENT_NAME]_NAME] hi";
  const std::string once = normalize_text(raw, kMarkers);
  EXPECT_EQ(normalize_text(once, kMarkers), once);
}

TEST(NormalizeText, IdempotentOnRandomStrings) {
  static const std::vector<std::string> kPieces = {
      "A", "b", " ", "  ", "!", ".", ",", "[PATIENT_NAME]", "[", "]", "_NAME", "Ü",
      "ß", "\t", "?", "'", "don't", "[DOCTOR_NAME]", "PATIENT", "-", "\xE2\x80\x94"};
  Rng rng(11);
  for (int trial = 0; trial < 5000; ++trial) {
    std::string s;
    const size_t len = rng.below(12);
    for (size_t i = 0; i < len; ++i) s += kPieces[rng.below(kPieces.size())];
    const std::string once = normalize_text(s, kMarkers);
    ASSERT_EQ(normalize_text(once, kMarkers), once) << "input: " << s;
  }
}

TEST(MergeConsecutiveTurns, JoinsSameSpeakerRuns) {
  const std::vector<Turn> msgs = {{Speaker::kPatient, "a"},
                                  {Speaker::kPatient, "b"},
                                  {Speaker::kDoctor, "c"},
                                  {Speaker::kPatient, "d"}};
  const auto turns = merge_consecutive_turns(msgs);
  ASSERT_EQ(turns.size(), 3u);
  EXPECT_EQ(turns[0].text, "a b");
  EXPECT_EQ(turns[2].text, "d");
}

Conversation doctor_says(const std::string& id, std::vector<std::string> lines) {
  Conversation c{id, {}};
  for (auto& l : lines) {
    c.turns.push_back({Speaker::kPatient, "question"});
    c.turns.push_back({Speaker::kDoctor, std::move(l)});
  }
  return c;
}

TEST(ExtractResponseTable, KeepsRepeatedResponses) {
  const std::vector<Conversation> convs = {
      doctor_says("1", {"take care", "rest well"}), doctor_says("2", {"take care"}),
      doctor_says("3", {"take care"})};
  const ResponseTable t = extract_response_table(convs, Speaker::kDoctor, {});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].normalized_text, "take care");
  EXPECT_EQ(t[0].count, 3);
}

TEST(ExtractResponseTable, VariantsMerge) {
  const std::vector<Conversation> convs = {doctor_says("1", {"Take care."}),
                                           doctor_says("2", {"take care!!"})};
  const ResponseTable t = extract_response_table(convs, Speaker::kDoctor, {});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].count, 2);
  EXPECT_EQ(t[0].raw_variants.size(), 2u);
}

TEST(ExtractResponseTable, EmptyCorpus) {
  EXPECT_TRUE(extract_response_table({}, Speaker::kDoctor, {}).empty());
}

TEST(ExtractResponseTable, PlaceholderOnlyResponsesDropped) {
  const std::vector<Conversation> convs = {doctor_says("1", {"[DOCTOR_NAME]", "ok"}),
                                           doctor_says("2", {"[DOCTOR_NAME]!", "ok"})};
  const ResponseTable t = extract_response_table(convs, Speaker::kDoctor, kMarkers);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].normalized_text, "ok");
}

TEST(ExtractResponseTable, CountsMatchBruteForceAndOrderIsStable) {
  Rng rng(5);
  static const std::vector<std::string> kReplies = {
      "Take care", "take care!", "Rest well.", "How long?", "how long", "Drink fluids",
      "ok", "OK!", "Is it painful?", "See you"};
  std::vector<Conversation> convs;
  for (int c = 0; c < 60; ++c) {
    Conversation conv{"c" + std::to_string(c), {}};
    const size_t n = 1 + rng.below(6);
    for (size_t i = 0; i < n; ++i) {
      const Speaker s = rng.below(2) ? Speaker::kDoctor : Speaker::kPatient;
      conv.turns.push_back({s, kReplies[rng.below(kReplies.size())]});
    }
    convs.push_back(std::move(conv));
  }
  const ResponseTable t = extract_response_table(convs, Speaker::kDoctor, {});
  for (const Response& r : t.responses) {
    int64_t recount = 0;
    for (const Conversation& conv : convs) {
      for (const Turn& turn : merge_consecutive_turns(conv.turns)) {
        if (turn.speaker == Speaker::kDoctor && normalize_text(turn.text, {}) == r.normalized_text)
          ++recount;
      }
    }
    EXPECT_EQ(r.count, recount) << r.normalized_text;
    EXPECT_GE(r.count, 2);
  }
  for (size_t i = 1; i < t.size(); ++i) {
    EXPECT_TRUE(t[i - 1].count > t[i].count ||
                (t[i - 1].count == t[i].count &&
                 t[i - 1].normalized_text < t[i].normalized_text));
  }
  const ResponseTable again = extract_response_table(convs, Speaker::kDoctor, {});
  EXPECT_EQ(response_table_to_json(t), response_table_to_json(again));
}

TEST(ResponseTableJson, RoundTrip) {
  const std::vector<Conversation> convs = {doctor_says("1", {"Take care.", "Bye"}),
                                           doctor_says("2", {"take care!!", "bye"})};
  const ResponseTable t = extract_response_table(convs, Speaker::kDoctor, {});
  std::string hash;
  const ResponseTable back = response_table_from_json(response_table_to_json(t, "abc"), &hash);
  EXPECT_EQ(hash, "abc");
  ASSERT_EQ(back.size(), t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].normalized_text, t[i].normalized_text);
    EXPECT_EQ(back[i].raw_variants, t[i].raw_variants);
  }
  EXPECT_EQ(t[0].most_frequent_variant(), "Bye");
}

}  // namespace
}  // namespace respclass
