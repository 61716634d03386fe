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

#include "respclass/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"

namespace respclass {
namespace {

using nlohmann::json;

struct PlantedClass {
  const char* name;
  std::vector<const char*> phrasings;
  std::vector<const char*> cues;
};

const std::vector<PlantedClass>& planted_classes() {
  static const std::vector<PlantedClass> kClasses = {
      {"Greet",
       {"Hi [PATIENT_NAME], I am Dr. [DOCTOR_NAME], how can I help you today",
        "Hello, thanks for reaching out. What brings you in today",
        "Good morning, what can I do for you"},
       {"hello i need some help", "hi there i have a question for a doctor"}},
      {"Symptom Duration Question",
       {"How long have you had these symptoms",
        "When did this first start",
        "How many days has this been going on"},
       {"i have been coughing a lot lately", "my nose is runny and stuffy"}},
      {"Pain Scale Question",
       {"On a scale of 1 to 10, how bad is the pain",
        "How severe is the pain from 1 to 10",
        "Can you rate your pain between 1 and 10"},
       {"it hurts really badly", "the ache in my lower back is awful"}},
      {"Fever Check",
       {"Have you checked your temperature",
        "Do you have a fever",
        "Have you measured it with a thermometer"},
       {"i feel hot and shivery", "i keep getting chills and night sweats"}},
      {"Current Medications",
       {"Are you taking any medications right now",
        "What medicines do you currently take",
        "Do you take any prescription drugs"},
       {"can i take something for it", "which pill should i use"}},
      {"Allergy Check",
       {"Do you have any allergies to medications",
        "Are you allergic to any drugs",
        "Any known drug allergies"},
       {"i want to try antibiotics", "could you prescribe penicillin"}},
      {"Fluids And Rest",
       {"Make sure to drink plenty of fluids and rest",
        "Stay hydrated and get lots of sleep",
        "Rest up and keep drinking water"},
       {"what should i do at home", "are there any home remedies"}},
      {"See Someone In Person",
       {"I recommend you see a doctor in person",
        "Please visit an urgent care clinic",
        "You should get examined at a clinic"},
       {"the swelling keeps getting worse", "there is blood when i cough"}},
      {"Emergency",
       {"Please call 911 or go to the emergency room now",
        "This could be serious, go to the ER immediately",
        "Seek emergency care right away"},
       {"i have crushing chest pain", "i can barely breathe"}},
      {"Photo Request",
       {"Could you send a photo of the rash",
        "Please upload a picture of the area",
        "Can you share an image of it"},
       {"there is a red rash on my arm", "a strange spot appeared on my skin"}},
      {"Take Care",
       {"Take care", "Feel better soon", "Hoping for the best, take care"},
       {"thanks doctor that helps", "thank you so much"}},
      {"Pregnancy Check",
       {"Is there any chance you could be pregnant",
        "Are you currently pregnant or breastfeeding",
        "Could you be pregnant"},
       {"my period is late", "i feel nauseous in the mornings"}},
  };
  return kClasses;
}

const std::vector<const char*> kPrefixes = {"", "", "", "Ok, ", "Okay, ",
                                            "Alright, "};
const std::vector<const char*> kEndings = {"", ".", "!", "?", "!!", "..."};
const std::vector<const char*> kFiller = {"well", "um", "so",   "yeah",
                                          "also", "really", "honestly", "today"};
const std::vector<const char*> kVagueCues = {"i have a question", "quick question for you",
                                             "can you help me with something"};
const std::vector<const char*> kChatterTopics = {
    "chart", "notes", "history", "records", "file", "portal", "schedule"};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

std::string doctor_variant(Rng& rng, const char* phrasing) {
  std::string text = pick(rng, kPrefixes);
  std::string body = phrasing;
  if (!text.empty() && !body.empty() && !body.starts_with("I ") &&
      !body.starts_with("I'")) {
    body[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(body[0])));
  }
  if (rng.uniform() < 0.15) {
    bool in_marker = false;
    for (char& ch : body) {
      if (ch == '[') in_marker = true;
      if (!in_marker) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if (ch == ']') in_marker = false;
    }
  }
  text += body;
  text += pick(rng, kEndings);
  return text;
}

std::string patient_message(Rng& rng, const char* cue) {
  std::string text;
  if (rng.uniform() < 0.5) {
    text += pick(rng, kFiller);
    text += ' ';
  }
  text += cue;
  if (rng.uniform() < 0.3) {
    text += ' ';
    text += pick(rng, kFiller);
  }
  return text;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options) {
  const auto& classes = planted_classes();
  Rng rng(options.seed);
  SyntheticCorpus corpus;
  corpus.placeholders = {"[PATIENT_NAME]", "[DOCTOR_NAME]"};
  for (const auto& c : classes) corpus.class_names.push_back(c.name);

  int chatter_serial = 0;
  for (int n = 0; n < options.num_conversations; ++n) {
    Conversation conv;
    char id[32];
    std::snprintf(id, sizeof(id), "synthetic-%04d", n);
    conv.id = id;
    conv.turns.push_back({Speaker::kPatient, "hi"});
    std::vector<int> order(classes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    const int span = options.max_labeled_rounds - options.min_labeled_rounds + 1;
    const int rounds =
        options.min_labeled_rounds + static_cast<int>(rng.below(std::max(span, 1)));
    for (int r = 0; r < rounds && r < static_cast<int>(order.size()); ++r) {
      if (rng.uniform() < options.chatter_probability) {
        conv.turns.push_back({Speaker::kPatient, patient_message(rng, "ok")});
        conv.turns.push_back(
            {Speaker::kDoctor, "Let me look at your " +
                                   std::string(pick(rng, kChatterTopics)) +
                                   " entry " + std::to_string(++chatter_serial)});
      }
      const PlantedClass& pc = classes[order[r]];
      // Sometimes the patient splits a turn over two messages.
      if (rng.uniform() < 0.2) {
        conv.turns.push_back({Speaker::kPatient, pick(rng, kFiller)});
      }
      const bool vague = rng.uniform() < options.vague_cue_probability;
      conv.turns.push_back(
          {Speaker::kPatient, patient_message(rng, pick(rng, vague ? kVagueCues : pc.cues))});
      const std::string reply = doctor_variant(rng, pick(rng, pc.phrasings));
      conv.turns.push_back({Speaker::kDoctor, reply});
      corpus.truth[normalize_text(reply, corpus.placeholders)] = order[r];
    }
    corpus.conversations.push_back(std::move(conv));
  }

  // Word vectors: each planted class owns a topic direction shared by its
  // content words; every other word gets an independent direction.
  std::map<std::string, int> word_topic;
  for (size_t c = 0; c < classes.size(); ++c) {
    for (const char* p : classes[c].phrasings) {
      for (const auto& w : split_whitespace(normalize_text(p, corpus.placeholders))) {
        auto [it, inserted] = word_topic.emplace(w, static_cast<int>(c));
        if (!inserted && it->second != static_cast<int>(c)) it->second = -1;
      }
    }
  }
  for (const char* w : {"ok", "okay", "alright"}) word_topic[w] = -1;
  const int d = options.word_vector_dim;
  Rng vec_rng(options.seed ^ 0x776f7264ULL);
  std::vector<std::vector<double>> topics(classes.size(), std::vector<double>(d));
  for (auto& t : topics)
    for (double& x : t) x = vec_rng.normal();
  std::string out;
  char buf[32];
  for (const auto& [word, topic] : word_topic) {
    out += word;
    for (int i = 0; i < d; ++i) {
      double x = vec_rng.normal();
      if (topic >= 0) x = 0.8 * topics[topic][i] + 0.6 * x;
      std::snprintf(buf, sizeof(buf), " %.6f", x);
      out += buf;
    }
    out += '\n';
  }
  corpus.word_vectors = std::move(out);
  return corpus;
}

void scripted_merge(MergeSession& session, const std::map<std::string, int>& truth,
                    const std::vector<std::string>& class_names,
                    const std::string& actor) {
  std::map<int, int32_t> created;  // planted class -> catalog class id
  while (auto view = session.next_centroid()) {
    MergeAction action;
    action.actor = actor;
    action.cluster_id = view->cluster_id;
    auto it = truth.find(view->centroid_text);
    if (it == truth.end()) {
      action.kind = ActionKind::kSkip;
    } else if (auto c = created.find(it->second); c != created.end()) {
      action.kind = ActionKind::kAssign;
      action.class_id = c->second;
    } else {
      action.kind = ActionKind::kCreate;
      action.name = class_names.at(static_cast<size_t>(it->second));
    }
    session.apply(action);
    if (action.kind == ActionKind::kCreate) {
      created[it->second] = session.classes().back().id;
    }
  }
}

size_t recovered_classes(const Catalog& catalog, const ResponseTable& table,
                         const std::map<std::string, int>& truth) {
  std::set<int> recovered;
  for (const ResponseClass& c : catalog.classes) {
    std::map<int, int64_t> weight;
    int64_t total = 0;
    for (ResponseId r : c.member_response_ids) {
      const Response& resp = table[r];
      total += resp.count;
      auto it = truth.find(resp.normalized_text);
      if (it != truth.end()) weight[it->second] += resp.count;
    }
    for (const auto& [planted, w] : weight) {
      if (2 * w > total) recovered.insert(planted);
    }
  }
  return recovered.size();
}

std::string truth_to_json(const SyntheticCorpus& corpus) {
  json doc = {{"class_names", corpus.class_names}, {"truth", corpus.truth}};
  return doc.dump(1) + "\n";
}

void truth_from_json(std::string_view content, std::map<std::string, int>* truth,
                     std::vector<std::string>* class_names) {
  try {
    json doc = json::parse(content);
    *truth = doc.at("truth").get<std::map<std::string, int>>();
    *class_names = doc.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataError, std::string("malformed truth file: ") + e.what());
  }
}

}  // namespace respclass
