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

#include "respclass/responseclasses.h"

#include <gtest/gtest.h>

#include "testing.h"

namespace respclass {
namespace {

using testing::make_table;

MergeAction create(int32_t cluster, std::string name, std::string exemplar = "") {
  MergeAction a;
  a.kind = ActionKind::kCreate;
  a.cluster_id = cluster;
  a.name = std::move(name);
  a.exemplar = std::move(exemplar);
  return a;
}

MergeAction assign(int32_t cluster, int32_t class_id) {
  MergeAction a;
  a.kind = ActionKind::kAssign;
  a.cluster_id = cluster;
  a.class_id = class_id;
  return a;
}

MergeAction skip(int32_t cluster) {
  MergeAction a;
  a.kind = ActionKind::kSkip;
  a.cluster_id = cluster;
  return a;
}

MergeAction undo() {
  MergeAction a;
  a.kind = ActionKind::kUndo;
  return a;
}

struct Fixture {
  ResponseTable table = make_table({"hello there", "take care", "drink water", "hi there"},
                                   {2, 10, 7, 3});
  // Clusters: 0 = {0, 3} (count 5), 1 = {1} (10), 2 = {2} (7).
  ClusterSet clusters = make_cluster_set({{0, 3}, {1}, {2}}, table.counts());
};

TEST(MergeSession, QueueByOccurrences) {
  Fixture f;
  EXPECT_EQ(MergeSession(f.clusters, f.table, 2).queue(), (std::vector<int32_t>{1, 2}));
  EXPECT_EQ(MergeSession(f.clusters, f.table, 99).queue(), (std::vector<int32_t>{1, 2, 0}));
}

TEST(MergeSession, CountTieGoesToLowerClusterId) {
  const ResponseTable t = make_table({"a", "b", "c"}, {4, 4, 4});
  const ClusterSet cs = make_cluster_set({{0}, {1}, {2}}, t.counts());
  EXPECT_EQ(MergeSession(cs, t, 3).queue(), (std::vector<int32_t>{0, 1, 2}));
}

TEST(MergeSession, EmptyClusterSetRejected) {
  EXPECT_THROW(MergeSession(ClusterSet{}, ResponseTable{}, 10), Error);
}

TEST(MergeSession, WalkThroughCreateAssignUndo) {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  ASSERT_TRUE(s.next_centroid().has_value());
  EXPECT_EQ(s.next_centroid()->cluster_id, 1);
  EXPECT_EQ(s.next_centroid()->centroid_text, "take care");

  s.apply(create(1, "Greet + Pain Scale Question"));
  EXPECT_EQ(s.next_centroid()->cluster_id, 2);
  EXPECT_EQ(s.classes().size(), 1u);
  EXPECT_EQ(s.classes()[0].exemplar_text, "take care");

  s.apply(assign(2, 0));
  EXPECT_EQ(s.classes()[0].member_cluster_ids, (std::vector<int32_t>{1, 2}));
  EXPECT_EQ(s.classes()[0].member_response_ids, (std::vector<ResponseId>{1, 2}));

  s.apply(undo());
  EXPECT_EQ(s.classes()[0].member_cluster_ids, (std::vector<int32_t>{1}));
  EXPECT_EQ(s.next_centroid()->cluster_id, 2);

  s.apply(skip(2));
  s.apply(skip(0));
  EXPECT_TRUE(s.complete());
  EXPECT_FALSE(s.next_centroid().has_value());
  EXPECT_EQ(s.skipped(), 2u);
}

TEST(MergeSession, CentroidViewListsMembers) {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  s.apply(skip(1));
  s.apply(skip(2));
  const auto view = s.next_centroid();
  ASSERT_TRUE(view);
  EXPECT_EQ(view->centroid_text, "hi there");
  EXPECT_EQ(view->total_count, 5);
  ASSERT_EQ(view->members.size(), 2u);
  EXPECT_EQ(view->members[0].text, "hi there");
  EXPECT_EQ(view->position, 2u);
  EXPECT_EQ(view->queue_length, 3u);
}

TEST(MergeSession, InvalidActionsLeaveStateUntouched) {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  const MergeSession before = s;
  auto expect_kind = [&](const MergeAction& a, ErrorKind kind) {
    try {
      s.apply(a);
      ADD_FAILURE() << "accepted " << action_kind_name(a.kind);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
    EXPECT_TRUE(s.same_state(before));
  };
  expect_kind(undo(), ErrorKind::kFailedPrecondition);
  expect_kind(assign(1, 0), ErrorKind::kInvalidArgument);
  expect_kind(skip(2), ErrorKind::kConflict);
  expect_kind(create(1, "   "), ErrorKind::kInvalidArgument);
  s.apply(create(1, "Take care"));
  const MergeSession after_create = s;
  try {
    s.apply(create(2, " Take care "));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
  EXPECT_TRUE(s.same_state(after_create));
}

TEST(MergeSession, UndoIsInverseForEveryKind) {
  Fixture f;
  for (int kind = 0; kind < 3; ++kind) {
    MergeSession s(f.clusters, f.table, 3);
    s.apply(create(1, "A"));
    const auto classes = s.classes();
    const size_t cursor = s.cursor();
    const size_t skipped = s.skipped();
    if (kind == 0) s.apply(assign(2, 0));
    if (kind == 1) s.apply(create(2, "B"));
    if (kind == 2) s.apply(skip(2));
    s.apply(undo());
    EXPECT_EQ(s.classes(), classes);
    EXPECT_EQ(s.cursor(), cursor);
    EXPECT_EQ(s.skipped(), skipped);
  }
}

TEST(MergeSession, UndoChainsToEmpty) {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  s.apply(create(1, "A"));
  s.apply(assign(2, 0));
  s.apply(undo());
  s.apply(undo());
  EXPECT_TRUE(s.classes().empty());
  EXPECT_EQ(s.cursor(), 0u);
  EXPECT_THROW(s.apply(undo()), Error);
  EXPECT_EQ(s.log().size(), 4u);
}

TEST(MergeSession, ReplayEqualsLiveState) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    auto fx = testing::random_session_fixture(rng);
    MergeSession live(fx.clusters, fx.table, fx.top_n);
    const MergeSession base = live;
    for (int step = 0; step < 30; ++step) {
      try {
        live.apply(testing::random_action(rng, live));
      } catch (const Error&) {
      }
      ASSERT_TRUE(base.replay(live.log()).same_state(live));
    }
  }
}

TEST(MergeSession, ReplayRejectsImpossibleLog) {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  try {
    s.replay({skip(1), skip(1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDataError);
    EXPECT_NE(std::string(e.what()).find("entry 2"), std::string::npos);
  }
}

Catalog two_class_catalog() {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  s.apply(create(1, "Take care"));
  s.apply(create(2, "Fluids", "Please drink plenty of water."));
  s.apply(assign(0, 0));
  return s.catalog();
}

TEST(Catalog, RoundTripThroughFile) {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  s.apply(create(1, "Take care"));
  s.apply(create(2, "Fluids"));
  s.apply(assign(0, 0));
  const auto dir = testing::temp_dir("catalog");
  export_classes(s, dir / "catalog.json");
  EXPECT_EQ(import_classes(dir / "catalog.json", &f.clusters), s.catalog());
}

TEST(Catalog, ExemplarEditChangesOnlyExemplarAndHash) {
  Catalog c = two_class_catalog();
  const std::string structure = c.structure_hash();
  const std::string content = c.content_hash();
  const std::string before = catalog_to_json(c);
  c.set_exemplar(1, "Stay hydrated.");
  EXPECT_EQ(c.structure_hash(), structure);
  EXPECT_NE(c.content_hash(), content);
  const Catalog back = catalog_from_json(catalog_to_json(c));
  EXPECT_EQ(back.classes[1].exemplar_text, "Stay hydrated.");
  EXPECT_EQ(back.classes[0], two_class_catalog().classes[0]);
  EXPECT_NE(before, catalog_to_json(c));
}

TEST(Catalog, ImportRejectsBadDocuments) {
  const Catalog c = two_class_catalog();
  Catalog dup = c;
  dup.classes[1].name = dup.classes[0].name;
  EXPECT_THROW(catalog_from_json(catalog_to_json(dup)), Error);

  Catalog shared = c;
  shared.classes[1].member_cluster_ids.push_back(shared.classes[0].member_cluster_ids[0]);
  EXPECT_THROW(catalog_from_json(catalog_to_json(shared)), Error);

  std::string tampered = catalog_to_json(c);
  tampered.replace(tampered.find("Fluids"), 6, "Liquid");
  EXPECT_THROW(catalog_from_json(tampered), Error);

  Fixture f;
  Catalog dangling = c;
  dangling.classes[0].member_cluster_ids.push_back(42);
  EXPECT_THROW(catalog_from_json(catalog_to_json(dangling), &f.clusters), Error);
  EXPECT_THROW(catalog_from_json("{}"), Error);
}

TEST(Catalog, ExportWithoutClassesFails) {
  Fixture f;
  MergeSession s(f.clusters, f.table, 3);
  EXPECT_THROW(export_classes(s, testing::temp_dir("empty") / "c.json"), Error);
}

TEST(ActionLog, AppendAndRead) {
  const auto dir = testing::temp_dir("log");
  const ActionLog log(dir / "session" / "actions.jsonl");
  EXPECT_TRUE(log.read_all().empty());
  MergeAction a = create(1, "Take care", "Take care!");
  a.actor = "me";
  a.timestamp = "2026-01-01T00:00:00Z";
  log.append(a);
  log.append(undo());
  const auto back = log.read_all();
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1].kind, ActionKind::kUndo);
}

TEST(ActionLog, CorruptionIsReported) {
  const auto dir = testing::temp_dir("corrupt");
  write_file_atomic(dir / "a.jsonl", action_to_json_line(skip(1)) + "\n{\"kind\":\n");
  try {
    ActionLog(dir / "a.jsonl").read_all();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  write_file_atomic(dir / "b.jsonl", action_to_json_line(skip(1)));
  EXPECT_THROW(ActionLog(dir / "b.jsonl").read_all(), Error);
  EXPECT_THROW(action_from_json_line(R"({"kind":"merge"})"), Error);
}

}  // namespace
}  // namespace respclass
