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

#ifndef RESPCLASS_RESPONSECLASSES_H_
#define RESPCLASS_RESPONSECLASSES_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "respclass/clustering.h"
#include "respclass/corpus.h"

namespace respclass {

// A human-curated group of interchangeable responses; one classifier label.
struct ResponseClass {
  int32_t id = 0;
  std::string name;
  std::string exemplar_text;
  std::vector<int32_t> member_cluster_ids;      // ascending
  std::vector<ResponseId> member_response_ids;  // ascending

  bool operator==(const ResponseClass&) const = default;
};

struct Catalog {
  std::vector<ResponseClass> classes;

  size_t size() const { return classes.size(); }
  // Hash over the full content, exemplar text included.
  std::string content_hash() const;
  // Hash over the label space only (class ids and memberships). Exemplar and
  // name edits leave it unchanged, so trained models stay valid.
  std::string structure_hash() const;
  const ResponseClass* find(int32_t class_id) const;
  // Changes the user-facing message of one class; ids never change.
  void set_exemplar(int32_t class_id, std::string text);

  bool operator==(const Catalog&) const = default;
};

enum class ActionKind { kAssign, kCreate, kSkip, kUndo };

const char* action_kind_name(ActionKind kind);
ActionKind parse_action_kind(std::string_view name);

struct MergeAction {
  ActionKind kind = ActionKind::kSkip;
  int32_t cluster_id = -1;  // all kinds except undo
  int32_t class_id = -1;    // assign
  std::string name;         // create
  std::string exemplar;     // create; empty selects the centroid's raw form
  std::string timestamp;
  std::string actor;

  bool operator==(const MergeAction&) const = default;
};

struct CentroidMember {
  std::string text;
  int64_t count = 0;
};

struct CentroidView {
  int32_t cluster_id = 0;
  std::string centroid_text;
  int64_t total_count = 0;
  std::vector<CentroidMember> members;  // by count desc, then id
  size_t position = 0;                  // index in the review queue
  size_t queue_length = 0;
};

// The human merge step as an event-sourced state machine. Cluster centroids
// are reviewed in descending total occurrence order; every applied action is
// appended to the log and the state is always the fold of that log.
class MergeSession {
 public:
  // Reviews the `top_n` most frequent clusters. Throws on an empty ClusterSet.
  MergeSession(const ClusterSet& clusters, const ResponseTable& table,
               size_t top_n);

  std::optional<CentroidView> next_centroid() const;
  bool complete() const { return cursor_ == queue_.size(); }

  // Validates and applies one action, appending it to the log. Throws without
  // touching state when the action is invalid.
  void apply(MergeAction action);

  // Rebuilds a fresh session and folds `log` into it.
  MergeSession replay(const std::vector<MergeAction>& log) const;

  const std::vector<int32_t>& queue() const { return queue_; }
  size_t cursor() const { return cursor_; }
  const std::vector<MergeAction>& log() const { return log_; }
  const std::vector<ResponseClass>& classes() const { return classes_; }
  // Number of clusters passed over without a label.
  size_t skipped() const { return skipped_; }

  Catalog catalog() const;

  // Equality of the derived state (classes, cursor, skip count, undo stack).
  bool same_state(const MergeSession& other) const;

 private:
  struct ClusterInfo {
    std::string centroid_text;
    std::string default_exemplar;
    int64_t total_count = 0;
    std::vector<ResponseId> member_ids;
    std::vector<CentroidMember> members;
  };

  void undo_last();

  std::vector<ClusterInfo> clusters_;
  std::vector<int32_t> queue_;
  size_t cursor_ = 0;
  size_t skipped_ = 0;
  std::vector<ResponseClass> classes_;
  std::vector<MergeAction> log_;
  // Indices into log_ of actions not yet undone, most recent last.
  std::vector<size_t> undo_stack_;
};

std::string catalog_to_json(const Catalog& catalog);
// Throws kDataError on schema violations, duplicate or empty names, a hash
// that does not match the content, or (when `clusters` is given) dangling
// cluster ids.
Catalog catalog_from_json(std::string_view content,
                          const ClusterSet* clusters = nullptr);

// Throws when the catalog has no classes.
void export_classes(const MergeSession& session,
                    const std::filesystem::path& path);
Catalog import_classes(const std::filesystem::path& path,
                       const ClusterSet* clusters = nullptr);

std::string action_to_json_line(const MergeAction& action);
MergeAction action_from_json_line(std::string_view line);

// Append-only JSON-lines action log.
class ActionLog {
 public:
  explicit ActionLog(std::filesystem::path path) : path_(std::move(path)) {}

  // Reads every record; a malformed line raises kDataError naming the line.
  std::vector<MergeAction> read_all() const;
  // Appends one record and flushes it to stable storage before returning.
  void append(const MergeAction& action) const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace respclass

#endif  // RESPCLASS_RESPONSECLASSES_H_
