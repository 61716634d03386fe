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

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <set>
#include <sstream>

#include "json.hpp"

namespace respclass {
namespace {

using nlohmann::json;

json classes_json(const std::vector<ResponseClass>& classes) {
  json arr = json::array();
  for (const ResponseClass& c : classes) {
    arr.push_back({{"id", c.id},
                   {"name", c.name},
                   {"exemplar", c.exemplar_text},
                   {"cluster_ids", c.member_cluster_ids},
                   {"response_ids", c.member_response_ids}});
  }
  return arr;
}

template <typename T>
void insert_sorted(std::vector<T>& v, T value) {
  v.insert(std::upper_bound(v.begin(), v.end(), value), value);
}

template <typename T>
void erase_value(std::vector<T>& v, T value) {
  auto it = std::lower_bound(v.begin(), v.end(), value);
  if (it != v.end() && *it == value) v.erase(it);
}

std::string trimmed(std::string_view s) {
  return join(split_whitespace(s), " ");
}

}  // namespace

std::string Catalog::content_hash() const {
  return respclass::content_hash(classes_json(classes).dump());
}

std::string Catalog::structure_hash() const {
  json arr = json::array();
  for (const ResponseClass& c : classes) {
    arr.push_back({{"id", c.id},
                   {"cluster_ids", c.member_cluster_ids},
                   {"response_ids", c.member_response_ids}});
  }
  return respclass::content_hash(arr.dump());
}

const ResponseClass* Catalog::find(int32_t class_id) const {
  for (const ResponseClass& c : classes) {
    if (c.id == class_id) return &c;
  }
  return nullptr;
}

void Catalog::set_exemplar(int32_t class_id, std::string text) {
  if (trimmed(text).empty()) {
    throw Error(ErrorKind::kInvalidArgument, "exemplar text must be non-empty");
  }
  for (ResponseClass& c : classes) {
    if (c.id == class_id) {
      c.exemplar_text = std::move(text);
      return;
    }
  }
  throw Error(ErrorKind::kInvalidArgument,
              "no response class with id " + std::to_string(class_id));
}

const char* action_kind_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::kAssign:
      return "assign";
    case ActionKind::kCreate:
      return "create";
    case ActionKind::kSkip:
      return "skip";
    case ActionKind::kUndo:
      return "undo";
  }
  return "unknown";
}

ActionKind parse_action_kind(std::string_view name) {
  if (name == "assign") return ActionKind::kAssign;
  if (name == "create") return ActionKind::kCreate;
  if (name == "skip") return ActionKind::kSkip;
  if (name == "undo") return ActionKind::kUndo;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown action kind \"" + std::string(name) + "\"");
}

MergeSession::MergeSession(const ClusterSet& clusters, const ResponseTable& table,
                           size_t top_n) {
  if (clusters.clusters.empty()) {
    throw Error(ErrorKind::kFailedPrecondition,
                "cannot start a merge session without clusters");
  }
  if (top_n < 1) {
    throw Error(ErrorKind::kInvalidArgument, "top_n must be >= 1");
  }
  clusters_.reserve(clusters.size());
  for (const Cluster& c : clusters.clusters) {
    ClusterInfo info;
    info.total_count = c.total_count;
    info.member_ids = c.member_ids;
    if (static_cast<size_t>(c.centroid_id) < table.size()) {
      info.centroid_text = table[c.centroid_id].normalized_text;
      info.default_exemplar = table[c.centroid_id].most_frequent_variant();
    }
    if (info.default_exemplar.empty()) info.default_exemplar = info.centroid_text;
    std::vector<ResponseId> by_count = c.member_ids;
    std::stable_sort(by_count.begin(), by_count.end(),
                     [&](ResponseId a, ResponseId b) {
                       return table[a].count > table[b].count;
                     });
    for (ResponseId r : by_count)
      info.members.push_back({table[r].normalized_text, table[r].count});
    clusters_.push_back(std::move(info));
  }
  std::vector<int32_t> order(clusters.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int32_t>(i);
  std::stable_sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    return clusters_[a].total_count > clusters_[b].total_count;
  });
  order.resize(std::min(order.size(), top_n));
  queue_ = std::move(order);
}

std::optional<CentroidView> MergeSession::next_centroid() const {
  if (complete()) return std::nullopt;
  const int32_t id = queue_[cursor_];
  const ClusterInfo& info = clusters_[id];
  return CentroidView{id,          info.centroid_text, info.total_count,
                      info.members, cursor_,           queue_.size()};
}

void MergeSession::apply(MergeAction action) {
  if (action.kind == ActionKind::kUndo) {
    if (undo_stack_.empty()) {
      throw Error(ErrorKind::kFailedPrecondition, "nothing to undo");
    }
    undo_last();
    action.cluster_id = -1;
    log_.push_back(std::move(action));
    return;
  }
  if (complete()) {
    throw Error(ErrorKind::kFailedPrecondition, "merge session is complete");
  }
  const int32_t current = queue_[cursor_];
  if (action.cluster_id != current) {
    throw Error(ErrorKind::kConflict,
                "action targets cluster " + std::to_string(action.cluster_id) +
                    " but the session is at cluster " + std::to_string(current));
  }
  const ClusterInfo& info = clusters_[current];
  switch (action.kind) {
    case ActionKind::kAssign: {
      auto it = std::find_if(classes_.begin(), classes_.end(),
                             [&](const auto& c) { return c.id == action.class_id; });
      if (it == classes_.end()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "no response class with id " + std::to_string(action.class_id));
      }
      insert_sorted(it->member_cluster_ids, current);
      for (ResponseId r : info.member_ids) insert_sorted(it->member_response_ids, r);
      break;
    }
    case ActionKind::kCreate: {
      action.name = trimmed(action.name);
      if (action.name.empty()) {
        throw Error(ErrorKind::kInvalidArgument, "class name must be non-empty");
      }
      for (const ResponseClass& c : classes_) {
        if (c.name == action.name) {
          throw Error(ErrorKind::kInvalidArgument,
                      "a class named \"" + action.name + "\" already exists");
        }
      }
      if (trimmed(action.exemplar).empty()) action.exemplar = info.default_exemplar;
      ResponseClass rc;
      rc.id = static_cast<int32_t>(classes_.size());
      rc.name = action.name;
      rc.exemplar_text = action.exemplar;
      rc.member_cluster_ids = {current};
      rc.member_response_ids = info.member_ids;
      action.class_id = rc.id;
      classes_.push_back(std::move(rc));
      break;
    }
    case ActionKind::kSkip:
      ++skipped_;
      break;
    case ActionKind::kUndo:
      break;
  }
  ++cursor_;
  undo_stack_.push_back(log_.size());
  log_.push_back(std::move(action));
}

void MergeSession::undo_last() {
  const MergeAction& last = log_[undo_stack_.back()];
  undo_stack_.pop_back();
  switch (last.kind) {
    case ActionKind::kAssign: {
      for (ResponseClass& c : classes_) {
        if (c.id != last.class_id) continue;
        erase_value(c.member_cluster_ids, last.cluster_id);
        for (ResponseId r : clusters_[last.cluster_id].member_ids)
          erase_value(c.member_response_ids, r);
      }
      break;
    }
    case ActionKind::kCreate:
      classes_.pop_back();
      break;
    case ActionKind::kSkip:
      --skipped_;
      break;
    case ActionKind::kUndo:
      break;
  }
  --cursor_;
}

MergeSession MergeSession::replay(const std::vector<MergeAction>& log) const {
  MergeSession fresh = *this;
  fresh.cursor_ = 0;
  fresh.skipped_ = 0;
  fresh.classes_.clear();
  fresh.log_.clear();
  fresh.undo_stack_.clear();
  for (size_t i = 0; i < log.size(); ++i) {
    try {
      fresh.apply(log[i]);
    } catch (const Error& e) {
      throw Error(ErrorKind::kDataError, "action log entry " +
                                             std::to_string(i + 1) +
                                             " cannot be replayed: " + e.what());
    }
  }
  return fresh;
}

Catalog MergeSession::catalog() const { return Catalog{classes_}; }

bool MergeSession::same_state(const MergeSession& other) const {
  return cursor_ == other.cursor_ && skipped_ == other.skipped_ &&
         classes_ == other.classes_ && undo_stack_ == other.undo_stack_ &&
         queue_ == other.queue_ && log_ == other.log_;
}

std::string catalog_to_json(const Catalog& catalog) {
  json doc = {{"hash", catalog.content_hash()},
              {"classes", classes_json(catalog.classes)}};
  return doc.dump(1) + "\n";
}

Catalog catalog_from_json(std::string_view content, const ClusterSet* clusters) {
  Catalog catalog;
  std::string stated_hash;
  try {
    json doc = json::parse(content);
    stated_hash = doc.at("hash").get<std::string>();
    for (const json& entry : doc.at("classes")) {
      ResponseClass c;
      c.id = entry.at("id").get<int32_t>();
      c.name = entry.at("name").get<std::string>();
      c.exemplar_text = entry.at("exemplar").get<std::string>();
      c.member_cluster_ids = entry.at("cluster_ids").get<std::vector<int32_t>>();
      c.member_response_ids = entry.at("response_ids").get<std::vector<ResponseId>>();
      catalog.classes.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataError,
                std::string("catalog schema violation: ") + e.what());
  }
  std::set<std::string> names;
  std::set<int32_t> ids, cluster_ids;
  for (ResponseClass& c : catalog.classes) {
    if (trimmed(c.name).empty() || trimmed(c.exemplar_text).empty()) {
      throw Error(ErrorKind::kDataError,
                  "catalog class " + std::to_string(c.id) +
                      " has an empty name or exemplar");
    }
    if (!names.insert(c.name).second) {
      throw Error(ErrorKind::kDataError,
                  "duplicate class name \"" + c.name + "\" in catalog");
    }
    if (!ids.insert(c.id).second) {
      throw Error(ErrorKind::kDataError,
                  "duplicate class id " + std::to_string(c.id) + " in catalog");
    }
    std::sort(c.member_cluster_ids.begin(), c.member_cluster_ids.end());
    std::sort(c.member_response_ids.begin(), c.member_response_ids.end());
    for (int32_t cid : c.member_cluster_ids) {
      if (!cluster_ids.insert(cid).second) {
        throw Error(ErrorKind::kDataError, "cluster " + std::to_string(cid) +
                                               " belongs to two classes");
      }
      if (clusters != nullptr &&
          (cid < 0 || static_cast<size_t>(cid) >= clusters->size())) {
        throw Error(ErrorKind::kDataError,
                    "catalog references unknown cluster " + std::to_string(cid));
      }
    }
  }
  if (catalog.content_hash() != stated_hash) {
    throw Error(ErrorKind::kDataError,
                "catalog hash mismatch (file edited or corrupt)");
  }
  return catalog;
}

void export_classes(const MergeSession& session,
                    const std::filesystem::path& path) {
  Catalog catalog = session.catalog();
  if (catalog.classes.empty()) {
    throw Error(ErrorKind::kFailedPrecondition,
                "cannot export a catalog with zero classes");
  }
  write_file_atomic(path, catalog_to_json(catalog));
}

Catalog import_classes(const std::filesystem::path& path,
                       const ClusterSet* clusters) {
  return catalog_from_json(read_file(path), clusters);
}

std::string action_to_json_line(const MergeAction& action) {
  json j = {{"kind", action_kind_name(action.kind)},
            {"timestamp", action.timestamp},
            {"actor", action.actor}};
  if (action.kind != ActionKind::kUndo) j["cluster_id"] = action.cluster_id;
  if (action.kind == ActionKind::kAssign || action.kind == ActionKind::kCreate)
    j["class_id"] = action.class_id;
  if (action.kind == ActionKind::kCreate) {
    j["name"] = action.name;
    j["exemplar"] = action.exemplar;
  }
  return j.dump();
}

MergeAction action_from_json_line(std::string_view line) {
  MergeAction a;
  try {
    json j = json::parse(line);
    a.kind = parse_action_kind(j.at("kind").get<std::string>());
    a.timestamp = j.value("timestamp", "");
    a.actor = j.value("actor", "");
    a.cluster_id = j.value("cluster_id", -1);
    a.class_id = j.value("class_id", -1);
    a.name = j.value("name", "");
    a.exemplar = j.value("exemplar", "");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataError,
                std::string("malformed action record: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::kDataError, e.what());
  }
  return a;
}

std::vector<MergeAction> ActionLog::read_all() const {
  std::vector<MergeAction> out;
  if (!std::filesystem::exists(path_)) return out;
  const std::string content = read_file(path_);
  if (!content.empty() && content.back() != '\n') {
    throw Error(ErrorKind::kDataError,
                path_.string() + ": truncated final record (missing newline)");
  }
  std::istringstream in(content);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(action_from_json_line(line));
    } catch (const Error& e) {
      throw Error(ErrorKind::kDataError, path_.string() + " line " +
                                             std::to_string(line_no) + ": " +
                                             e.what());
    }
  }
  return out;
}

void ActionLog::append(const MergeAction& action) const {
  if (path_.has_parent_path())
    std::filesystem::create_directories(path_.parent_path());
  const std::string record = action_to_json_line(action) + "\n";
  const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) {
    throw Error(ErrorKind::kIo,
                "cannot open " + path_.string() + ": " + std::strerror(errno));
  }
  size_t written = 0;
  while (written < record.size()) {
    const ssize_t n = ::write(fd, record.data() + written, record.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error(ErrorKind::kIo,
                  "write to " + path_.string() + " failed: " + std::strerror(err));
    }
    written += static_cast<size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorKind::kIo, "fsync of " + path_.string() + " failed");
}

}  // namespace respclass
