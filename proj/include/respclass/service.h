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

#ifndef RESPCLASS_SERVICE_H_
#define RESPCLASS_SERVICE_H_

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "respclass/classifier.h"
#include "respclass/responseclasses.h"

namespace httplib {
class Server;
}

namespace respclass {

struct ServiceOptions {
  std::filesystem::path static_dir;  // UI bundle; optional
  std::string default_actor = "labeler";
  PlaceholderSet placeholders;  // applied to suggestion contexts
};

// Hosts the merge-session workflow and the suggestion endpoint.
//
// Every mutation is validated on a copy of the session, appended to the
// action log and flushed, and only then becomes visible and acknowledged.
// Clients carry the cursor token (the number of logged actions) from their
// last read; a mutation with a stale token is answered with 409.
class MergeService {
 public:
  // Replays the existing action log on top of `base`. A corrupt log, or a
  // model whose catalog hash disagrees with `catalog`, refuses to start.
  MergeService(MergeSession base, std::filesystem::path action_log,
               std::optional<SoftmaxModel> model, std::optional<Catalog> catalog,
               ServiceOptions options = {});
  ~MergeService();

  MergeService(const MergeService&) = delete;
  MergeService& operator=(const MergeService&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port;
  // returns the bound port.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

  // Snapshot accessors for tests and the CLI.
  MergeSession session_snapshot() const;
  size_t cursor_token() const;

 private:
  void install_routes();

  mutable std::shared_mutex mu_;
  MergeSession session_;
  ActionLog log_;
  std::optional<SoftmaxModel> model_;
  std::optional<Catalog> catalog_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace respclass

#endif  // RESPCLASS_SERVICE_H_
