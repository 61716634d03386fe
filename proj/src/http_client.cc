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

#include "respclass/http_client.h"

#include <algorithm>
#include <thread>

#include "httplib.h"
#include "respclass/common.h"

namespace respclass {

nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body, const RetryPolicy& policy) {
  httplib::Client client(base_url);
  client.set_connection_timeout(policy.timeout);
  client.set_read_timeout(policy.timeout);
  client.set_write_timeout(policy.timeout);
  const std::string payload = body.dump();
  std::string last_failure = "no attempt made";
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(policy.backoff * attempt);
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorKind::kDataError, base_url + path + " replied HTTP " +
                                             std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kDataError,
                  base_url + path + " returned invalid JSON: " + e.what());
    }
  }
  throw Error(ErrorKind::kUnavailable, base_url + path + " unreachable after " +
                                           std::to_string(attempts) +
                                           " attempts: " + last_failure);
}

}  // namespace respclass
