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

#ifndef RESPCLASS_HTTP_CLIENT_H_
#define RESPCLASS_HTTP_CLIENT_H_

#include <chrono>
#include <string>

#include "json.hpp"

namespace respclass {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{100};
  std::chrono::seconds timeout{30};
};

// POSTs a JSON body to `base_url + path` and parses the JSON reply.
// Connection failures and 5xx replies are retried; after the last attempt a
// kUnavailable error is thrown. 4xx replies and unparsable bodies raise
// kDataError immediately.
nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body, const RetryPolicy& policy);

}  // namespace respclass

#endif  // RESPCLASS_HTTP_CLIENT_H_
