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

#ifndef RESPCLASS_COMMON_H_
#define RESPCLASS_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace respclass {

using ResponseId = int32_t;

enum class ErrorKind {
  kInvalidArgument,
  kDataError,
  kFailedPrecondition,
  kUnavailable,  // retryable
  kConflict,
  kIo,
};

const char* error_kind_name(ErrorKind kind);

// All recoverable failures in the library surface as this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  bool retryable() const { return kind_ == ErrorKind::kUnavailable; }

 private:
  ErrorKind kind_;
};

enum class Speaker { kDoctor, kPatient };

const char* speaker_name(Speaker s);
// Throws kDataError on anything other than "doctor" / "patient".
Speaker parse_speaker(std::string_view name);

// 64-bit FNV-1a. Stable across platforms; used for content hashes.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(uint64_t value);
std::string content_hash(std::string_view data);

// Deterministic generator whose output depends only on the seed, unlike the
// distribution adaptors in <random> whose algorithms are unspecified.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::vector<std::string> split_whitespace(std::string_view text);
std::string join(std::span<const std::string> parts, std::string_view sep);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace respclass

#endif  // RESPCLASS_COMMON_H_
