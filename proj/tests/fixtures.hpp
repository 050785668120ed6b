// Copyright 2026 The Diverlink Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared test helpers: scratch directories and small trained models that are
// built once and cached under the build tree.

#ifndef DIVERLINK_TESTS_FIXTURES_HPP
#define DIVERLINK_TESTS_FIXTURES_HPP

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "diverlink/config.hpp"
#include "diverlink/pipeline.hpp"

namespace diverlink::test {

// Fresh, empty directory under the test artifact root.
std::filesystem::path scratch_dir(const std::string& name);

// Templates from a 6 x 40 synthetic corpus. Rebuilt when older than the
// running test binary.
const std::filesystem::path& head_templates();
// LSTM from a 5 x 60 synthetic tone corpus, 20 epochs.
const std::filesystem::path& throat_model();

// Defaults plus both artifact paths.
SessionConfig trained_config();

// Thread-safe sink that keeps every message.
class CollectingSink final : public TelemetrySink {
 public:
  void publish(std::string message) override {
    std::lock_guard<std::mutex> lock(mu_);
    messages_.push_back(std::move(message));
  }
  std::vector<std::string> messages() const {
    std::lock_guard<std::mutex> lock(mu_);
    return messages_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> messages_;
};

// Reads a file into a string; empty when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace diverlink::test

#endif  // DIVERLINK_TESTS_FIXTURES_HPP
