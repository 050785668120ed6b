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

#include "fixtures.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "diverlink/workflows.hpp"

namespace diverlink::test {

namespace {

std::filesystem::path root() {
  std::filesystem::path p(DIVERLINK_TEST_ARTIFACTS);
  std::filesystem::create_directories(p);
  return p;
}

bool fresh(const std::filesystem::path& artifact) {
  if (!std::filesystem::exists(artifact)) return false;
  std::error_code ec;
  const auto exe = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (ec) return true;
  return std::filesystem::last_write_time(artifact) >= std::filesystem::last_write_time(exe, ec);
}

// Writes through a temporary file so a concurrent reader never sees a partial artifact.
template <typename Save>
void publish(const std::filesystem::path& path, Save save) {
  const auto tmp = path.string() + ".tmp";
  save(tmp);
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = root() / "scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

const std::filesystem::path& head_templates() {
  static std::once_flag once;
  static const std::filesystem::path path = root() / "fixture-templates.json";
  std::call_once(once, [] {
    if (fresh(path)) return;
    HeadCorpusOptions o;
    o.per_class = 40;
    o.seed = 11;
    const auto t = train_head(to_labeled(gen_head_corpus(o)), SessionConfig{});
    publish(path, [&](const std::string& tmp) { t.templates.save(tmp); });
  });
  return path;
}

const std::filesystem::path& throat_model() {
  static std::once_flag once;
  static const std::filesystem::path path = root() / "fixture-model.json";
  std::call_once(once, [] {
    if (fresh(path)) return;
    ToneCorpusOptions o;
    o.seed = 13;
    SessionConfig cfg;
    const auto t = train_throat(to_labeled(gen_tone_corpus(o)), cfg);
    publish(path, [&](const std::string& tmp) { t.model.save(tmp); });
  });
  return path;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

SessionConfig trained_config() {
  SessionConfig cfg;
  cfg.templates_path = head_templates();
  cfg.model_path = throat_model();
  return cfg;
}

}  // namespace diverlink::test
