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

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "diverlink/config.hpp"
#include "diverlink/error.hpp"
#include "fixtures.hpp"

using namespace diverlink;

TEST_CASE("key/value text: comments, blanks and last-wins") {
  const auto kv = KeyValueConfig::parse("# header\n\nseed = 3\n  gains.K4=45 # trailing\nseed=9\n");
  CHECK(kv.entries().size() == 3);
  CHECK(kv.get("seed") == "9");
  CHECK(kv.get("gains.K4") == "45");
  CHECK(!kv.get("missing"));
  const SessionConfig c = SessionConfig::from(kv);
  CHECK(c.seed == 9);
  CHECK(c.gains.K4 == 45.0);
}

TEST_CASE("syntax and value errors carry the line number") {
  try {
    KeyValueConfig::parse("seed = 1\nno equals sign\n");
    FAIL("accepted a line without '='");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  for (const char* text : {"seed = 1\nunknown.key = 4\n", "seed = 1\ngains.K1 = fast\n", "seed = 1\nscheme = tactile\n",
                           "seed = 1\ngains.K2 = -3\n"}) {
    try {
      SessionConfig::from(KeyValueConfig::parse(text));
      FAIL("accepted: " << text);
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("every key applies and validation catches inconsistent values") {
  SessionConfig c;
  c.apply("scheme", "head");
  c.apply("mode.initial", "thruster");
  c.apply("pipeline.noise_reduction", "on");
  c.apply("telemetry.port", "0");
  c.apply("segmenter.imu.k_sigma", "4.5");
  CHECK(c.scheme == Scheme::Head);
  CHECK(c.initial_mode == ControlMode::ThrusterSpeed);
  CHECK(c.noise_reduction);
  CHECK(c.port == 0);
  CHECK(c.imu_segmenter.k_sigma == 4.5);
  CHECK_THROWS_AS(c.apply("telemetry.port", "70000"), ArgumentError);
  CHECK_THROWS_AS(c.apply("imu.decimation", "-1"), ArgumentError);
  c.validate();
  c.apply("imu.cutoff", "60");
  CHECK_THROWS_AS(c.validate(), ValidationError);
  SessionConfig d;
  d.apply("lstm.reject_confidence", "1.5");
  CHECK_THROWS_AS(d.validate(), ValidationError);
  CHECK(SessionConfig{}.classify_rate() == 100.0);
}

TEST_CASE("configuration reference documents every key") {
  std::ifstream f(std::string(DIVERLINK_SOURCE_DIR) + "/docs/configuration.md");
  REQUIRE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string doc = ss.str();
  for (const auto& key : SessionConfig::keys()) {
    INFO(key);
    CHECK(doc.find("`" + key + "`") != std::string::npos);
  }
}

TEST_CASE("load reports missing files as I/O errors") {
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/diverlink.conf"), IoError);
  const auto dir = test::scratch_dir("config");
  std::ofstream(dir / "a.conf") << "replay.speed = 2\n";
  CHECK(SessionConfig::from(KeyValueConfig::load(dir / "a.conf")).speed == 2.0);
}
