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

#include <chrono>
#include <thread>

#include "diverlink/error.hpp"
#include "diverlink/pipeline.hpp"
#include "diverlink/workflows.hpp"
#include "fixtures.hpp"

using namespace diverlink;

namespace {

ReplayInput input_of(const ScenarioData& sc) {
  ReplayInput in;
  in.imu = sc.imu;
  in.audio = sc.audio;
  return in;
}

ReplayResult run(Scheme scheme, const ReplayInput& in, SessionConfig cfg = test::trained_config(),
                 TelemetrySink* sink = nullptr) {
  Pipeline p(cfg, scheme, load_models(cfg, scheme), sink);
  return p.run(in);
}

void check_same_tokens(const ReplayResult& a, const ReplayResult& b) {
  REQUIRE(a.tokens.size() == b.tokens.size());
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    CHECK(a.tokens[i].token == b.tokens[i].token);
    CHECK(a.tokens[i].segment_end == b.tokens[i].segment_end);
    CHECK(a.tokens[i].emitted == b.tokens[i].emitted);
    CHECK(a.tokens[i].command == b.tokens[i].command);
  }
  CHECK(trace_csv(a.trace) == trace_csv(b.trace));
}

}  // namespace

TEST_CASE("scenario text round trips and reports errors by line") {
  const auto dir = test::scratch_dir("scenario-text");
  const std::string text =
      "# sample\nscheme multimodal\nimu imu.csv\naudio audio.wav 0.5\nexpect 3.0 (do,short,null)\n"
      "expect 5.25 (null,null,Flexion)\ninject (re,long,null) (so,long,null) 1\n";
  const Scenario sc = Scenario::parse(text, dir);
  CHECK(sc.scheme == Scheme::Multimodal);
  CHECK(sc.imu_path == dir / "imu.csv");
  CHECK(sc.audio_t0 == 0.5);
  REQUIRE(sc.expected.size() == 2);
  CHECK(sc.expected[1].token == ActionVector::motion(HeadMotionClass::Flexion));
  REQUIRE(sc.injections.size() == 1);
  CHECK(sc.injections[0].remaining == 1);
  const Scenario again = Scenario::parse(sc.to_text(dir), dir);
  CHECK(again.imu_path == sc.imu_path);
  CHECK(again.audio_path == sc.audio_path);
  CHECK(again.injections == sc.injections);
  CHECK_THROWS_AS(sc.check_files(), IoError);

  for (const char* bad : {"scheme head\nfly away\n", "scheme head\nscheme gesture\n", "scheme head\nexpect x (do,short,null)\n",
                          "scheme head\nexpect 1.0 (do,null,null)\n", "scheme head\nimu\n"}) {
    try {
      Scenario::parse(bad, dir);
      FAIL("accepted: " << bad);
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("head replay recognises all twelve actions within a second") {
  const ScenarioData sc = gen_head_scenario(1);
  const ReplayResult r = run(Scheme::Head, input_of(sc));
  const ReplaySummary s = summarize(r, sc.expected);
  CHECK(s.expected == 12);
  CHECK(s.correct == 12);
  CHECK(s.recognized == 12);
  CHECK(s.max_latency < 1.0);
  CHECK(s.max_latency >= 0.0);
  for (const auto& t : r.tokens) {
    REQUIRE(t.token.head);
    const auto [lo, hi] = peak_range(*t.token.head);
    CHECK(t.magnitude > 0.8 * lo);
    CHECK(t.magnitude < 1.1 * hi);
    CHECK(t.command == map_head_proportional(*t.token.head, t.magnitude, GainConfig{}));
  }
  CHECK(!r.stopped);
  CHECK(r.duration == doctest::Approx(sc.imu.back().t).epsilon(0.01));
}

TEST_CASE("throat replay maps tones through the scale table") {
  const ScenarioData sc = gen_throat_scenario(2);
  SessionConfig cfg = test::trained_config();
  cfg.gains.K4 = 45.0;
  const ReplayResult r = run(Scheme::Throat, input_of(sc), cfg);
  const ReplaySummary s = summarize(r, sc.expected);
  CHECK(s.correct == 6);
  CHECK(s.max_latency < 1.0);
  for (const auto& t : r.tokens) {
    CHECK(t.magnitude >= 0.0);
    CHECK(t.magnitude <= 1.0);
    if (t.token.scale == ScaleClass::Do || t.token.scale == ScaleClass::Re) {
      REQUIRE(t.command.servo_left);
      CHECK(std::abs(*t.command.servo_left) == doctest::Approx(45.0 * t.magnitude));
    }
  }
}

TEST_CASE("results depend on stream time only") {
  const ScenarioData sc = gen_multimodal_scenario(4);
  const ReplayInput in = input_of(sc);
  const ReplayResult fast = run(Scheme::Multimodal, in);
  SessionConfig paced = test::trained_config();
  paced.speed = 40.0;
  const auto t0 = std::chrono::steady_clock::now();
  const ReplayResult slow = run(Scheme::Multimodal, in, paced);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(wall >= 0.9 * sc.imu.back().t / 40.0);
  check_same_tokens(fast, slow);

  SessionConfig cfg = test::trained_config();
  cfg.queue_capacity = 1;
  Pipeline stalled(cfg, Scheme::Multimodal, load_models(cfg, Scheme::Multimodal));
  stalled.set_map_delay(std::chrono::milliseconds(40));
  check_same_tokens(fast, stalled.run(in));
}

TEST_CASE("multimodal injection toggles the mode instead of decelerating") {
  const ScenarioData sc = gen_multimodal_scenario(1);
  ReplayInput in = input_of(sc);
  in.injections.push_back(
      {ActionVector::throat(ScaleClass::Re, DurationClass::Long), ActionVector::throat(ScaleClass::So, DurationClass::Long), 1});
  const ReplayResult r = run(Scheme::Multimodal, in);
  std::size_t hit = r.tokens.size();
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    if (r.tokens[i].injected_from) hit = i;
  }
  REQUIRE(hit < r.tokens.size());
  REQUIRE(hit > 0);
  CHECK(r.tokens[hit].token.scale == ScaleClass::So);
  CHECK(r.tokens[hit].mode != r.tokens[hit - 1].mode);
  CHECK(r.tokens[hit].command.holds_everything());
  CHECK(!r.tokens[hit].command.speed_right);
  REQUIRE(hit + 1 < r.tokens.size());
  CHECK(!r.tokens[hit + 1].injected_from);
}

TEST_CASE("queued gain and mode changes apply from the next event") {
  const ScenarioData sc = gen_throat_scenario(2);
  SessionConfig cfg = test::trained_config();
  Pipeline p(cfg, Scheme::Throat, load_models(cfg, Scheme::Throat));
  p.set_gain("K4", 30.0);
  CHECK_THROWS_AS(p.set_gain("K4", 0.0), ArgumentError);
  CHECK_THROWS_AS(p.set_gain("Q", 1.0), ArgumentError);
  const ReplayResult r = p.run(input_of(sc));
  REQUIRE(!r.tokens.empty());
  const auto& first = r.tokens.front();
  REQUIRE(first.command.servo_left);
  CHECK(std::abs(*first.command.servo_left) == doctest::Approx(30.0 * first.magnitude));
  CHECK_THROWS_AS(p.run(input_of(sc)), ContractError);

  Pipeline m(cfg, Scheme::Multimodal, load_models(cfg, Scheme::Multimodal));
  m.set_mode(ControlMode::ThrusterSpeed);
  const ReplayResult rm = m.run(input_of(gen_multimodal_scenario(1)));
  REQUIRE(!rm.tokens.empty());
  // The scenario opens with head motions, which do nothing in thruster mode.
  CHECK(rm.tokens.front().mode == ControlMode::ThrusterSpeed);
  CHECK(rm.tokens.front().command.holds_everything());
}

TEST_CASE("stop request ends a paced run early") {
  const ScenarioData sc = gen_head_scenario(1);
  SessionConfig cfg = test::trained_config();
  cfg.speed = 1.0;
  Pipeline p(cfg, Scheme::Head, load_models(cfg, Scheme::Head));
  std::thread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    p.request_stop();
  });
  const auto t0 = std::chrono::steady_clock::now();
  const ReplayResult r = p.run(input_of(sc));
  stopper.join();
  CHECK(r.stopped);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
  CHECK(r.duration < 5.0);
}

TEST_CASE("models are required only for input that needs them") {
  SessionConfig cfg;
  Pipeline empty(cfg, Scheme::Multimodal, Models{});
  const ReplayResult r = empty.run(ReplayInput{});
  CHECK(r.tokens.empty());
  Pipeline missing(cfg, Scheme::Head, Models{});
  CHECK_THROWS_AS(missing.run(input_of(gen_head_scenario(1))), ValidationError);
  CHECK_THROWS_AS(load_models(cfg, Scheme::Head), ValidationError);
  cfg.templates_path = "/nonexistent/templates.json";
  CHECK_THROWS_AS(load_models(cfg, Scheme::Head), IoError);
}

TEST_CASE("summary pairs tokens with expectations inside the window") {
  ReplayResult r;
  TokenRecord a;
  a.token = ActionVector::motion(HeadMotionClass::Flexion);
  a.segment_end = 3.1;
  a.emitted = 3.3;
  TokenRecord b = a;
  b.token = ActionVector::motion(HeadMotionClass::Extension);
  b.segment_end = 9.0;
  b.emitted = 9.5;
  r.tokens = {a, b};
  const std::vector<ExpectedToken> expected{{3.0, a.token}, {6.0, b.token}};
  const ReplaySummary s = summarize(r, expected);
  CHECK(s.correct == 1);
  CHECK(s.recognized == 2);
  CHECK(s.max_latency == doctest::Approx(0.5));
  CHECK(s.mean_latency == doctest::Approx(0.35));
  CHECK(summarize(r, expected, 4.0).correct == 2);
  const std::string csv = tokens_csv(r.tokens);
  CHECK(csv.rfind("emitted,token,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
