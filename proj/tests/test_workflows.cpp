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

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "diverlink/error.hpp"
#include "diverlink/workflows.hpp"
#include "fixtures.hpp"

using namespace diverlink;

TEST_CASE("stratified split is per class, disjoint, sorted and seeded") {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c) {
    for (int k = 0; k < 10 + c; ++k) labels.push_back(c);
  }
  const Split s = stratified_split(labels, 0.7, 3);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(std::is_sorted(s.test.begin(), s.test.end()));
  CHECK(s.train.size() + s.test.size() == labels.size());
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == labels.size());
  std::map<int, int> per_class;
  for (auto i : s.train) ++per_class[labels[i]];
  for (int c = 0; c < 4; ++c) CHECK(per_class[c] == static_cast<int>(std::lround(0.7 * (10 + c))));
  const Split again = stratified_split(labels, 0.7, 3);
  CHECK(again.train == s.train);
  CHECK(stratified_split(labels, 0.7, 4).train != s.train);
}

TEST_CASE("head features accept the raw or the classification rate only") {
  const SessionConfig cfg;
  SynthMotionSpec spec;
  spec.cls = HeadMotionClass::BendLeft;
  spec.peak_deg = 40.0;
  spec.rate_hz = 100.0;
  const Series a = head_features(gen_head_motion(spec), cfg);
  spec.rate_hz = 500.0;
  const Series b = head_features(gen_head_motion(spec), cfg);
  CHECK(a.channels() == 6);
  CHECK(b.channels() == 6);
  CHECK(std::abs(static_cast<double>(a.frames()) - static_cast<double>(b.frames())) <= 3.0);
  // The segment holds the motion, not the whole 2.5 s recording.
  CHECK(a.frames() < 200);
  spec.rate_hz = 240.0;
  CHECK_THROWS_AS(head_features(gen_head_motion(spec), cfg), ValidationError);
}

TEST_CASE("head training reports held-out accuracy and rejects missing classes") {
  HeadCorpusOptions o;
  o.per_class = 16;
  o.seed = 21;
  auto corpus = to_labeled(gen_head_corpus(o));
  const HeadTraining t = train_head(corpus, SessionConfig{});
  CHECK(t.train_count == 48);
  CHECK(t.test_count == 48);
  CHECK(t.confusion.total() == 48);
  CHECK(t.confusion.accuracy() >= 0.9);
  CHECK(eval_head(corpus, t.templates, SessionConfig{}).accuracy() >= 0.9);

  std::erase_if(corpus, [](const LabeledImu& x) { return x.cls == HeadMotionClass::RotateRight; });
  CHECK_THROWS_WITH_AS(train_head(corpus, SessionConfig{}), doctest::Contains("RotateRight"), TrainingError);
}

TEST_CASE("throat fragment trims the surrounding silence") {
  SynthToneSpec t;
  t.duration_s = 0.4;
  t.rest_before_s = 0.5;
  t.rest_after_s = 0.5;
  t.snr_db = 30.0;
  const AudioSegment audio = gen_scale_tone(t);
  const AudioSegment frag = throat_fragment(audio, SessionConfig{});
  CHECK(frag.duration() == doctest::Approx(0.4).epsilon(0.25));
  CHECK(frag.t0 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("synthesize writes corpora and scenarios") {
  const auto dir = test::scratch_dir("workflow-synth");
  SynthRequest h;
  h.kind = SynthKind::HeadCorpus;
  h.out = dir / "head";
  h.per_class = 3;
  h.max_noise_deg = 0.5;
  const auto hm = synthesize(h);
  CHECK(hm.filename() == "manifest.csv");
  CHECK(load_head_corpus(Manifest::read(hm)).size() == 18);
  CHECK_THROWS_AS(load_tone_corpus(Manifest::read(hm)), ValidationError);

  SynthRequest s;
  s.kind = SynthKind::Scenario;
  s.out = dir / "scenario";
  s.scheme = Scheme::Throat;
  s.injections.push_back({ActionVector::throat(ScaleClass::Do, DurationClass::Short),
                          ActionVector::throat(ScaleClass::Re, DurationClass::Short), 2});
  const auto sp = synthesize(s);
  const Scenario sc = Scenario::load(sp);
  CHECK(sc.scheme == Scheme::Throat);
  CHECK(sc.audio_path);
  CHECK(!sc.imu_path);
  CHECK(sc.injections.size() == 1);
  CHECK(synthesize(s) == sp);
  CHECK(test::read_file(sp) == sc.to_text(sp.parent_path()));
}

TEST_CASE("replay writes its artifacts and honours scheme precedence") {
  const auto dir = test::scratch_dir("workflow-replay");
  const auto scenario = write_scenario(dir / "in", gen_head_scenario(2));
  const SessionConfig cfg = test::trained_config();
  const ReplayOutcome out = replay_scenario(scenario, cfg, std::nullopt, dir / "out");
  CHECK(out.scheme == Scheme::Head);
  CHECK(out.summary.correct == 12);
  for (const char* f : {"trace.csv", "tokens.csv", "summary.json"}) CHECK(std::filesystem::exists(dir / "out" / f));
  const auto summary = nlohmann::json::parse(test::read_file(dir / "out" / "summary.json"));
  CHECK(summary["correct"] == 12);
  CHECK(test::read_file(dir / "out" / "trace.csv") == trace_csv(out.result.trace));

  // Forcing the throat scheme ignores the IMU stream entirely.
  const ReplayOutcome forced = replay_scenario(scenario, cfg, Scheme::Throat);
  CHECK(forced.scheme == Scheme::Throat);
  CHECK(forced.result.tokens.empty());
  CHECK_THROWS_AS(replay_scenario(dir / "none.txt", cfg, std::nullopt), IoError);
}
