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

#include <cmath>
#include <map>

#include "diverlink/error.hpp"
#include "diverlink/synthgen.hpp"
#include "fixtures.hpp"

using namespace diverlink;

namespace {

double rms(const std::vector<std::int16_t>& v, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += static_cast<double>(v[i]) * v[i];
  return std::sqrt(s / static_cast<double>(to - from));
}

}  // namespace

TEST_CASE("noiseless motion peaks at the requested angle on its governing channel") {
  for (HeadMotionClass c : kHeadMotionClasses) {
    SynthMotionSpec spec;
    spec.cls = c;
    spec.peak_deg = 42.0;
    const auto s = gen_head_motion(spec);
    CHECK(s.size() == 251);  // 2.5 s at 100 Hz, both ends sampled
    const int ch = governing_channel(c);
    double peak = 0.0;
    double other = 0.0;
    for (const auto& x : s) {
      if (std::abs(x.euler[static_cast<std::size_t>(ch)]) > std::abs(peak)) peak = x.euler[static_cast<std::size_t>(ch)];
      for (int k = 0; k < 3; ++k) {
        if (k != ch) other = std::max(other, std::abs(x.euler[static_cast<std::size_t>(k)]));
      }
    }
    CHECK(peak == doctest::Approx(excursion_sign(c) * 42.0).epsilon(1e-12));
    CHECK(other == 0.0);
    // At rest the accelerometer reads gravity.
    CHECK(s.front().accel[2] == doctest::Approx(kGravity));
  }
}

TEST_CASE("generators are deterministic under a fixed seed") {
  SynthMotionSpec m;
  m.noise_std_deg = 1.5;
  m.accel_noise = 0.1;
  m.seed = 3;
  CHECK(gen_head_motion(m) == gen_head_motion(m));
  SynthMotionSpec m2 = m;
  m2.seed = 4;
  CHECK(!(gen_head_motion(m) == gen_head_motion(m2)));

  SynthToneSpec t;
  t.snr_db = 20.0;
  t.seed = 9;
  CHECK(gen_scale_tone(t).samples == gen_scale_tone(t).samples);
  CHECK(gen_head_scenario(5).imu == gen_head_scenario(5).imu);
}

TEST_CASE("tone length, level and noise follow the spec") {
  SynthToneSpec t;
  t.duration_s = 0.5;
  t.rest_before_s = 0.25;
  t.amplitude = 0.5;
  const AudioSegment clean = gen_scale_tone(t);
  CHECK(clean.samples.size() == 12000);
  CHECK(rms(clean.samples, 0, 4000) == 0.0);
  int peak = 0;
  for (auto v : clean.samples) peak = std::max(peak, std::abs(static_cast<int>(v)));
  CHECK(peak <= 16384);
  CHECK(peak > 10000);

  t.snr_db = 20.0;
  const AudioSegment noisy = gen_scale_tone(t);
  std::vector<std::int16_t> diff(noisy.samples.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = static_cast<std::int16_t>(noisy.samples[i] - clean.samples[i]);
  const double snr = 20.0 * std::log10(rms(clean.samples, 5000, 11000) / rms(diff, 0, diff.size()));
  CHECK(snr == doctest::Approx(20.0).epsilon(0.05));
  CHECK_THROWS_AS(gen_scale_tone(SynthToneSpec{.amplitude = 1.5}), ArgumentError);
}

TEST_CASE("scale frequencies ascend through the major scale") {
  CHECK(scale_frequency(ScaleClass::Do) == doctest::Approx(261.63));
  for (std::size_t k = 1; k < kScaleClasses.size(); ++k) {
    CHECK(scale_frequency(kScaleClasses[k]) > scale_frequency(kScaleClasses[k - 1]));
  }
}

TEST_CASE("head corpus draws peaks from the class ranges") {
  HeadCorpusOptions o;
  o.per_class = 10;
  const auto items = gen_head_corpus(o);
  REQUIRE(items.size() == 60);
  std::map<HeadMotionClass, int> counts;
  for (const auto& it : items) {
    ++counts[it.cls];
    const auto [lo, hi] = peak_range(it.cls);
    CHECK(it.spec.peak_deg >= lo);
    CHECK(it.spec.peak_deg <= hi);
    CHECK(it.spec.noise_std_deg <= o.max_noise_deg);
    CHECK(it.spec.duration_s >= o.min_duration_s);
    CHECK(it.spec.duration_s <= o.max_duration_s);
  }
  for (HeadMotionClass c : kHeadMotionClasses) CHECK(counts[c] == 10);
}

TEST_CASE("corpora round trip through manifest files") {
  const auto dir = test::scratch_dir("synth-corpus");
  HeadCorpusOptions ho;
  ho.per_class = 2;
  const auto head = gen_head_corpus(ho);
  const Manifest hm = write_head_corpus(dir / "head", head);
  const Manifest hr = Manifest::read(dir / "head" / "manifest.csv");
  CHECK(hr.entries == hm.entries);
  REQUIRE(hr.entries.size() == 12);
  CHECK(hr.entries.front().kind == "imu");
  CHECK(read_imu_csv(hr.resolve(hr.entries.front())).size() == head.front().samples.size());

  ToneCorpusOptions to;
  to.per_class = 2;
  const auto tones = gen_tone_corpus(to);
  const Manifest tm = write_tone_corpus(dir / "tone", tones);
  const Manifest tr = Manifest::read(dir / "tone" / "manifest.csv");
  CHECK(tr.entries == tm.entries);
  REQUIRE(tr.entries.size() == 10);
  CHECK(read_wav(tr.resolve(tr.entries.back())).samples == tones.back().audio.samples);
  CHECK_THROWS_AS(Manifest::read(dir / "missing.csv"), IoError);
}

TEST_CASE("head scenario holds four actions per rotational degree of freedom") {
  const ScenarioData sc = gen_head_scenario(1);
  CHECK(sc.scheme == "head");
  REQUIRE(sc.expected.size() == 12);
  std::map<int, int> per_dof;
  for (const auto& e : sc.expected) {
    REQUIRE(e.token.head);
    ++per_dof[governing_channel(*e.token.head)];
  }
  CHECK(per_dof[0] == 4);
  CHECK(per_dof[1] == 4);
  CHECK(per_dof[2] == 4);
  CHECK(sc.imu.size() > 1000);
  CHECK(sc.imu[1].t - sc.imu[0].t == doctest::Approx(1.0 / 500.0));
}

TEST_CASE("throat and multimodal scenarios carry audio and switch tokens") {
  const ScenarioData th = gen_throat_scenario(1);
  REQUIRE(th.audio);
  CHECK(th.expected.size() == 6);
  for (const auto& e : th.expected) CHECK(e.token.scale != ScaleClass::So);

  const ScenarioData mm = gen_multimodal_scenario(1);
  REQUIRE(mm.audio);
  CHECK(!mm.imu.empty());
  int so = 0;
  for (const auto& e : mm.expected) so += e.token.scale == ScaleClass::So ? 1 : 0;
  CHECK(so >= 2);
}
