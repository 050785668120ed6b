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
#include <numbers>
#include <random>

#include "diverlink/error.hpp"
#include "diverlink/preprocess.hpp"
#include "diverlink/synthgen.hpp"

using namespace diverlink;

namespace {

double steady_gain(double freq, double cutoff, double rate) {
  std::vector<double> x;
  for (int i = 0; i < 4000; ++i) x.push_back(std::sin(2.0 * std::numbers::pi * freq * i / rate));
  const auto y = low_pass(x, cutoff, rate);
  double peak = 0.0;
  for (std::size_t i = 3000; i < y.size(); ++i) peak = std::max(peak, std::abs(y[i]));
  return peak;
}

double snr_db(const std::vector<double>& clean, const std::vector<double>& test, std::size_t from, std::size_t to) {
  double s = 0.0;
  double n = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    s += clean[i] * clean[i];
    n += (test[i] - clean[i]) * (test[i] - clean[i]);
  }
  return 10.0 * std::log10(s / n);
}

}  // namespace

TEST_CASE("low-pass: unity DC gain, -3 dB at cutoff, strong stopband") {
  const std::vector<double> dc(200, 3.25);
  for (double v : low_pass(dc, 5.0, 100.0)) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(steady_gain(5.0, 5.0, 100.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));
  CHECK(steady_gain(0.5, 5.0, 100.0) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(steady_gain(40.0, 5.0, 100.0) < 0.03);
  CHECK_THROWS_AS(low_pass(dc, 60.0, 100.0), ArgumentError);
}

TEST_CASE("one synthetic bend amid rest yields exactly one segment covering the ramp") {
  SynthMotionSpec spec;
  spec.cls = HeadMotionClass::BendLeft;
  spec.peak_deg = 40.0;
  spec.duration_s = 1.0;
  spec.rate_hz = 100.0;
  spec.rest_before_s = 1.5;
  spec.rest_after_s = 1.5;
  spec.noise_std_deg = 0.2;
  spec.seed = 3;
  const auto stream = gen_head_motion(spec);
  const auto segs = detect_endpoints_imu(stream, SegmenterConfig::imu_defaults());
  REQUIRE(segs.size() == 1);
  const std::size_t ramp_a = 150;
  const std::size_t ramp_b = 250;
  const std::size_t lo = std::max(ramp_a, segs[0].start_idx);
  const std::size_t hi = std::min(ramp_b, segs[0].end_idx);
  const double covered = hi > lo ? static_cast<double>(hi - lo) / static_cast<double>(ramp_b - ramp_a) : 0.0;
  CHECK(covered >= 0.9);
  CHECK(segs[0].samples.size() == segs[0].end_idx - segs[0].start_idx);
}

TEST_CASE("rest only produces no segment") {
  SynthMotionSpec spec;
  spec.peak_deg = 0.0;
  spec.noise_std_deg = 0.5;
  spec.rest_before_s = 2.0;
  spec.rest_after_s = 2.0;
  const auto stream = gen_head_motion(spec);
  CHECK(detect_endpoints_imu(stream, SegmenterConfig::imu_defaults()).empty());
}

TEST_CASE("streaming IMU detection matches regardless of how samples arrive") {
  std::vector<MotionEvent> events = {{1.0, HeadMotionClass::Flexion, 47.0, 1.0},
                                     {3.5, HeadMotionClass::RotateLeft, 70.0, 1.0}};
  // Unfiltered 100 Hz input: differentiated angle noise dominates the energy
  // above about 0.2 deg, so keep it small enough that each nod is one segment.
  const auto stream = gen_motion_stream(events, 6.0, 100.0, 0.1, 0.05, 9);
  const auto batch = detect_endpoints_imu(stream, SegmenterConfig::imu_defaults());
  ImuEndpointDetector det(SegmenterConfig::imu_defaults(), 100.0, 0.0);
  std::vector<MotionSegment> online;
  for (const auto& s : stream) {
    if (auto seg = det.push(s)) online.push_back(*seg);
  }
  if (auto seg = det.flush()) online.push_back(*seg);
  REQUIRE(batch.size() == 2);
  REQUIRE(online.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(online[i].start_idx == batch[i].start_idx);
    CHECK(online[i].end_idx == batch[i].end_idx);
    CHECK(online[i].samples == batch[i].samples);
  }
}

TEST_CASE("audio endpoints: one fragment per tone, block size does not matter") {
  std::vector<ToneEvent> events = {{0.8, ScaleClass::Do, 0.3, 0.8}, {2.0, ScaleClass::Mi, 0.8, 0.6}};
  const auto audio = gen_tone_stream(events, 3.5, 16000, 25.0, 4);
  const auto cfg = SegmenterConfig::audio_defaults();
  const auto batch = detect_endpoints_audio(audio, cfg);
  REQUIRE(batch.size() == 2);
  CHECK(batch[0].t0 == doctest::Approx(0.8).epsilon(0.1));
  CHECK(batch[0].duration() == doctest::Approx(0.3).epsilon(0.2));
  CHECK(batch[1].duration() == doctest::Approx(0.8).epsilon(0.1));

  for (std::size_t block : {1u, 100u, 333u, 4096u}) {
    AudioEndpointDetector det(cfg, 16000, audio.t0);
    std::vector<AudioSegment> frags;
    for (std::size_t i = 0; i < audio.samples.size(); i += block) {
      const std::size_t n = std::min(block, audio.samples.size() - i);
      for (auto& f : det.push(std::span<const std::int16_t>(audio.samples.data() + i, n))) frags.push_back(f);
    }
    for (auto& f : det.flush()) frags.push_back(f);
    REQUIRE(frags.size() == batch.size());
    for (std::size_t k = 0; k < frags.size(); ++k) {
      CHECK(frags[k].t0 == doctest::Approx(batch[k].t0));
      CHECK(frags[k].samples == batch[k].samples);
    }
  }
}

TEST_CASE("silent tone produces no audio endpoint") {
  SynthToneSpec spec;
  spec.amplitude = 0.0;
  spec.rest_before_s = 0.5;
  spec.rest_after_s = 0.5;
  spec.snr_db = 40.0;
  const auto audio = gen_scale_tone(spec);
  CHECK(detect_endpoints_audio(audio, SegmenterConfig::audio_defaults()).empty());
}

TEST_CASE("segments shorter than min_seg are dropped") {
  SegmenterConfig cfg = SegmenterConfig::imu_defaults();
  cfg.min_threshold = 1.0;
  OnlineSegmenter seg(cfg, 100.0);
  std::vector<double> e(300, 0.0);
  for (int i = 100; i < 105; ++i) e[static_cast<std::size_t>(i)] = 100.0;  // 50 ms blip
  std::size_t found = 0;
  for (double v : e) found += seg.push(v).has_value();
  found += seg.flush().has_value();
  CHECK(found == 0);
}

TEST_CASE("short-time energy and zero-crossing rate") {
  std::vector<std::int16_t> x(1000, 100);
  const auto env = short_time_energy(x, 200, 100);
  CHECK(env.values.size() == 9);
  for (double v : env.values) CHECK(v == doctest::Approx(10000.0));
  std::vector<std::int16_t> alt(100);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2) ? 1000 : -1000;
  CHECK(zero_crossing_rate(alt) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(zero_crossing_rate(x) == doctest::Approx(0.0));
}

TEST_CASE("spectral subtraction improves SNR by at least 3 dB") {
  SynthToneSpec spec;
  spec.scale = ScaleClass::Re;
  spec.duration_s = 1.0;
  spec.amplitude = 0.5;
  spec.rest_before_s = 0.6;
  const AudioSegment clean = gen_scale_tone(spec);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 2500.0);
  AudioSegment noisy = clean;
  std::vector<double> c(clean.samples.begin(), clean.samples.end());
  for (auto& s : noisy.samples) s = static_cast<std::int16_t>(std::clamp(s + noise(rng), -32768.0, 32767.0));
  const NoiseProfile profile = estimate_noise_profile(noisy, 0.5);
  const AudioSegment out = noise_reduce(noisy, profile);
  REQUIRE(out.samples.size() == noisy.samples.size());
  std::vector<double> n(noisy.samples.begin(), noisy.samples.end());
  std::vector<double> o(out.samples.begin(), out.samples.end());
  const std::size_t a = static_cast<std::size_t>(0.7 * 16000);
  const std::size_t b = static_cast<std::size_t>(1.5 * 16000);
  const double before = snr_db(c, n, a, b);
  const double after = snr_db(c, o, a, b);
  MESSAGE("SNR before " << before << " dB, after " << after << " dB");
  CHECK(after - before >= 3.0);
}

TEST_CASE("amplitude tracker reads a full-scale sine as 1") {
  AmplitudeTracker full(16000.0);
  AmplitudeTracker half(16000.0);
  for (int i = 0; i < 4000; ++i) {
    const double v = std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0);
    full.push(static_cast<std::int16_t>(std::lround(32767.0 * v)));
    half.push(static_cast<std::int16_t>(std::lround(16383.0 * v)));
  }
  CHECK(full.window() == 1024);
  CHECK(full.amplitude() == doctest::Approx(1.0).epsilon(0.01));
  CHECK(half.amplitude() == doctest::Approx(0.5).epsilon(0.01));
}
