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
#include <cstring>

#include "diverlink/error.hpp"
#include "diverlink/signal_io.hpp"
#include "fixtures.hpp"

using namespace diverlink;

TEST_CASE("normalize_degrees wraps onto [-180, 180]") {
  CHECK(normalize_degrees(0.0) == doctest::Approx(0.0));
  CHECK(normalize_degrees(190.0) == doctest::Approx(-170.0));
  CHECK(normalize_degrees(-190.0) == doctest::Approx(170.0));
  CHECK(normalize_degrees(720.0 + 45.0) == doctest::Approx(45.0));
  for (double d = -1000.0; d < 1000.0; d += 7.3) {
    const double n = normalize_degrees(d);
    CHECK(n >= -180.0);
    CHECK(n <= 180.0);
  }
}

TEST_CASE("IMU CSV round trip") {
  std::vector<ImuSample> in;
  for (int i = 0; i < 50; ++i) {
    ImuSample s;
    s.t = 0.01 * i;
    s.accel = {0.1 * i, -0.2 * i, 9.80665};
    s.euler = {1.5 * i, -0.25 * i, 0.125 * i};
    in.push_back(s);
  }
  const auto dir = test::scratch_dir("signal_io_csv");
  write_imu_csv(dir / "a.csv", in);
  const auto out = read_imu_csv(dir / "a.csv");
  REQUIRE(out.size() == in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(out[i].t == doctest::Approx(in[i].t).epsilon(1e-12));
    for (int c = 0; c < 3; ++c) {
      CHECK(out[i].accel[c] == doctest::Approx(in[i].accel[c]).epsilon(1e-12));
      CHECK(out[i].euler[c] == doctest::Approx(in[i].euler[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("IMU CSV parse errors carry the line number") {
  CHECK_THROWS_AS(parse_imu_csv(""), ParseError);
  CHECK_THROWS_AS(parse_imu_csv("t,x\n"), ParseError);
  try {
    parse_imu_csv("t,ax,ay,az,roll,pitch,yaw\n0,0,0,0,0,0,0\n0.1,0,0,abc,0,0,0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_imu_csv("t,ax,ay,az,roll,pitch,yaw\n0,0,0,0,0,0\n"), ParseError);
  CHECK_THROWS_AS(parse_imu_csv("t,ax,ay,az,roll,pitch,yaw\n0,0,0,0,0,0,0,0\n"), ParseError);
}

TEST_CASE("non-monotonic timestamps are rejected") {
  std::vector<ImuSample> s(3);
  s[0].t = 0.0;
  s[1].t = 0.01;
  s[2].t = 0.01;
  CHECK_THROWS_AS(validate_monotonic(s), ValidationError);
  s[2].t = 0.02;
  CHECK_NOTHROW(validate_monotonic(s));
}

TEST_CASE("WAV round trip preserves samples and rate") {
  AudioSegment a;
  a.sample_rate = 16000;
  for (int i = 0; i < 1000; ++i) a.samples.push_back(static_cast<std::int16_t>((i * 37) % 65536 - 32768));
  const auto bytes = encode_wav(a);
  CHECK(bytes.size() == 44 + 2 * a.samples.size());
  const auto b = decode_wav(bytes);
  CHECK(b.sample_rate == doctest::Approx(16000));
  CHECK(b.samples == a.samples);

  const auto dir = test::scratch_dir("signal_io_wav");
  write_wav(dir / "x.wav", a);
  CHECK(read_wav(dir / "x.wav").samples == a.samples);
}

TEST_CASE("unsupported WAV layouts are rejected") {
  AudioSegment a;
  a.samples = {1, 2, 3, 4};
  auto bytes = encode_wav(a);
  CHECK_THROWS_AS(decode_wav(std::span<const std::uint8_t>(bytes.data(), 10)), UnsupportedFormatError);
  auto stereo = bytes;
  stereo[22] = 2;  // channel count
  CHECK_THROWS_AS(decode_wav(stereo), UnsupportedFormatError);
  auto eight_bit = bytes;
  eight_bit[34] = 8;  // bits per sample
  CHECK_THROWS_AS(decode_wav(eight_bit), UnsupportedFormatError);
  auto not_riff = bytes;
  std::memcpy(not_riff.data(), "RIFX", 4);
  CHECK_THROWS_AS(decode_wav(not_riff), UnsupportedFormatError);
  CHECK_THROWS_AS(read_wav("/nonexistent/file.wav"), IoError);
}

TEST_CASE("decimate keeps every factor-th sample") {
  std::vector<ImuSample> s(10);
  for (int i = 0; i < 10; ++i) s[static_cast<std::size_t>(i)].t = i;
  const auto d = decimate_imu(s, 3);
  REQUIRE(d.size() == 4);
  CHECK(d[0].t == 0);
  CHECK(d[1].t == 3);
  CHECK(d[3].t == 9);
  CHECK_THROWS_AS(decimate_imu(s, 0), ArgumentError);
}

TEST_CASE("StreamWindow evicts the oldest item") {
  StreamWindow<int> w(3);
  for (int i = 0; i < 5; ++i) w.push(i);
  CHECK(w.size() == 3);
  CHECK(w.front() == 2);
  CHECK(w.back() == 4);
}

TEST_CASE("replay sources deliver everything in order") {
  std::vector<ImuSample> s(20);
  for (int i = 0; i < 20; ++i) s[static_cast<std::size_t>(i)].t = 0.01 * i;
  ImuReplaySource src(s, 0.0);
  std::vector<double> got;
  while (!src.exhausted()) {
    if (auto x = src.next(std::chrono::milliseconds(10))) got.push_back(x->t);
  }
  REQUIRE(got.size() == 20);
  CHECK(std::is_sorted(got.begin(), got.end()));

  AudioSegment a;
  a.samples.assign(1000, 7);
  AudioReplaySource asrc(a, 256, 0.0);
  std::size_t total = 0;
  double last_t0 = -1.0;
  while (!asrc.exhausted()) {
    if (auto b = asrc.next(std::chrono::milliseconds(10))) {
      CHECK(b->t0 > last_t0);
      last_t0 = b->t0;
      total += b->samples.size();
    }
  }
  CHECK(total == 1000);
}

TEST_CASE("real-time replay paces against the wall clock") {
  std::vector<ImuSample> s(11);
  for (int i = 0; i <= 10; ++i) s[static_cast<std::size_t>(i)].t = 0.02 * i;
  ImuReplaySource src(s, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  while (!src.exhausted()) src.next(std::chrono::milliseconds(100));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed >= 0.18);
}
