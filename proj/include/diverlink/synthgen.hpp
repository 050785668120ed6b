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

// Seeded generators for labeled head motions, hummed scale tones, corpora and
// replay scenarios.
//
// Head motion: the governing Euler channel follows a raised cosine
//   angle(tau) = peak * (1 - cos(2 pi tau)) / 2,  tau in [0, 1]
// so the excursion peaks at exactly `peak` halfway through. Acceleration is
// gravity rotated into the head frame plus the tangential term r * angle''.
//
// Tone: f0 plus three harmonics at 1/h amplitude, 5 Hz vibrato, 50 ms
// attack/release. `amplitude` is the envelope peak relative to int16 full scale.

#ifndef DIVERLINK_SYNTHGEN_HPP
#define DIVERLINK_SYNTHGEN_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diverlink/head_dtw.hpp"
#include "diverlink/mapper.hpp"
#include "diverlink/nn.hpp"
#include "diverlink/signal_io.hpp"

namespace diverlink {

inline constexpr double kGravity = 9.80665;
inline constexpr double kHeadRadius = 0.1;  // m

// Default peak range per class, degrees.
std::pair<double, double> peak_range(HeadMotionClass cls);
// Sign of the governing-channel excursion.
double excursion_sign(HeadMotionClass cls);

struct SynthMotionSpec {
  HeadMotionClass cls = HeadMotionClass::Flexion;
  double peak_deg = 47.0;
  double duration_s = 1.0;
  double noise_std_deg = 0.0;  // Euler channels
  double accel_noise = 0.0;    // m/s^2
  double rate_hz = 100.0;
  double rest_before_s = 1.0;
  double rest_after_s = 0.5;
  double t0 = 0.0;
  std::uint64_t seed = 1;
};

std::vector<ImuSample> gen_head_motion(const SynthMotionSpec& spec);

// Equal-tempered C-major pitches from middle C.
double scale_frequency(ScaleClass s);

struct SynthToneSpec {
  ScaleClass scale = ScaleClass::Do;
  double f0 = 0.0;  // 0: scale_frequency(scale)
  double duration_s = 0.3;
  double amplitude = 0.8;
  double vibrato_depth = 0.01;
  double vibrato_rate_hz = 5.0;
  double snr_db = std::numeric_limits<double>::infinity();
  int sample_rate = 16000;
  double rest_before_s = 0.0;
  double rest_after_s = 0.0;
  std::uint64_t seed = 1;
};

AudioSegment gen_scale_tone(const SynthToneSpec& spec);

// Continuous streams built from timed events on a shared noise floor.
struct MotionEvent {
  double t_start = 0.0;
  HeadMotionClass cls = HeadMotionClass::Flexion;
  double peak_deg = 45.0;
  double duration_s = 1.0;
};

std::vector<ImuSample> gen_motion_stream(const std::vector<MotionEvent>& events, double total_s,
                                         double rate_hz, double noise_std_deg, double accel_noise,
                                         std::uint64_t seed);

struct ToneEvent {
  double t_start = 0.0;
  ScaleClass scale = ScaleClass::Do;
  double duration_s = 0.3;
  double amplitude = 0.8;
};

// Noise RMS is set by `snr_db` against a full-amplitude (1.0) tone.
AudioSegment gen_tone_stream(const std::vector<ToneEvent>& events, double total_s, int sample_rate,
                             double snr_db, std::uint64_t seed);

// Corpora.

struct HeadCorpusOptions {
  int per_class = 120;
  double max_noise_deg = 2.0;  // each item draws noise_std uniformly in [0, max]
  double rate_hz = 100.0;
  double min_duration_s = 0.8;
  double max_duration_s = 1.2;
  double rest_s = 0.6;
  std::uint64_t seed = 1;
};

struct HeadItem {
  HeadMotionClass cls;
  SynthMotionSpec spec;
  std::vector<ImuSample> samples;
};

std::vector<HeadItem> gen_head_corpus(const HeadCorpusOptions& opts);

struct ToneCorpusOptions {
  int per_class = 200;
  double snr_db = 20.0;
  double min_duration_s = 0.25;
  double max_duration_s = 0.9;
  double min_amplitude = 0.3;
  double max_amplitude = 1.0;
  double rest_s = 0.3;
  int sample_rate = 16000;
  std::uint64_t seed = 1;
};

struct ToneItem {
  ScaleClass scale;
  SynthToneSpec spec;
  AudioSegment audio;
};

std::vector<ToneItem> gen_tone_corpus(const ToneCorpusOptions& opts);

// manifest.csv: label,kind,path,spec. Paths are relative to the manifest.
struct ManifestEntry {
  std::string label;
  std::string kind;  // "imu" or "audio"
  std::filesystem::path path;
  std::string spec;  // key=value pairs separated by ';'

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& e) const { return root / e.path; }

  static Manifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

std::string describe(const SynthMotionSpec& s);
std::string describe(const SynthToneSpec& s);

Manifest write_head_corpus(const std::filesystem::path& dir, const std::vector<HeadItem>& items);
Manifest write_tone_corpus(const std::filesystem::path& dir, const std::vector<ToneItem>& items);

// Scenarios.

struct ExpectedToken {
  double t = 0.0;  // ground-truth end of the gesture or tone
  ActionVector token;
};

struct ScenarioData {
  std::string scheme;
  std::vector<ImuSample> imu;
  std::optional<AudioSegment> audio;
  std::vector<ExpectedToken> expected;
};

// Four actions per rotational DoF at 500 Hz.
ScenarioData gen_head_scenario(std::uint64_t seed);
// Throat-only do/re/mi commands.
ScenarioData gen_throat_scenario(std::uint64_t seed);
// Head and throat tokens interleaved with "so" mode switches.
ScenarioData gen_multimodal_scenario(std::uint64_t seed);

}  // namespace diverlink

#endif  // DIVERLINK_SYNTHGEN_HPP
