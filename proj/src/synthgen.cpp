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

#include "diverlink/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

struct Excursion {
  double angle = 0.0;  // degrees
  double accel = 0.0;  // degrees / s^2
};

// Raised cosine from 0 to peak and back over `duration`, evaluated at the
// offset `dt` from its start.
Excursion raised_cosine(double peak, double duration, double dt) {
  if (dt < 0.0 || dt > duration) return {};
  const double w = 2.0 * kPi / duration;
  return {peak * (1.0 - std::cos(w * dt)) / 2.0, peak * w * w * std::cos(w * dt) / 2.0};
}

// Specific force for a head at rest in the given orientation plus tangential
// acceleration for each angular channel.
std::array<double, 3> head_accel(const std::array<double, 3>& euler_deg,
                                 const std::array<double, 3>& euler_accel_deg) {
  const double roll = euler_deg[0] * kDeg;
  const double pitch = euler_deg[1] * kDeg;
  std::array<double, 3> a{-kGravity * std::sin(pitch), kGravity * std::sin(roll) * std::cos(pitch),
                          kGravity * std::cos(roll) * std::cos(pitch)};
  a[0] += kHeadRadius * euler_accel_deg[1] * kDeg;
  a[1] += -kHeadRadius * euler_accel_deg[0] * kDeg + kHeadRadius * euler_accel_deg[2] * kDeg;
  return a;
}

std::size_t sample_count(double seconds, double rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

std::int16_t to_pcm(double v) {
  return static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
}

// Envelope with raised-cosine attack and release.
double envelope(double t, double duration) {
  const double ramp = std::min(0.05, duration / 2.0);
  if (t < 0.0 || t > duration) return 0.0;
  if (t < ramp) return 0.5 * (1.0 - std::cos(kPi * t / ramp));
  if (t > duration - ramp) return 0.5 * (1.0 - std::cos(kPi * (duration - t) / ramp));
  return 1.0;
}

// Harmonic sum normalized to a unit peak bound.
constexpr double kHarmonicNorm = 1.0 + 1.0 / 2.0 + 1.0 / 3.0 + 1.0 / 4.0;
// RMS of a unit-amplitude steady tone.
const double kToneRms = std::sqrt((1.0 + 1.0 / 4.0 + 1.0 / 9.0 + 1.0 / 16.0) / 2.0) / kHarmonicNorm;

double tone_value(double f0, double t, double depth, double vib_rate, double vib_phase) {
  // Phase integral of f0 * (1 + depth * sin(2 pi fv t + phi)).
  const double phase = 2.0 * kPi * f0 * t -
                       f0 * depth / vib_rate * (std::cos(2.0 * kPi * vib_rate * t + vib_phase) - std::cos(vib_phase));
  double v = 0.0;
  for (int h = 1; h <= 4; ++h) v += std::sin(h * phase) / h;
  return v / kHarmonicNorm;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::pair<double, double> peak_range(HeadMotionClass cls) {
  switch (cls) {
    case HeadMotionClass::Flexion: return {45.0, 50.0};
    case HeadMotionClass::Extension: return {70.0, 80.0};
    case HeadMotionClass::BendLeft:
    case HeadMotionClass::BendRight: return {35.0, 45.0};
    case HeadMotionClass::RotateLeft:
    case HeadMotionClass::RotateRight: return {65.0, 75.0};
  }
  return {0.0, 0.0};
}

double excursion_sign(HeadMotionClass cls) {
  switch (cls) {
    case HeadMotionClass::Flexion:
    case HeadMotionClass::BendLeft:
    case HeadMotionClass::RotateLeft: return 1.0;
    case HeadMotionClass::Extension:
    case HeadMotionClass::BendRight:
    case HeadMotionClass::RotateRight: return -1.0;
  }
  return 1.0;
}

std::vector<ImuSample> gen_motion_stream(const std::vector<MotionEvent>& events, double total_s,
                                         double rate_hz, double noise_std_deg, double accel_noise,
                                         std::uint64_t seed) {
  if (!(rate_hz > 0.0) || total_s < 0.0) throw ArgumentError("motion stream needs a positive rate");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = sample_count(total_s, rate_hz) + 1;
  std::vector<ImuSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    std::array<double, 3> angle{};
    std::array<double, 3> accel{};
    for (const auto& e : events) {
      const auto ch = static_cast<std::size_t>(governing_channel(e.cls));
      const auto x = raised_cosine(excursion_sign(e.cls) * e.peak_deg, e.duration_s, t - e.t_start);
      angle[ch] += x.angle;
      accel[ch] += x.accel;
    }
    const auto a = head_accel(angle, accel);
    ImuSample& s = out[i];
    s.t = t;
    for (int c = 0; c < 3; ++c) {
      const double na = accel_noise > 0.0 ? accel_noise * gauss(rng) : 0.0;
      const double ne = noise_std_deg > 0.0 ? noise_std_deg * gauss(rng) : 0.0;
      s.accel[c] = a[static_cast<std::size_t>(c)] + na;
      s.euler[c] = normalize_degrees(angle[static_cast<std::size_t>(c)] + ne);
    }
  }
  return out;
}

std::vector<ImuSample> gen_head_motion(const SynthMotionSpec& spec) {
  if (!(spec.duration_s > 0.0) || spec.peak_deg < 0.0 || spec.rest_before_s < 0.0 || spec.rest_after_s < 0.0) {
    throw ArgumentError("invalid motion spec");
  }
  // Snap the excursion onto the sample grid so its midpoint is sampled.
  const double duration = static_cast<double>(sample_count(spec.duration_s, spec.rate_hz)) / spec.rate_hz;
  const double start = static_cast<double>(sample_count(spec.rest_before_s, spec.rate_hz)) / spec.rate_hz;
  auto out = gen_motion_stream({{start, spec.cls, spec.peak_deg, duration}},
                               start + duration + spec.rest_after_s, spec.rate_hz, spec.noise_std_deg,
                               spec.accel_noise, spec.seed);
  for (auto& s : out) s.t += spec.t0;
  return out;
}

double scale_frequency(ScaleClass s) {
  switch (s) {
    case ScaleClass::Do: return 261.63;
    case ScaleClass::Re: return 293.66;
    case ScaleClass::Mi: return 329.63;
    case ScaleClass::Fa: return 349.23;
    case ScaleClass::So: return 392.00;
  }
  return 0.0;
}

AudioSegment gen_scale_tone(const SynthToneSpec& spec) {
  if (spec.sample_rate <= 0 || !(spec.duration_s > 0.0) || spec.amplitude < 0.0 || spec.amplitude > 1.0) {
    throw ArgumentError("invalid tone spec");
  }
  const double rate = spec.sample_rate;
  const double f0 = spec.f0 > 0.0 ? spec.f0 : scale_frequency(spec.scale);
  const double full = 32767.0 * spec.amplitude;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
  const double vib_phase = phase_dist(rng);
  const std::size_t n_before = sample_count(spec.rest_before_s, rate);
  const std::size_t n_tone = sample_count(spec.duration_s, rate);
  const std::size_t n = n_before + n_tone + sample_count(spec.rest_after_s, rate);
  const double noise_rms =
      std::isfinite(spec.snr_db) ? full * kToneRms / std::pow(10.0, spec.snr_db / 20.0) : 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);

  AudioSegment out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    if (i >= n_before && i < n_before + n_tone) {
      const double t = static_cast<double>(i - n_before) / rate;
      v = full * envelope(t, spec.duration_s) *
          tone_value(f0, t, spec.vibrato_depth, spec.vibrato_rate_hz, vib_phase);
    }
    if (noise_rms > 0.0) v += noise_rms * gauss(rng);
    out.samples[i] = to_pcm(v);
  }
  return out;
}

AudioSegment gen_tone_stream(const std::vector<ToneEvent>& events, double total_s, int sample_rate,
                             double snr_db, std::uint64_t seed) {
  if (sample_rate <= 0 || total_s < 0.0) throw ArgumentError("tone stream needs a positive rate");
  const double rate = sample_rate;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
  std::vector<double> phases;
  for (std::size_t i = 0; i < events.size(); ++i) phases.push_back(phase_dist(rng));
  const double noise_rms = std::isfinite(snr_db) ? 32767.0 * kToneRms / std::pow(10.0, snr_db / 20.0) : 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);

  AudioSegment out;
  out.sample_rate = sample_rate;
  out.samples.resize(sample_count(total_s, rate));
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = 0.0;
    for (std::size_t k = 0; k < events.size(); ++k) {
      const auto& e = events[k];
      const double local = t - e.t_start;
      if (local < 0.0 || local > e.duration_s) continue;
      v += 32767.0 * e.amplitude * envelope(local, e.duration_s) *
           tone_value(scale_frequency(e.scale), local, 0.01, 5.0, phases[k]);
    }
    if (noise_rms > 0.0) v += noise_rms * gauss(rng);
    out.samples[i] = to_pcm(v);
  }
  return out;
}

std::vector<HeadItem> gen_head_corpus(const HeadCorpusOptions& opts) {
  if (opts.per_class <= 0) throw ArgumentError("per_class must be positive");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<HeadItem> out;
  out.reserve(static_cast<std::size_t>(opts.per_class) * kHeadMotionClasses.size());
  for (auto cls : kHeadMotionClasses) {
    const auto [lo, hi] = peak_range(cls);
    for (int i = 0; i < opts.per_class; ++i) {
      SynthMotionSpec s;
      s.cls = cls;
      s.peak_deg = lo + (hi - lo) * unit(rng);
      s.duration_s = opts.min_duration_s + (opts.max_duration_s - opts.min_duration_s) * unit(rng);
      s.noise_std_deg = opts.max_noise_deg * unit(rng);
      s.accel_noise = 0.02 * s.noise_std_deg;
      s.rate_hz = opts.rate_hz;
      s.rest_before_s = opts.rest_s;
      s.rest_after_s = opts.rest_s;
      s.seed = rng();
      out.push_back({cls, s, gen_head_motion(s)});
    }
  }
  return out;
}

std::vector<ToneItem> gen_tone_corpus(const ToneCorpusOptions& opts) {
  if (opts.per_class <= 0) throw ArgumentError("per_class must be positive");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ToneItem> out;
  out.reserve(static_cast<std::size_t>(opts.per_class) * kScaleClasses.size());
  for (auto sc : kScaleClasses) {
    for (int i = 0; i < opts.per_class; ++i) {
      SynthToneSpec s;
      s.scale = sc;
      s.duration_s = opts.min_duration_s + (opts.max_duration_s - opts.min_duration_s) * unit(rng);
      s.amplitude = opts.min_amplitude + (opts.max_amplitude - opts.min_amplitude) * unit(rng);
      s.snr_db = opts.snr_db;
      s.sample_rate = opts.sample_rate;
      s.rest_before_s = opts.rest_s;
      s.rest_after_s = opts.rest_s;
      s.seed = rng();
      out.push_back({sc, s, gen_scale_tone(s)});
    }
  }
  return out;
}

std::string describe(const SynthMotionSpec& s) {
  return "peak=" + fmt("%.4f", s.peak_deg) + ";duration=" + fmt("%.4f", s.duration_s) +
         ";noise=" + fmt("%.4f", s.noise_std_deg) + ";rate=" + fmt("%g", s.rate_hz) +
         ";seed=" + std::to_string(s.seed);
}

std::string describe(const SynthToneSpec& s) {
  return "duration=" + fmt("%.4f", s.duration_s) + ";amplitude=" + fmt("%.4f", s.amplitude) +
         ";snr=" + fmt("%g", s.snr_db) + ";rate=" + std::to_string(s.sample_rate) +
         ";seed=" + std::to_string(s.seed);
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("label,", 0) == 0) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 3 || fields.size() > 4) throw ParseError("expected label,kind,path[,spec]", lineno);
    if (fields[1] != "imu" && fields[1] != "audio") throw ParseError("kind must be imu or audio", lineno);
    m.entries.push_back({fields[0], fields[1], fields[2], fields.size() == 4 ? fields[3] : ""});
  }
  if (m.entries.empty()) throw ValidationError("manifest " + path.string() + " lists no items");
  return m;
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "label,kind,path,spec\n";
  for (const auto& e : entries) f << e.label << ',' << e.kind << ',' << e.path.generic_string() << ',' << e.spec << '\n';
  if (!f) throw IoError("write failed: " + path.string());
}

Manifest write_head_corpus(const std::filesystem::path& dir, const std::vector<HeadItem>& items) {
  std::filesystem::create_directories(dir / "imu");
  Manifest m;
  m.root = dir;
  char name[64];
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::snprintf(name, sizeof name, "imu/%05zu.csv", i);
    write_imu_csv(dir / name, items[i].samples);
    m.entries.push_back({std::string(to_string(items[i].cls)), "imu", name, describe(items[i].spec)});
  }
  m.write(dir / "manifest.csv");
  return m;
}

Manifest write_tone_corpus(const std::filesystem::path& dir, const std::vector<ToneItem>& items) {
  std::filesystem::create_directories(dir / "audio");
  Manifest m;
  m.root = dir;
  char name[64];
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::snprintf(name, sizeof name, "audio/%05zu.wav", i);
    write_wav(dir / name, items[i].audio);
    m.entries.push_back({std::string(to_string(items[i].scale)), "audio", name, describe(items[i].spec)});
  }
  m.write(dir / "manifest.csv");
  return m;
}

namespace {

constexpr double kScenarioImuRate = 500.0;
constexpr double kShortTone = 0.3;
constexpr double kLongTone = 0.8;

double draw_peak(HeadMotionClass cls, std::mt19937_64& rng) {
  const auto [lo, hi] = peak_range(cls);
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

ScenarioData gen_head_scenario(std::uint64_t seed) {
  using H = HeadMotionClass;
  const std::array<H, 12> order = {H::Flexion,  H::Extension,  H::Flexion,    H::Extension,
                                   H::BendLeft, H::BendRight,  H::BendLeft,   H::BendRight,
                                   H::RotateLeft, H::RotateRight, H::RotateLeft, H::RotateRight};
  std::mt19937_64 rng(seed);
  ScenarioData sc;
  sc.scheme = "head";
  std::vector<MotionEvent> events;
  double t = 2.0;
  for (auto cls : order) {
    events.push_back({t, cls, draw_peak(cls, rng), 1.0});
    sc.expected.push_back({t + 1.0, ActionVector::motion(cls)});
    t += 3.0;
  }
  sc.imu = gen_motion_stream(events, t + 1.0, kScenarioImuRate, 0.3, 0.02, rng());
  return sc;
}

ScenarioData gen_throat_scenario(std::uint64_t seed) {
  using S = ScaleClass;
  const std::array<std::pair<S, DurationClass>, 6> order = {{{S::Do, DurationClass::Short},
                                                             {S::Re, DurationClass::Long},
                                                             {S::Mi, DurationClass::Short},
                                                             {S::Do, DurationClass::Long},
                                                             {S::Re, DurationClass::Short},
                                                             {S::Mi, DurationClass::Long}}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 0.9);
  ScenarioData sc;
  sc.scheme = "throat";
  std::vector<ToneEvent> events;
  double t = 1.5;
  for (auto [s, d] : order) {
    const double dur = d == DurationClass::Short ? kShortTone : kLongTone;
    events.push_back({t, s, dur, amp(rng)});
    sc.expected.push_back({t + dur, ActionVector::throat(s, d)});
    t += dur + 1.5;
  }
  sc.audio = gen_tone_stream(events, t, 16000, 30.0, rng());
  return sc;
}

ScenarioData gen_multimodal_scenario(std::uint64_t seed) {
  using H = HeadMotionClass;
  using S = ScaleClass;
  const std::vector<ActionVector> order = {
      ActionVector::motion(H::RotateLeft),
      ActionVector::motion(H::Flexion),
      ActionVector::throat(S::So, DurationClass::Short),
      ActionVector::throat(S::Do, DurationClass::Short),
      ActionVector::throat(S::Fa, DurationClass::Short),
      ActionVector::throat(S::Re, DurationClass::Long),
      ActionVector::throat(S::Mi, DurationClass::Short),
      ActionVector::throat(S::So, DurationClass::Long),
      ActionVector::motion(H::Extension),
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 0.9);
  ScenarioData sc;
  sc.scheme = "multimodal";
  std::vector<MotionEvent> motions;
  std::vector<ToneEvent> tones;
  double t = 2.0;
  for (const auto& v : order) {
    double dur = 1.0;
    if (v.head) {
      motions.push_back({t, *v.head, draw_peak(*v.head, rng), dur});
    } else {
      dur = *v.duration == DurationClass::Short ? kShortTone : kLongTone;
      tones.push_back({t, *v.scale, dur, amp(rng)});
    }
    sc.expected.push_back({t + dur, v});
    t += dur + 2.0;
  }
  const std::uint64_t imu_seed = rng();
  const std::uint64_t audio_seed = rng();
  sc.imu = gen_motion_stream(motions, t, kScenarioImuRate, 0.3, 0.02, imu_seed);
  sc.audio = gen_tone_stream(tones, t, 16000, 30.0, audio_seed);
  return sc;
}

}  // namespace diverlink
