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

// Filtering, endpoint detection and amplitude tracking.
//
// Endpoint detection is the same for both modalities: a per-frame activity
// energy is compared against an adaptive threshold
//
//   threshold = max(min_threshold, median(E_quiet) + k_sigma * MAD(E_quiet))
//
// where E_quiet holds the energies of the trailing `quiet_window` seconds of
// frames that were not part of a segment. A segment opens when the energy
// exceeds the threshold and closes once it stays below
//
//   offset = median(E_quiet) + offset_ratio * (threshold - median(E_quiet))
//
// (both frozen at onset) for at least `min_gap` seconds.

#ifndef DIVERLINK_PREPROCESS_HPP
#define DIVERLINK_PREPROCESS_HPP

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "diverlink/signal_io.hpp"

namespace diverlink {

// Second-order Butterworth low-pass (bilinear transform, Q = 1/sqrt(2)).
class Biquad {
 public:
  Biquad(double cutoff_hz, double rate_hz);

  double process(double x);
  // Sets the internal state to the steady state for a constant input x.
  void reset(double x);

  double dc_gain() const { return (b0_ + b1_ + b2_) / (1.0 + a1_ + a2_); }

 private:
  double b0_, b1_, b2_, a1_, a2_;
  double z1_ = 0.0, z2_ = 0.0;
  bool primed_ = false;
};

// Filters a scalar sequence. The filter starts in steady state for the first
// input value, so a constant input passes through unchanged.
std::vector<double> low_pass(std::span<const double> input, double cutoff_hz, double rate_hz);

// Applies low_pass to all six IMU channels.
std::vector<ImuSample> low_pass_imu(std::span<const ImuSample> stream, double cutoff_hz,
                                    double rate_hz);

struct SegmenterConfig {
  double k_sigma = 4.0;
  double quiet_window = 2.0;  // seconds of quiet history for the noise floor
  double min_quiet = 0.3;     // seconds of quiet history before any onset
  double offset_ratio = 0.5;
  double min_seg = 0.3;
  double max_seg = 3.0;
  double min_gap = 0.2;
  double pad = 0.1;           // seconds added before and after each segment
  double min_threshold = 25.0;
  double smooth = 0.05;       // moving-average length applied to IMU motion energy
  double frame = 0.032;       // audio frame length, seconds
  double hop = 0.016;         // audio hop, seconds
  double zcr_max = 0.35;      // audio frames above this zero-crossing rate never open a segment

  static SegmenterConfig imu_defaults();
  static SegmenterConfig audio_defaults();
};

struct MotionSegment {
  std::vector<ImuSample> samples;
  std::size_t start_idx = 0;  // inclusive
  std::size_t end_idx = 0;    // exclusive
};

struct EnergyEnvelope {
  std::vector<double> values;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
};

// Frame range [start, end) produced by the segmenter.
struct FrameSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  double peak_energy = 0.0;
  double threshold = 0.0;
};

// Median + k*MAD noise-floor estimate over a sliding window of quiet energies.
class AdaptiveThreshold {
 public:
  AdaptiveThreshold(std::size_t window, std::size_t min_count, double k_sigma, double floor);

  void push(double energy) { window_.push(energy); }
  bool ready() const { return window_.size() >= min_count_; }
  double threshold() const;
  // Median of the window, 0 when empty.
  double noise_level() const;

 private:
  StreamWindow<double> window_;
  std::size_t min_count_;
  double k_sigma_;
  double floor_;
};

// Streaming segmenter over per-frame energies. push() returns a span once it
// has been confirmed closed, i.e. min_gap after its offset.
class OnlineSegmenter {
 public:
  OnlineSegmenter(const SegmenterConfig& cfg, double frame_rate);

  std::optional<FrameSpan> push(double energy, bool gate_open = true);
  // Closes any open segment at the end of the stream.
  std::optional<FrameSpan> flush();

  double threshold() const { return noise_.threshold(); }
  bool active() const { return state_ != State::Idle; }
  std::size_t frames_seen() const { return index_; }

 private:
  enum class State { Idle, Active, Closing };

  std::optional<FrameSpan> finish(std::size_t end);

  SegmenterConfig cfg_;
  AdaptiveThreshold noise_;
  std::size_t min_frames_, max_frames_, gap_frames_, pad_frames_;
  State state_ = State::Idle;
  std::size_t index_ = 0;
  std::size_t start_ = 0;
  std::size_t end_ = 0;
  std::size_t last_end_ = 0;
  double onset_threshold_ = 0.0;
  double offset_threshold_ = 0.0;
  double peak_ = 0.0;
  std::vector<double> held_;  // energies of the open segment and its closing tail
};

// Per-sample motion energy |accel_highpass|^2 + |d(euler)/dt|^2, smoothed by a
// moving average. Units mix (m/s^2)^2 and (deg/s)^2 with unit weights.
class MotionEnergy {
 public:
  MotionEnergy(double rate_hz, double smooth_s);
  double push(const ImuSample& s);

 private:
  double rate_;
  std::array<Biquad, 3> gravity_;
  std::optional<ImuSample> prev_;
  StreamWindow<double> smooth_;
};

std::vector<double> motion_energy(std::span<const ImuSample> stream, double rate_hz,
                                  double smooth_s);

// Estimated sample rate from the timestamps (defaults to 100 Hz for < 2 samples).
double estimate_rate(std::span<const ImuSample> stream);

std::vector<MotionSegment> detect_endpoints_imu(std::span<const ImuSample> stream,
                                                const SegmenterConfig& cfg);

// Streaming IMU endpoint detection: optional low-pass, motion energy and the
// online segmenter. Keeps just enough history to cut out confirmed segments.
class ImuEndpointDetector {
 public:
  // cutoff_hz <= 0 disables the low-pass stage.
  ImuEndpointDetector(const SegmenterConfig& cfg, double rate_hz, double cutoff_hz);

  std::optional<MotionSegment> push(const ImuSample& raw);
  std::optional<MotionSegment> flush();

  double threshold() const { return segmenter_.threshold(); }

 private:
  MotionSegment cut(const FrameSpan& span) const;

  std::optional<std::array<Biquad, 6>> filters_;
  MotionEnergy energy_;
  OnlineSegmenter segmenter_;
  std::deque<ImuSample> history_;
  std::size_t history_base_ = 0;
  std::size_t keep_;
};

// Streaming audio endpoint detection over short-time energy with a
// zero-crossing-rate voicing gate.
class AudioEndpointDetector {
 public:
  AudioEndpointDetector(const SegmenterConfig& cfg, int sample_rate, double t0 = 0.0);

  // Returns fragments confirmed by this block, in order.
  std::vector<AudioSegment> push(std::span<const std::int16_t> block);
  std::vector<AudioSegment> flush();

  std::size_t frame_length() const { return frame_len_; }
  std::size_t hop() const { return hop_; }
  double threshold() const { return segmenter_.threshold(); }

 private:
  AudioSegment cut(const FrameSpan& span) const;

  SegmenterConfig cfg_;
  int rate_;
  double t0_;
  std::size_t frame_len_, hop_;
  OnlineSegmenter segmenter_;
  std::deque<std::int16_t> history_;
  std::size_t history_base_ = 0;  // absolute index of history_.front()
  std::size_t total_ = 0;         // samples received
  std::size_t next_frame_ = 0;
  std::size_t keep_;
};

EnergyEnvelope short_time_energy(std::span<const std::int16_t> samples, std::size_t frame_len,
                                 std::size_t hop);
double zero_crossing_rate(std::span<const std::int16_t> frame);

std::vector<AudioSegment> detect_endpoints_audio(const AudioSegment& audio,
                                                 const SegmenterConfig& cfg);

// Mean STFT magnitude per bin over a noise-only stretch of audio.
struct NoiseProfile {
  std::size_t frame_len = 512;
  std::vector<double> magnitude;  // frame_len/2 + 1 bins

  static NoiseProfile zeros(std::size_t frame_len);
};

NoiseProfile estimate_noise_profile(const AudioSegment& audio, double leading_seconds,
                                    std::size_t frame_len = 512);

// Magnitude spectral subtraction with a spectral floor of floor * noise
// magnitude; Hann analysis at 50% overlap, overlap-add resynthesis.
AudioSegment noise_reduce(const AudioSegment& audio, const NoiseProfile& noise,
                          double floor = 0.05);

// RMS over the trailing 64 ms relative to full-scale sine RMS (32767/sqrt(2)),
// clamped to [0, 1].
class AmplitudeTracker {
 public:
  explicit AmplitudeTracker(double rate_hz, double window_s = 0.064);

  double push(std::int16_t sample);
  double push(std::span<const std::int16_t> samples);
  double amplitude() const;
  void reset();

  std::size_t window() const { return ring_.size(); }

 private:
  std::vector<std::int16_t> ring_;
  std::size_t pos_ = 0;
  std::size_t count_ = 0;
  std::int64_t sum_sq_ = 0;
};

}  // namespace diverlink

#endif  // DIVERLINK_PREPROCESS_HPP
