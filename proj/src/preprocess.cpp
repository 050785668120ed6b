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

#include "diverlink/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "diverlink/error.hpp"
#include "dsp.hpp"

namespace diverlink {

namespace {

constexpr double kFullScaleSineRms = 32767.0 / std::numbers::sqrt2;
constexpr double kGravityCutoffHz = 0.5;

std::size_t to_frames(double seconds, double frame_rate) {
  return static_cast<std::size_t>(std::llround(std::max(0.0, seconds) * frame_rate));
}

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

Biquad::Biquad(double cutoff_hz, double rate_hz) {
  if (!(rate_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) {
    throw ArgumentError("low-pass cutoff must lie in (0, rate/2)");
  }
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate_hz;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * (1.0 / std::numbers::sqrt2));
  const double a0 = 1.0 + alpha;
  b0_ = (1.0 - cw) / 2.0 / a0;
  b1_ = (1.0 - cw) / a0;
  b2_ = b0_;
  a1_ = -2.0 * cw / a0;
  a2_ = (1.0 - alpha) / a0;
}

void Biquad::reset(double x) {
  const double y = x;
  z2_ = b2_ * x - a2_ * y;
  z1_ = b1_ * x - a1_ * y + z2_;
  primed_ = true;
}

double Biquad::process(double x) {
  if (!primed_) reset(x);
  const double y = b0_ * x + z1_;
  z1_ = b1_ * x - a1_ * y + z2_;
  z2_ = b2_ * x - a2_ * y;
  return y;
}

std::vector<double> low_pass(std::span<const double> input, double cutoff_hz, double rate_hz) {
  Biquad f(cutoff_hz, rate_hz);
  std::vector<double> out;
  out.reserve(input.size());
  for (double x : input) out.push_back(f.process(x));
  return out;
}

std::vector<ImuSample> low_pass_imu(std::span<const ImuSample> stream, double cutoff_hz,
                                    double rate_hz) {
  std::array<Biquad, 6> f{Biquad(cutoff_hz, rate_hz), Biquad(cutoff_hz, rate_hz),
                          Biquad(cutoff_hz, rate_hz), Biquad(cutoff_hz, rate_hz),
                          Biquad(cutoff_hz, rate_hz), Biquad(cutoff_hz, rate_hz)};
  std::vector<ImuSample> out(stream.begin(), stream.end());
  for (auto& s : out) {
    for (int c = 0; c < 3; ++c) {
      s.accel[c] = f[c].process(s.accel[c]);
      s.euler[c] = f[3 + c].process(s.euler[c]);
    }
  }
  return out;
}

SegmenterConfig SegmenterConfig::imu_defaults() {
  SegmenterConfig c;
  c.min_threshold = 200.0;  // about 14 deg/s of head rotation
  return c;
}

SegmenterConfig SegmenterConfig::audio_defaults() {
  SegmenterConfig c;
  c.min_seg = 0.15;
  c.max_seg = 3.0;
  c.min_gap = 0.2;
  c.pad = 0.0;
  c.min_threshold = 1.0e4;  // mean square, int16 units (RMS 100)
  c.smooth = 0.0;
  return c;
}

AdaptiveThreshold::AdaptiveThreshold(std::size_t window, std::size_t min_count, double k_sigma,
                                     double floor)
    : window_(std::max<std::size_t>(window, 1)),
      min_count_(std::max<std::size_t>(min_count, 1)),
      k_sigma_(k_sigma),
      floor_(floor) {}

double AdaptiveThreshold::noise_level() const {
  if (window_.empty()) return 0.0;
  std::vector<double> v(window_.begin(), window_.end());
  return median_of(v);
}

double AdaptiveThreshold::threshold() const {
  if (window_.empty()) return floor_;
  std::vector<double> v(window_.begin(), window_.end());
  const double med = median_of(v);
  for (auto& x : v) x = std::abs(x - med);
  const double mad = median_of(v);
  return std::max(floor_, med + k_sigma_ * mad);
}

OnlineSegmenter::OnlineSegmenter(const SegmenterConfig& cfg, double frame_rate)
    : cfg_(cfg),
      noise_(to_frames(cfg.quiet_window, frame_rate), to_frames(cfg.min_quiet, frame_rate),
             cfg.k_sigma, cfg.min_threshold),
      min_frames_(std::max<std::size_t>(1, to_frames(cfg.min_seg, frame_rate))),
      max_frames_(std::max<std::size_t>(1, to_frames(cfg.max_seg, frame_rate))),
      gap_frames_(std::max<std::size_t>(1, to_frames(cfg.min_gap, frame_rate))),
      pad_frames_(std::min(to_frames(cfg.pad, frame_rate),
                           std::max<std::size_t>(1, to_frames(cfg.min_gap, frame_rate)))) {
  if (!(frame_rate > 0.0)) throw ArgumentError("frame rate must be positive");
}

std::optional<FrameSpan> OnlineSegmenter::push(double energy, bool gate_open) {
  const std::size_t i = index_++;
  switch (state_) {
    case State::Idle:
      if (noise_.ready() && gate_open && energy > noise_.threshold()) {
        state_ = State::Active;
        start_ = i;
        onset_threshold_ = noise_.threshold();
        const double level = std::min(noise_.noise_level(), onset_threshold_);
        offset_threshold_ = level + cfg_.offset_ratio * (onset_threshold_ - level);
        peak_ = energy;
        held_.assign(1, energy);
      } else {
        noise_.push(energy);
      }
      return std::nullopt;

    case State::Active:
      held_.push_back(energy);
      peak_ = std::max(peak_, energy);
      if (energy < offset_threshold_) {
        state_ = State::Closing;
        end_ = i;
      } else if (i + 1 - start_ >= max_frames_) {
        return finish(i + 1);
      }
      return std::nullopt;

    case State::Closing:
      held_.push_back(energy);
      if (gate_open && energy > onset_threshold_ && i + 1 - start_ <= max_frames_) {
        state_ = State::Active;
        peak_ = std::max(peak_, energy);
        return std::nullopt;
      }
      if (i + 1 - end_ >= gap_frames_) return finish(end_);
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<FrameSpan> OnlineSegmenter::flush() {
  switch (state_) {
    case State::Active:
      return finish(index_);
    case State::Closing:
      return finish(end_);
    case State::Idle:
      break;
  }
  return std::nullopt;
}

std::optional<FrameSpan> OnlineSegmenter::finish(std::size_t end) {
  const std::size_t len = end - start_;
  const bool keep = len >= min_frames_;
  // Frames after the segment's end were quiet; a rejected blip is quiet too.
  const std::size_t first_quiet = keep ? len : 0;
  for (std::size_t k = first_quiet; k < held_.size(); ++k) noise_.push(held_[k]);
  held_.clear();
  state_ = State::Idle;
  if (!keep) return std::nullopt;

  FrameSpan span;
  // last_end_ <= start_: the previous span was emitted before this one opened.
  span.start = start_ - std::min(pad_frames_, start_ - last_end_);
  span.end = std::min(end + pad_frames_, index_);
  span.peak_energy = peak_;
  span.threshold = onset_threshold_;
  last_end_ = span.end;
  return span;
}

MotionEnergy::MotionEnergy(double rate_hz, double smooth_s)
    : rate_(rate_hz),
      gravity_{Biquad(kGravityCutoffHz, rate_hz), Biquad(kGravityCutoffHz, rate_hz),
               Biquad(kGravityCutoffHz, rate_hz)},
      smooth_(std::max<std::size_t>(1, to_frames(smooth_s, rate_hz))) {}

double MotionEnergy::push(const ImuSample& s) {
  double e = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double hp = s.accel[c] - gravity_[c].process(s.accel[c]);
    e += hp * hp;
  }
  if (prev_) {
    const double dt = s.t - prev_->t;
    const double inv = dt > 0.0 ? 1.0 / dt : rate_;
    for (int c = 0; c < 3; ++c) {
      const double d = normalize_degrees(s.euler[c] - prev_->euler[c]) * inv;
      e += d * d;
    }
  }
  prev_ = s;
  smooth_.push(e);
  double sum = 0.0;
  for (double v : smooth_) sum += v;
  return sum / static_cast<double>(smooth_.size());
}

std::vector<double> motion_energy(std::span<const ImuSample> stream, double rate_hz,
                                  double smooth_s) {
  MotionEnergy me(rate_hz, smooth_s);
  std::vector<double> out;
  out.reserve(stream.size());
  for (const auto& s : stream) out.push_back(me.push(s));
  return out;
}

double estimate_rate(std::span<const ImuSample> stream) {
  if (stream.size() < 2) return 100.0;
  const double span = stream.back().t - stream.front().t;
  if (!(span > 0.0)) return 100.0;
  return static_cast<double>(stream.size() - 1) / span;
}

ImuEndpointDetector::ImuEndpointDetector(const SegmenterConfig& cfg, double rate_hz, double cutoff_hz)
    : energy_(rate_hz, cfg.smooth),
      segmenter_(cfg, rate_hz),
      keep_(static_cast<std::size_t>(
          std::ceil((cfg.max_seg + cfg.min_gap + 2.0 * cfg.pad + cfg.smooth + 1.0) * rate_hz))) {
  if (cutoff_hz > 0.0) {
    const Biquad f(cutoff_hz, rate_hz);
    filters_ = std::array<Biquad, 6>{f, f, f, f, f, f};
  }
}

std::optional<MotionSegment> ImuEndpointDetector::push(const ImuSample& raw) {
  ImuSample s = raw;
  if (filters_) {
    for (int c = 0; c < 3; ++c) {
      s.accel[c] = (*filters_)[static_cast<std::size_t>(c)].process(s.accel[c]);
      s.euler[c] = (*filters_)[static_cast<std::size_t>(3 + c)].process(s.euler[c]);
    }
  }
  history_.push_back(s);
  if (history_.size() > keep_) {
    history_.pop_front();
    ++history_base_;
  }
  if (auto span = segmenter_.push(energy_.push(s))) return cut(*span);
  return std::nullopt;
}

std::optional<MotionSegment> ImuEndpointDetector::flush() {
  if (auto span = segmenter_.flush()) return cut(*span);
  return std::nullopt;
}

MotionSegment ImuEndpointDetector::cut(const FrameSpan& span) const {
  MotionSegment m;
  m.start_idx = std::max(span.start, history_base_);
  m.end_idx = span.end;
  m.samples.assign(history_.begin() + static_cast<std::ptrdiff_t>(m.start_idx - history_base_),
                   history_.begin() + static_cast<std::ptrdiff_t>(m.end_idx - history_base_));
  return m;
}

std::vector<MotionSegment> detect_endpoints_imu(std::span<const ImuSample> stream,
                                                const SegmenterConfig& cfg) {
  std::vector<MotionSegment> out;
  if (stream.empty()) return out;
  ImuEndpointDetector det(cfg, estimate_rate(stream), 0.0);
  for (const auto& s : stream) {
    if (auto seg = det.push(s)) out.push_back(std::move(*seg));
  }
  if (auto seg = det.flush()) out.push_back(std::move(*seg));
  return out;
}

EnergyEnvelope short_time_energy(std::span<const std::int16_t> samples, std::size_t frame_len,
                                 std::size_t hop) {
  if (frame_len == 0 || hop == 0) throw ArgumentError("frame length and hop must be positive");
  EnergyEnvelope env;
  env.frame_len = frame_len;
  env.hop = hop;
  if (samples.size() < frame_len) return env;
  const std::size_t n = (samples.size() - frame_len) / hop + 1;
  env.values.reserve(n);
  for (std::size_t f = 0; f < n; ++f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < frame_len; ++k) {
      const double x = samples[f * hop + k];
      acc += x * x;
    }
    env.values.push_back(acc / static_cast<double>(frame_len));
  }
  return env;
}

double zero_crossing_rate(std::span<const std::int16_t> frame) {
  if (frame.size() < 2) return 0.0;
  std::size_t crossings = 0;
  for (std::size_t k = 1; k < frame.size(); ++k) {
    if ((frame[k - 1] >= 0) != (frame[k] >= 0)) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
}

AudioEndpointDetector::AudioEndpointDetector(const SegmenterConfig& cfg, int sample_rate, double t0)
    : cfg_(cfg),
      rate_(sample_rate),
      t0_(t0),
      frame_len_(static_cast<std::size_t>(std::llround(cfg.frame * sample_rate))),
      hop_(static_cast<std::size_t>(std::llround(cfg.hop * sample_rate))),
      segmenter_(cfg, hop_ == 0 ? 1.0 : sample_rate / static_cast<double>(hop_)),
      keep_(0) {
  if (sample_rate <= 0) throw ArgumentError("sample rate must be positive");
  if (frame_len_ == 0 || hop_ == 0) throw ArgumentError("audio frame and hop must be positive");
  const double frame_rate = sample_rate / static_cast<double>(hop_);
  keep_ = static_cast<std::size_t>(std::ceil((cfg.max_seg + cfg.min_gap + 2.0 * cfg.pad) * frame_rate)) + 2;
}

std::vector<AudioSegment> AudioEndpointDetector::push(std::span<const std::int16_t> block) {
  std::vector<AudioSegment> out;
  history_.insert(history_.end(), block.begin(), block.end());
  total_ += block.size();
  std::vector<std::int16_t> frame(frame_len_);
  while (next_frame_ * hop_ + frame_len_ <= total_) {
    const std::size_t a = next_frame_ * hop_ - history_base_;
    std::copy_n(history_.begin() + static_cast<std::ptrdiff_t>(a), frame_len_, frame.begin());
    double acc = 0.0;
    for (std::int16_t v : frame) acc += static_cast<double>(v) * v;
    const double energy = acc / static_cast<double>(frame_len_);
    const bool voiced = zero_crossing_rate(frame) <= cfg_.zcr_max;
    ++next_frame_;
    if (auto span = segmenter_.push(energy, voiced)) out.push_back(cut(*span));
  }
  // Drop samples no open or future segment can reach.
  const std::size_t first_needed = next_frame_ > keep_ ? (next_frame_ - keep_) * hop_ : 0;
  while (history_base_ < first_needed && !history_.empty()) {
    history_.pop_front();
    ++history_base_;
  }
  return out;
}

std::vector<AudioSegment> AudioEndpointDetector::flush() {
  std::vector<AudioSegment> out;
  if (auto span = segmenter_.flush()) out.push_back(cut(*span));
  return out;
}

AudioSegment AudioEndpointDetector::cut(const FrameSpan& span) const {
  const std::size_t a = std::max(span.start * hop_, history_base_);
  const std::size_t b = std::min(total_, (span.end - 1) * hop_ + frame_len_);
  AudioSegment frag;
  frag.sample_rate = rate_;
  frag.t0 = t0_ + static_cast<double>(a) / rate_;
  frag.samples.assign(history_.begin() + static_cast<std::ptrdiff_t>(a - history_base_),
                      history_.begin() + static_cast<std::ptrdiff_t>(b - history_base_));
  return frag;
}

std::vector<AudioSegment> detect_endpoints_audio(const AudioSegment& audio,
                                                 const SegmenterConfig& cfg) {
  AudioEndpointDetector det(cfg, audio.sample_rate, audio.t0);
  auto out = det.push(audio.samples);
  for (auto& f : det.flush()) out.push_back(std::move(f));
  return out;
}

NoiseProfile NoiseProfile::zeros(std::size_t frame_len) {
  NoiseProfile p;
  p.frame_len = frame_len;
  p.magnitude.assign(frame_len / 2 + 1, 0.0);
  return p;
}

NoiseProfile estimate_noise_profile(const AudioSegment& audio, double leading_seconds,
                                    std::size_t frame_len) {
  if (frame_len < 4 || frame_len % 2 != 0) throw ArgumentError("frame length must be even");
  NoiseProfile p = NoiseProfile::zeros(frame_len);
  const auto n = std::min(audio.samples.size(),
                          static_cast<std::size_t>(std::max(0.0, leading_seconds) * audio.sample_rate));
  const auto w = dsp::hann_periodic(frame_len);
  const std::size_t hop = frame_len / 2;
  std::size_t frames = 0;
  std::vector<double> buf(frame_len);
  for (std::size_t start = 0; start + frame_len <= n; start += hop) {
    for (std::size_t k = 0; k < frame_len; ++k) buf[k] = w[k] * audio.samples[start + k];
    const auto spec = dsp::rfft(buf, frame_len);
    for (std::size_t b = 0; b < spec.size(); ++b) p.magnitude[b] += std::abs(spec[b]);
    ++frames;
  }
  if (frames == 0) throw ArgumentError("noise interval shorter than one frame");
  for (auto& m : p.magnitude) m /= static_cast<double>(frames);
  return p;
}

AudioSegment noise_reduce(const AudioSegment& audio, const NoiseProfile& noise, double floor) {
  const std::size_t n_fft = noise.frame_len;
  if (n_fft < 4 || n_fft % 2 != 0 || noise.magnitude.size() != n_fft / 2 + 1) {
    throw ArgumentError("malformed noise profile");
  }
  const std::size_t hop = n_fft / 2;
  const std::size_t len = audio.samples.size();
  AudioSegment out = audio;
  if (len == 0) return out;

  // Pad by half a frame on the left so every input sample is covered by two frames.
  const std::size_t last_start = ((hop + len - 1) / hop) * hop;
  std::vector<double> padded(last_start + n_fft, 0.0);
  for (std::size_t i = 0; i < len; ++i) padded[hop + i] = audio.samples[i];
  std::vector<double> acc(padded.size(), 0.0);
  const auto w = dsp::hann_periodic(n_fft);
  std::vector<double> buf(n_fft);
  for (std::size_t start = 0; start <= last_start; start += hop) {
    for (std::size_t k = 0; k < n_fft; ++k) buf[k] = w[k] * padded[start + k];
    auto spec = dsp::rfft(buf, n_fft);
    for (std::size_t b = 0; b < spec.size(); ++b) {
      const double mag = std::abs(spec[b]);
      const double cleaned = std::max(mag - noise.magnitude[b], floor * noise.magnitude[b]);
      spec[b] = mag > 0.0 ? spec[b] * (cleaned / mag) : std::complex<double>(cleaned, 0.0);
    }
    const auto frame = dsp::irfft(spec, n_fft);
    for (std::size_t k = 0; k < n_fft; ++k) acc[start + k] += frame[k];
  }
  for (std::size_t i = 0; i < len; ++i) {
    const double v = std::round(acc[hop + i]);
    out.samples[i] = static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
  }
  return out;
}

AmplitudeTracker::AmplitudeTracker(double rate_hz, double window_s) {
  const auto n = static_cast<std::size_t>(std::llround(rate_hz * window_s));
  if (n == 0) throw ArgumentError("amplitude window must hold at least one sample");
  ring_.assign(n, 0);
}

double AmplitudeTracker::push(std::int16_t sample) {
  const std::int64_t old = ring_[pos_];
  if (count_ == ring_.size()) sum_sq_ -= old * old;
  ring_[pos_] = sample;
  sum_sq_ += static_cast<std::int64_t>(sample) * sample;
  pos_ = (pos_ + 1) % ring_.size();
  count_ = std::min(count_ + 1, ring_.size());
  return amplitude();
}

double AmplitudeTracker::push(std::span<const std::int16_t> samples) {
  for (auto s : samples) push(s);
  return amplitude();
}

double AmplitudeTracker::amplitude() const {
  if (count_ == 0) return 0.0;
  const double rms = std::sqrt(static_cast<double>(sum_sq_) / static_cast<double>(count_));
  return std::clamp(rms / kFullScaleSineRms, 0.0, 1.0);
}

void AmplitudeTracker::reset() {
  std::fill(ring_.begin(), ring_.end(), 0);
  pos_ = 0;
  count_ = 0;
  sum_sq_ = 0;
}

}  // namespace diverlink
