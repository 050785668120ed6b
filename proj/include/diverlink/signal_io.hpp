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

// Sensor data model and file formats.
//
// IMU streams are CSV files with the header `t,ax,ay,az,roll,pitch,yaw`
// (seconds, m/s^2, degrees). Audio is RIFF/WAVE, PCM, 16-bit, mono.

#ifndef DIVERLINK_SIGNAL_IO_HPP
#define DIVERLINK_SIGNAL_IO_HPP

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace diverlink {

struct ImuSample {
  double t = 0.0;                       // seconds, strictly increasing in a stream
  std::array<double, 3> accel{};        // m/s^2, x y z
  std::array<double, 3> euler{};        // degrees: roll, pitch, yaw

  double roll() const { return euler[0]; }
  double pitch() const { return euler[1]; }
  double yaw() const { return euler[2]; }

  bool operator==(const ImuSample&) const = default;
};

struct AudioSegment {
  double sample_rate = 16000.0;
  std::vector<std::int16_t> samples;
  double t0 = 0.0;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Wraps an angle in degrees onto [-180, 180].
double normalize_degrees(double deg);

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
std::vector<ImuSample> parse_imu_csv(const std::string& text);
void write_imu_csv(const std::filesystem::path& path, std::span<const ImuSample> samples);

// Throws ValidationError unless timestamps are strictly increasing.
void validate_monotonic(std::span<const ImuSample> samples);

AudioSegment read_wav(const std::filesystem::path& path);
AudioSegment decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioSegment& audio);
void write_wav(const std::filesystem::path& path, const AudioSegment& audio);

// Keeps samples 0, factor, 2*factor, ...
std::vector<ImuSample> decimate_imu(std::span<const ImuSample> stream, std::size_t factor);

// Fixed-capacity sliding window; pushing into a full window evicts the oldest item.
template <typename T>
class StreamWindow {
 public:
  explicit StreamWindow(std::size_t capacity) : capacity_(capacity) {}

  void push(const T& item) {
    if (capacity_ == 0) return;
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(item);
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return items_.size() == capacity_; }
  bool empty() const { return items_.empty(); }
  void clear() { items_.clear(); }

  const T& operator[](std::size_t i) const { return items_[i]; }
  const T& front() const { return items_.front(); }
  const T& back() const { return items_.back(); }

  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
};

// Pull-based producer. next() returns nullopt on timeout; exhausted() turns
// true once no further items will ever arrive.
template <typename T>
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::optional<T> next(std::chrono::milliseconds timeout) = 0;
  virtual bool exhausted() const = 0;
};

// Paces items against the wall clock. speed 1.0 is real time; speed <= 0
// releases items as fast as they are pulled.
class ReplayClock {
 public:
  explicit ReplayClock(double speed) : speed_(speed) {}

  // Blocks until stream time `t` (relative to the first call) is due, or
  // until `timeout` expires. Returns true when the item is due.
  bool wait_until_due(double t, std::chrono::milliseconds timeout);

  double speed() const { return speed_; }

 private:
  double speed_;
  std::optional<std::chrono::steady_clock::time_point> start_;
  double t_start_ = 0.0;
};

class ImuReplaySource final : public SampleSource<ImuSample> {
 public:
  ImuReplaySource(std::vector<ImuSample> samples, double speed);

  std::optional<ImuSample> next(std::chrono::milliseconds timeout) override;
  bool exhausted() const override { return pos_ >= samples_.size(); }

 private:
  std::vector<ImuSample> samples_;
  std::size_t pos_ = 0;
  ReplayClock clock_;
};

// Audio is delivered in fixed-size blocks, each released once its last sample
// is due; the block start time is carried in t0.
class AudioReplaySource final : public SampleSource<AudioSegment> {
 public:
  AudioReplaySource(AudioSegment audio, std::size_t block, double speed);

  std::optional<AudioSegment> next(std::chrono::milliseconds timeout) override;
  bool exhausted() const override { return pos_ >= audio_.samples.size(); }

 private:
  AudioSegment audio_;
  std::size_t block_;
  std::size_t pos_ = 0;
  ReplayClock clock_;
};

}  // namespace diverlink

#endif  // DIVERLINK_SIGNAL_IO_HPP
