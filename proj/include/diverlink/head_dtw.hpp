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

// Head-motion recognition: DTW, DTW barycenter averaging and the
// nearest-template classifier.

#ifndef DIVERLINK_HEAD_DTW_HPP
#define DIVERLINK_HEAD_DTW_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diverlink/preprocess.hpp"
#include "diverlink/signal_io.hpp"

namespace diverlink {

enum class HeadMotionClass { BendLeft, BendRight, Extension, Flexion, RotateLeft, RotateRight };

inline constexpr std::array<HeadMotionClass, 6> kHeadMotionClasses = {
    HeadMotionClass::BendLeft,   HeadMotionClass::BendRight,  HeadMotionClass::Extension,
    HeadMotionClass::Flexion,    HeadMotionClass::RotateLeft, HeadMotionClass::RotateRight};

std::string_view to_string(HeadMotionClass c);
std::optional<HeadMotionClass> parse_head_motion(std::string_view name);

// Command index shown to the operator: BendRight 1, BendLeft 2, Extension 3,
// Flexion 4, RotateLeft 5, RotateRight 6.
int command_index(HeadMotionClass c);

// Euler channel (0 roll, 1 pitch, 2 yaw) that carries the motion.
int governing_channel(HeadMotionClass c);

// Fixed-rate multichannel series, frames stored contiguously.
class Series {
 public:
  Series() = default;
  explicit Series(std::size_t channels) : channels_(channels) {}
  Series(std::size_t channels, std::vector<double> data);

  // One channel, one value per frame.
  static Series scalar(std::span<const double> values);

  std::size_t channels() const { return channels_; }
  std::size_t frames() const { return channels_ == 0 ? 0 : data_.size() / channels_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> frame(std::size_t i) const {
    return {data_.data() + i * channels_, channels_};
  }
  std::span<double> frame(std::size_t i) { return {data_.data() + i * channels_, channels_}; }
  double at(std::size_t frame, std::size_t channel) const { return data_[frame * channels_ + channel]; }

  void push_frame(std::span<const double> values);

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Series&) const = default;

 private:
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

// Six channels: ax, ay, az, roll, pitch, yaw.
Series imu_series(std::span<const ImuSample> samples);

// Linear interpolation onto `length` equally spaced frames spanning the input.
Series resample_linear(const Series& s, std::size_t length);

enum class LocalCost { Euclidean, SquaredEuclidean };

struct DtwResult {
  double distance = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> path;
};

// Symmetric step pattern {(1,0), (0,1), (1,1)}, no band.
DtwResult dtw(const Series& a, const Series& b, LocalCost cost = LocalCost::Euclidean);
// Same minimum as dtw(), without the path; O(min(n, m)) memory.
double dtw_distance(const Series& a, const Series& b, LocalCost cost = LocalCost::Euclidean);

struct DbaOptions {
  std::size_t max_iters = 10;
  double tolerance = 1e-6;  // relative cost improvement below which iteration stops
};

struct DbaResult {
  Series average;
  // Within-set cost sum_i DTW(average, s_i) under squared Euclidean local
  // cost; costs[0] belongs to the initial average.
  std::vector<double> costs;
};

// DTW barycenter averaging. Alignments use the squared Euclidean local cost,
// for which the per-frame mean is the exact minimiser.
DbaResult dba_average(std::span<const Series> sequences, const Series& init,
                      const DbaOptions& opts = {});
DbaResult dba_average(std::span<const Series> sequences, const DbaOptions& opts = {});

// Index of the sequence with the smallest summed DTW cost to the others.
std::size_t dtw_medoid(std::span<const Series> sequences, LocalCost cost);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  static ChannelStats fit(std::span<const Series> sequences);
  Series normalize(const Series& s) const;
  Series denormalize(const Series& s) const;
};

struct MotionTemplate {
  HeadMotionClass cls = HeadMotionClass::BendLeft;
  Series sequence;  // raw units
  std::size_t support_count = 0;
  double reject_threshold = 0.0;
};

struct LabeledSeries {
  Series series;
  HeadMotionClass label;
};

struct TemplateOptions {
  DbaOptions dba{};
  double rate = 100.0;
  double reject_percentile = 0.95;
  double reject_scale = 1.5;
};

class TemplateSet {
 public:
  TemplateSet() = default;
  TemplateSet(std::array<MotionTemplate, 6> templates, ChannelStats stats, double rate);

  const MotionTemplate& get(HeadMotionClass c) const { return templates_[static_cast<int>(c)]; }
  const std::array<MotionTemplate, 6>& templates() const { return templates_; }
  const ChannelStats& stats() const { return stats_; }
  double rate() const { return rate_; }

  // Templates in normalized channel space, indexed like kHeadMotionClasses.
  const std::array<Series, 6>& normalized() const { return normalized_; }

  std::string to_json() const;
  static TemplateSet from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static TemplateSet load(const std::filesystem::path& path);

 private:
  std::array<MotionTemplate, 6> templates_{};
  ChannelStats stats_;
  double rate_ = 100.0;
  std::array<Series, 6> normalized_{};
};

TemplateSet build_templates(std::span<const LabeledSeries> labeled, const TemplateOptions& opts = {});

struct NearestTemplate {
  std::size_t index = 0;
  double distance = 0.0;
  std::array<double, 6> distances{};
};

NearestTemplate nearest_template(const Series& segment, std::span<const Series, 6> templates);

struct HeadClassification {
  std::optional<HeadMotionClass> cls;  // nullopt: rejected as no intention
  HeadMotionClass nearest = HeadMotionClass::BendLeft;
  double distance = 0.0;
  double peak_angle = 0.0;  // degrees, max |governing Euler channel| in the segment
};

HeadClassification classify_series(const Series& raw, const TemplateSet& templates);
HeadClassification classify_head(const MotionSegment& segment, const TemplateSet& templates);

}  // namespace diverlink

#endif  // DIVERLINK_HEAD_DTW_HPP
