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

// Session configuration from "key = value" text. See docs/configuration.md
// for the key list.

#ifndef DIVERLINK_CONFIG_HPP
#define DIVERLINK_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diverlink/head_dtw.hpp"
#include "diverlink/mapper.hpp"
#include "diverlink/mfcc.hpp"
#include "diverlink/nn.hpp"
#include "diverlink/preprocess.hpp"
#include "diverlink/superlimb_sim.hpp"

namespace diverlink {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;  // 0 when set programmatically
};

// Ordered key/value pairs; later entries override earlier ones.
class KeyValueConfig {
 public:
  // '#' starts a comment; blank lines are ignored. Throws ParseError.
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  const std::vector<ConfigEntry>& entries() const { return entries_; }

 private:
  std::vector<ConfigEntry> entries_;
};

struct SessionConfig {
  Scheme scheme = Scheme::Multimodal;
  std::uint64_t seed = 7;

  GainConfig gains;
  PlantConfig plant;
  ControlMode initial_mode = ControlMode::ServoAngle;

  SegmenterConfig imu_segmenter = SegmenterConfig::imu_defaults();
  SegmenterConfig audio_segmenter = SegmenterConfig::audio_defaults();
  double imu_rate = 500.0;
  std::size_t imu_decimation = 5;
  double imu_cutoff = 5.0;

  MfccConfig mfcc;
  TrainConfig lstm;
  double reject_confidence = 0.5;
  TemplateOptions dtw;

  double tick = 0.25;
  std::size_t queue_capacity = 64;
  std::size_t audio_block = 256;
  bool noise_reduction = false;
  double noise_lead = 0.5;
  double speed = 0.0;  // <= 0: as fast as possible

  std::filesystem::path templates_path;
  std::filesystem::path model_path;

  std::string bind = "127.0.0.1";
  std::uint16_t port = 8765;
  std::size_t client_queue = 256;
  double state_hz = 20.0;

  // Throws ParseError (with the entry's line) for unknown keys or bad values.
  static SessionConfig from(const KeyValueConfig& kv);
  // Throws ArgumentError for unknown keys or bad values.
  void apply(std::string_view key, std::string_view value);
  void validate() const;

  // Every recognised key.
  static std::vector<std::string> keys();
  double classify_rate() const { return imu_rate / static_cast<double>(imu_decimation); }
  // Plant parameters with max_speed taken from the gains.
  PlantConfig plant_config() const {
    PlantConfig p = plant;
    p.max_speed = gains.max_speed;
    return p;
  }
};

}  // namespace diverlink

#endif  // DIVERLINK_CONFIG_HPP
