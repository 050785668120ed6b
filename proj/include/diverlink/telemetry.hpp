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

// Telemetry records and the version-1 wire format (docs/telemetry-protocol.md).
//
// Outbound:  {"v":1,"kind":<kind>,"t":<seconds>,"payload":{...}}
// Inbound:   {"v":1,"cmd":<cmd>,"args":{...}}
//
// Every message is one JSON object followed by '\n'.

#ifndef DIVERLINK_TELEMETRY_HPP
#define DIVERLINK_TELEMETRY_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diverlink/mapper.hpp"
#include "diverlink/superlimb_sim.hpp"

namespace diverlink {

inline constexpr int kProtocolVersion = 1;

enum class Modality { Imu, Audio };
std::string_view to_string(Modality m);

struct SegmentRecord {
  Modality modality = Modality::Imu;
  double start = 0.0;     // s, stream time
  double end = 0.0;       // s
  double detected = 0.0;  // s, stream time when the segment was confirmed
  bool accepted = false;
  std::string label;      // class name, empty when rejected
  double score = 0.0;     // DTW distance or LSTM confidence
};

struct TokenRecord {
  ActionVector token;
  std::optional<ActionVector> injected_from;  // set when a substitution rule fired
  double confidence = 0.0;
  double magnitude = 0.0;    // peak angle (deg) or amplitude in [0, 1]
  double duration_ms = 0.0;
  double segment_start = 0.0;
  double segment_end = 0.0;
  double emitted = 0.0;      // s, when the command reached the plant
  SuperlimbCommand command;
  ControlMode mode = ControlMode::ServoAngle;  // after the token

  double latency() const { return emitted - segment_end; }
};

struct HealthStats {
  std::size_t tokens = 0;
  std::size_t segments = 0;
  double mean_latency = 0.0;
  double max_latency = 0.0;
  std::uint64_t telemetry_dropped = 0;
  std::size_t segment_queue = 0;
  std::size_t token_queue = 0;
  bool running = false;
};

std::string state_message(const SuperlimbState& state, const ActuatorTargets& command, ControlMode mode);
std::string token_message(const TokenRecord& token);
std::string segment_message(const SegmentRecord& segment);
std::string health_message(double t, const HealthStats& health);
std::string ack_message(double t, std::string_view cmd, std::string_view detail);
std::string error_message(double t, std::string_view reason);

enum class ControlCommand { Start, Stop, SetGain, SetMode, LoadScenario };
std::string_view to_string(ControlCommand c);

struct ControlMessage {
  ControlCommand cmd = ControlCommand::Start;
  std::vector<std::pair<std::string, double>> gains;  // set_gain
  std::optional<ControlMode> mode;                    // set_mode
  std::string scenario;                               // load_scenario

  bool operator==(const ControlMessage&) const = default;
};

// Throws ParseError for malformed JSON and ValidationError for messages that
// do not match the version-1 control schema.
ControlMessage parse_control(std::string_view text);
std::string control_message(const ControlMessage& msg);

}  // namespace diverlink

#endif  // DIVERLINK_TELEMETRY_HPP
