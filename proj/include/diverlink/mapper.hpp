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

// Intention tokens -> superlimb commands.
//
// Three control schemes are supported:
//   head       proportional control from the head-motion class and its angle
//   throat     scale + duration select the command, 64 ms amplitude scales it
//   multimodal action vectors drive thruster acceleration / servo targets,
//              "so" toggles between servo-angle and thruster-speed control

#ifndef DIVERLINK_MAPPER_HPP
#define DIVERLINK_MAPPER_HPP

#include <optional>
#include <string>
#include <string_view>

#include "diverlink/head_dtw.hpp"
#include "diverlink/nn.hpp"

namespace diverlink {

inline constexpr int kPwmMin = 1100;
inline constexpr int kPwmNeutral = 1500;
inline constexpr int kPwmMax = 1900;
inline constexpr double kServoLimit = 90.0;
inline constexpr double kShortDurationMs = 500.0;

enum class DurationClass { Short, Long };

std::string_view to_string(DurationClass d);
// Short iff duration < 500 ms.
DurationClass classify_duration(double duration_ms);

struct ActionVector {
  std::optional<ScaleClass> scale;
  std::optional<DurationClass> duration;
  std::optional<HeadMotionClass> head;

  static ActionVector throat(ScaleClass s, DurationClass d) { return {s, d, std::nullopt}; }
  static ActionVector motion(HeadMotionClass h) { return {std::nullopt, std::nullopt, h}; }

  // Exactly one of (scale and duration) or head is set.
  bool well_formed() const;
  // "(do,short,null)" style.
  std::string to_string() const;
  static std::optional<ActionVector> parse(std::string_view text);

  bool operator==(const ActionVector&) const = default;
};

enum class ControlMode { ServoAngle, ThrusterSpeed };

std::string_view to_string(ControlMode m);
std::optional<ControlMode> parse_control_mode(std::string_view name);

struct GainConfig {
  double K1 = 2.0;     // rpm per degree of pitch
  double K2 = 1.0;     // servo degrees per degree of roll
  double K3 = 1.0;     // servo degrees per degree of yaw
  double K4 = 90.0;    // servo degrees per unit amplitude
  double K5 = 1000.0;  // rpm per unit amplitude
  double k = 200.0;    // rpm per acceleration step
  double max_speed = 1000.0;

  // Throws ArgumentError unless every gain is positive.
  void validate() const;
  // Updates one gain by name ("K1".."K5", "k", "max_speed").
  void set(std::string_view name, double value);
};

// Converts a signed speed to a PWM code: 0 -> 1500, +max -> 1900, -max -> 1100,
// clamped outside [-max, max].
int pwm_from_speed(double speed_rpm, double max_speed);
// Inverse of pwm_from_speed for codes in [1100, 1900].
double speed_from_pwm(int pwm, double max_speed);

// nullopt fields mean "hold".
struct SuperlimbCommand {
  std::optional<double> servo_left;   // degrees, [-90, 90]
  std::optional<double> servo_right;
  std::optional<double> speed_left;   // rpm target, [-max, max]
  std::optional<double> speed_right;
  std::optional<int> pwm_left;        // [1100, 1900], derived from speed
  std::optional<int> pwm_right;

  bool holds_everything() const;
  bool operator==(const SuperlimbCommand&) const = default;
};

// Proportional head control. `angle` is the magnitude of the governing Euler excursion.
SuperlimbCommand map_head_proportional(HeadMotionClass cls, double angle, const GainConfig& gains);

// Throat control with do/re/mi. fa and so throw ArgumentError: they carry no
// command in this scheme.
SuperlimbCommand map_throat_scale(ScaleClass scale, double duration_ms, double amplitude,
                                   const GainConfig& gains);

struct ThrusterSpeeds {
  double left = 0.0;
  double right = 0.0;
};

struct MultimodalStep {
  SuperlimbCommand command;
  ControlMode mode = ControlMode::ServoAngle;
  ThrusterSpeeds speeds;
};

// One action vector against the current mode and accumulated thruster speeds.
// Throws ContractError for malformed vectors.
MultimodalStep map_multimodal_action(const ActionVector& v, ControlMode mode, ThrusterSpeeds speeds,
                                     const GainConfig& gains);

enum class Scheme { Head, Throat, Multimodal };

std::string_view to_string(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view name);

// Stateful single-owner mapper: holds the control mode and the accumulated
// thruster speeds; tokens are applied in arrival order.
class Mapper {
 public:
  explicit Mapper(Scheme scheme, GainConfig gains = {}, ControlMode initial = ControlMode::ServoAngle);

  // Head scheme: class + peak angle.
  SuperlimbCommand on_head(HeadMotionClass cls, double angle);
  // Throat scheme: scale + duration + amplitude. Returns nullopt for fa/so.
  std::optional<SuperlimbCommand> on_throat(ScaleClass scale, double duration_ms, double amplitude);
  // Multimodal scheme.
  SuperlimbCommand on_action(const ActionVector& v);

  Scheme scheme() const { return scheme_; }
  ControlMode mode() const { return mode_; }
  void set_mode(ControlMode m) { mode_ = m; }
  ThrusterSpeeds speeds() const { return speeds_; }
  const GainConfig& gains() const { return gains_; }
  void set_gain(std::string_view name, double value) { gains_.set(name, value); }

 private:
  Scheme scheme_;
  GainConfig gains_;
  ControlMode mode_;
  ThrusterSpeeds speeds_;
};

}  // namespace diverlink

#endif  // DIVERLINK_MAPPER_HPP
