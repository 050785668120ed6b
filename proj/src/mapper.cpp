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

#include "diverlink/mapper.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

double clamp_servo(double deg) { return std::clamp(deg, -kServoLimit, kServoLimit); }

void set_speeds(SuperlimbCommand& cmd, std::optional<double> left, std::optional<double> right,
                const GainConfig& g) {
  if (left) {
    cmd.speed_left = std::clamp(*left, -g.max_speed, g.max_speed);
    cmd.pwm_left = pwm_from_speed(*cmd.speed_left, g.max_speed);
  }
  if (right) {
    cmd.speed_right = std::clamp(*right, -g.max_speed, g.max_speed);
    cmd.pwm_right = pwm_from_speed(*cmd.speed_right, g.max_speed);
  }
}

void set_servos(SuperlimbCommand& cmd, std::optional<double> left, std::optional<double> right) {
  if (left) cmd.servo_left = clamp_servo(*left);
  if (right) cmd.servo_right = clamp_servo(*right);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '(')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == ')')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(DurationClass d) { return d == DurationClass::Short ? "short" : "long"; }

DurationClass classify_duration(double duration_ms) {
  return duration_ms < kShortDurationMs ? DurationClass::Short : DurationClass::Long;
}

bool ActionVector::well_formed() const {
  const bool throat = scale.has_value() && duration.has_value();
  const bool throat_partial = scale.has_value() != duration.has_value();
  return !throat_partial && (throat != head.has_value());
}

std::string ActionVector::to_string() const {
  auto part = [](auto const& opt) -> std::string {
    return opt ? std::string(diverlink::to_string(*opt)) : std::string("null");
  };
  return "(" + part(scale) + "," + part(duration) + "," + part(head) + ")";
}

std::optional<ActionVector> ActionVector::parse(std::string_view text) {
  text = trim(text);
  std::array<std::string_view, 3> f{};
  for (int i = 0; i < 3; ++i) {
    auto comma = text.find(',');
    if (i < 2 && comma == std::string_view::npos) return std::nullopt;
    f[static_cast<std::size_t>(i)] = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  if (!text.empty()) return std::nullopt;
  ActionVector v;
  if (f[0] != "null") {
    v.scale = parse_scale(f[0]);
    if (!v.scale) return std::nullopt;
  }
  if (f[1] == "short") {
    v.duration = DurationClass::Short;
  } else if (f[1] == "long") {
    v.duration = DurationClass::Long;
  } else if (f[1] != "null") {
    return std::nullopt;
  }
  if (f[2] != "null") {
    v.head = parse_head_motion(f[2]);
    if (!v.head) return std::nullopt;
  }
  return v;
}

std::string_view to_string(ControlMode m) {
  return m == ControlMode::ServoAngle ? "servo" : "thruster";
}

std::optional<ControlMode> parse_control_mode(std::string_view name) {
  if (name == "servo" || name == "ServoAngle") return ControlMode::ServoAngle;
  if (name == "thruster" || name == "ThrusterSpeed") return ControlMode::ThrusterSpeed;
  return std::nullopt;
}

void GainConfig::validate() const {
  for (double v : {K1, K2, K3, K4, K5, k, max_speed}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("gains must be positive and finite");
  }
}

void GainConfig::set(std::string_view name, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ArgumentError("gain must be positive and finite");
  if (name == "K1") K1 = value;
  else if (name == "K2") K2 = value;
  else if (name == "K3") K3 = value;
  else if (name == "K4") K4 = value;
  else if (name == "K5") K5 = value;
  else if (name == "k") k = value;
  else if (name == "max_speed") max_speed = value;
  else throw ArgumentError("unknown gain '" + std::string(name) + "'");
}

int pwm_from_speed(double speed_rpm, double max_speed) {
  if (!(max_speed > 0.0)) throw ArgumentError("max_speed must be positive");
  const double s = std::clamp(speed_rpm / max_speed, -1.0, 1.0);
  const double span = (kPwmMax - kPwmMin) / 2.0;
  return static_cast<int>(std::lround(kPwmNeutral + s * span));
}

double speed_from_pwm(int pwm, double max_speed) {
  if (!(max_speed > 0.0)) throw ArgumentError("max_speed must be positive");
  const int p = std::clamp(pwm, kPwmMin, kPwmMax);
  return (p - kPwmNeutral) / ((kPwmMax - kPwmMin) / 2.0) * max_speed;
}

bool SuperlimbCommand::holds_everything() const {
  return !servo_left && !servo_right && !speed_left && !speed_right && !pwm_left && !pwm_right;
}

SuperlimbCommand map_head_proportional(HeadMotionClass cls, double angle, const GainConfig& g) {
  if (!(angle >= 0.0)) throw ArgumentError("head angle must be a non-negative magnitude");
  SuperlimbCommand cmd;
  switch (cls) {
    case HeadMotionClass::Flexion: set_speeds(cmd, -g.K1 * angle, -g.K1 * angle, g); break;
    case HeadMotionClass::Extension: set_speeds(cmd, g.K1 * angle, g.K1 * angle, g); break;
    case HeadMotionClass::BendLeft: set_servos(cmd, g.K2 * angle, g.K2 * angle); break;
    case HeadMotionClass::BendRight: set_servos(cmd, -g.K2 * angle, -g.K2 * angle); break;
    case HeadMotionClass::RotateLeft: set_servos(cmd, -g.K3 * angle, g.K3 * angle); break;
    case HeadMotionClass::RotateRight: set_servos(cmd, g.K3 * angle, -g.K3 * angle); break;
  }
  return cmd;
}

SuperlimbCommand map_throat_scale(ScaleClass scale, double duration_ms, double amplitude,
                                   const GainConfig& g) {
  const double a = std::clamp(amplitude, 0.0, 1.0);
  const bool shrt = classify_duration(duration_ms) == DurationClass::Short;
  SuperlimbCommand cmd;
  switch (scale) {
    case ScaleClass::Do:
      if (shrt) set_servos(cmd, a * g.K4, a * g.K4);
      else set_servos(cmd, -a * g.K4, -a * g.K4);
      break;
    case ScaleClass::Re:
      if (shrt) set_servos(cmd, -a * g.K4, a * g.K4);
      else set_servos(cmd, a * g.K4, -a * g.K4);
      break;
    case ScaleClass::Mi:
      if (shrt) set_speeds(cmd, a * g.K5, a * g.K5, g);
      else set_speeds(cmd, -a * g.K5, -a * g.K5, g);
      break;
    case ScaleClass::Fa:
    case ScaleClass::So:
      throw ArgumentError("scale '" + std::string(to_string(scale)) +
                          "' is unsupported in the throat-only scheme");
  }
  return cmd;
}

MultimodalStep map_multimodal_action(const ActionVector& v, ControlMode mode, ThrusterSpeeds speeds,
                                     const GainConfig& g) {
  if (!v.well_formed()) throw ContractError("malformed action vector " + v.to_string());
  MultimodalStep out;
  out.mode = mode;
  out.speeds = speeds;

  if (v.scale) {
    const double sign = *v.duration == DurationClass::Short ? 1.0 : -1.0;
    if (*v.scale == ScaleClass::So) {
      out.mode = mode == ControlMode::ServoAngle ? ControlMode::ThrusterSpeed : ControlMode::ServoAngle;
      return out;
    }
    if (mode != ControlMode::ThrusterSpeed) return out;
    auto clamp_speed = [&](double s) { return std::clamp(s, -g.max_speed, g.max_speed); };
    switch (*v.scale) {
      case ScaleClass::Do:
        out.speeds.left = clamp_speed(speeds.left + sign * g.k);
        set_speeds(out.command, out.speeds.left, std::nullopt, g);
        break;
      case ScaleClass::Re:
        out.speeds.right = clamp_speed(speeds.right + sign * g.k);
        set_speeds(out.command, std::nullopt, out.speeds.right, g);
        break;
      case ScaleClass::Mi:
        out.speeds = {0.0, 0.0};
        set_speeds(out.command, 0.0, 0.0, g);
        break;
      case ScaleClass::Fa:
        out.speeds.left = clamp_speed(speeds.left + sign * g.k);
        out.speeds.right = clamp_speed(speeds.right + sign * g.k);
        set_speeds(out.command, out.speeds.left, out.speeds.right, g);
        break;
      case ScaleClass::So:
        break;
    }
    return out;
  }

  if (mode != ControlMode::ServoAngle) return out;
  switch (*v.head) {
    case HeadMotionClass::RotateLeft: set_servos(out.command, -90.0, std::nullopt); break;
    case HeadMotionClass::RotateRight: set_servos(out.command, 90.0, std::nullopt); break;
    case HeadMotionClass::BendLeft: set_servos(out.command, 90.0, std::nullopt); break;
    case HeadMotionClass::BendRight: set_servos(out.command, -90.0, std::nullopt); break;
    case HeadMotionClass::Extension: set_servos(out.command, -90.0, -90.0); break;
    case HeadMotionClass::Flexion: set_servos(out.command, 90.0, 90.0); break;
  }
  return out;
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::Head: return "head";
    case Scheme::Throat: return "throat";
    case Scheme::Multimodal: return "multimodal";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  if (name == "head") return Scheme::Head;
  if (name == "throat") return Scheme::Throat;
  if (name == "multimodal") return Scheme::Multimodal;
  return std::nullopt;
}

Mapper::Mapper(Scheme scheme, GainConfig gains, ControlMode initial)
    : scheme_(scheme), gains_(gains), mode_(initial) {
  gains_.validate();
}

SuperlimbCommand Mapper::on_head(HeadMotionClass cls, double angle) {
  return map_head_proportional(cls, angle, gains_);
}

std::optional<SuperlimbCommand> Mapper::on_throat(ScaleClass scale, double duration_ms, double amplitude) {
  if (scale == ScaleClass::Fa || scale == ScaleClass::So) return std::nullopt;
  return map_throat_scale(scale, duration_ms, amplitude, gains_);
}

SuperlimbCommand Mapper::on_action(const ActionVector& v) {
  MultimodalStep step = map_multimodal_action(v, mode_, speeds_, gains_);
  mode_ = step.mode;
  speeds_ = step.speeds;
  return step.command;
}

}  // namespace diverlink
