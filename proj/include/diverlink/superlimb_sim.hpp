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

// Plant model of the two-thruster superlimb.
//
// Servos follow their target with a first-order lag (tau_servo) whose per-step
// change is additionally limited to servo_rate_max * dt. Thruster speed follows
// the speed encoded by the commanded PWM with time constant tau_thruster, and
// thrust is c_T * n * |n|.

#ifndef DIVERLINK_SUPERLIMB_SIM_HPP
#define DIVERLINK_SUPERLIMB_SIM_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "diverlink/mapper.hpp"

namespace diverlink {

struct PlantConfig {
  double tau_servo = 0.1;         // s
  double servo_rate_max = 180.0;  // deg/s
  double tau_thruster = 0.3;      // s
  double thrust_coeff = 2.5e-5;   // N/rpm^2
  double max_speed = 1000.0;      // rpm
  double dt = 0.01;               // s

  void validate() const;
};

struct SuperlimbState {
  double t = 0.0;
  double servo_left = 0.0;
  double servo_right = 0.0;
  double rpm_left = 0.0;
  double rpm_right = 0.0;
  double thrust_left = 0.0;
  double thrust_right = 0.0;

  bool operator==(const SuperlimbState&) const = default;
};

// Latched actuator setpoints.
struct ActuatorTargets {
  double servo_left = 0.0;
  double servo_right = 0.0;
  int pwm_left = kPwmNeutral;
  int pwm_right = kPwmNeutral;

  // Overwrites every field the command does not hold.
  void apply(const SuperlimbCommand& cmd);

  bool operator==(const ActuatorTargets&) const = default;
};

SuperlimbState step(const SuperlimbState& state, const ActuatorTargets& targets, double dt,
                    const PlantConfig& plant);

// Held fields keep the actuator at its current value.
SuperlimbState step(const SuperlimbState& state, const SuperlimbCommand& command, double dt,
                    const PlantConfig& plant);

// Fixed-step plant with latched targets.
class Plant {
 public:
  explicit Plant(PlantConfig cfg = {}, SuperlimbState initial = {});

  void apply(const SuperlimbCommand& cmd) { targets_.apply(cmd); }
  // Advances in whole dt steps while the next step does not pass `t`.
  void advance_to(double t);
  void step_once();

  const SuperlimbState& state() const { return state_; }
  const ActuatorTargets& targets() const { return targets_; }
  const PlantConfig& config() const { return cfg_; }

 private:
  PlantConfig cfg_;
  SuperlimbState state_;
  ActuatorTargets targets_;
  double t0_;
  long long steps_ = 0;
};

struct TimedCommand {
  double t = 0.0;
  SuperlimbCommand command;
};

struct TraceRow {
  ActuatorTargets command;
  SuperlimbState feedback;
};

// Integrates from t=0 through max(t_end, last command time). A command stamped t
// takes effect at the first step at or after t. Throws ContractError when the
// commands are not time-ordered.
std::vector<TraceRow> run_trace(std::span<const TimedCommand> commands, const PlantConfig& plant,
                                double t_end = 0.0);

std::string trace_csv(std::span<const TraceRow> rows);
void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> rows);

}  // namespace diverlink

#endif  // DIVERLINK_SUPERLIMB_SIM_HPP
