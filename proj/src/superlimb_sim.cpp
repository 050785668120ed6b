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

#include "diverlink/superlimb_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

double servo_step(double pos, double target, double dt, const PlantConfig& p) {
  const double lag = (target - pos) * -std::expm1(-dt / p.tau_servo);
  const double max_move = p.servo_rate_max * dt;
  const double next = pos + std::clamp(lag, -max_move, max_move);
  return std::clamp(next, -kServoLimit, kServoLimit);
}

double rpm_step(double rpm, double target, double dt, const PlantConfig& p) {
  const double next = target + (rpm - target) * std::exp(-dt / p.tau_thruster);
  return std::clamp(next, -p.max_speed, p.max_speed);
}

double thrust(double rpm, const PlantConfig& p) { return p.thrust_coeff * rpm * std::abs(rpm); }

SuperlimbState advance(const SuperlimbState& s, double servo_l, double servo_r, double rpm_l,
                       double rpm_r, double dt, const PlantConfig& p) {
  if (!(dt > 0.0)) throw ArgumentError("plant step requires dt > 0");
  SuperlimbState n;
  n.t = s.t + dt;
  n.servo_left = servo_step(s.servo_left, servo_l, dt, p);
  n.servo_right = servo_step(s.servo_right, servo_r, dt, p);
  n.rpm_left = rpm_step(s.rpm_left, rpm_l, dt, p);
  n.rpm_right = rpm_step(s.rpm_right, rpm_r, dt, p);
  n.thrust_left = thrust(n.rpm_left, p);
  n.thrust_right = thrust(n.rpm_right, p);
  return n;
}

}  // namespace

void PlantConfig::validate() const {
  for (double v : {tau_servo, servo_rate_max, tau_thruster, thrust_coeff, max_speed, dt}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("plant parameters must be positive");
  }
}

void ActuatorTargets::apply(const SuperlimbCommand& cmd) {
  if (cmd.servo_left) servo_left = std::clamp(*cmd.servo_left, -kServoLimit, kServoLimit);
  if (cmd.servo_right) servo_right = std::clamp(*cmd.servo_right, -kServoLimit, kServoLimit);
  if (cmd.pwm_left) pwm_left = std::clamp(*cmd.pwm_left, kPwmMin, kPwmMax);
  if (cmd.pwm_right) pwm_right = std::clamp(*cmd.pwm_right, kPwmMin, kPwmMax);
}

SuperlimbState step(const SuperlimbState& state, const ActuatorTargets& targets, double dt,
                    const PlantConfig& plant) {
  return advance(state, targets.servo_left, targets.servo_right,
                 speed_from_pwm(targets.pwm_left, plant.max_speed),
                 speed_from_pwm(targets.pwm_right, plant.max_speed), dt, plant);
}

SuperlimbState step(const SuperlimbState& state, const SuperlimbCommand& command, double dt,
                    const PlantConfig& plant) {
  auto rpm_target = [&](const std::optional<int>& pwm, double current) {
    return pwm ? speed_from_pwm(*pwm, plant.max_speed) : current;
  };
  return advance(state, command.servo_left.value_or(state.servo_left),
                 command.servo_right.value_or(state.servo_right),
                 rpm_target(command.pwm_left, state.rpm_left),
                 rpm_target(command.pwm_right, state.rpm_right), dt, plant);
}

Plant::Plant(PlantConfig cfg, SuperlimbState initial) : cfg_(cfg), state_(initial), t0_(initial.t) {
  cfg_.validate();
}

void Plant::step_once() {
  state_ = step(state_, targets_, cfg_.dt, cfg_);
  // Keep time on the integer grid so long runs do not drift.
  ++steps_;
  state_.t = t0_ + static_cast<double>(steps_) * cfg_.dt;
}

void Plant::advance_to(double t) {
  const double eps = cfg_.dt * 1e-6;
  while (state_.t + cfg_.dt <= t + eps) step_once();
}

std::vector<TraceRow> run_trace(std::span<const TimedCommand> commands, const PlantConfig& plant,
                                double t_end) {
  plant.validate();
  for (std::size_t i = 1; i < commands.size(); ++i) {
    if (commands[i].t < commands[i - 1].t) throw ContractError("commands are not time-ordered");
  }
  if (!commands.empty()) t_end = std::max(t_end, commands.back().t);
  const auto n_steps = static_cast<long long>(std::ceil(t_end / plant.dt - 1e-9));

  std::vector<TraceRow> rows;
  rows.reserve(static_cast<std::size_t>(n_steps + 1));
  SuperlimbState state;
  ActuatorTargets targets;
  std::size_t next = 0;
  for (long long k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * plant.dt;
    while (next < commands.size() && commands[next].t <= t + plant.dt * 1e-9) {
      targets.apply(commands[next].command);
      ++next;
    }
    state.t = t;
    rows.push_back({targets, state});
    state = step(state, targets, plant.dt, plant);
  }
  return rows;
}

std::string trace_csv(std::span<const TraceRow> rows) {
  std::string out =
      "t,cmd_servo_l,cmd_servo_r,fb_servo_l,fb_servo_r,cmd_pwm_l,cmd_pwm_r,fb_rpm_l,fb_rpm_r,"
      "thrust_l,thrust_r\n";
  char buf[320];
  for (const auto& r : rows) {
    const auto& c = r.command;
    const auto& f = r.feedback;
    std::snprintf(buf, sizeof buf, "%.4f,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g,%.17g,%.17g\n", f.t,
                  c.servo_left, c.servo_right, f.servo_left, f.servo_right, c.pwm_left, c.pwm_right,
                  f.rpm_left, f.rpm_right, f.thrust_left, f.thrust_right);
    out += buf;
  }
  return out;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << trace_csv(rows);
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace diverlink
