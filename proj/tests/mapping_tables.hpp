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

// Row-by-row expectations for the three command mapping tables. Each check
// returns a description of every mismatching row; empty means exact.

#ifndef DIVERLINK_TESTS_MAPPING_TABLES_HPP
#define DIVERLINK_TESTS_MAPPING_TABLES_HPP

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "diverlink/error.hpp"
#include "diverlink/mapper.hpp"

namespace diverlink::tables {

using Opt = std::optional<double>;

inline std::string show(const Opt& v) { return v ? std::to_string(*v) : std::string("hold"); }

inline void expect_pair(std::vector<std::string>& errs, const std::string& row, const char* what, const Opt& l,
                        const Opt& r, const Opt& el, const Opt& er) {
  if (l != el || r != er) {
    errs.push_back(row + ": " + what + " (" + show(l) + "," + show(r) + ") expected (" + show(el) + "," + show(er) +
                   ")");
  }
}

inline void expect_pwm(std::vector<std::string>& errs, const std::string& row, const SuperlimbCommand& c,
                       double max_speed) {
  auto one = [&](const Opt& s, const std::optional<int>& p) {
    if (s.has_value() != p.has_value() || (s && *p != pwm_from_speed(*s, max_speed))) {
      errs.push_back(row + ": PWM does not follow the speed target");
    }
    if (p && (*p < kPwmMin || *p > kPwmMax)) errs.push_back(row + ": PWM out of range");
  };
  one(c.speed_left, c.pwm_left);
  one(c.speed_right, c.pwm_right);
}

// Proportional head control at angle 30 with K1=2, K2=1.5, K3=0.5.
inline std::vector<std::string> check_head_rows() {
  GainConfig g;
  g.K1 = 2.0;
  g.K2 = 1.5;
  g.K3 = 0.5;
  const double a = 30.0;
  struct Row {
    HeadMotionClass cls;
    Opt speed_l, speed_r, servo_l, servo_r;
  };
  const std::vector<Row> rows{
      {HeadMotionClass::Flexion, -g.K1 * a, -g.K1 * a, {}, {}},
      {HeadMotionClass::Extension, g.K1 * a, g.K1 * a, {}, {}},
      {HeadMotionClass::BendLeft, {}, {}, g.K2 * a, g.K2 * a},
      {HeadMotionClass::BendRight, {}, {}, -g.K2 * a, -g.K2 * a},
      {HeadMotionClass::RotateLeft, {}, {}, -g.K3 * a, g.K3 * a},
      {HeadMotionClass::RotateRight, {}, {}, g.K3 * a, -g.K3 * a},
  };
  std::vector<std::string> errs;
  for (const auto& r : rows) {
    const std::string name(to_string(r.cls));
    const SuperlimbCommand c = map_head_proportional(r.cls, a, g);
    expect_pair(errs, name, "speeds", c.speed_left, c.speed_right, r.speed_l, r.speed_r);
    expect_pair(errs, name, "servos", c.servo_left, c.servo_right, r.servo_l, r.servo_r);
    expect_pwm(errs, name, c, g.max_speed);
  }
  // Examples with the default gains and servo clamping.
  GainConfig d;
  const auto flex = map_head_proportional(HeadMotionClass::Flexion, 47.0, d);
  expect_pair(errs, "flexion 47", "speeds", flex.speed_left, flex.speed_right, -94.0, -94.0);
  const auto rot = map_head_proportional(HeadMotionClass::RotateRight, 70.0, d);
  expect_pair(errs, "right rotation 70", "servos", rot.servo_left, rot.servo_right, 70.0, -70.0);
  const auto zero = map_head_proportional(HeadMotionClass::BendLeft, 0.0, d);
  expect_pair(errs, "left bend 0", "servos", zero.servo_left, zero.servo_right, 0.0, 0.0);
  const auto big = map_head_proportional(HeadMotionClass::BendRight, 120.0, d);
  expect_pair(errs, "right bend 120", "servos", big.servo_left, big.servo_right, -90.0, -90.0);
  return errs;
}

// Scale and duration control at amplitude 0.5 with K4=60, K5=800.
inline std::vector<std::string> check_throat_rows() {
  GainConfig g;
  g.K4 = 60.0;
  g.K5 = 800.0;
  const double A = 0.5;
  struct Row {
    ScaleClass s;
    double ms;
    Opt servo_l, servo_r, speed_l, speed_r;
  };
  const std::vector<Row> rows{
      {ScaleClass::Do, 300.0, A * g.K4, A * g.K4, {}, {}},
      {ScaleClass::Do, 700.0, -A * g.K4, -A * g.K4, {}, {}},
      {ScaleClass::Re, 300.0, -A * g.K4, A * g.K4, {}, {}},
      {ScaleClass::Re, 700.0, A * g.K4, -A * g.K4, {}, {}},
      {ScaleClass::Mi, 300.0, {}, {}, A * g.K5, A * g.K5},
      {ScaleClass::Mi, 700.0, {}, {}, -A * g.K5, -A * g.K5},
  };
  std::vector<std::string> errs;
  for (const auto& r : rows) {
    const std::string name = std::string(to_string(r.s)) + (r.ms < 500.0 ? " short" : " long");
    const SuperlimbCommand c = map_throat_scale(r.s, r.ms, A, g);
    expect_pair(errs, name, "servos", c.servo_left, c.servo_right, r.servo_l, r.servo_r);
    expect_pair(errs, name, "speeds", c.speed_left, c.speed_right, r.speed_l, r.speed_r);
    expect_pwm(errs, name, c, g.max_speed);
  }
  GainConfig d;
  const auto do45 = map_throat_scale(ScaleClass::Do, 300.0, 0.5, d);
  expect_pair(errs, "do 300 ms A=0.5", "servos", do45.servo_left, do45.servo_right, 45.0, 45.0);
  const auto mi = map_throat_scale(ScaleClass::Mi, 700.0, 1.0, d);
  expect_pair(errs, "mi 700 ms A=1", "speeds", mi.speed_left, mi.speed_right, -1000.0, -1000.0);
  if (mi.pwm_left != 1100 || mi.pwm_right != 1100) errs.push_back("mi 700 ms A=1: PWM should be 1100");
  const auto re0 = map_throat_scale(ScaleClass::Re, 300.0, 0.0, d);
  expect_pair(errs, "re 300 ms A=0", "servos", re0.servo_left, re0.servo_right, 0.0, 0.0);
  if (classify_duration(499.999) != DurationClass::Short || classify_duration(500.0) != DurationClass::Long) {
    errs.push_back("duration boundary is not 500 ms");
  }
  for (ScaleClass s : {ScaleClass::Fa, ScaleClass::So}) {
    try {
      map_throat_scale(s, 300.0, 0.5, d);
      errs.push_back(std::string(to_string(s)) + ": accepted in the throat-only scheme");
    } catch (const ArgumentError&) {
    }
  }
  return errs;
}

// Action vectors from 100 rpm on both thrusters with k=200.
inline std::vector<std::string> check_multimodal_rows() {
  GainConfig g;
  g.k = 200.0;
  const ThrusterSpeeds start{100.0, 100.0};
  const double k = g.k;
  struct ThrustRow {
    ScaleClass s;
    DurationClass d;
    Opt left, right;  // absolute targets after the row, hold when empty
  };
  const std::vector<ThrustRow> thrust{
      {ScaleClass::Do, DurationClass::Short, 100.0 + k, {}},
      {ScaleClass::Do, DurationClass::Long, 100.0 - k, {}},
      {ScaleClass::Re, DurationClass::Short, {}, 100.0 + k},
      {ScaleClass::Re, DurationClass::Long, {}, 100.0 - k},
      {ScaleClass::Mi, DurationClass::Short, 0.0, 0.0},
      {ScaleClass::Mi, DurationClass::Long, 0.0, 0.0},
      {ScaleClass::Fa, DurationClass::Short, 100.0 + k, 100.0 + k},
      {ScaleClass::Fa, DurationClass::Long, 100.0 - k, 100.0 - k},
  };
  std::vector<std::string> errs;
  for (const auto& r : thrust) {
    const ActionVector v = ActionVector::throat(r.s, r.d);
    const std::string name = v.to_string();
    const MultimodalStep st = map_multimodal_action(v, ControlMode::ThrusterSpeed, start, g);
    expect_pair(errs, name, "speeds", st.command.speed_left, st.command.speed_right, r.left, r.right);
    expect_pair(errs, name, "servos", st.command.servo_left, st.command.servo_right, {}, {});
    expect_pwm(errs, name, st.command, g.max_speed);
    if (st.mode != ControlMode::ThrusterSpeed) errs.push_back(name + ": changed mode");
    const MultimodalStep idle = map_multimodal_action(v, ControlMode::ServoAngle, start, g);
    if (!idle.command.holds_everything() || idle.mode != ControlMode::ServoAngle) {
      errs.push_back(name + ": acted in servo mode");
    }
  }
  for (DurationClass d : {DurationClass::Short, DurationClass::Long}) {
    const ActionVector v = ActionVector::throat(ScaleClass::So, d);
    for (ControlMode m : {ControlMode::ServoAngle, ControlMode::ThrusterSpeed}) {
      const MultimodalStep st = map_multimodal_action(v, m, start, g);
      if (st.mode == m) errs.push_back(v.to_string() + ": did not switch mode");
      if (!st.command.holds_everything()) errs.push_back(v.to_string() + ": moved an actuator");
    }
  }
  struct ServoRow {
    HeadMotionClass h;
    Opt left, right;
  };
  const std::vector<ServoRow> servo{
      {HeadMotionClass::RotateLeft, -90.0, {}}, {HeadMotionClass::RotateRight, 90.0, {}},
      {HeadMotionClass::BendLeft, 90.0, {}},    {HeadMotionClass::BendRight, -90.0, {}},
      {HeadMotionClass::Extension, -90.0, -90.0}, {HeadMotionClass::Flexion, 90.0, 90.0},
  };
  for (const auto& r : servo) {
    const ActionVector v = ActionVector::motion(r.h);
    const std::string name = v.to_string();
    const MultimodalStep st = map_multimodal_action(v, ControlMode::ServoAngle, start, g);
    expect_pair(errs, name, "servos", st.command.servo_left, st.command.servo_right, r.left, r.right);
    expect_pair(errs, name, "speeds", st.command.speed_left, st.command.speed_right, {}, {});
    const MultimodalStep idle = map_multimodal_action(v, ControlMode::ThrusterSpeed, start, g);
    if (!idle.command.holds_everything()) errs.push_back(name + ": acted in thruster mode");
  }
  for (const ActionVector& bad : {ActionVector{}, ActionVector{ScaleClass::Do, DurationClass::Short,
                                                               HeadMotionClass::Flexion},
                                  ActionVector{ScaleClass::Do, std::nullopt, std::nullopt}}) {
    try {
      map_multimodal_action(bad, ControlMode::ServoAngle, start, g);
      errs.push_back(bad.to_string() + ": malformed vector accepted");
    } catch (const ContractError&) {
    }
  }
  return errs;
}

inline std::vector<std::string> check_pwm() {
  std::vector<std::string> errs;
  const double max = 1000.0;
  auto want = [&](double s, int p) {
    if (pwm_from_speed(s, max) != p) {
      errs.push_back("pwm(" + std::to_string(s) + ") = " + std::to_string(pwm_from_speed(s, max)) + ", expected " +
                     std::to_string(p));
    }
  };
  want(-max, 1100);
  want(0.0, 1500);
  want(max, 1900);
  want(-2.0 * max, 1100);
  want(3.0 * max, 1900);
  want(max / 2.0, 1700);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-5000.0, 5000.0);
  int prev = pwm_from_speed(-5000.0, max);
  for (int i = 0; i < 2000; ++i) {
    const int p = pwm_from_speed(u(rng), max);
    if (p < kPwmMin || p > kPwmMax) errs.push_back("pwm out of [1100,1900]");
  }
  for (double s = -5000.0; s <= 5000.0; s += 7.0) {
    const int p = pwm_from_speed(s, max);
    if (p < prev) errs.push_back("pwm is not monotone");
    prev = p;
  }
  return errs;
}

struct ModeMachineResult {
  int sequences = 0;
  std::vector<std::string> failures;
};

// Random token streams: mode flips exactly on "so" tokens.
inline ModeMachineResult check_mode_machine(int sequences, std::uint64_t seed) {
  ModeMachineResult out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(0, 40);
  std::uniform_int_distribution<int> pick(0, 15);
  for (int s = 0; s < sequences; ++s) {
    const ControlMode initial = (rng() & 1) ? ControlMode::ServoAngle : ControlMode::ThrusterSpeed;
    Mapper m(Scheme::Multimodal, GainConfig{}, initial);
    int so = 0;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      const int p = pick(rng);
      ActionVector v;
      if (p < 10) {
        v = ActionVector::throat(kScaleClasses[static_cast<std::size_t>(p / 2)],
                                 p % 2 ? DurationClass::Long : DurationClass::Short);
      } else {
        v = ActionVector::motion(kHeadMotionClasses[static_cast<std::size_t>(p - 10)]);
      }
      const ControlMode before = m.mode();
      const SuperlimbCommand c = m.on_action(v);
      const bool is_so = v.scale == ScaleClass::So;
      so += is_so ? 1 : 0;
      if (!is_so && m.mode() != before) out.failures.push_back("non-so token " + v.to_string() + " changed mode");
      auto in_range = [](const Opt& v, double lim) { return !v || (*v >= -lim && *v <= lim); };
      if (!in_range(c.servo_left, kServoLimit) || !in_range(c.servo_right, kServoLimit) ||
          !in_range(c.speed_left, m.gains().max_speed) || !in_range(c.speed_right, m.gains().max_speed)) {
        out.failures.push_back("command out of range after " + v.to_string());
      }
    }
    const bool flipped = so % 2 == 1;
    const ControlMode want = flipped ? (initial == ControlMode::ServoAngle ? ControlMode::ThrusterSpeed
                                                                          : ControlMode::ServoAngle)
                                     : initial;
    if (m.mode() != want) out.failures.push_back("sequence " + std::to_string(s) + ": final mode mismatch");
    ++out.sequences;
  }
  return out;
}

}  // namespace diverlink::tables

#endif  // DIVERLINK_TESTS_MAPPING_TABLES_HPP
