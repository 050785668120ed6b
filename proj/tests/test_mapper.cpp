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

#include <doctest.h>

#include "diverlink/error.hpp"
#include "diverlink/mapper.hpp"
#include "mapping_tables.hpp"

using namespace diverlink;

namespace {

void check_clean(const std::vector<std::string>& errs) {
  for (const auto& e : errs) FAIL_CHECK(e);
  CHECK(errs.empty());
}

}  // namespace

TEST_CASE("head proportional rows") { check_clean(tables::check_head_rows()); }

TEST_CASE("throat scale and duration rows") { check_clean(tables::check_throat_rows()); }

TEST_CASE("multimodal action vector rows") { check_clean(tables::check_multimodal_rows()); }

TEST_CASE("pwm map endpoints, clamping and monotonicity") {
  check_clean(tables::check_pwm());
  CHECK(speed_from_pwm(1900, 1000.0) == 1000.0);
  CHECK(speed_from_pwm(1500, 1000.0) == 0.0);
  CHECK(speed_from_pwm(pwm_from_speed(-400.0, 1000.0), 1000.0) == doctest::Approx(-400.0));
  CHECK_THROWS_AS(pwm_from_speed(1.0, 0.0), ArgumentError);
}

TEST_CASE("mode flips exactly on so tokens") {
  const auto r = tables::check_mode_machine(300, 21);
  CHECK(r.sequences == 300);
  check_clean(r.failures);
}

TEST_CASE("left/right paired head motions are antisymmetric") {
  const GainConfig g;
  for (double a : {0.0, 12.5, 40.0, 89.0}) {
    const auto bl = map_head_proportional(HeadMotionClass::BendLeft, a, g);
    const auto br = map_head_proportional(HeadMotionClass::BendRight, a, g);
    CHECK(*bl.servo_left == -*br.servo_left);
    CHECK(*bl.servo_right == -*br.servo_right);
    const auto rl = map_head_proportional(HeadMotionClass::RotateLeft, a, g);
    const auto rr = map_head_proportional(HeadMotionClass::RotateRight, a, g);
    CHECK(*rl.servo_left == -*rr.servo_left);
    CHECK(*rl.servo_right == -*rr.servo_right);
    const auto fl = map_head_proportional(HeadMotionClass::Flexion, a, g);
    const auto ex = map_head_proportional(HeadMotionClass::Extension, a, g);
    CHECK(*fl.speed_left == -*ex.speed_left);
  }
  CHECK_THROWS_AS(map_head_proportional(HeadMotionClass::Flexion, -1.0, g), ArgumentError);
}

TEST_CASE("thruster accumulation clamps at max speed") {
  Mapper m(Scheme::Multimodal, GainConfig{}, ControlMode::ThrusterSpeed);
  for (int i = 0; i < 8; ++i) m.on_action(ActionVector::throat(ScaleClass::Fa, DurationClass::Short));
  CHECK(m.speeds().left == 1000.0);
  CHECK(m.speeds().right == 1000.0);
  const auto c = m.on_action(ActionVector::throat(ScaleClass::Re, DurationClass::Long));
  CHECK(*c.speed_right == 800.0);
  CHECK(!c.speed_left);
  m.on_action(ActionVector::throat(ScaleClass::Mi, DurationClass::Long));
  CHECK(m.speeds().left == 0.0);
  CHECK(m.speeds().right == 0.0);
}

TEST_CASE("throat scheme ignores fa and so") {
  Mapper m(Scheme::Throat);
  CHECK(!m.on_throat(ScaleClass::Fa, 100.0, 1.0));
  CHECK(!m.on_throat(ScaleClass::So, 100.0, 1.0));
  CHECK(m.on_throat(ScaleClass::Do, 100.0, 2.0)->servo_left == 90.0);  // amplitude clamps to 1
}

TEST_CASE("gains update by name and reject bad values") {
  Mapper m(Scheme::Throat);
  m.set_gain("K4", 45.0);
  CHECK(m.on_throat(ScaleClass::Do, 100.0, 1.0)->servo_left == 45.0);
  CHECK_THROWS_AS(m.set_gain("K9", 1.0), ArgumentError);
  CHECK_THROWS_AS(m.set_gain("K4", -1.0), ArgumentError);
  GainConfig g;
  g.K1 = 0.0;
  CHECK_THROWS_AS(Mapper(Scheme::Head, g), ArgumentError);
}

TEST_CASE("action vector text form round trips") {
  for (const char* text : {"(do,short,null)", "(so,long,null)", "(null,null,flexion)", "(null,null,left rotation)", "(null,null,RotateLeft)"}) {
    const auto v = ActionVector::parse(text);
    REQUIRE(v);
    CHECK(v->well_formed());
    CHECK(ActionVector::parse(v->to_string()) == v);
  }
  CHECK(ActionVector::parse(" ( re , long , null ) ") == ActionVector::throat(ScaleClass::Re, DurationClass::Long));
  CHECK(!ActionVector::parse("(do,short)"));
  CHECK(!ActionVector::parse("(la,short,null)"));
  CHECK(!ActionVector::parse("(do,medium,null)"));
  CHECK(!ActionVector::parse("(do,short,null,extra)"));
  CHECK(parse_control_mode("servo") == ControlMode::ServoAngle);
  CHECK(parse_control_mode("thruster") == ControlMode::ThrusterSpeed);
  CHECK(!parse_control_mode("auto"));
  for (Scheme s : {Scheme::Head, Scheme::Throat, Scheme::Multimodal}) CHECK(parse_scheme(to_string(s)) == s);
}
