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

#include "diverlink/telemetry.hpp"

#include <nlohmann/json.hpp>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

using nlohmann::json;

std::string frame(std::string_view kind, double t, json payload) {
  json j;
  j["v"] = kProtocolVersion;
  j["kind"] = kind;
  j["t"] = t;
  j["payload"] = std::move(payload);
  return j.dump() + "\n";
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json name_or_null(const auto& v) {
  return v ? json(std::string(to_string(*v))) : json(nullptr);
}

json command_json(const SuperlimbCommand& c) {
  return {{"servo_left", opt(c.servo_left)},   {"servo_right", opt(c.servo_right)},
          {"speed_left", opt(c.speed_left)},   {"speed_right", opt(c.speed_right)},
          {"pwm_left", opt(c.pwm_left)},       {"pwm_right", opt(c.pwm_right)}};
}

json token_json(const ActionVector& v) {
  return {{"text", v.to_string()},
          {"scale", name_or_null(v.scale)},
          {"duration", name_or_null(v.duration)},
          {"head", name_or_null(v.head)}};
}

}  // namespace

std::string_view to_string(Modality m) { return m == Modality::Imu ? "imu" : "audio"; }

std::string state_message(const SuperlimbState& s, const ActuatorTargets& cmd, ControlMode mode) {
  return frame("state", s.t,
               {{"servo", {{"left", s.servo_left}, {"right", s.servo_right}}},
                {"rpm", {{"left", s.rpm_left}, {"right", s.rpm_right}}},
                {"thrust", {{"left", s.thrust_left}, {"right", s.thrust_right}}},
                {"command",
                 {{"servo", {{"left", cmd.servo_left}, {"right", cmd.servo_right}}},
                  {"pwm", {{"left", cmd.pwm_left}, {"right", cmd.pwm_right}}}}},
                {"mode", to_string(mode)}});
}

std::string token_message(const TokenRecord& r) {
  json p = token_json(r.token);
  p["injected_from"] = r.injected_from ? token_json(*r.injected_from) : json(nullptr);
  p["confidence"] = r.confidence;
  p["magnitude"] = r.magnitude;
  p["duration_ms"] = r.duration_ms;
  p["segment"] = {{"start", r.segment_start}, {"end", r.segment_end}};
  p["latency"] = r.latency();
  p["command"] = command_json(r.command);
  p["mode"] = to_string(r.mode);
  return frame("token", r.emitted, std::move(p));
}

std::string segment_message(const SegmentRecord& s) {
  return frame("segment", s.detected,
               {{"modality", to_string(s.modality)},
                {"start", s.start},
                {"end", s.end},
                {"accepted", s.accepted},
                {"label", s.accepted ? json(s.label) : json(nullptr)},
                {"score", s.score}});
}

std::string health_message(double t, const HealthStats& h) {
  return frame("health", t,
               {{"running", h.running},
                {"tokens", h.tokens},
                {"segments", h.segments},
                {"latency", {{"mean", h.mean_latency}, {"max", h.max_latency}}},
                {"telemetry_dropped", h.telemetry_dropped},
                {"queues", {{"segment", h.segment_queue}, {"token", h.token_queue}}}});
}

std::string ack_message(double t, std::string_view cmd, std::string_view detail) {
  return frame("ack", t, {{"cmd", cmd}, {"detail", detail}});
}

std::string error_message(double t, std::string_view reason) {
  return frame("error", t, {{"message", reason}});
}

std::string_view to_string(ControlCommand c) {
  switch (c) {
    case ControlCommand::Start: return "start";
    case ControlCommand::Stop: return "stop";
    case ControlCommand::SetGain: return "set_gain";
    case ControlCommand::SetMode: return "set_mode";
    case ControlCommand::LoadScenario: return "load_scenario";
  }
  return "?";
}

ControlMessage parse_control(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), 1);
  }
  if (!j.is_object()) throw ValidationError("control message must be a JSON object");
  if (!j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != kProtocolVersion) {
    throw ValidationError("unsupported protocol version (expected v=1)");
  }
  if (!j.contains("cmd") || !j["cmd"].is_string()) throw ValidationError("missing string field 'cmd'");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "v" && it.key() != "cmd" && it.key() != "args") {
      throw ValidationError("unexpected field '" + it.key() + "'");
    }
  }
  const json args = j.contains("args") ? j["args"] : json::object();
  if (!args.is_object()) throw ValidationError("'args' must be an object");

  const auto cmd = j["cmd"].get<std::string>();
  ControlMessage m;
  if (cmd == "start" || cmd == "stop") {
    m.cmd = cmd == "start" ? ControlCommand::Start : ControlCommand::Stop;
    if (!args.empty()) throw ValidationError(cmd + " takes no arguments");
  } else if (cmd == "set_gain") {
    m.cmd = ControlCommand::SetGain;
    if (args.empty()) throw ValidationError("set_gain needs at least one gain");
    GainConfig probe;
    for (auto it = args.begin(); it != args.end(); ++it) {
      if (!it.value().is_number()) throw ValidationError("gain '" + it.key() + "' must be a number");
      const double v = it.value().get<double>();
      try {
        probe.set(it.key(), v);
      } catch (const ArgumentError& e) {
        throw ValidationError(e.what());
      }
      m.gains.emplace_back(it.key(), v);
    }
  } else if (cmd == "set_mode") {
    m.cmd = ControlCommand::SetMode;
    if (args.size() != 1 || !args.contains("mode") || !args["mode"].is_string()) {
      throw ValidationError("set_mode needs args {\"mode\": \"servo\"|\"thruster\"}");
    }
    const auto mode = args["mode"].get<std::string>();
    if (mode != "servo" && mode != "thruster") throw ValidationError("mode must be servo or thruster");
    m.mode = parse_control_mode(mode);
  } else if (cmd == "load_scenario") {
    m.cmd = ControlCommand::LoadScenario;
    if (args.size() != 1 || !args.contains("path") || !args["path"].is_string()) {
      throw ValidationError("load_scenario needs args {\"path\": <string>}");
    }
    m.scenario = args["path"].get<std::string>();
    if (m.scenario.empty()) throw ValidationError("scenario path is empty");
  } else {
    throw ValidationError("unknown cmd '" + cmd + "'");
  }
  return m;
}

std::string control_message(const ControlMessage& m) {
  json args = json::object();
  switch (m.cmd) {
    case ControlCommand::Start:
    case ControlCommand::Stop: break;
    case ControlCommand::SetGain:
      for (const auto& [k, v] : m.gains) args[k] = v;
      break;
    case ControlCommand::SetMode:
      if (m.mode) args["mode"] = to_string(*m.mode);
      break;
    case ControlCommand::LoadScenario: args["path"] = m.scenario; break;
  }
  json j{{"v", kProtocolVersion}, {"cmd", to_string(m.cmd)}, {"args", args}};
  return j.dump() + "\n";
}

}  // namespace diverlink
