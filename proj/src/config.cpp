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

#include "diverlink/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ArgumentError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ArgumentError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ArgumentError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

using Setter = std::function<void(SessionConfig&, std::string_view key, std::string_view value)>;

template <typename F>
Setter number(F field) {
  return [field](SessionConfig& c, std::string_view k, std::string_view v) { field(c) = to_double(k, v); };
}

template <typename F>
Setter count(F field) {
  return [field](SessionConfig& c, std::string_view k, std::string_view v) {
    field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(to_uint(k, v));
  };
}

void add_segmenter(std::map<std::string, Setter, std::less<>>& t, const std::string& prefix,
                   SegmenterConfig SessionConfig::*member) {
  auto field = [&](const char* name, double SegmenterConfig::*f) {
    t[prefix + name] = [member, f](SessionConfig& c, std::string_view k, std::string_view v) {
      (c.*member).*f = to_double(k, v);
    };
  };
  field("k_sigma", &SegmenterConfig::k_sigma);
  field("quiet_window", &SegmenterConfig::quiet_window);
  field("min_quiet", &SegmenterConfig::min_quiet);
  field("offset_ratio", &SegmenterConfig::offset_ratio);
  field("min_seg", &SegmenterConfig::min_seg);
  field("max_seg", &SegmenterConfig::max_seg);
  field("min_gap", &SegmenterConfig::min_gap);
  field("pad", &SegmenterConfig::pad);
  field("min_threshold", &SegmenterConfig::min_threshold);
  field("smooth", &SegmenterConfig::smooth);
  field("frame", &SegmenterConfig::frame);
  field("hop", &SegmenterConfig::hop);
  field("zcr_max", &SegmenterConfig::zcr_max);
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const auto table = [] {
    std::map<std::string, Setter, std::less<>> t;
    t["scheme"] = [](SessionConfig& c, std::string_view k, std::string_view v) {
      auto s = parse_scheme(v);
      if (!s) throw ArgumentError(std::string(k) + ": expected head, throat or multimodal");
      c.scheme = *s;
    };
    t["seed"] = count([](SessionConfig& c) -> std::uint64_t& { return c.seed; });

    for (const char* g : {"K1", "K2", "K3", "K4", "K5", "k", "max_speed"}) {
      t[std::string("gains.") + g] = [g](SessionConfig& c, std::string_view k, std::string_view v) {
        c.gains.set(g, to_double(k, v));
      };
    }
    t["mode.initial"] = [](SessionConfig& c, std::string_view k, std::string_view v) {
      auto m = parse_control_mode(v);
      if (!m) throw ArgumentError(std::string(k) + ": expected servo or thruster");
      c.initial_mode = *m;
    };

    t["plant.tau_servo"] = number([](SessionConfig& c) -> double& { return c.plant.tau_servo; });
    t["plant.servo_rate_max"] = number([](SessionConfig& c) -> double& { return c.plant.servo_rate_max; });
    t["plant.tau_thruster"] = number([](SessionConfig& c) -> double& { return c.plant.tau_thruster; });
    t["plant.thrust_coeff"] = number([](SessionConfig& c) -> double& { return c.plant.thrust_coeff; });
    t["plant.dt"] = number([](SessionConfig& c) -> double& { return c.plant.dt; });

    add_segmenter(t, "segmenter.imu.", &SessionConfig::imu_segmenter);
    add_segmenter(t, "segmenter.audio.", &SessionConfig::audio_segmenter);
    t["imu.rate"] = number([](SessionConfig& c) -> double& { return c.imu_rate; });
    t["imu.decimation"] = count([](SessionConfig& c) -> std::size_t& { return c.imu_decimation; });
    t["imu.cutoff"] = number([](SessionConfig& c) -> double& { return c.imu_cutoff; });

    t["mfcc.frame"] = number([](SessionConfig& c) -> double& { return c.mfcc.frame; });
    t["mfcc.hop"] = number([](SessionConfig& c) -> double& { return c.mfcc.hop; });
    t["mfcc.n_filters"] = count([](SessionConfig& c) -> int& { return c.mfcc.n_filters; });
    t["mfcc.pre_emphasis"] = number([](SessionConfig& c) -> double& { return c.mfcc.pre_emphasis; });
    t["mfcc.fmin"] = number([](SessionConfig& c) -> double& { return c.mfcc.fmin; });
    t["mfcc.fmax"] = number([](SessionConfig& c) -> double& { return c.mfcc.fmax; });
    t["mfcc.dither"] = number([](SessionConfig& c) -> double& { return c.mfcc.dither; });
    t["mfcc.energy_floor"] = number([](SessionConfig& c) -> double& { return c.mfcc.energy_floor; });

    t["lstm.hidden"] = count([](SessionConfig& c) -> int& { return c.lstm.hidden_dim; });
    t["lstm.epochs"] = count([](SessionConfig& c) -> int& { return c.lstm.epochs; });
    t["lstm.batch"] = count([](SessionConfig& c) -> int& { return c.lstm.batch_size; });
    t["lstm.learning_rate"] = number([](SessionConfig& c) -> double& { return c.lstm.learning_rate; });
    t["lstm.clip_norm"] = number([](SessionConfig& c) -> double& { return c.lstm.clip_norm; });
    t["lstm.reject_confidence"] = number([](SessionConfig& c) -> double& { return c.reject_confidence; });

    t["dtw.max_iters"] = count([](SessionConfig& c) -> std::size_t& { return c.dtw.dba.max_iters; });
    t["dtw.tolerance"] = number([](SessionConfig& c) -> double& { return c.dtw.dba.tolerance; });
    t["dtw.reject_percentile"] = number([](SessionConfig& c) -> double& { return c.dtw.reject_percentile; });
    t["dtw.reject_scale"] = number([](SessionConfig& c) -> double& { return c.dtw.reject_scale; });

    t["pipeline.tick"] = number([](SessionConfig& c) -> double& { return c.tick; });
    t["pipeline.queue_capacity"] = count([](SessionConfig& c) -> std::size_t& { return c.queue_capacity; });
    t["pipeline.audio_block"] = count([](SessionConfig& c) -> std::size_t& { return c.audio_block; });
    t["pipeline.noise_reduction"] = [](SessionConfig& c, std::string_view k, std::string_view v) {
      c.noise_reduction = to_bool(k, v);
    };
    t["pipeline.noise_lead"] = number([](SessionConfig& c) -> double& { return c.noise_lead; });
    t["replay.speed"] = number([](SessionConfig& c) -> double& { return c.speed; });

    t["templates"] = [](SessionConfig& c, std::string_view, std::string_view v) { c.templates_path = v; };
    t["model"] = [](SessionConfig& c, std::string_view, std::string_view v) { c.model_path = v; };

    t["telemetry.bind"] = [](SessionConfig& c, std::string_view, std::string_view v) { c.bind = v; };
    t["telemetry.port"] = [](SessionConfig& c, std::string_view k, std::string_view v) {
      const auto p = to_uint(k, v);
      if (p > 65535) throw ArgumentError(std::string(k) + ": port out of range");
      c.port = static_cast<std::uint16_t>(p);
    };
    t["telemetry.client_queue"] = count([](SessionConfig& c) -> std::size_t& { return c.client_queue; });
    t["telemetry.state_hz"] = number([](SessionConfig& c) -> double& { return c.state_hz; });
    return t;
  }();
  return table;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    cfg.entries_.push_back({std::string(key), std::string(value), lineno});
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(std::string key, std::string value) {
  entries_.push_back({std::move(key), std::move(value), 0});
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return it->value;
  }
  return std::nullopt;
}

void SessionConfig::apply(std::string_view key, std::string_view value) {
  const auto& t = setters();
  auto it = t.find(key);
  if (it == t.end()) throw ArgumentError("unknown config key '" + std::string(key) + "'");
  it->second(*this, key, value);
}

SessionConfig SessionConfig::from(const KeyValueConfig& kv) {
  SessionConfig c;
  for (const auto& e : kv.entries()) {
    try {
      c.apply(e.key, e.value);
    } catch (const ArgumentError& err) {
      if (e.line == 0) throw;
      throw ParseError(err.what(), e.line);
    }
  }
  c.validate();
  return c;
}

void SessionConfig::validate() const {
  gains.validate();
  plant_config().validate();
  if (!(imu_rate > 0.0) || imu_decimation == 0) throw ValidationError("imu.rate and imu.decimation must be positive");
  if (imu_cutoff > 0.0 && !(imu_cutoff < classify_rate() / 2.0)) {
    throw ValidationError("imu.cutoff must be below half the decimated rate");
  }
  if (!(tick > 0.0)) throw ValidationError("pipeline.tick must be positive");
  if (queue_capacity == 0 || audio_block == 0 || client_queue == 0) {
    throw ValidationError("queue sizes and audio block must be positive");
  }
  if (!(state_hz > 0.0)) throw ValidationError("telemetry.state_hz must be positive");
  if (mfcc.n_coeffs != kMfccDim) throw ValidationError("mfcc.n_coeffs is fixed at 20");
  if (reject_confidence < 0.0 || reject_confidence > 1.0) {
    throw ValidationError("lstm.reject_confidence must be in [0, 1]");
  }
  if (lstm.hidden_dim <= 0 || lstm.epochs <= 0 || lstm.batch_size <= 0) {
    throw ValidationError("lstm sizes must be positive");
  }
}

std::vector<std::string> SessionConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

}  // namespace diverlink
