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

#include "diverlink/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>
#include <variant>

#include <nlohmann/json.hpp>

#include "diverlink/bounded_queue.hpp"
#include "diverlink/error.hpp"
#include "diverlink/preprocess.hpp"

namespace diverlink {

namespace {

constexpr auto kPollTimeout = std::chrono::milliseconds(50);

struct Tick {
  double t;
};

struct ImuSegmentEvent {
  MotionSegment segment;
  double start, end, detected;
};

struct AudioSegmentEvent {
  AudioSegment fragment;
  double detected;
  std::shared_ptr<const NoiseProfile> noise;
};

using IngestEvent = std::variant<Tick, ImuSegmentEvent, AudioSegmentEvent>;

struct Classified {
  ActionVector token;
  std::optional<ActionVector> injected_from;
  double confidence, magnitude, duration_ms, start, end, detected;
};

using MapEvent = std::variant<Tick, Classified>;

bool uses_imu(Scheme s) { return s != Scheme::Throat; }
bool uses_audio(Scheme s) { return s != Scheme::Head; }

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + s + "'", line);
  }
}

ActionVector parse_token(const std::string& s, std::size_t line) {
  auto v = ActionVector::parse(s);
  if (!v || !v->well_formed()) throw ParseError("malformed action vector '" + s + "'", line);
  return *v;
}

}  // namespace

// Scenario ------------------------------------------------------------------

Scenario Scenario::parse(const std::string& text, const std::filesystem::path& base) {
  Scenario sc;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto w = split_ws(line);
    const auto& d = w[0];
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (w.size() < lo || w.size() > hi) throw ParseError("wrong number of fields for '" + d + "'", lineno);
    };
    if (d == "scheme") {
      need(2, 2);
      sc.scheme = parse_scheme(w[1]);
      if (!sc.scheme) throw ParseError("unknown scheme '" + w[1] + "'", lineno);
    } else if (d == "imu") {
      need(2, 2);
      sc.imu_path = base / w[1];
    } else if (d == "audio") {
      need(2, 3);
      sc.audio_path = base / w[1];
      if (w.size() == 3) sc.audio_t0 = parse_number(w[2], lineno);
    } else if (d == "expect") {
      need(3, 3);
      sc.expected.push_back({parse_number(w[1], lineno), parse_token(w[2], lineno)});
    } else if (d == "inject") {
      need(3, 4);
      Injection inj{parse_token(w[1], lineno), parse_token(w[2], lineno), -1};
      if (w.size() == 4) inj.remaining = static_cast<int>(parse_number(w[3], lineno));
      sc.injections.push_back(inj);
    } else {
      throw ParseError("unknown directive '" + d + "'", lineno);
    }
  }
  return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path.parent_path());
}

std::string Scenario::to_text(const std::filesystem::path& base) const {
  std::ostringstream out;
  out << "# diverlink scenario\n";
  if (scheme) out << "scheme " << to_string(*scheme) << '\n';
  if (imu_path) out << "imu " << std::filesystem::relative(*imu_path, base).generic_string() << '\n';
  if (audio_path) {
    out << "audio " << std::filesystem::relative(*audio_path, base).generic_string() << ' ' << audio_t0 << '\n';
  }
  char buf[64];
  for (const auto& e : expected) {
    std::snprintf(buf, sizeof buf, "%.4f", e.t);
    out << "expect " << buf << ' ' << e.token.to_string() << '\n';
  }
  for (const auto& i : injections) {
    out << "inject " << i.from.to_string() << ' ' << i.to.to_string();
    if (i.remaining >= 0) out << ' ' << i.remaining;
    out << '\n';
  }
  return out.str();
}

void Scenario::check_files() const {
  for (const auto* p : {&imu_path, &audio_path}) {
    if (*p && !std::filesystem::exists(**p)) throw IoError("scenario references missing file " + (*p)->string());
  }
}

std::filesystem::path write_scenario(const std::filesystem::path& dir, const ScenarioData& data,
                                     const std::vector<Injection>& injections) {
  std::filesystem::create_directories(dir);
  Scenario sc;
  sc.scheme = parse_scheme(data.scheme);
  if (!data.imu.empty()) {
    sc.imu_path = dir / "imu.csv";
    write_imu_csv(*sc.imu_path, data.imu);
  }
  if (data.audio) {
    sc.audio_path = dir / "audio.wav";
    sc.audio_t0 = data.audio->t0;
    write_wav(*sc.audio_path, *data.audio);
  }
  sc.expected = data.expected;
  sc.injections = injections;
  const auto path = dir / "scenario.txt";
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << sc.to_text(dir);
  return path;
}

ReplayInput ReplayInput::load(const Scenario& scenario) {
  scenario.check_files();
  ReplayInput in;
  if (scenario.imu_path) in.imu = read_imu_csv(*scenario.imu_path);
  if (scenario.audio_path) {
    in.audio = read_wav(*scenario.audio_path);
    in.audio->t0 = scenario.audio_t0;
  }
  in.injections = scenario.injections;
  return in;
}

Models load_models(const SessionConfig& cfg, Scheme scheme) {
  Models m;
  if (uses_imu(scheme)) {
    if (cfg.templates_path.empty()) throw ValidationError("scheme needs 'templates' in the config");
    if (!std::filesystem::exists(cfg.templates_path)) {
      throw IoError("templates file not found: " + cfg.templates_path.string());
    }
    auto t = std::make_shared<TemplateSet>(TemplateSet::load(cfg.templates_path));
    if (std::abs(t->rate() - cfg.classify_rate()) > 1e-9) {
      throw ValidationError("templates were built at a different IMU rate than imu.rate / imu.decimation");
    }
    m.templates = std::move(t);
  }
  if (uses_audio(scheme)) {
    if (cfg.model_path.empty()) throw ValidationError("scheme needs 'model' in the config");
    if (!std::filesystem::exists(cfg.model_path)) throw IoError("model file not found: " + cfg.model_path.string());
    auto model = std::make_shared<ThroatModel>(ThroatModel::load(cfg.model_path));
    model->reject_confidence = cfg.reject_confidence;
    m.throat = std::move(model);
  }
  return m;
}

// Pipeline ------------------------------------------------------------------

Pipeline::Pipeline(SessionConfig cfg, Scheme scheme, Models models, TelemetrySink* sink)
    : cfg_(std::move(cfg)), scheme_(scheme), models_(std::move(models)), sink_(sink) {
  cfg_.validate();
}

void Pipeline::set_gain(std::string name, double value) {
  GainConfig probe;
  probe.set(name, value);  // validates name and value
  std::lock_guard lock(pending_mu_);
  pending_.gains.emplace_back(std::move(name), value);
}

void Pipeline::set_mode(ControlMode mode) {
  std::lock_guard lock(pending_mu_);
  pending_.mode = mode;
}

struct PipelineStages {
  Pipeline& p;
  const ReplayInput& in;
  BoundedQueue<IngestEvent> segments;
  BoundedQueue<MapEvent> tokens;
  std::vector<SegmentRecord> segment_log;
  ReplayResult result;
  double end_time = 0.0;

  PipelineStages(Pipeline& pipeline, const ReplayInput& input)
      : p(pipeline),
        in(input),
        segments(pipeline.cfg_.queue_capacity),
        tokens(pipeline.cfg_.queue_capacity) {}

  void publish(std::string msg) {
    if (p.sink_) p.sink_->publish(std::move(msg));
  }

  // Stage 1 ----------------------------------------------------------------
  void ingest() {
    const auto& cfg = p.cfg_;
    const double dt = cfg.plant_config().dt;
    std::optional<ImuReplaySource> imu;
    std::optional<AudioReplaySource> audio;
    if (uses_imu(p.scheme_) && !in.imu.empty()) imu.emplace(in.imu, cfg.speed);
    if (uses_audio(p.scheme_) && in.audio && !in.audio->samples.empty()) {
      audio.emplace(*in.audio, cfg.audio_block, cfg.speed);
    }

    std::optional<ImuEndpointDetector> imu_det;
    const double rate = cfg.classify_rate();
    if (imu) imu_det.emplace(cfg.imu_segmenter, rate, cfg.imu_cutoff);
    std::optional<AudioEndpointDetector> audio_det;
    if (audio) audio_det.emplace(cfg.audio_segmenter, in.audio->sample_rate, in.audio->t0);

    std::shared_ptr<const NoiseProfile> noise;
    AudioSegment noise_lead;
    if (audio) {
      noise_lead.sample_rate = in.audio->sample_rate;
      noise_lead.t0 = in.audio->t0;
    }

    std::size_t imu_index = 0;
    long long next_tick = 0;
    auto ticks_until = [&](double t) {
      while (static_cast<double>(next_tick) * dt <= t + 1e-9) {
        if (!segments.push(Tick{static_cast<double>(next_tick) * dt})) return false;
        ++next_tick;
      }
      return true;
    };
    auto imu_segment = [&](MotionSegment seg, double detected) {
      if (seg.samples.empty()) return true;
      const double start = seg.samples.front().t;
      const double end = seg.samples.back().t + 1.0 / rate;
      return segments.push(ImuSegmentEvent{std::move(seg), start, end, detected});
    };

    std::optional<ImuSample> next_imu;
    std::optional<AudioSegment> next_audio;
    double now = 0.0;
    bool any = false;
    bool open = true;
    while (open && !p.stop_.load()) {
      if (imu && !next_imu && !imu->exhausted()) next_imu = imu->next(kPollTimeout);
      if (audio && !next_audio && !audio->exhausted()) next_audio = audio->next(kPollTimeout);
      const bool imu_waiting = imu && !next_imu && !imu->exhausted();
      const bool audio_waiting = audio && !next_audio && !audio->exhausted();
      if (imu_waiting || audio_waiting) continue;  // timed out; re-check stop
      if (!next_imu && !next_audio) break;

      auto audio_end = [&] {
        return next_audio->t0 + static_cast<double>(next_audio->samples.size()) / next_audio->sample_rate;
      };
      const bool take_imu = next_imu && (!next_audio || next_imu->t <= audio_end());
      any = true;
      if (take_imu) {
        const ImuSample s = *next_imu;
        next_imu.reset();
        now = std::max(now, s.t);
        open = ticks_until(now);
        if (imu_index++ % cfg.imu_decimation != 0) continue;
        if (auto seg = imu_det->push(s)) open = open && imu_segment(std::move(*seg), now);
      } else {
        AudioSegment chunk = std::move(*next_audio);
        next_audio.reset();
        now = std::max(now, chunk.t0 + static_cast<double>(chunk.samples.size()) / chunk.sample_rate);
        open = ticks_until(now);
        if (cfg.noise_reduction && !noise) {
          noise_lead.samples.insert(noise_lead.samples.end(), chunk.samples.begin(), chunk.samples.end());
          if (noise_lead.duration() >= cfg.noise_lead) {
            noise = std::make_shared<NoiseProfile>(estimate_noise_profile(noise_lead, cfg.noise_lead));
          }
        }
        for (auto& frag : audio_det->push(chunk.samples)) {
          open = open && segments.push(AudioSegmentEvent{std::move(frag), now, noise});
        }
      }
    }
    if (open && !p.stop_.load()) {
      if (imu_det) {
        if (auto seg = imu_det->flush()) imu_segment(std::move(*seg), now);
      }
      if (audio_det) {
        for (auto& frag : audio_det->flush()) segments.push(AudioSegmentEvent{std::move(frag), now, noise});
      }
      if (any) ticks_until(now);
    }
    end_time = now;
    segments.close();
  }

  // Stage 2 ----------------------------------------------------------------
  void classify() {
    auto injections = in.injections;
    auto inject = [&](Classified& c) {
      for (auto& rule : injections) {
        if (rule.remaining != 0 && rule.from == c.token) {
          c.injected_from = c.token;
          c.token = rule.to;
          if (rule.remaining > 0) --rule.remaining;
          return;
        }
      }
    };
    while (auto ev = segments.pop()) {
      if (auto* tick = std::get_if<Tick>(&*ev)) {
        if (!tokens.push(*tick)) break;
        continue;
      }
      SegmentRecord rec;
      std::optional<Classified> out;
      if (auto* imu = std::get_if<ImuSegmentEvent>(&*ev)) {
        const auto r = classify_head(imu->segment, *p.models_.templates);
        rec = {Modality::Imu, imu->start, imu->end, imu->detected, r.cls.has_value(),
               r.cls ? std::string(to_string(*r.cls)) : std::string(), r.distance};
        if (r.cls) {
          const double threshold = p.models_.templates->get(*r.cls).reject_threshold;
          const double conf = threshold > 0.0 ? std::clamp(1.0 - r.distance / threshold, 0.0, 1.0) : 1.0;
          out = Classified{ActionVector::motion(*r.cls), std::nullopt, conf, r.peak_angle,
                           (imu->end - imu->start) * 1000.0, imu->start, imu->end, imu->detected};
        }
      } else {
        auto& a = std::get<AudioSegmentEvent>(*ev);
        const AudioSegment frag = a.noise ? noise_reduce(a.fragment, *a.noise) : a.fragment;
        const auto pred = p.models_.throat->classify(frag);
        AmplitudeTracker tracker(frag.sample_rate);
        double amplitude = 0.0;
        for (std::int16_t s : frag.samples) amplitude = std::max(amplitude, tracker.push(s));
        const double start = a.fragment.t0;
        const double end = start + a.fragment.duration();
        rec = {Modality::Audio, start, end, a.detected, pred.cls.has_value(),
               pred.cls ? std::string(to_string(*pred.cls)) : std::string(), pred.confidence};
        if (pred.cls) {
          const double ms = a.fragment.duration() * 1000.0;
          out = Classified{ActionVector::throat(*pred.cls, classify_duration(ms)), std::nullopt, pred.confidence,
                           amplitude, ms, start, end, a.detected};
        }
      }
      publish(segment_message(rec));
      segment_log.push_back(std::move(rec));
      if (out) {
        inject(*out);
        if (!tokens.push(std::move(*out))) break;
      }
    }
    tokens.close();
  }

  // Stage 3 ----------------------------------------------------------------
  void map() {
    const auto& cfg = p.cfg_;
    Mapper mapper(p.scheme_, cfg.gains, cfg.initial_mode);
    Plant plant(cfg.plant_config());
    std::deque<Classified> waiting;  // multimodal tokens awaiting their decision tick
    const double state_period = 1.0 / cfg.state_hz;
    double next_state = 0.0;
    double next_health = 1.0;
    double latency_sum = 0.0;

    auto record = [&] {
      result.trace.push_back({plant.targets(), plant.state()});
      const double t = plant.state().t;
      if (t + 1e-9 >= next_state) {
        publish(state_message(plant.state(), plant.targets(), mapper.mode()));
        next_state += state_period;
      }
      if (t + 1e-9 >= next_health) {
        publish(health_message(t, health(latency_sum)));
        next_health += 1.0;
      }
    };
    auto apply_controls = [&] {
      Pipeline::Pending pending;
      {
        std::lock_guard lock(p.pending_mu_);
        std::swap(pending, p.pending_);
      }
      for (const auto& [name, value] : pending.gains) mapper.set_gain(name, value);
      if (pending.mode) mapper.set_mode(*pending.mode);
    };
    auto advance = [&](double t) {
      while (plant.state().t + plant.config().dt <= t + 1e-9) {
        plant.step_once();
        record();
      }
    };
    auto emit = [&](const Classified& c, double at) {
      apply_controls();
      TokenRecord r;
      r.token = c.token;
      r.injected_from = c.injected_from;
      r.confidence = c.confidence;
      r.magnitude = c.magnitude;
      r.duration_ms = c.duration_ms;
      r.segment_start = c.start;
      r.segment_end = c.end;
      r.emitted = at;
      switch (p.scheme_) {
        case Scheme::Head: r.command = mapper.on_head(*c.token.head, c.magnitude); break;
        case Scheme::Throat:
          r.command = mapper.on_throat(*c.token.scale, c.duration_ms, c.magnitude).value_or(SuperlimbCommand{});
          break;
        case Scheme::Multimodal: r.command = mapper.on_action(c.token); break;
      }
      r.mode = mapper.mode();
      plant.apply(r.command);
      latency_sum += r.latency();
      result.tokens.push_back(r);
      publish(token_message(r));
      if (p.map_delay_.count() > 0) std::this_thread::sleep_for(p.map_delay_);
    };
    auto decision_tick = [&](double detected) { return std::ceil(detected / cfg.tick - 1e-9) * cfg.tick; };
    auto drain_waiting = [&](double t) {
      while (!waiting.empty() && decision_tick(waiting.front().detected) <= t + 1e-9) {
        const double at = decision_tick(waiting.front().detected);
        advance(at);
        emit(waiting.front(), at);
        waiting.pop_front();
      }
    };

    bool started = false;
    while (auto ev = tokens.pop()) {
      apply_controls();
      if (!started) {
        record();
        started = true;
      }
      if (auto* tick = std::get_if<Tick>(&*ev)) {
        drain_waiting(tick->t);
        advance(tick->t);
        continue;
      }
      auto& c = std::get<Classified>(*ev);
      if (p.scheme_ == Scheme::Multimodal) {
        waiting.push_back(std::move(c));
        drain_waiting(plant.state().t);
      } else {
        advance(c.detected);
        emit(c, c.detected);
      }
    }
    if (!p.stop_.load()) drain_waiting(std::numeric_limits<double>::infinity());
    result.final_mode = mapper.mode();
    if (started) publish(state_message(plant.state(), plant.targets(), mapper.mode()));
    result_latency_sum = latency_sum;
  }

  HealthStats health(double latency_sum) const {
    HealthStats h;
    h.running = true;
    h.tokens = result.tokens.size();
    h.segments = segment_log.size();
    h.mean_latency = h.tokens ? latency_sum / static_cast<double>(h.tokens) : 0.0;
    for (const auto& t : result.tokens) h.max_latency = std::max(h.max_latency, t.latency());
    h.telemetry_dropped = p.sink_ ? p.sink_->dropped() : 0;
    h.segment_queue = segments.size();
    h.token_queue = tokens.size();
    return h;
  }

  double result_latency_sum = 0.0;
};

ReplayResult Pipeline::run(const ReplayInput& input) {
  if (used_) throw ContractError("Pipeline::run may only be called once");
  used_ = true;
  for (const auto& i : input.injections) {
    if (!i.from.well_formed() || !i.to.well_formed()) throw ArgumentError("malformed injection rule");
  }
  if (!input.imu.empty()) validate_monotonic(input.imu);
  if (uses_imu(scheme_) && !input.imu.empty() && !models_.templates) {
    throw ValidationError("scheme needs head-motion templates");
  }
  if (uses_audio(scheme_) && input.audio && !input.audio->samples.empty() && !models_.throat) {
    throw ValidationError("scheme needs a throat model");
  }

  PipelineStages st(*this, input);
  std::exception_ptr errors[3];
  auto guarded = [&](int idx, auto fn) {
    try {
      fn();
    } catch (...) {
      errors[idx] = std::current_exception();
      stop_.store(true);
      st.segments.close();
      st.tokens.close();
    }
  };
  std::thread ingest([&] { guarded(0, [&] { st.ingest(); }); });
  std::thread classify([&] { guarded(1, [&] { st.classify(); }); });
  guarded(2, [&] { st.map(); });
  // Unblock upstream stages if the map stage stopped early.
  st.tokens.close();
  classify.join();
  st.segments.close();
  ingest.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ReplayResult out = std::move(st.result);
  out.segments = std::move(st.segment_log);
  out.duration = st.end_time;
  out.stopped = stop_.load();
  if (sink_) {
    HealthStats h = st.health(st.result_latency_sum);
    h.tokens = out.tokens.size();
    h.segments = out.segments.size();
    h.running = false;
    sink_->publish(health_message(out.trace.empty() ? 0.0 : out.trace.back().feedback.t, h));
  }
  return out;
}

// Summary -------------------------------------------------------------------

ReplaySummary summarize(const ReplayResult& result, const std::vector<ExpectedToken>& expected, double window) {
  ReplaySummary s;
  s.expected = expected.size();
  s.recognized = result.tokens.size();
  std::vector<bool> used(result.tokens.size(), false);
  for (const auto& e : expected) {
    for (std::size_t i = 0; i < result.tokens.size(); ++i) {
      if (used[i] || std::abs(result.tokens[i].segment_end - e.t) > window) continue;
      used[i] = true;
      if (result.tokens[i].token == e.token) ++s.correct;
      break;
    }
  }
  for (const auto& t : result.tokens) {
    s.mean_latency += t.latency();
    s.max_latency = std::max(s.max_latency, t.latency());
    s.mode_history.emplace_back(to_string(t.mode));
  }
  if (!result.tokens.empty()) s.mean_latency /= static_cast<double>(result.tokens.size());
  return s;
}

std::string ReplaySummary::to_json() const {
  nlohmann::json j{{"expected", expected},         {"recognized", recognized},
                   {"correct", correct},           {"mean_latency", mean_latency},
                   {"max_latency", max_latency},   {"mode_history", mode_history}};
  return j.dump(2) + "\n";
}

std::string tokens_csv(const std::vector<TokenRecord>& tokens) {
  std::string out =
      "emitted,token,injected_from,confidence,magnitude,duration_ms,segment_start,segment_end,latency,mode\n";
  char buf[256];
  for (const auto& t : tokens) {
    std::snprintf(buf, sizeof buf, "%.4f,\"%s\",\"%s\",%.6f,%.6f,%.3f,%.4f,%.4f,%.4f,%s\n", t.emitted,
                  t.token.to_string().c_str(), t.injected_from ? t.injected_from->to_string().c_str() : "",
                  t.confidence, t.magnitude, t.duration_ms, t.segment_start, t.segment_end, t.latency(),
                  std::string(to_string(t.mode)).c_str());
    out += buf;
  }
  return out;
}

}  // namespace diverlink
