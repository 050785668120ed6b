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

#include "diverlink/diverlink.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "diverlink/config.hpp"
#include "diverlink/error.hpp"
#include "diverlink/session.hpp"
#include "diverlink/superlimb_sim.hpp"
#include "diverlink/workflows.hpp"

#ifndef DIVERLINK_VERSION
#define DIVERLINK_VERSION "0.0.0"
#endif

using namespace diverlink;

struct dl_config {
  KeyValueConfig kv;
  SessionConfig session;
};

struct dl_session {
  std::unique_ptr<Session> session;
};

struct dl_mapper {
  Mapper mapper;
};

struct dl_plant {
  Plant plant;
};

namespace {

thread_local std::string g_last_error;

dl_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return DL_ERR_ARGUMENT;
    case ErrorKind::Parse: return DL_ERR_PARSE;
    case ErrorKind::Validation: return DL_ERR_VALIDATION;
    case ErrorKind::UnsupportedFormat: return DL_ERR_UNSUPPORTED;
    case ErrorKind::Io: return DL_ERR_IO;
    case ErrorKind::Training: return DL_ERR_TRAINING;
    case ErrorKind::Numeric: return DL_ERR_NUMERIC;
    case ErrorKind::Contract: return DL_ERR_CONTRACT;
    case ErrorKind::Runtime: return DL_ERR_RUNTIME;
  }
  return DL_ERR_INTERNAL;
}

template <typename Fn>
dl_status guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return DL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DL_ERR_RUNTIME;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return DL_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DL_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ArgumentError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

std::optional<Scheme> scheme_of(dl_scheme s) {
  switch (s) {
    case DL_SCHEME_DEFAULT: return std::nullopt;
    case DL_SCHEME_HEAD: return Scheme::Head;
    case DL_SCHEME_THROAT: return Scheme::Throat;
    case DL_SCHEME_MULTIMODAL: return Scheme::Multimodal;
  }
  throw ArgumentError("unknown scheme value " + std::to_string(static_cast<int>(s)));
}

SessionConfig session_of(const dl_config* cfg) { return cfg ? cfg->session : SessionConfig{}; }

Scheme batch_scheme(dl_scheme s, const SessionConfig& cfg) {
  const Scheme scheme = scheme_of(s).value_or(cfg.scheme);
  if (scheme == Scheme::Multimodal) throw ArgumentError("train/eval need --scheme head or --scheme throat");
  return scheme;
}

dl_command to_c(const SuperlimbCommand& c) {
  dl_command out{};
  if (c.servo_left) out.mask |= DL_CMD_SERVO_LEFT, out.servo_left = *c.servo_left;
  if (c.servo_right) out.mask |= DL_CMD_SERVO_RIGHT, out.servo_right = *c.servo_right;
  if (c.speed_left) out.mask |= DL_CMD_SPEED_LEFT, out.speed_left = *c.speed_left;
  if (c.speed_right) out.mask |= DL_CMD_SPEED_RIGHT, out.speed_right = *c.speed_right;
  out.pwm_left = c.pwm_left.value_or(kPwmNeutral);
  out.pwm_right = c.pwm_right.value_or(kPwmNeutral);
  return out;
}

// PWM codes are recomputed from the speeds.
SuperlimbCommand from_c(const dl_command& c, double max_speed) {
  SuperlimbCommand out;
  if (c.mask & DL_CMD_SERVO_LEFT) out.servo_left = c.servo_left;
  if (c.mask & DL_CMD_SERVO_RIGHT) out.servo_right = c.servo_right;
  if (c.mask & DL_CMD_SPEED_LEFT) {
    out.speed_left = c.speed_left;
    out.pwm_left = pwm_from_speed(c.speed_left, max_speed);
  }
  if (c.mask & DL_CMD_SPEED_RIGHT) {
    out.speed_right = c.speed_right;
    out.pwm_right = pwm_from_speed(c.speed_right, max_speed);
  }
  return out;
}

std::string report_json(Scheme scheme, const ConfusionMatrix& cm, std::size_t train_count, std::size_t test_count,
                        const TrainReport* report) {
  nlohmann::json j;
  j["scheme"] = std::string(to_string(scheme));
  j["train_count"] = train_count;
  j["test_count"] = test_count;
  j["confusion"] = nlohmann::json::parse(cm.to_json());
  j["diagonal_mean"] = cm.diagonal_mean();
  j["table"] = cm.to_table();
  if (report != nullptr) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : report->epochs) {
      nlohmann::json row{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_accuracy", e.train_accuracy}};
      row["heldout_accuracy"] = e.heldout_accuracy ? nlohmann::json(*e.heldout_accuracy) : nlohmann::json();
      epochs.push_back(row);
    }
    j["epochs"] = epochs;
  }
  return j.dump(2);
}

}  // namespace

extern "C" {

const char* dl_version(void) { return DIVERLINK_VERSION; }

const char* dl_status_name(dl_status status) {
  switch (status) {
    case DL_OK: return "ok";
    case DL_ERR_ARGUMENT: return "argument";
    case DL_ERR_PARSE: return "parse";
    case DL_ERR_VALIDATION: return "validation";
    case DL_ERR_UNSUPPORTED: return "unsupported";
    case DL_ERR_IO: return "io";
    case DL_ERR_TRAINING: return "training";
    case DL_ERR_NUMERIC: return "numeric";
    case DL_ERR_CONTRACT: return "contract";
    case DL_ERR_RUNTIME: return "runtime";
    case DL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* dl_last_error(void) { return g_last_error.c_str(); }

void dl_string_free(char* s) { std::free(s); }

dl_status dl_config_new(dl_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new dl_config{};
  });
}

dl_status dl_config_load(const char* path, dl_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto cfg = std::make_unique<dl_config>();
    cfg->kv = KeyValueConfig::load(path);
    cfg->session = SessionConfig::from(cfg->kv);
    *out = cfg.release();
  });
}

dl_status dl_config_set(dl_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    SessionConfig next = cfg->session;
    next.apply(key, value);
    next.validate();
    cfg->session = std::move(next);
    cfg->kv.set(key, value);
  });
}

dl_status dl_config_has(const dl_config* cfg, const char* key, int* out) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(out, "out");
    *out = cfg->kv.get(key).has_value() ? 1 : 0;
  });
}

dl_status dl_config_keys(char** out) {
  return guard([&] {
    require(out, "out");
    std::string text;
    for (const auto& k : SessionConfig::keys()) text += k + "\n";
    emit(out, text);
  });
}

void dl_config_free(dl_config* cfg) { delete cfg; }

void dl_synth_request_init(dl_synth_request* req) {
  if (req == nullptr) return;
  *req = dl_synth_request{};
  req->kind = DL_SYNTH_HEAD_CORPUS;
  req->seed = 7;
  req->snr_db = std::nan("");
  req->max_noise_deg = std::nan("");
  req->scheme = DL_SCHEME_MULTIMODAL;
  req->inject_count = -1;
}

dl_status dl_synth(const dl_synth_request* req, char** out_path) {
  return guard([&] {
    require(req, "req");
    require(req->out_dir, "out_dir");
    SynthRequest r;
    switch (req->kind) {
      case DL_SYNTH_HEAD_CORPUS: r.kind = SynthKind::HeadCorpus; break;
      case DL_SYNTH_TONE_CORPUS: r.kind = SynthKind::ToneCorpus; break;
      case DL_SYNTH_SCENARIO: r.kind = SynthKind::Scenario; break;
      default: throw ArgumentError("unknown synth kind");
    }
    r.out = req->out_dir;
    r.seed = req->seed;
    r.per_class = req->per_class;
    if (!std::isnan(req->snr_db)) r.snr_db = req->snr_db;
    if (!std::isnan(req->max_noise_deg)) r.max_noise_deg = req->max_noise_deg;
    r.scheme = scheme_of(req->scheme).value_or(Scheme::Multimodal);
    if ((req->inject_from == nullptr) != (req->inject_to == nullptr)) {
      throw ArgumentError("an injection rule needs both a source and a replacement token");
    }
    if (req->inject_from != nullptr) {
      if (r.kind != SynthKind::Scenario) throw ArgumentError("injection rules only apply to scenarios");
      const auto from = ActionVector::parse(req->inject_from);
      const auto to = ActionVector::parse(req->inject_to);
      if (!from || !from->well_formed()) throw ArgumentError(std::string("bad token '") + req->inject_from + "'");
      if (!to || !to->well_formed()) throw ArgumentError(std::string("bad token '") + req->inject_to + "'");
      r.injections.push_back({*from, *to, req->inject_count < 0 ? -1 : req->inject_count});
    }
    emit(out_path, synthesize(r).string());
  });
}

dl_status dl_train(const dl_config* cfg, const char* manifest, dl_scheme scheme, const char* artifact_out,
                   char** report) {
  return guard([&] {
    require(manifest, "manifest");
    require(artifact_out, "artifact_out");
    const SessionConfig sc = session_of(cfg);
    const Scheme s = batch_scheme(scheme, sc);
    const Manifest m = Manifest::read(manifest);
    if (s == Scheme::Head) {
      const HeadTraining t = train_head(load_head_corpus(m), sc);
      t.templates.save(artifact_out);
      emit(report, report_json(s, t.confusion, t.train_count, t.test_count, nullptr));
    } else {
      const ThroatTraining t = train_throat(load_tone_corpus(m), sc);
      t.model.save(artifact_out);
      emit(report, report_json(s, t.confusion, t.train_count, t.test_count, &t.report));
    }
  });
}

dl_status dl_eval(const dl_config* cfg, const char* manifest, dl_scheme scheme, const char* artifact,
                  char** report) {
  return guard([&] {
    require(manifest, "manifest");
    require(artifact, "artifact");
    const SessionConfig sc = session_of(cfg);
    const Scheme s = batch_scheme(scheme, sc);
    const Manifest m = Manifest::read(manifest);
    if (s == Scheme::Head) {
      const auto corpus = load_head_corpus(m);
      const ConfusionMatrix cm = eval_head(corpus, TemplateSet::load(artifact), sc);
      emit(report, report_json(s, cm, 0, corpus.size(), nullptr));
    } else {
      const auto corpus = load_tone_corpus(m);
      const ConfusionMatrix cm = eval_throat(corpus, ThroatModel::load(artifact), sc);
      emit(report, report_json(s, cm, 0, corpus.size(), nullptr));
    }
  });
}

dl_status dl_replay(const dl_config* cfg, const char* scenario, dl_scheme scheme, const char* out_dir,
                    char** summary) {
  return guard([&] {
    require(scenario, "scenario");
    const ReplayOutcome r = replay_scenario(scenario, session_of(cfg), scheme_of(scheme),
                                            out_dir ? std::filesystem::path(out_dir) : std::filesystem::path{});
    nlohmann::json j = nlohmann::json::parse(r.summary.to_json());
    j["scheme"] = std::string(to_string(r.scheme));
    j["duration"] = r.result.duration;
    j["trace_rows"] = r.result.trace.size();
    emit(summary, j.dump(2));
  });
}

dl_status dl_session_open(const dl_config* cfg, dl_scheme scheme, dl_session** out) {
  return guard([&] {
    require(out, "out");
    const SessionConfig sc = session_of(cfg);
    auto s = std::make_unique<dl_session>();
    s->session = std::make_unique<Session>(sc, scheme_of(scheme).value_or(sc.scheme));
    *out = s.release();
  });
}

dl_status dl_session_port(const dl_session* s, uint16_t* out) {
  return guard([&] {
    require(s, "session");
    require(out, "out");
    *out = s->session->port();
  });
}

dl_status dl_session_control(dl_session* s, const char* message, char** reply) {
  return guard([&] {
    require(s, "session");
    require(message, "message");
    emit(reply, s->session->handle_control(message));
  });
}

dl_status dl_session_load_scenario(dl_session* s, const char* path) {
  return guard([&] {
    require(s, "session");
    require(path, "path");
    s->session->load_scenario(path);
  });
}

dl_status dl_session_start(dl_session* s) {
  return guard([&] {
    require(s, "session");
    s->session->start();
  });
}

dl_status dl_session_stop(dl_session* s) {
  return guard([&] {
    require(s, "session");
    s->session->stop();
  });
}

dl_status dl_session_running(const dl_session* s, int* out) {
  return guard([&] {
    require(s, "session");
    require(out, "out");
    *out = s->session->running() ? 1 : 0;
  });
}

dl_status dl_session_wait(dl_session* s) {
  return guard([&] {
    require(s, "session");
    s->session->wait();
  });
}

void dl_session_free(dl_session* s) { delete s; }

dl_status dl_mapper_new(dl_scheme scheme, const dl_config* cfg, dl_mapper** out) {
  return guard([&] {
    require(out, "out");
    const SessionConfig sc = session_of(cfg);
    const Scheme s = scheme_of(scheme).value_or(sc.scheme);
    *out = new dl_mapper{Mapper(s, sc.gains, sc.initial_mode)};
  });
}

dl_status dl_mapper_apply(dl_mapper* m, const char* token, double magnitude, dl_command* out) {
  return guard([&] {
    require(m, "mapper");
    require(token, "token");
    require(out, "out");
    const auto v = ActionVector::parse(token);
    if (!v || !v->well_formed()) throw ArgumentError(std::string("bad token '") + token + "'");
    SuperlimbCommand cmd;
    switch (m->mapper.scheme()) {
      case Scheme::Head:
        if (!v->head) throw ArgumentError("the head scheme takes head-motion tokens");
        cmd = m->mapper.on_head(*v->head, magnitude);
        break;
      case Scheme::Throat: {
        if (!v->scale) throw ArgumentError("the throat scheme takes scale tokens");
        const double ms = *v->duration == DurationClass::Short ? 0.0 : kShortDurationMs;
        cmd = m->mapper.on_throat(*v->scale, ms, magnitude).value_or(SuperlimbCommand{});
        break;
      }
      case Scheme::Multimodal: cmd = m->mapper.on_action(*v); break;
    }
    *out = to_c(cmd);
  });
}

dl_status dl_mapper_mode(const dl_mapper* m, dl_mode* out) {
  return guard([&] {
    require(m, "mapper");
    require(out, "out");
    *out = m->mapper.mode() == ControlMode::ServoAngle ? DL_MODE_SERVO : DL_MODE_THRUSTER;
  });
}

dl_status dl_mapper_set_gain(dl_mapper* m, const char* name, double value) {
  return guard([&] {
    require(m, "mapper");
    require(name, "name");
    m->mapper.set_gain(name, value);
  });
}

void dl_mapper_free(dl_mapper* m) { delete m; }

dl_status dl_plant_new(const dl_config* cfg, dl_plant** out) {
  return guard([&] {
    require(out, "out");
    const PlantConfig pc = session_of(cfg).plant_config();
    pc.validate();
    *out = new dl_plant{Plant(pc)};
  });
}

dl_status dl_plant_apply(dl_plant* p, const dl_command* cmd) {
  return guard([&] {
    require(p, "plant");
    require(cmd, "cmd");
    p->plant.apply(from_c(*cmd, p->plant.config().max_speed));
  });
}

dl_status dl_plant_advance(dl_plant* p, double t) {
  return guard([&] {
    require(p, "plant");
    if (!std::isfinite(t)) throw ArgumentError("time must be finite");
    p->plant.advance_to(t);
  });
}

dl_status dl_plant_state(const dl_plant* p, dl_state* out) {
  return guard([&] {
    require(p, "plant");
    require(out, "out");
    const SuperlimbState& s = p->plant.state();
    *out = dl_state{s.t, s.servo_left, s.servo_right, s.rpm_left, s.rpm_right, s.thrust_left, s.thrust_right};
  });
}

void dl_plant_free(dl_plant* p) { delete p; }

}  // extern "C"
