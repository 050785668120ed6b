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

// diverlink command-line front end. Talks to the core only through the C API.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "diverlink/diverlink.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

int exit_code(dl_status s) {
  switch (s) {
    case DL_OK: return kExitOk;
    case DL_ERR_ARGUMENT: return kExitUsage;
    case DL_ERR_PARSE:
    case DL_ERR_VALIDATION:
    case DL_ERR_UNSUPPORTED:
    case DL_ERR_IO:
    case DL_ERR_TRAINING: return kExitData;
    default: return kExitRuntime;
  }
}

// Thrown to unwind to main with a status already reported.
struct Failure {
  int code;
};

void check(dl_status s) {
  if (s == DL_OK) return;
  std::cerr << "error (" << dl_status_name(s) << "): " << dl_last_error() << "\n";
  throw Failure{exit_code(s)};
}

struct CString {
  char* p = nullptr;
  ~CString() { dl_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ConfigDeleter {
  void operator()(dl_config* c) const { dl_config_free(c); }
};
struct SessionDeleter {
  void operator()(dl_session* s) const { dl_session_free(s); }
};

dl_scheme scheme_value(const std::string& name) {
  if (name == "head") return DL_SCHEME_HEAD;
  if (name == "throat") return DL_SCHEME_THROAT;
  if (name == "multimodal") return DL_SCHEME_MULTIMODAL;
  return DL_SCHEME_DEFAULT;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) {
    std::cerr << "error (io): cannot write " << path << "\n";
    throw Failure{kExitData};
  }
}

void print_report(const std::string& json) {
  const auto j = nlohmann::json::parse(json);
  if (j.contains("epochs")) {
    for (const auto& e : j["epochs"]) {
      std::printf("epoch %3d  loss %.4f  train %.4f", e["epoch"].get<int>(), e["train_loss"].get<double>(),
                  e["train_accuracy"].get<double>());
      if (e["heldout_accuracy"].is_number()) std::printf("  test %.4f", e["heldout_accuracy"].get<double>());
      std::printf("\n");
    }
  }
  std::cout << j["table"].get<std::string>();
  std::printf("diagonal mean %.4f  (train %zu, test %zu)\n", j["diagonal_mean"].get<double>(),
              j["train_count"].get<std::size_t>(), j["test_count"].get<std::size_t>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diverlink: head-motion and throat-vibration control of a simulated superlimb"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(dl_version()));

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Key-value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Random seed for synthesis, splits and training");

  const std::vector<std::string> schemes{"head", "throat", "multimodal"};

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus or replay scenario");
  std::string synth_kind;
  std::string synth_out;
  int per_class = 0;
  std::optional<double> snr_db;
  std::optional<double> max_noise;
  std::string synth_scheme = "multimodal";
  std::string inject;
  int inject_count = -1;
  synth->add_option("kind", synth_kind, "head, throat or scenario")
      ->required()
      ->check(CLI::IsMember({"head", "throat", "scenario"}));
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--per-class", per_class, "Items per class (corpora)")->check(CLI::PositiveNumber);
  synth->add_option("--snr-db", snr_db, "Tone corpus SNR in dB");
  synth->add_option("--max-noise-deg", max_noise, "Head corpus upper bound of the Euler noise std");
  synth->add_option("--scheme", synth_scheme, "Scenario scheme")->check(CLI::IsMember(schemes));
  synth->add_option("--inject", inject, "Scenario misrecognition rule FROM->TO, e.g. '(re,long,null)->(so,long,null)'");
  synth->add_option("--inject-count", inject_count, "How often the rule fires (default: always)");

  // train / eval
  auto* train = app.add_subcommand("train", "Train templates (head) or the LSTM (throat) from a manifest");
  auto* eval = app.add_subcommand("eval", "Evaluate a trained artifact on a manifest");
  std::string manifest;
  std::string batch_scheme;
  std::string artifact;
  std::string report_path;
  for (auto* sub : {train, eval}) {
    sub->add_option("--manifest", manifest, "Corpus manifest.csv")->required()->check(CLI::ExistingFile);
    sub->add_option("--scheme", batch_scheme, "head or throat")->check(CLI::IsMember({"head", "throat"}));
    sub->add_option("--report", report_path, "Write the JSON report here");
  }
  train->add_option("--out", artifact, "Artifact to write (templates or model JSON)")->required();
  eval->add_option("--model", artifact, "Artifact to evaluate")->required()->check(CLI::ExistingFile);

  // replay
  auto* replay = app.add_subcommand("replay", "Run a scenario through the full pipeline");
  std::string scenario;
  std::string replay_out;
  std::string run_scheme;
  std::optional<double> speed;
  replay->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "Directory for trace.csv, tokens.csv and summary.json");
  replay->add_option("--scheme", run_scheme, "Override the scenario's scheme")->check(CLI::IsMember(schemes));
  replay->add_option("--speed", speed, "1.0 is real time; 0 replays as fast as possible")
      ->check(CLI::NonNegativeNumber);

  // run
  auto* run = app.add_subcommand("run", "Serve telemetry and control on ws://<bind>:<port>/ws");
  std::string run_scenario;
  bool autostart = false;
  bool once = false;
  double duration = 0.0;
  std::optional<int> port;
  run->add_option("--scheme", run_scheme, "Control scheme")->check(CLI::IsMember(schemes));
  run->add_option("--scenario", run_scenario, "Scenario to load at startup")->check(CLI::ExistingFile);
  run->add_flag("--autostart", autostart, "Start the loaded scenario immediately");
  run->add_flag("--once", once, "Exit when the first run finishes");
  run->add_option("--duration", duration, "Exit after this many wall-clock seconds (0: until interrupted)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--port", port, "Telemetry port (0 picks a free one)")->check(CLI::Range(0, 65535));
  run->add_option("--speed", speed, "Replay speed, default real time")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::unique_ptr<dl_config, ConfigDeleter> cfg;
    {
      dl_config* raw = nullptr;
      check(config_path.empty() ? dl_config_new(&raw) : dl_config_load(config_path.c_str(), &raw));
      cfg.reset(raw);
    }
    if (seed) check(dl_config_set(cfg.get(), "seed", std::to_string(*seed).c_str()));
    if (speed) check(dl_config_set(cfg.get(), "replay.speed", std::to_string(*speed).c_str()));

    if (*synth) {
      dl_synth_request req;
      dl_synth_request_init(&req);
      req.kind = synth_kind == "head"     ? DL_SYNTH_HEAD_CORPUS
                 : synth_kind == "throat" ? DL_SYNTH_TONE_CORPUS
                                          : DL_SYNTH_SCENARIO;
      req.out_dir = synth_out.c_str();
      if (seed) req.seed = *seed;
      req.per_class = per_class;
      if (snr_db) req.snr_db = *snr_db;
      if (max_noise) req.max_noise_deg = *max_noise;
      req.scheme = scheme_value(synth_scheme);
      std::string from;
      std::string to;
      if (!inject.empty()) {
        const auto arrow = inject.find("->");
        if (arrow == std::string::npos) {
          std::cerr << "error (argument): --inject expects FROM->TO\n";
          return kExitUsage;
        }
        from = inject.substr(0, arrow);
        to = inject.substr(arrow + 2);
        req.inject_from = from.c_str();
        req.inject_to = to.c_str();
        req.inject_count = inject_count;
      }
      CString path;
      check(dl_synth(&req, &path.p));
      std::cout << path.str() << "\n";
    } else if (*train || *eval) {
      const dl_scheme s = batch_scheme.empty() ? DL_SCHEME_DEFAULT : scheme_value(batch_scheme);
      CString report;
      if (*train) check(dl_train(cfg.get(), manifest.c_str(), s, artifact.c_str(), &report.p));
      else check(dl_eval(cfg.get(), manifest.c_str(), s, artifact.c_str(), &report.p));
      print_report(report.str());
      if (!report_path.empty()) write_file(report_path, report.str() + "\n");
      if (*train) std::cout << "wrote " << artifact << "\n";
    } else if (*replay) {
      const dl_scheme s = run_scheme.empty() ? DL_SCHEME_DEFAULT : scheme_value(run_scheme);
      CString summary;
      check(dl_replay(cfg.get(), scenario.c_str(), s, replay_out.empty() ? nullptr : replay_out.c_str(),
                      &summary.p));
      std::cout << summary.str() << "\n";
    } else if (*run) {
      int has_speed = 0;
      check(dl_config_has(cfg.get(), "replay.speed", &has_speed));
      if (!has_speed) check(dl_config_set(cfg.get(), "replay.speed", "1"));
      if (port) check(dl_config_set(cfg.get(), "telemetry.port", std::to_string(*port).c_str()));
      const dl_scheme s = run_scheme.empty() ? DL_SCHEME_DEFAULT : scheme_value(run_scheme);
      std::unique_ptr<dl_session, SessionDeleter> session;
      {
        dl_session* raw = nullptr;
        check(dl_session_open(cfg.get(), s, &raw));
        session.reset(raw);
      }
      std::uint16_t bound = 0;
      check(dl_session_port(session.get(), &bound));
      std::cout << "listening on port " << bound << " at /ws" << std::endl;
      if (!run_scenario.empty()) check(dl_session_load_scenario(session.get(), run_scenario.c_str()));
      if (autostart) check(dl_session_start(session.get()));

      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const auto t0 = std::chrono::steady_clock::now();
      bool seen_running = autostart;
      while (!g_interrupted.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (duration > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= duration) {
          break;
        }
        int running = 0;
        check(dl_session_running(session.get(), &running));
        if (running) seen_running = true;
        if (once && seen_running && !running) break;
      }
      check(dl_session_stop(session.get()));
      check(dl_session_wait(session.get()));
    }
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
