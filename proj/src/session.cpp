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

#include "diverlink/session.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "diverlink/error.hpp"
#include "diverlink/telemetry.hpp"

namespace diverlink {

// Shifts each run onto the session timeline and forwards to the server.
class Session::Sink final : public TelemetrySink {
 public:
  void attach(TelemetryServer* server) { server_ = server; }

  void begin_run() {
    std::lock_guard lock(mu_);
    offset_ = latest_;
  }

  void publish(std::string message) override {
    {
      std::lock_guard lock(mu_);
      auto j = nlohmann::json::parse(message, nullptr, false);
      if (!j.is_discarded() && j.contains("t") && j["t"].is_number()) {
        const double t = j["t"].get<double>() + offset_;
        if (offset_ != 0.0) {
          j["t"] = t;
          message = j.dump() + "\n";
        }
        latest_ = std::max(latest_, t);
      }
    }
    if (server_) server_->publish(std::move(message));
  }

  void send_direct(std::string message) {
    if (server_) server_->publish(std::move(message));
  }

  std::uint64_t dropped() const override { return server_ ? server_->dropped() : 0; }

  double latest() const {
    std::lock_guard lock(mu_);
    return latest_;
  }

 private:
  TelemetryServer* server_ = nullptr;
  mutable std::mutex mu_;
  double offset_ = 0.0;
  double latest_ = 0.0;
};

Session::Session(SessionConfig cfg, Scheme scheme)
    : cfg_(std::move(cfg)), scheme_(scheme), sink_(std::make_unique<Sink>()) {
  cfg_.validate();
  models_ = load_models(cfg_, scheme_);
  server_ = std::make_unique<TelemetryServer>(cfg_.bind, cfg_.port, cfg_.client_queue,
                                              [this](const std::string& line) { return handle_control(line); });
  sink_->attach(server_.get());
}

Session::~Session() { shutdown(); }

std::string Session::handle_control(const std::string& line) {
  try {
    const ControlMessage msg = parse_control(line);
    std::string detail;
    switch (msg.cmd) {
      case ControlCommand::Start:
        start();
        detail = "running";
        break;
      case ControlCommand::Stop:
        stop();
        detail = "stopping";
        break;
      case ControlCommand::SetGain:
        for (const auto& [name, value] : msg.gains) {
          set_gain(name, value);
          if (!detail.empty()) detail += ",";
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.12g", value);
          detail += name + "=" + buf;
        }
        break;
      case ControlCommand::SetMode:
        set_mode(*msg.mode);
        detail = std::string(to_string(*msg.mode));
        break;
      case ControlCommand::LoadScenario:
        load_scenario(msg.scenario);
        detail = msg.scenario;
        break;
    }
    return ack_message(telemetry_time(), to_string(msg.cmd), detail);
  } catch (const std::exception& e) {
    return error_message(telemetry_time(), e.what());
  }
}

void Session::load_scenario(const std::filesystem::path& path) {
  const Scenario sc = Scenario::load(path);
  sc.check_files();
  if (sc.scheme && *sc.scheme != scheme_) {
    throw ValidationError("scenario is for the " + std::string(to_string(*sc.scheme)) + " scheme but the session runs " +
                          std::string(to_string(scheme_)));
  }
  std::lock_guard lock(mu_);
  scenario_ = path;
}

void Session::join_finished() {
  if (worker_.joinable() && !running_.load()) worker_.join();
}

void Session::start() {
  std::lock_guard lock(mu_);
  if (running_.load()) throw ContractError("a run is already in progress");
  if (!scenario_) throw ContractError("no scenario loaded");
  join_finished();
  auto input = std::make_shared<ReplayInput>(ReplayInput::load(Scenario::load(*scenario_)));
  pipeline_ = std::make_shared<Pipeline>(cfg_, scheme_, models_, sink_.get());
  sink_->begin_run();
  running_.store(true);
  worker_ = std::thread([this, pipeline = pipeline_, input] {
    std::optional<ReplayResult> result;
    try {
      result = pipeline->run(*input);
    } catch (const std::exception& e) {
      sink_->send_direct(error_message(telemetry_time(), std::string("run failed: ") + e.what()));
    }
    std::lock_guard lock(mu_);
    if (result) last_ = std::move(result);
    ++runs_;
    running_.store(false);
  });
}

void Session::stop() {
  std::lock_guard lock(mu_);
  if (pipeline_ && running_.load()) pipeline_->request_stop();
}

void Session::set_gain(const std::string& name, double value) {
  std::lock_guard lock(mu_);
  GainConfig next = cfg_.gains;
  next.set(name, value);
  cfg_.gains = next;
  if (pipeline_ && running_.load()) pipeline_->set_gain(name, value);
}

void Session::set_mode(ControlMode mode) {
  std::lock_guard lock(mu_);
  cfg_.initial_mode = mode;
  if (pipeline_ && running_.load()) pipeline_->set_mode(mode);
}

void Session::wait() {
  std::thread t;
  {
    std::lock_guard lock(mu_);
    t = std::move(worker_);
  }
  if (t.joinable()) t.join();
}

std::size_t Session::runs_completed() const {
  std::lock_guard lock(mu_);
  return runs_;
}

std::optional<ReplayResult> Session::last_result() const {
  std::lock_guard lock(mu_);
  return last_;
}

GainConfig Session::gains() const {
  std::lock_guard lock(mu_);
  return cfg_.gains;
}

double Session::telemetry_time() const { return sink_->latest(); }

void Session::shutdown() {
  stop();
  wait();
  if (server_) server_->stop();
}

}  // namespace diverlink
