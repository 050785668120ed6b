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

// Long-running session behind the `run` verb: a telemetry endpoint plus a
// pipeline that replays the selected scenario on request.

#ifndef DIVERLINK_SESSION_HPP
#define DIVERLINK_SESSION_HPP

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "diverlink/config.hpp"
#include "diverlink/pipeline.hpp"
#include "diverlink/telemetry_server.hpp"

namespace diverlink {

// Telemetry time is continuous across runs: each run is offset so that its
// messages carry t at or after everything published before it. Control
// replies use the latest published t.
class Session {
 public:
  // Loads the models the scheme needs, then binds the endpoint. Throws
  // IoError/ValidationError for missing artifacts and RuntimeError when the
  // port is busy.
  Session(SessionConfig cfg, Scheme scheme);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::uint16_t port() const { return server_->port(); }
  Scheme scheme() const { return scheme_; }

  // One inbound control line -> the reply frame (ack or error). Never throws.
  std::string handle_control(const std::string& line);

  // Throw on failure; handle_control turns the exception into an error frame.
  void load_scenario(const std::filesystem::path& path);
  void start();
  void stop();
  void set_gain(const std::string& name, double value);
  void set_mode(ControlMode mode);

  bool running() const { return running_.load(); }
  // Blocks until the current run, if any, has finished.
  void wait();
  std::size_t runs_completed() const;
  std::optional<ReplayResult> last_result() const;
  GainConfig gains() const;
  double telemetry_time() const;

  void shutdown();

 private:
  class Sink;

  void join_finished();

  SessionConfig cfg_;
  Scheme scheme_;
  Models models_;
  std::unique_ptr<Sink> sink_;
  std::unique_ptr<TelemetryServer> server_;

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> scenario_;
  std::shared_ptr<Pipeline> pipeline_;
  std::thread worker_;
  std::atomic<bool> running_{false};
  std::size_t runs_ = 0;
  std::optional<ReplayResult> last_;
};

}  // namespace diverlink

#endif  // DIVERLINK_SESSION_HPP
