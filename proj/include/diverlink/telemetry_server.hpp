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

#ifndef DIVERLINK_TELEMETRY_SERVER_HPP
#define DIVERLINK_TELEMETRY_SERVER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "diverlink/pipeline.hpp"

namespace diverlink {

// WebSocket endpoint at /ws. publish() fans a message out to every client
// without blocking: each client has its own bounded queue and a full queue
// drops its oldest message. Inbound text is split into lines and each line is
// handed to the control handler, whose return value is sent back to that
// client only.
class TelemetryServer final : public TelemetrySink {
 public:
  using ControlHandler = std::function<std::string(const std::string& line)>;

  // Binds immediately; port 0 picks a free port. Throws RuntimeError when the
  // address is unavailable (for example the port is busy).
  TelemetryServer(const std::string& bind, std::uint16_t port, std::size_t client_queue,
                   ControlHandler handler);
  ~TelemetryServer() override;

  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;

  std::uint16_t port() const;
  std::size_t client_count() const;

  void publish(std::string message) override;
  std::uint64_t dropped() const override;

  void stop();

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace diverlink

#endif  // DIVERLINK_TELEMETRY_SERVER_HPP
