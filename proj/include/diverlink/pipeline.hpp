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

// Streaming pipeline: ingest/segment -> classify -> map/simulate.
//
// Each stage runs on its own thread and owns its state; stages talk over
// bounded queues. All timing is stream time, so replay results do not depend
// on the replay speed. Telemetry goes to a sink that must not block.

#ifndef DIVERLINK_PIPELINE_HPP
#define DIVERLINK_PIPELINE_HPP

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diverlink/config.hpp"
#include "diverlink/head_dtw.hpp"
#include "diverlink/nn.hpp"
#include "diverlink/signal_io.hpp"
#include "diverlink/superlimb_sim.hpp"
#include "diverlink/synthgen.hpp"
#include "diverlink/telemetry.hpp"

namespace diverlink {

// Replaces recognised `from` tokens with `to`; remaining < 0 means unlimited.
struct Injection {
  ActionVector from;
  ActionVector to;
  int remaining = -1;

  bool operator==(const Injection&) const = default;
};

// Scenario file, one directive per line:
//   scheme <head|throat|multimodal>
//   imu <path>                 IMU CSV, relative to the scenario file
//   audio <path> [t0]          PCM16 mono WAV
//   expect <t> <token>         ground truth, e.g. "expect 3.0 (do,short,null)"
//   inject <from> <to> [count] misrecognition rule
struct Scenario {
  std::optional<Scheme> scheme;
  std::optional<std::filesystem::path> imu_path;
  std::optional<std::filesystem::path> audio_path;
  double audio_t0 = 0.0;
  std::vector<ExpectedToken> expected;
  std::vector<Injection> injections;

  // Throws ParseError; paths are resolved against the file's directory.
  static Scenario parse(const std::string& text, const std::filesystem::path& base);
  static Scenario load(const std::filesystem::path& path);
  std::string to_text(const std::filesystem::path& base) const;
  // Throws IoError when a referenced file is missing.
  void check_files() const;
};

// Writes imu.csv / audio.wav / scenario.txt into `dir` and returns the scenario path.
std::filesystem::path write_scenario(const std::filesystem::path& dir, const ScenarioData& data,
                                     const std::vector<Injection>& injections = {});

struct ReplayInput {
  std::vector<ImuSample> imu;
  std::optional<AudioSegment> audio;
  std::vector<Injection> injections;

  static ReplayInput load(const Scenario& scenario);
};

struct Models {
  std::shared_ptr<const TemplateSet> templates;
  std::shared_ptr<const ThroatModel> throat;
};

// Loads what `scheme` needs from the configured paths. Throws IoError or
// ValidationError.
Models load_models(const SessionConfig& cfg, Scheme scheme);

class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  // Called from pipeline threads; must return promptly.
  virtual void publish(std::string message) = 0;
  virtual std::uint64_t dropped() const { return 0; }
};

struct ReplayResult {
  std::vector<TokenRecord> tokens;
  std::vector<SegmentRecord> segments;
  std::vector<TraceRow> trace;
  ControlMode final_mode = ControlMode::ServoAngle;
  double duration = 0.0;  // stream seconds processed
  bool stopped = false;   // ended by request_stop()
};

class Pipeline {
 public:
  Pipeline(SessionConfig cfg, Scheme scheme, Models models, TelemetrySink* sink = nullptr);

  // Runs to the end of the input or until request_stop(). One run per object.
  // Throws ValidationError when the input needs a model that was not given.
  ReplayResult run(const ReplayInput& input);

  // Thread-safe controls, applied by the map stage at its next event.
  void request_stop() { stop_.store(true); }
  void set_gain(std::string name, double value);
  void set_mode(ControlMode mode);

  // Test hook: stalls the map stage for this long on every token.
  void set_map_delay(std::chrono::milliseconds d) { map_delay_ = d; }

  const SessionConfig& config() const { return cfg_; }

 private:
  struct Pending {
    std::vector<std::pair<std::string, double>> gains;
    std::optional<ControlMode> mode;
  };

  SessionConfig cfg_;
  Scheme scheme_;
  Models models_;
  TelemetrySink* sink_;
  std::atomic<bool> stop_{false};
  std::mutex pending_mu_;
  Pending pending_;
  std::chrono::milliseconds map_delay_{0};
  bool used_ = false;

  friend struct PipelineStages;
};

struct ReplaySummary {
  std::size_t expected = 0;
  std::size_t recognized = 0;  // tokens emitted
  std::size_t correct = 0;     // expected tokens matched by an identical token
  double mean_latency = 0.0;
  double max_latency = 0.0;
  std::vector<std::string> mode_history;

  std::string to_json() const;
};

// Pairs each expected token with the first unused recognised token whose
// segment ends within `window` seconds of it.
ReplaySummary summarize(const ReplayResult& result, const std::vector<ExpectedToken>& expected,
                        double window = 1.0);

std::string tokens_csv(const std::vector<TokenRecord>& tokens);

}  // namespace diverlink

#endif  // DIVERLINK_PIPELINE_HPP
