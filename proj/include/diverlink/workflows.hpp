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

// Batch workflows behind the CLI verbs: corpus synthesis, training,
// evaluation and scenario replay.

#ifndef DIVERLINK_WORKFLOWS_HPP
#define DIVERLINK_WORKFLOWS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diverlink/config.hpp"
#include "diverlink/head_dtw.hpp"
#include "diverlink/metrics.hpp"
#include "diverlink/nn.hpp"
#include "diverlink/pipeline.hpp"
#include "diverlink/synthgen.hpp"

namespace diverlink {

struct LabeledImu {
  HeadMotionClass cls;
  std::vector<ImuSample> samples;
};

struct LabeledAudio {
  ScaleClass scale;
  AudioSegment audio;
};

// Reads every entry of the manifest. Throws ValidationError for entries of the
// wrong kind or with unknown labels.
std::vector<LabeledImu> load_head_corpus(const Manifest& manifest);
std::vector<LabeledAudio> load_tone_corpus(const Manifest& manifest);

std::vector<LabeledImu> to_labeled(const std::vector<HeadItem>& items);
std::vector<LabeledAudio> to_labeled(const std::vector<ToneItem>& items);

// The segment a recording contributes to training and evaluation: samples at
// imu.rate are decimated to the classification rate, low-passed and
// endpoint-detected, and the longest segment is kept. Without a segment the
// whole filtered recording is used. Throws ValidationError when the recording
// rate matches neither imu.rate nor the classification rate.
Series head_features(std::span<const ImuSample> samples, const SessionConfig& cfg);

// Longest detected fragment, or the whole recording when none is found.
AudioSegment throat_fragment(const AudioSegment& audio, const SessionConfig& cfg);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per-class seeded shuffle; round(train_fraction * n_c) items of each class
// train and the rest test. Both index lists are sorted.
Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed);

inline constexpr double kHeadTrainFraction = 0.5;
inline constexpr double kThroatTrainFraction = 0.7;

struct HeadTraining {
  TemplateSet templates;
  ConfusionMatrix confusion{{}};  // held-out half
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

// Throws TrainingError listing absent classes.
HeadTraining train_head(const std::vector<LabeledImu>& corpus, const SessionConfig& cfg);

struct ThroatTraining {
  ThroatModel model;
  ConfusionMatrix confusion{{}};  // held-out 30%, argmax decisions
  TrainReport report;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

ThroatTraining train_throat(const std::vector<LabeledAudio>& corpus, const SessionConfig& cfg);

// Every item is classified; rejected head segments land in the reject column.
ConfusionMatrix eval_head(const std::vector<LabeledImu>& corpus, const TemplateSet& templates,
                          const SessionConfig& cfg);
ConfusionMatrix eval_throat(const std::vector<LabeledAudio>& corpus, const ThroatModel& model,
                            const SessionConfig& cfg);

enum class SynthKind { HeadCorpus, ToneCorpus, Scenario };

struct SynthRequest {
  SynthKind kind = SynthKind::HeadCorpus;
  std::filesystem::path out;
  std::uint64_t seed = 7;
  int per_class = 0;                   // 0: generator default
  std::optional<double> snr_db;        // tone corpus
  std::optional<double> max_noise_deg; // head corpus
  Scheme scheme = Scheme::Multimodal;  // scenario
  std::vector<Injection> injections;   // scenario
};

// Returns the manifest or scenario path written.
std::filesystem::path synthesize(const SynthRequest& request);

struct ReplayOutcome {
  Scheme scheme = Scheme::Multimodal;
  ReplayResult result;
  ReplaySummary summary;
};

// Scheme precedence: override, then the scenario's own, then the config.
// When out_dir is non-empty it receives trace.csv, tokens.csv and summary.json.
ReplayOutcome replay_scenario(const std::filesystem::path& scenario_path, const SessionConfig& cfg,
                              std::optional<Scheme> scheme_override,
                              const std::filesystem::path& out_dir = {}, TelemetrySink* sink = nullptr);

}  // namespace diverlink

#endif  // DIVERLINK_WORKFLOWS_HPP
