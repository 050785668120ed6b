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

#include "diverlink/workflows.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "diverlink/error.hpp"
#include "diverlink/preprocess.hpp"
#include "diverlink/superlimb_sim.hpp"

namespace diverlink {

namespace {

template <typename Classes, typename Labels, typename Name>
void require_all_classes(const Classes& classes, const Labels& present, Name name) {
  std::string missing;
  for (auto c : classes) {
    if (std::find(present.begin(), present.end(), c) == present.end()) {
      missing += (missing.empty() ? "" : ", ") + std::string(name(c));
    }
  }
  if (!missing.empty()) throw TrainingError("corpus has no samples for: " + missing);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<LabeledImu> load_head_corpus(const Manifest& manifest) {
  std::vector<LabeledImu> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    if (e.kind != "imu") throw ValidationError("manifest entry " + e.path.string() + " is not an IMU recording");
    const auto cls = parse_head_motion(e.label);
    if (!cls) throw ValidationError("unknown head-motion label '" + e.label + "'");
    out.push_back({*cls, read_imu_csv(manifest.resolve(e))});
  }
  return out;
}

std::vector<LabeledAudio> load_tone_corpus(const Manifest& manifest) {
  std::vector<LabeledAudio> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    if (e.kind != "audio") throw ValidationError("manifest entry " + e.path.string() + " is not an audio recording");
    const auto scale = parse_scale(e.label);
    if (!scale) throw ValidationError("unknown scale label '" + e.label + "'");
    out.push_back({*scale, read_wav(manifest.resolve(e))});
  }
  return out;
}

std::vector<LabeledImu> to_labeled(const std::vector<HeadItem>& items) {
  std::vector<LabeledImu> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back({it.cls, it.samples});
  return out;
}

std::vector<LabeledAudio> to_labeled(const std::vector<ToneItem>& items) {
  std::vector<LabeledAudio> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back({it.scale, it.audio});
  return out;
}

Series head_features(std::span<const ImuSample> samples, const SessionConfig& cfg) {
  if (samples.empty()) throw ValidationError("empty IMU recording");
  const double target = cfg.classify_rate();
  const double rate = estimate_rate(samples);
  auto near = [](double a, double b) { return std::abs(a - b) <= 0.01 * b; };
  std::vector<ImuSample> in(samples.begin(), samples.end());
  if (!near(rate, target)) {
    if (!near(rate, cfg.imu_rate)) {
      throw ValidationError("IMU recording at " + std::to_string(rate) + " Hz matches neither imu.rate nor the " +
                            std::to_string(target) + " Hz classification rate");
    }
    in = decimate_imu(in, cfg.imu_decimation);
  }
  ImuEndpointDetector det(cfg.imu_segmenter, target, cfg.imu_cutoff);
  std::optional<MotionSegment> best;
  auto keep = [&](std::optional<MotionSegment> s) {
    if (s && (!best || s->samples.size() > best->samples.size())) best = std::move(s);
  };
  for (const auto& s : in) keep(det.push(s));
  keep(det.flush());
  if (best) return imu_series(best->samples);
  return imu_series(cfg.imu_cutoff > 0.0 ? low_pass_imu(in, cfg.imu_cutoff, target) : in);
}

AudioSegment throat_fragment(const AudioSegment& audio, const SessionConfig& cfg) {
  AudioEndpointDetector det(cfg.audio_segmenter, static_cast<int>(audio.sample_rate), audio.t0);
  auto frags = det.push(audio.samples);
  for (auto& f : det.flush()) frags.push_back(std::move(f));
  if (frags.empty()) return audio;
  auto best = std::max_element(frags.begin(), frags.end(), [](const AudioSegment& a, const AudioSegment& b) {
    return a.samples.size() < b.samples.size();
  });
  AudioSegment frag = std::move(*best);
  if (cfg.noise_reduction) {
    const double lead = std::min(cfg.noise_lead, frag.t0 - audio.t0);
    if (lead >= 0.064) frag = noise_reduce(frag, estimate_noise_profile(audio, lead));
  }
  return frag;
}

Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw ArgumentError("train fraction must be in [0, 1]");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::mt19937_64 rng(seed);
  Split split;
  for (int c : classes) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

HeadTraining train_head(const std::vector<LabeledImu>& corpus, const SessionConfig& cfg) {
  std::vector<HeadMotionClass> present;
  std::vector<int> labels;
  for (const auto& it : corpus) {
    present.push_back(it.cls);
    labels.push_back(static_cast<int>(it.cls));
  }
  require_all_classes(kHeadMotionClasses, present, [](HeadMotionClass c) { return to_string(c); });

  std::vector<Series> features;
  features.reserve(corpus.size());
  for (const auto& it : corpus) features.push_back(head_features(it.samples, cfg));

  const Split split = stratified_split(labels, kHeadTrainFraction, cfg.seed);
  std::vector<LabeledSeries> train;
  for (auto i : split.train) train.push_back({features[i], corpus[i].cls});
  TemplateOptions opts = cfg.dtw;
  opts.rate = cfg.classify_rate();

  HeadTraining out;
  out.templates = build_templates(train, opts);
  std::vector<std::string> names;
  for (auto c : kHeadMotionClasses) names.emplace_back(to_string(c));
  out.confusion = ConfusionMatrix(names);
  for (auto i : split.test) {
    const auto r = classify_series(features[i], out.templates);
    const auto truth = static_cast<std::size_t>(corpus[i].cls);
    if (r.cls) out.confusion.add(truth, static_cast<std::size_t>(*r.cls));
    else out.confusion.add_rejected(truth);
  }
  out.train_count = split.train.size();
  out.test_count = split.test.size();
  return out;
}

ThroatTraining train_throat(const std::vector<LabeledAudio>& corpus, const SessionConfig& cfg) {
  std::vector<ScaleClass> present;
  std::vector<int> labels;
  for (const auto& it : corpus) {
    present.push_back(it.scale);
    labels.push_back(static_cast<int>(it.scale));
  }
  require_all_classes(kScaleClasses, present, [](ScaleClass s) { return to_string(s); });

  std::vector<MfccMatrix> raw;
  raw.reserve(corpus.size());
  for (const auto& it : corpus) raw.push_back(mfcc_matrix(throat_fragment(it.audio, cfg), cfg.mfcc));

  const Split split = stratified_split(labels, kThroatTrainFraction, cfg.seed);
  std::vector<MfccMatrix> train_raw;
  for (auto i : split.train) train_raw.push_back(raw[i]);

  ThroatTraining out;
  out.model.mfcc = cfg.mfcc;
  out.model.norm = FeatureNorm::fit(train_raw);
  out.model.reject_confidence = cfg.reject_confidence;
  std::vector<Example> train_set;
  std::vector<Example> test_set;
  for (auto i : split.train) train_set.push_back({out.model.norm.apply(raw[i]), corpus[i].scale});
  for (auto i : split.test) test_set.push_back({out.model.norm.apply(raw[i]), corpus[i].scale});

  TrainConfig tc = cfg.lstm;
  tc.seed = cfg.seed;
  TrainResult trained = train(train_set, test_set, tc);
  out.model.params = std::move(trained.params);
  out.report = std::move(trained.report);
  out.confusion = evaluate(out.model.params, test_set);
  out.train_count = train_set.size();
  out.test_count = test_set.size();
  return out;
}

ConfusionMatrix eval_head(const std::vector<LabeledImu>& corpus, const TemplateSet& templates,
                          const SessionConfig& cfg) {
  if (std::abs(templates.rate() - cfg.classify_rate()) > 1e-9) {
    throw ValidationError("templates were built at a different IMU rate than imu.rate / imu.decimation");
  }
  std::vector<std::string> names;
  for (auto c : kHeadMotionClasses) names.emplace_back(to_string(c));
  ConfusionMatrix cm(names);
  for (const auto& it : corpus) {
    const auto r = classify_series(head_features(it.samples, cfg), templates);
    const auto truth = static_cast<std::size_t>(it.cls);
    if (r.cls) cm.add(truth, static_cast<std::size_t>(*r.cls));
    else cm.add_rejected(truth);
  }
  return cm;
}

ConfusionMatrix eval_throat(const std::vector<LabeledAudio>& corpus, const ThroatModel& model,
                            const SessionConfig& cfg) {
  std::vector<Example> examples;
  examples.reserve(corpus.size());
  for (const auto& it : corpus) examples.push_back({model.features(throat_fragment(it.audio, cfg)), it.scale});
  return evaluate(model.params, examples);
}

std::filesystem::path synthesize(const SynthRequest& req) {
  if (req.out.empty()) throw ArgumentError("synth needs an output directory");
  if (req.per_class < 0) throw ArgumentError("per-class count must be positive");
  switch (req.kind) {
    case SynthKind::HeadCorpus: {
      HeadCorpusOptions o;
      o.seed = req.seed;
      if (req.per_class > 0) o.per_class = req.per_class;
      if (req.max_noise_deg) o.max_noise_deg = *req.max_noise_deg;
      write_head_corpus(req.out, gen_head_corpus(o));
      return req.out / "manifest.csv";
    }
    case SynthKind::ToneCorpus: {
      ToneCorpusOptions o;
      o.seed = req.seed;
      if (req.per_class > 0) o.per_class = req.per_class;
      if (req.snr_db) o.snr_db = *req.snr_db;
      write_tone_corpus(req.out, gen_tone_corpus(o));
      return req.out / "manifest.csv";
    }
    case SynthKind::Scenario: {
      ScenarioData data;
      switch (req.scheme) {
        case Scheme::Head: data = gen_head_scenario(req.seed); break;
        case Scheme::Throat: data = gen_throat_scenario(req.seed); break;
        case Scheme::Multimodal: data = gen_multimodal_scenario(req.seed); break;
      }
      return write_scenario(req.out, data, req.injections);
    }
  }
  throw ArgumentError("unknown synth kind");
}

ReplayOutcome replay_scenario(const std::filesystem::path& scenario_path, const SessionConfig& cfg,
                              std::optional<Scheme> scheme_override, const std::filesystem::path& out_dir,
                              TelemetrySink* sink) {
  const Scenario sc = Scenario::load(scenario_path);
  ReplayOutcome out;
  out.scheme = scheme_override ? *scheme_override : sc.scheme.value_or(cfg.scheme);
  const ReplayInput in = ReplayInput::load(sc);
  const bool has_input = !in.imu.empty() || (in.audio && !in.audio->samples.empty());
  Models models = has_input ? load_models(cfg, out.scheme) : Models{};
  Pipeline pipeline(cfg, out.scheme, std::move(models), sink);
  out.result = pipeline.run(in);
  out.summary = summarize(out.result, sc.expected);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_trace_csv(out_dir / "trace.csv", out.result.trace);
    write_text(out_dir / "tokens.csv", tokens_csv(out.result.tokens));
    write_text(out_dir / "summary.json", out.summary.to_json() + "\n");
  }
  return out;
}

}  // namespace diverlink
