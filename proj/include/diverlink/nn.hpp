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

// Single-layer LSTM sequence classifier for the five musical scales.
//
// The MFCC matrix is fed column by column (20 timesteps of 20-dim vectors).
// Gate pre-activations are stacked [input; forget; cell; output]:
//
//   a_t = W x_t + U h_{t-1} + b
//   i = sig(a_i)  f = sig(a_f)  g = tanh(a_g)  o = sig(a_o)
//   c_t = f * c_{t-1} + i * g      h_t = o * tanh(c_t)
//   p = softmax(Wy h_T + by)

#ifndef DIVERLINK_NN_HPP
#define DIVERLINK_NN_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "diverlink/metrics.hpp"
#include "diverlink/mfcc.hpp"

namespace diverlink {

enum class ScaleClass { Do, Re, Mi, Fa, So };

inline constexpr int kNumScales = 5;
inline constexpr std::array<ScaleClass, kNumScales> kScaleClasses = {
    ScaleClass::Do, ScaleClass::Re, ScaleClass::Mi, ScaleClass::Fa, ScaleClass::So};

std::string_view to_string(ScaleClass s);
std::optional<ScaleClass> parse_scale(std::string_view name);

using ClassProbs = Eigen::Matrix<double, kNumScales, 1>;

struct LstmParams {
  int input_dim = kMfccDim;
  int hidden_dim = 64;
  Eigen::MatrixXd W;   // 4H x I
  Eigen::MatrixXd U;   // 4H x H
  Eigen::VectorXd b;   // 4H
  Eigen::MatrixXd Wy;  // 5 x H
  Eigen::VectorXd by;  // 5

  // Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1.
  static LstmParams init(int input_dim, int hidden_dim, std::uint64_t seed);
  static LstmParams zeros(int input_dim, int hidden_dim);

  std::size_t size() const;
  bool all_finite() const;
  // FNV-1a over shapes and values; identifies the parameters a cache was built from.
  std::uint64_t fingerprint() const;

  // Calls fn(name, data, count) for W, U, b, Wy, by in that order.
  void for_each_block(const std::function<void(std::string_view, double*, std::size_t)>& fn);
  void for_each_block(const std::function<void(std::string_view, const double*, std::size_t)>& fn) const;

  bool operator==(const LstmParams& o) const;
};

using LstmGradients = LstmParams;

struct LstmCache {
  std::uint64_t params_fingerprint = 0;
  Eigen::MatrixXd x;     // I x T
  Eigen::MatrixXd gates; // 4H x T, post-activation
  Eigen::MatrixXd c;     // H x (T+1), column 0 is the initial state
  Eigen::MatrixXd h;     // H x (T+1)
  ClassProbs probs;
};

struct LstmOutput {
  ClassProbs probs;
  LstmCache cache;
};

// `input` is I x T; columns are timesteps.
LstmOutput lstm_forward(const LstmParams& params, const Eigen::MatrixXd& input);

double cross_entropy(const ClassProbs& probs, ScaleClass target);

// Gradients of cross_entropy w.r.t. every parameter via BPTT. Throws
// ContractError when `cache` was not produced from `params`.
LstmGradients lstm_backward(const LstmParams& params, const LstmCache& cache, ScaleClass target);

struct Example {
  MfccMatrix input;
  ScaleClass label;
};

struct TrainConfig {
  int hidden_dim = 64;
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
  std::uint64_t seed = 7;
};

struct EpochReport {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> heldout_accuracy;
};

struct TrainReport {
  std::vector<EpochReport> epochs;
};

struct TrainResult {
  LstmParams params;
  TrainReport report;
};

// Mini-batch Adam with global gradient-norm clipping. Deterministic for a
// given seed. Throws TrainingError when a class has no example.
TrainResult train(std::span<const Example> train_set, std::span<const Example> heldout,
                  const TrainConfig& cfg);

struct Prediction {
  std::optional<ScaleClass> cls;  // nullopt: confidence below the reject threshold
  ScaleClass argmax = ScaleClass::Do;
  double confidence = 0.0;
  ClassProbs probs = ClassProbs::Zero();
};

Prediction predict(const LstmParams& params, const MfccMatrix& input, double reject_confidence = 0.5);

ConfusionMatrix evaluate(const LstmParams& params, std::span<const Example> examples);

// Per-coefficient (row) mean/std over the training matrices.
struct FeatureNorm {
  Eigen::Matrix<double, kMfccDim, 1> mean = Eigen::Matrix<double, kMfccDim, 1>::Zero();
  Eigen::Matrix<double, kMfccDim, 1> stddev = Eigen::Matrix<double, kMfccDim, 1>::Ones();

  static FeatureNorm fit(std::span<const MfccMatrix> matrices);
  MfccMatrix apply(const MfccMatrix& m) const;
};

// Everything needed to reproduce inference: network, feature config and statistics.
struct ThroatModel {
  LstmParams params;
  MfccConfig mfcc;
  FeatureNorm norm;
  double reject_confidence = 0.5;

  MfccMatrix features(const AudioSegment& fragment) const;
  Prediction classify(const AudioSegment& fragment) const;

  std::string to_json() const;
  static ThroatModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static ThroatModel load(const std::filesystem::path& path);
};

}  // namespace diverlink

#endif  // DIVERLINK_NN_HPP
