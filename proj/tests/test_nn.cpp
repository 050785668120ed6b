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

#include <doctest.h>

#include <random>

#include "diverlink/error.hpp"
#include "diverlink/nn.hpp"
#include "oracles.hpp"

using namespace diverlink;

namespace {

Eigen::MatrixXd random_input(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
  return x;
}

// Class k lights up coefficient rows 4k..4k+3; everything else is noise.
std::vector<Example> toy_set(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.3);
  std::vector<Example> out;
  for (int n = 0; n < per_class; ++n) {
    for (ScaleClass s : kScaleClasses) {
      MfccMatrix m;
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
      const int k = static_cast<int>(s);
      m.middleRows(4 * k, 4).array() += 1.0;
      out.push_back({m, s});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("forward pass matches a plain-loop recurrence") {
  for (int h : {1, 4, 9}) {
    const LstmParams p = LstmParams::init(6, h, 40 + static_cast<std::uint64_t>(h));
    const auto x = random_input(6, 13, 3);
    const auto probs = lstm_forward(p, x).probs;
    const auto ref = oracle::lstm_reference(p, x);
    for (int k = 0; k < kNumScales; ++k) CHECK(probs(k) == doctest::Approx(ref[static_cast<std::size_t>(k)]).epsilon(1e-12));
    CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("init draws bounded weights with forget bias 1") {
  const LstmParams p = LstmParams::init(20, 16, 9);
  const double bound = 1.0 / std::sqrt(16.0);
  CHECK(p.W.cwiseAbs().maxCoeff() <= bound);
  CHECK(p.U.cwiseAbs().maxCoeff() <= bound);
  CHECK(p.b.segment(16, 16).isOnes(0.0));
  CHECK(p.size() == static_cast<std::size_t>(64 * 20 + 64 * 16 + 64 + 5 * 16 + 5));
  CHECK(LstmParams::init(20, 16, 9) == p);
  CHECK(!(LstmParams::init(20, 16, 10) == p));
}

TEST_CASE("backprop agrees with central differences in every block") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const LstmParams p = LstmParams::init(5, 4, seed);
    const auto x = random_input(5, 7, seed + 100);
    const auto r = oracle::gradient_check(p, x, kScaleClasses[seed % kNumScales], 1e-4);
    INFO("worst block " << r.worst_block);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("backward rejects a cache from other parameters") {
  const LstmParams p = LstmParams::init(5, 4, 1);
  const LstmParams q = LstmParams::init(5, 4, 2);
  const auto fw = lstm_forward(p, random_input(5, 3, 1));
  CHECK_THROWS_AS(lstm_backward(q, fw.cache, ScaleClass::Do), ContractError);
  CHECK_THROWS_AS(lstm_forward(p, random_input(4, 3, 1)), ArgumentError);
}

TEST_CASE("training separates a toy problem and is deterministic") {
  const auto train_set = toy_set(12, 5);
  const auto test_set = toy_set(6, 6);
  TrainConfig cfg;
  cfg.hidden_dim = 8;
  cfg.epochs = 25;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-2;
  const TrainResult a = train(train_set, test_set, cfg);
  const TrainResult b = train(train_set, test_set, cfg);
  CHECK(a.params == b.params);
  REQUIRE(a.report.epochs.size() == 25);
  CHECK(a.report.epochs.back().train_loss < a.report.epochs.front().train_loss);
  CHECK(evaluate(a.params, test_set).accuracy() >= 0.95);
  cfg.seed = 8;
  CHECK(!(train(train_set, test_set, cfg).params == a.params));
}

TEST_CASE("training refuses a corpus missing a class") {
  auto set = toy_set(3, 1);
  std::erase_if(set, [](const Example& e) { return e.label == ScaleClass::Fa; });
  CHECK_THROWS_AS(train(set, {}, TrainConfig{}), TrainingError);
}

TEST_CASE("prediction applies the reject threshold") {
  LstmParams p = LstmParams::zeros(kMfccDim, 4);
  const MfccMatrix m = MfccMatrix::Zero();
  const Prediction uniform = predict(p, m, 0.5);
  CHECK(!uniform.cls);
  CHECK(uniform.confidence == doctest::Approx(0.2));
  p.by(2) = 10.0;
  const Prediction sure = predict(p, m, 0.5);
  CHECK(sure.cls == ScaleClass::Mi);
}

TEST_CASE("feature normalization and model JSON round trip") {
  std::vector<MfccMatrix> ms;
  for (const auto& e : toy_set(4, 2)) ms.push_back(e.input);
  const FeatureNorm norm = FeatureNorm::fit(ms);
  Eigen::Matrix<double, kMfccDim, 1> mean = Eigen::Matrix<double, kMfccDim, 1>::Zero();
  for (const auto& m : ms) mean += norm.apply(m).rowwise().mean();
  CHECK((mean / static_cast<double>(ms.size())).cwiseAbs().maxCoeff() < 1e-9);

  ThroatModel model;
  model.params = LstmParams::init(kMfccDim, 6, 4);
  model.norm = norm;
  model.reject_confidence = 0.6;
  const ThroatModel back = ThroatModel::from_json(model.to_json());
  CHECK(back.params == model.params);
  CHECK(back.mfcc == model.mfcc);
  CHECK(back.reject_confidence == model.reject_confidence);
  CHECK(back.norm.mean == model.norm.mean);
  CHECK(back.norm.stddev == model.norm.stddev);
  CHECK_THROWS_AS(ThroatModel::from_json("{\"kind\":\"x\"}"), UnsupportedFormatError);
  CHECK_THROWS_AS(ThroatModel::from_json("not json"), UnsupportedFormatError);
}

TEST_CASE("scale names round trip") {
  for (ScaleClass s : kScaleClasses) CHECK(parse_scale(to_string(s)) == s);
  CHECK(!parse_scale("la"));
}
