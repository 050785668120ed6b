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

#include "diverlink/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

constexpr const char* kModelFormat = "diverlink-lstm";
constexpr int kModelVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

void check_shapes(const LstmParams& p) {
  const int h4 = 4 * p.hidden_dim;
  if (p.W.rows() != h4 || p.W.cols() != p.input_dim || p.U.rows() != h4 || p.U.cols() != p.hidden_dim ||
      p.b.size() != h4 || p.Wy.rows() != kNumScales || p.Wy.cols() != p.hidden_dim ||
      p.by.size() != kNumScales) {
    throw ArgumentError("LSTM parameter shapes are inconsistent");
  }
}

}  // namespace

std::string_view to_string(ScaleClass s) {
  switch (s) {
    case ScaleClass::Do: return "do";
    case ScaleClass::Re: return "re";
    case ScaleClass::Mi: return "mi";
    case ScaleClass::Fa: return "fa";
    case ScaleClass::So: return "so";
  }
  return "?";
}

std::optional<ScaleClass> parse_scale(std::string_view name) {
  for (auto s : kScaleClasses) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1) throw ArgumentError("LSTM dimensions must be positive");
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.W = Eigen::MatrixXd::Zero(4 * hidden_dim, input_dim);
  p.U = Eigen::MatrixXd::Zero(4 * hidden_dim, hidden_dim);
  p.b = Eigen::VectorXd::Zero(4 * hidden_dim);
  p.Wy = Eigen::MatrixXd::Zero(kNumScales, hidden_dim);
  p.by = Eigen::VectorXd::Zero(kNumScales);
  return p;
}

LstmParams LstmParams::init(int input_dim, int hidden_dim, std::uint64_t seed) {
  LstmParams p = zeros(input_dim, hidden_dim);
  std::mt19937_64 rng(seed);
  const double r = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  p.for_each_block([&](std::string_view, double* d, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) d[i] = (2.0 * uniform01(rng) - 1.0) * r;
  });
  p.b.segment(hidden_dim, hidden_dim).setOnes();
  return p;
}

std::size_t LstmParams::size() const {
  return static_cast<std::size_t>(W.size() + U.size() + b.size() + Wy.size() + by.size());
}

bool LstmParams::all_finite() const {
  return W.allFinite() && U.allFinite() && b.allFinite() && Wy.allFinite() && by.allFinite();
}

std::uint64_t LstmParams::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv_mix(h, &input_dim, sizeof input_dim);
  fnv_mix(h, &hidden_dim, sizeof hidden_dim);
  for_each_block([&](std::string_view, const double* d, std::size_t n) { fnv_mix(h, d, n * sizeof(double)); });
  return h;
}

void LstmParams::for_each_block(const std::function<void(std::string_view, double*, std::size_t)>& fn) {
  fn("W", W.data(), static_cast<std::size_t>(W.size()));
  fn("U", U.data(), static_cast<std::size_t>(U.size()));
  fn("b", b.data(), static_cast<std::size_t>(b.size()));
  fn("Wy", Wy.data(), static_cast<std::size_t>(Wy.size()));
  fn("by", by.data(), static_cast<std::size_t>(by.size()));
}

void LstmParams::for_each_block(
    const std::function<void(std::string_view, const double*, std::size_t)>& fn) const {
  fn("W", W.data(), static_cast<std::size_t>(W.size()));
  fn("U", U.data(), static_cast<std::size_t>(U.size()));
  fn("b", b.data(), static_cast<std::size_t>(b.size()));
  fn("Wy", Wy.data(), static_cast<std::size_t>(Wy.size()));
  fn("by", by.data(), static_cast<std::size_t>(by.size()));
}

bool LstmParams::operator==(const LstmParams& o) const {
  return input_dim == o.input_dim && hidden_dim == o.hidden_dim && W == o.W && U == o.U && b == o.b &&
         Wy == o.Wy && by == o.by;
}

LstmOutput lstm_forward(const LstmParams& params, const Eigen::MatrixXd& input) {
  check_shapes(params);
  if (!params.all_finite()) throw NumericError("LSTM parameters contain NaN or Inf");
  if (input.rows() != params.input_dim || input.cols() < 1) {
    throw ArgumentError("LSTM input must be input_dim x T with T >= 1");
  }
  const int H = params.hidden_dim;
  const Eigen::Index T = input.cols();

  LstmOutput out;
  LstmCache& k = out.cache;
  k.params_fingerprint = params.fingerprint();
  k.x = input;
  k.gates.resize(4 * H, T);
  k.c = Eigen::MatrixXd::Zero(H, T + 1);
  k.h = Eigen::MatrixXd::Zero(H, T + 1);

  // Input projections for all timesteps at once.
  const Eigen::MatrixXd xw = params.W * input;
  Eigen::VectorXd a(4 * H);
  for (Eigen::Index t = 0; t < T; ++t) {
    a.noalias() = xw.col(t) + params.b;
    a.noalias() += params.U * k.h.col(t);
    for (int j = 0; j < H; ++j) {
      const double i = sigmoid(a(j));
      const double f = sigmoid(a(H + j));
      const double g = std::tanh(a(2 * H + j));
      const double o = sigmoid(a(3 * H + j));
      k.gates(j, t) = i;
      k.gates(H + j, t) = f;
      k.gates(2 * H + j, t) = g;
      k.gates(3 * H + j, t) = o;
      const double c = f * k.c(j, t) + i * g;
      k.c(j, t + 1) = c;
      k.h(j, t + 1) = o * std::tanh(c);
    }
  }

  ClassProbs logits = params.Wy * k.h.col(T) + params.by;
  logits.array() -= logits.maxCoeff();
  ClassProbs e = logits.array().exp();
  out.probs = e / e.sum();
  k.probs = out.probs;
  return out;
}

double cross_entropy(const ClassProbs& probs, ScaleClass target) {
  return -std::log(std::max(probs(static_cast<int>(target)), 1e-300));
}

LstmGradients lstm_backward(const LstmParams& params, const LstmCache& cache, ScaleClass target) {
  if (cache.params_fingerprint != params.fingerprint() || cache.x.rows() != params.input_dim) {
    throw ContractError("LSTM cache does not belong to these parameters");
  }
  const int H = params.hidden_dim;
  const Eigen::Index T = cache.x.cols();
  LstmGradients g = LstmParams::zeros(params.input_dim, H);

  ClassProbs dz = cache.probs;
  dz(static_cast<int>(target)) -= 1.0;
  g.Wy.noalias() = dz * cache.h.col(T).transpose();
  g.by = dz;

  Eigen::VectorXd dh = params.Wy.transpose() * dz;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd da(4 * H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    for (int j = 0; j < H; ++j) {
      const double i = cache.gates(j, t);
      const double f = cache.gates(H + j, t);
      const double gg = cache.gates(2 * H + j, t);
      const double o = cache.gates(3 * H + j, t);
      const double tc = std::tanh(cache.c(j, t + 1));
      const double d_o = dh(j) * tc;
      const double d_c = dc(j) + dh(j) * o * (1.0 - tc * tc);
      da(j) = d_c * gg * i * (1.0 - i);
      da(H + j) = d_c * cache.c(j, t) * f * (1.0 - f);
      da(2 * H + j) = d_c * i * (1.0 - gg * gg);
      da(3 * H + j) = d_o * o * (1.0 - o);
      dc(j) = d_c * f;
    }
    g.W.noalias() += da * cache.x.col(t).transpose();
    g.U.noalias() += da * cache.h.col(t).transpose();
    g.b += da;
    dh.noalias() = params.U.transpose() * da;
  }
  return g;
}

TrainResult train(std::span<const Example> train_set, std::span<const Example> heldout,
                  const TrainConfig& cfg) {
  std::array<std::size_t, kNumScales> per_class{};
  for (const auto& ex : train_set) ++per_class[static_cast<std::size_t>(ex.label)];
  std::string missing;
  for (auto s : kScaleClasses) {
    if (per_class[static_cast<std::size_t>(s)] == 0) {
      missing += missing.empty() ? "" : ", ";
      missing += to_string(s);
    }
  }
  if (!missing.empty()) throw TrainingError("no training examples for: " + missing);
  if (cfg.batch_size < 1 || cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) {
    throw ArgumentError("invalid training configuration");
  }

  TrainResult result;
  LstmParams& p = result.params;
  p = LstmParams::init(kMfccDim, cfg.hidden_dim, cfg.seed);
  LstmParams m = LstmParams::zeros(kMfccDim, cfg.hidden_dim);
  LstmParams v = LstmParams::zeros(kMfccDim, cfg.hidden_dim);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      LstmGradients grad = LstmParams::zeros(kMfccDim, cfg.hidden_dim);
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = train_set[order[k]];
        const LstmOutput fw = lstm_forward(p, ex.input);
        loss_sum += cross_entropy(fw.probs, ex.label);
        Eigen::Index best = 0;
        fw.probs.maxCoeff(&best);
        if (best == static_cast<Eigen::Index>(ex.label)) ++correct;
        const LstmGradients gk = lstm_backward(p, fw.cache, ex.label);
        grad.W += gk.W;
        grad.U += gk.U;
        grad.b += gk.b;
        grad.Wy += gk.Wy;
        grad.by += gk.by;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      double norm_sq = 0.0;
      grad.for_each_block([&](std::string_view, double* d, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
          d[i] *= inv;
          norm_sq += d[i] * d[i];
        }
      });
      const double norm = std::sqrt(norm_sq);
      const double clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      std::vector<double*> gp, mp, vp;
      grad.for_each_block([&](std::string_view, double* d, std::size_t) { gp.push_back(d); });
      m.for_each_block([&](std::string_view, double* d, std::size_t) { mp.push_back(d); });
      v.for_each_block([&](std::string_view, double* d, std::size_t) { vp.push_back(d); });
      std::size_t blk = 0;
      p.for_each_block([&](std::string_view, double* w, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
          const double gi = gp[blk][i] * clip;
          mp[blk][i] = cfg.beta1 * mp[blk][i] + (1.0 - cfg.beta1) * gi;
          vp[blk][i] = cfg.beta2 * vp[blk][i] + (1.0 - cfg.beta2) * gi * gi;
          w[i] -= cfg.learning_rate * (mp[blk][i] / bc1) / (std::sqrt(vp[blk][i] / bc2) + cfg.epsilon);
        }
        ++blk;
      });
    }

    EpochReport er;
    er.epoch = epoch;
    er.train_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    er.train_accuracy = order.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(order.size());
    if (!heldout.empty()) er.heldout_accuracy = evaluate(p, heldout).accuracy();
    result.report.epochs.push_back(er);
  }
  return result;
}

Prediction predict(const LstmParams& params, const MfccMatrix& input, double reject_confidence) {
  Prediction out;
  out.probs = lstm_forward(params, input).probs;
  Eigen::Index best = 0;
  out.confidence = out.probs.maxCoeff(&best);
  out.argmax = kScaleClasses[static_cast<std::size_t>(best)];
  if (out.confidence >= reject_confidence) out.cls = out.argmax;
  return out;
}

ConfusionMatrix evaluate(const LstmParams& params, std::span<const Example> examples) {
  std::vector<std::string> labels;
  for (auto s : kScaleClasses) labels.emplace_back(to_string(s));
  ConfusionMatrix cm(labels);
  for (const auto& ex : examples) {
    const Prediction pr = predict(params, ex.input, 0.0);
    cm.add(static_cast<std::size_t>(ex.label), static_cast<std::size_t>(pr.argmax));
  }
  return cm;
}

FeatureNorm FeatureNorm::fit(std::span<const MfccMatrix> matrices) {
  FeatureNorm n;
  if (matrices.empty()) return n;
  const double count = static_cast<double>(matrices.size() * kMfccDim);
  for (const auto& m : matrices) n.mean += m.rowwise().sum();
  n.mean /= count;
  Eigen::Matrix<double, kMfccDim, 1> var = Eigen::Matrix<double, kMfccDim, 1>::Zero();
  for (const auto& m : matrices) var += (m.colwise() - n.mean).array().square().matrix().rowwise().sum();
  var /= count;
  for (int r = 0; r < kMfccDim; ++r) n.stddev(r) = var(r) > 1e-24 ? std::sqrt(var(r)) : 1.0;
  return n;
}

MfccMatrix FeatureNorm::apply(const MfccMatrix& m) const {
  MfccMatrix out = m.colwise() - mean;
  return stddev.cwiseInverse().asDiagonal() * out;
}

MfccMatrix ThroatModel::features(const AudioSegment& fragment) const {
  return norm.apply(mfcc_matrix(fragment, mfcc));
}

Prediction ThroatModel::classify(const AudioSegment& fragment) const {
  return predict(params, features(fragment), reject_confidence);
}

std::string ThroatModel::to_json() const {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["labels"] = nlohmann::json::array();
  for (auto s : kScaleClasses) j["labels"].push_back(std::string(to_string(s)));
  j["reject_confidence"] = reject_confidence;
  j["mfcc"] = {{"frame", mfcc.frame},         {"hop", mfcc.hop},
               {"n_filters", mfcc.n_filters}, {"n_coeffs", mfcc.n_coeffs},
               {"pre_emphasis", mfcc.pre_emphasis}, {"fmin", mfcc.fmin},
               {"fmax", mfcc.fmax},           {"dither", mfcc.dither},
               {"energy_floor", mfcc.energy_floor}};
  j["norm"] = {{"mean", std::vector<double>(norm.mean.data(), norm.mean.data() + kMfccDim)},
               {"std", std::vector<double>(norm.stddev.data(), norm.stddev.data() + kMfccDim)}};
  j["lstm"] = {{"input_dim", params.input_dim}, {"hidden_dim", params.hidden_dim}};
  params.for_each_block([&](std::string_view name, const double* d, std::size_t n) {
    j["lstm"][std::string(name)] = std::vector<double>(d, d + n);
  });
  return j.dump();
}

ThroatModel ThroatModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UnsupportedFormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != kModelFormat) throw UnsupportedFormatError("not an LSTM model file");
    if (j.at("version").get<int>() != kModelVersion) throw UnsupportedFormatError("unsupported model version");
    const auto labels = j.at("labels").get<std::vector<std::string>>();
    if (labels.size() != kNumScales) throw UnsupportedFormatError("model must have five labels");
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k] != to_string(kScaleClasses[k])) throw UnsupportedFormatError("unexpected label order");
    }
    ThroatModel m;
    m.reject_confidence = j.at("reject_confidence").get<double>();
    const auto& jm = j.at("mfcc");
    m.mfcc.frame = jm.at("frame");
    m.mfcc.hop = jm.at("hop");
    m.mfcc.n_filters = jm.at("n_filters");
    m.mfcc.n_coeffs = jm.at("n_coeffs");
    m.mfcc.pre_emphasis = jm.at("pre_emphasis");
    m.mfcc.fmin = jm.at("fmin");
    m.mfcc.fmax = jm.at("fmax");
    m.mfcc.dither = jm.at("dither");
    m.mfcc.energy_floor = jm.at("energy_floor");
    const auto mean = j.at("norm").at("mean").get<std::vector<double>>();
    const auto sd = j.at("norm").at("std").get<std::vector<double>>();
    if (mean.size() != kMfccDim || sd.size() != kMfccDim) throw UnsupportedFormatError("bad norm size");
    for (int r = 0; r < kMfccDim; ++r) {
      m.norm.mean(r) = mean[static_cast<std::size_t>(r)];
      m.norm.stddev(r) = sd[static_cast<std::size_t>(r)];
    }
    const auto& jl = j.at("lstm");
    m.params = LstmParams::zeros(jl.at("input_dim").get<int>(), jl.at("hidden_dim").get<int>());
    m.params.for_each_block([&](std::string_view name, double* d, std::size_t n) {
      const auto v = jl.at(std::string(name)).get<std::vector<double>>();
      if (v.size() != n) throw UnsupportedFormatError("parameter block " + std::string(name) + " has wrong size");
      std::copy(v.begin(), v.end(), d);
    });
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw UnsupportedFormatError(std::string("malformed model file: ") + e.what());
  }
}

void ThroatModel::save(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << to_json() << '\n';
  if (!f) throw IoError("write failed for " + path.string());
}

ThroatModel ThroatModel::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

}  // namespace diverlink
