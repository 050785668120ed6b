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

#include "diverlink/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "diverlink/error.hpp"
#include "dsp.hpp"

namespace diverlink {

namespace {

double effective_fmax(double rate, const MfccConfig& cfg) {
  return cfg.fmax > 0.0 ? cfg.fmax : rate / 2.0;
}

std::vector<std::size_t> band_bins(int n_filters, std::size_t n_fft, double rate, double fmin,
                                   double fmax) {
  if (n_filters < 1) throw ArgumentError("mel filterbank needs at least one filter");
  if (n_fft < 2) throw ArgumentError("FFT size too small");
  if (!(rate > 0.0) || !(fmin >= 0.0) || !(fmin < fmax) || fmax > rate / 2.0) {
    throw ArgumentError("mel filterbank band must satisfy 0 <= fmin < fmax <= rate/2");
  }
  const double mlo = hz_to_mel(fmin);
  const double mhi = hz_to_mel(fmax);
  const auto n_points = static_cast<std::size_t>(n_filters) + 2;
  std::vector<std::size_t> bins(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    const double mel = mlo + (mhi - mlo) * static_cast<double>(k) / static_cast<double>(n_points - 1);
    const double hz = mel_to_hz(mel);
    const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(n_fft + 1) * hz / rate));
    bins[k] = std::min(b, n_fft / 2);
  }
  return bins;
}

Eigen::MatrixXd dct_matrix(int n_out, int n_in) {
  Eigen::MatrixXd d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int n = 0; n < n_in; ++n) {
      d(k, n) = scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return d;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::size_t> mel_center_bins(int n_filters, std::size_t n_fft, double rate, double fmin,
                                         double fmax) {
  auto bins = band_bins(n_filters, n_fft, rate, fmin, fmax);
  return {bins.begin() + 1, bins.end() - 1};
}

Eigen::MatrixXd mel_filterbank(int n_filters, std::size_t n_fft, double rate, double fmin, double fmax) {
  const auto bins = band_bins(n_filters, n_fft, rate, fmin, fmax);
  const auto n_bins = static_cast<Eigen::Index>(n_fft / 2 + 1);
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_filters, n_bins);
  for (int k = 0; k < n_filters; ++k) {
    const std::size_t left = bins[k];
    const std::size_t center = bins[k + 1];
    const std::size_t right = bins[k + 2];
    for (std::size_t b = left; b < center; ++b) {
      fb(k, static_cast<Eigen::Index>(b)) =
          static_cast<double>(b - left) / static_cast<double>(center - left);
    }
    for (std::size_t b = center + 1; b < right; ++b) {
      fb(k, static_cast<Eigen::Index>(b)) =
          static_cast<double>(right - b) / static_cast<double>(right - center);
    }
    fb(k, static_cast<Eigen::Index>(center)) = 1.0;
  }
  return fb;
}

std::size_t mfcc_frame_length(double rate, const MfccConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.frame * rate));
}

std::size_t mfcc_hop_length(double rate, const MfccConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.hop * rate));
}

std::size_t mfcc_fft_size(double rate, const MfccConfig& cfg) {
  std::size_t n = 1;
  while (n < mfcc_frame_length(rate, cfg)) n <<= 1;
  return n;
}

std::size_t mfcc_frame_count(std::size_t n_samples, double rate, const MfccConfig& cfg) {
  const std::size_t frame = mfcc_frame_length(rate, cfg);
  const std::size_t hop = mfcc_hop_length(rate, cfg);
  if (frame == 0 || hop == 0 || n_samples < frame) return 0;
  return (n_samples - frame) / hop + 1;
}

Eigen::MatrixXd log_mel_energies(std::span<const double> samples, double rate, const MfccConfig& cfg) {
  const std::size_t frame = mfcc_frame_length(rate, cfg);
  const std::size_t hop = mfcc_hop_length(rate, cfg);
  if (frame == 0 || hop == 0) throw ArgumentError("MFCC frame and hop must be positive");
  const std::size_t n_frames = mfcc_frame_count(samples.size(), rate, cfg);
  if (n_frames == 0) throw ArgumentError("fragment is shorter than one MFCC frame");
  const std::size_t n_fft = mfcc_fft_size(rate, cfg);
  const Eigen::MatrixXd fb = mel_filterbank(cfg.n_filters, n_fft, rate, cfg.fmin, effective_fmax(rate, cfg));

  std::vector<double> x(samples.begin(), samples.end());
  if (cfg.dither > 0.0) {
    std::mt19937_64 rng(0x6d66636364697468ULL);
    std::normal_distribution<double> nd(0.0, cfg.dither);
    for (auto& v : x) v += nd(rng);
  }
  for (std::size_t i = x.size(); i-- > 1;) x[i] -= cfg.pre_emphasis * x[i - 1];

  // Symmetric Hann over the analysis frame.
  std::vector<double> window(frame);
  for (std::size_t n = 0; n < frame; ++n) {
    window[n] = frame == 1 ? 1.0
                           : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                                  static_cast<double>(frame - 1));
  }

  Eigen::MatrixXd out(cfg.n_filters, static_cast<Eigen::Index>(n_frames));
  std::vector<double> buf(frame);
  Eigen::VectorXd power(static_cast<Eigen::Index>(n_fft / 2 + 1));
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t n = 0; n < frame; ++n) buf[n] = window[n] * x[t * hop + n];
    const auto spec = dsp::rfft(buf, n_fft);
    for (std::size_t b = 0; b < spec.size(); ++b) {
      power(static_cast<Eigen::Index>(b)) = std::norm(spec[b]) / static_cast<double>(n_fft);
    }
    const Eigen::VectorXd energies = fb * power;
    // The floor scales with the frame so a gain change shifts every band equally.
    const double floor =
        std::max(cfg.energy_floor * energies.sum(), std::numeric_limits<double>::min());
    for (int k = 0; k < cfg.n_filters; ++k) {
      out(k, static_cast<Eigen::Index>(t)) = std::log(std::max(energies(k), floor));
    }
  }
  return out;
}

Eigen::MatrixXd mfcc(std::span<const double> samples, double rate, const MfccConfig& cfg) {
  if (cfg.n_coeffs < 1 || cfg.n_coeffs > cfg.n_filters) {
    throw ArgumentError("n_coeffs must lie in [1, n_filters]");
  }
  const Eigen::MatrixXd logmel = log_mel_energies(samples, rate, cfg);
  return dct_matrix(cfg.n_coeffs, cfg.n_filters) * logmel;
}

Eigen::MatrixXd mfcc(const AudioSegment& fragment, const MfccConfig& cfg) {
  std::vector<double> x(fragment.samples.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = fragment.samples[i] / 32768.0;
  return mfcc(x, fragment.sample_rate, cfg);
}

MfccMatrix fix_time_dim(const Eigen::MatrixXd& raw) {
  if (raw.rows() != kMfccDim) throw ArgumentError("MFCC matrix must have 20 coefficient rows");
  MfccMatrix out = MfccMatrix::Zero();
  const Eigen::Index keep = std::min<Eigen::Index>(raw.cols(), kMfccDim);
  out.leftCols(keep) = raw.leftCols(keep);
  return out;
}

MfccMatrix mfcc_matrix(const AudioSegment& fragment, const MfccConfig& cfg) {
  return fix_time_dim(mfcc(fragment, cfg));
}

}  // namespace diverlink
