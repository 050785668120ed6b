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

// MFCC front end for throat-vibration fragments.
//
// pre-emphasis -> Hann frames -> power spectrum -> Mel filterbank -> log ->
// orthonormal DCT-II -> first n_coeffs coefficients. The classifier consumes
// a fixed 20 x 20 matrix: rows are coefficients, columns are time frames.

#ifndef DIVERLINK_MFCC_HPP
#define DIVERLINK_MFCC_HPP

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "diverlink/signal_io.hpp"

namespace diverlink {

inline constexpr int kMfccDim = 20;

using MfccMatrix = Eigen::Matrix<double, kMfccDim, kMfccDim>;

struct MfccConfig {
  double frame = 0.025;  // seconds
  double hop = 0.010;    // seconds
  int n_filters = 26;
  int n_coeffs = kMfccDim;
  double pre_emphasis = 0.97;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means rate / 2
  double dither = 0.0;  // std of Gaussian dither in normalized [-1, 1) units
  double energy_floor = 1e-10;  // relative to the frame's total filterbank energy

  bool operator==(const MfccConfig&) const = default;
};

// Hz <-> Mel, mel = 2595 log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_filters x (n_fft/2 + 1) triangular filters whose edges and centers sit on
// FFT bins equally spaced on the Mel scale. Each filter weighs 1.0 at its
// center bin; filter k ends at the center of filter k + 1.
Eigen::MatrixXd mel_filterbank(int n_filters, std::size_t n_fft, double rate, double fmin, double fmax);

// Center bin of every filter built with the same arguments.
std::vector<std::size_t> mel_center_bins(int n_filters, std::size_t n_fft, double rate, double fmin,
                                         double fmax);

std::size_t mfcc_frame_length(double rate, const MfccConfig& cfg);
std::size_t mfcc_hop_length(double rate, const MfccConfig& cfg);
std::size_t mfcc_fft_size(double rate, const MfccConfig& cfg);
// floor((N - frame) / hop) + 1, or 0 when N < frame.
std::size_t mfcc_frame_count(std::size_t n_samples, double rate, const MfccConfig& cfg);

// Log Mel filterbank energies, n_filters x T (before the DCT).
Eigen::MatrixXd log_mel_energies(std::span<const double> samples, double rate, const MfccConfig& cfg);

// Raw MFCC matrix, n_coeffs x T. Samples are in normalized units.
Eigen::MatrixXd mfcc(std::span<const double> samples, double rate, const MfccConfig& cfg);
// Converts int16 samples to [-1, 1) before the pipeline.
Eigen::MatrixXd mfcc(const AudioSegment& fragment, const MfccConfig& cfg);

// Keeps the first 20 frames or pads zero columns up to 20.
MfccMatrix fix_time_dim(const Eigen::MatrixXd& raw);

MfccMatrix mfcc_matrix(const AudioSegment& fragment, const MfccConfig& cfg);

}  // namespace diverlink

#endif  // DIVERLINK_MFCC_HPP
