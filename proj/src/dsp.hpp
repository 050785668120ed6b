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

// Internal FFT helpers on top of Eigen's FFT module.

#ifndef DIVERLINK_SRC_DSP_HPP
#define DIVERLINK_SRC_DSP_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace diverlink::dsp {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return e;
  }();
  return engine;
}

// Real FFT of `frame` zero-padded to nfft; returns nfft/2 + 1 bins.
inline std::vector<std::complex<double>> rfft(std::span<const double> frame, std::size_t nfft) {
  std::vector<double> in(nfft, 0.0);
  std::copy_n(frame.begin(), std::min(frame.size(), nfft), in.begin());
  std::vector<std::complex<double>> out;
  fft_engine().fwd(out, in);
  out.resize(nfft / 2 + 1);
  return out;
}

inline std::vector<double> irfft(const std::vector<std::complex<double>>& half, std::size_t nfft) {
  std::vector<double> out;
  fft_engine().inv(out, half, static_cast<Eigen::Index>(nfft));
  out.resize(nfft);
  return out;
}

// Periodic Hann window: w[n] + w[n + N/2] == 1.
inline std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

}  // namespace diverlink::dsp

#endif  // DIVERLINK_SRC_DSP_HPP
