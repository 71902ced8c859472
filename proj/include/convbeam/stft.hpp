// Copyright 2026 The convbeam Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/spectrogram.hpp"

namespace convbeam {

enum class WindowType { kHann };

struct StftConfig {
  double sample_rate = 16000.0;
  std::size_t win_len = 400;  // 25 ms
  std::size_t hop = 160;      // 10 ms
  std::size_t fft_size = 512;
  WindowType window = WindowType::kHann;

  std::size_t bins() const { return fft_size / 2 + 1; }

  void validate() const {
    if (hop == 0 || hop > win_len || win_len > fft_size || fft_size % 2 != 0)
      throw Error(ErrorCode::kInvalidParam,
                  "STFT requires 0 < hop <= win_len <= fft_size with even fft_size");
    if (!(sample_rate > 0.0)) throw Error(ErrorCode::kInvalidParam, "sample rate must be positive");
  }

  std::size_t frames_for(std::size_t num_samples) const {
    if (num_samples < win_len) throw Error(ErrorCode::kTooShort, "signal shorter than one window");
    return (num_samples - win_len) / hop + 1;
  }
};

/// Periodic Hann window of the given length.
inline std::vector<double> hann_window(std::size_t len) {
  std::vector<double> w(len);
  for (std::size_t n = 0; n < len; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(len));
  return w;
}

namespace detail {

// FFTW's planner is not reentrant; plan creation and destruction go
// through this lock, execution does not.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> time() { return {real_, n_}; }

  // Unnormalized forward transform of time() into out (n/2+1 bins).
  void forward(std::span<Complex> out) {
    fftw_execute(forward_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec_[k][0], spec_[k][1]};
  }

  // Inverse transform of in, scaled by 1/n, written to time().
  void inverse(std::span<const Complex> in) {
    for (std::size_t k = 0; k < in.size(); ++k) {
      spec_[k][0] = in[k].real();
      spec_[k][1] = in[k].imag();
    }
    fftw_execute(inverse_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) real_[i] *= scale;
  }

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace detail

/// One-sided STFT. Frame t covers samples [t*hop, t*hop + win_len), placed
/// at the start of a zero-padded fft_size buffer. No padding at the head.
inline ComplexSpectrogram stft(const Signal& wave, const StftConfig& cfg) {
  cfg.validate();
  if (wave.empty()) throw Error(ErrorCode::kInvalidParam, "no channels");
  const std::size_t len = signal_length(wave);
  for (const auto& ch : wave)
    if (ch.size() != len) throw Error(ErrorCode::kLengthMismatch, "channels differ in length");
  const std::size_t frames = cfg.frames_for(len);
  const std::size_t bins = cfg.bins();
  const auto window = hann_window(cfg.win_len);

  ComplexSpectrogram out(frames, bins, wave.size());
  detail::RealFft fft(cfg.fft_size);
  std::vector<Complex> spectrum(bins);
  for (std::size_t c = 0; c < wave.size(); ++c) {
    for (std::size_t t = 0; t < frames; ++t) {
      auto buf = fft.time();
      std::fill(buf.begin(), buf.end(), 0.0);
      const std::size_t start = t * cfg.hop;
      for (std::size_t n = 0; n < cfg.win_len; ++n) buf[n] = window[n] * wave[c][start + n];
      fft.forward(spectrum);
      for (std::size_t f = 0; f < bins; ++f) out(t, f, c) = spectrum[f];
    }
  }
  return out;
}

/// Weighted overlap-add inverse of stft(). Samples not covered by any frame
/// come out as zero.
inline Signal istft(const ComplexSpectrogram& spec, const StftConfig& cfg, std::size_t out_len) {
  cfg.validate();
  if (spec.bins() != cfg.bins())
    throw Error(ErrorCode::kDimensionMismatch, "spectrogram bins do not match fft_size");
  const auto window = hann_window(cfg.win_len);
  Signal out(spec.channels(), std::vector<double>(out_len, 0.0));
  std::vector<double> weight(out_len, 0.0);
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    const std::size_t start = t * cfg.hop;
    for (std::size_t n = 0; n < cfg.win_len && start + n < out_len; ++n)
      weight[start + n] += window[n] * window[n];
  }

  detail::RealFft fft(cfg.fft_size);
  std::vector<Complex> spectrum(spec.bins());
  for (std::size_t c = 0; c < spec.channels(); ++c) {
    for (std::size_t t = 0; t < spec.frames(); ++t) {
      for (std::size_t f = 0; f < spec.bins(); ++f) spectrum[f] = spec(t, f, c);
      fft.inverse(spectrum);
      auto buf = fft.time();
      const std::size_t start = t * cfg.hop;
      for (std::size_t n = 0; n < cfg.win_len && start + n < out_len; ++n)
        out[c][start + n] += window[n] * buf[n];
    }
    for (std::size_t i = 0; i < out_len; ++i) out[c][i] /= std::max(weight[i], 1e-10);
  }
  return out;
}

}  // namespace convbeam
