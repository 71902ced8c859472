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

#include <cstddef>
#include <optional>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/linalg.hpp"
#include "convbeam/parallel.hpp"
#include "convbeam/spectrogram.hpp"
#include "convbeam/tf_masks.hpp"

namespace convbeam {

struct WpeConfig {
  std::size_t delay = 3;
  std::size_t taps = 5;
  std::size_t iterations = 1;
  double loading = kDefaultLoading;
  double power_floor = kDefaultPowerFloor;
  double relative_floor = kDefaultRelativeFloor;

  void validate() const {
    if (delay < 1 || taps < 1 || iterations < 1)
      throw Error(ErrorCode::kInvalidParam, "WPE needs delay >= 1, taps >= 1, iterations >= 1");
  }
};

/// Per-frequency multi-channel prediction matrices G_f, each (C*K) x C.
struct PredictionFilter {
  std::vector<ComplexMatrix> per_bin;
};

namespace detail {

// Fills dst with the delayed stack [x_{t-D}; x_{t-D-1}; ...; x_{t-D-K+1}],
// zeros for frames before the start of the signal.
inline void fill_delayed(const ComplexSpectrogram& x, std::size_t t, std::size_t f,
                         std::size_t delay, std::size_t taps, std::span<Complex> dst) {
  const std::size_t channels = x.channels();
  for (std::size_t k = 0; k < taps; ++k) {
    const std::size_t lag = delay + k;
    for (std::size_t c = 0; c < channels; ++c)
      dst[k * channels + c] = t >= lag ? x(t - lag, f, c) : Complex{};
  }
}

}  // namespace detail

/// Delayed stack as a T x F x (C*K) tensor: taps ordered by increasing
/// delay, channel-major within each tap.
inline ComplexSpectrogram stack_delayed(const ComplexSpectrogram& x, std::size_t delay,
                                        std::size_t taps) {
  detail::require_frames(x, delay, taps);
  ComplexSpectrogram out(x.frames(), x.bins(), x.channels() * taps);
  for (std::size_t t = 0; t < x.frames(); ++t)
    for (std::size_t f = 0; f < x.bins(); ++f)
      detail::fill_delayed(x, t, f, delay, taps, out.cell(t, f));
  return out;
}

/// Solves the power-weighted normal equations of multi-channel linear
/// prediction, one bin at a time:
///   Psi_f = sum_t xd xd^H / lambda,  psi_f = sum_t xd x^H / lambda,
///   G_f = Psi_f^{-1} psi_f.
inline PredictionFilter wpe_filter(const ComplexSpectrogram& x, const PowerEstimate& lambda,
                                   const WpeConfig& cfg, ThreadCount threads = {}) {
  cfg.validate();
  detail::require_frames(x, cfg.delay, cfg.taps);
  if (lambda.frames() != x.frames() || lambda.bins() != x.bins())
    throw Error(ErrorCode::kShapeMismatch, "power estimate does not match spectrogram");
  const std::size_t channels = x.channels();
  const std::size_t dim = channels * cfg.taps;
  PredictionFilter g;
  g.per_bin.resize(x.bins());
  parallel_for(x.bins(), threads, [&](std::size_t f) {
    ComplexMatrix psi_big(dim, dim);
    ComplexMatrix psi(dim, channels);
    std::vector<Complex> stacked(dim);
    for (std::size_t t = 0; t < x.frames(); ++t) {
      detail::fill_delayed(x, t, f, cfg.delay, cfg.taps, stacked);
      const double w = 1.0 / lambda(t, f);
      const auto cur = x.cell(t, f);
      for (std::size_t r = 0; r < dim; ++r) {
        const Complex sr = stacked[r] * w;
        if (sr == Complex{}) continue;
        for (std::size_t c = 0; c < dim; ++c) psi_big(r, c) += sr * std::conj(stacked[c]);
        for (std::size_t c = 0; c < channels; ++c) psi(r, c) += sr * std::conj(cur[c]);
      }
    }
    hermitian_symmetrize(psi_big);
    g.per_bin[f] = hermitian_solve(psi_big, psi, cfg.loading);
  });
  return g;
}

/// x_hat_{t,f} = x_{t,f} - G_f^H xd_{t,f}
inline ComplexSpectrogram wpe_apply(const ComplexSpectrogram& x, const PredictionFilter& g,
                                    std::size_t delay, ThreadCount threads = {}) {
  if (g.per_bin.size() != x.bins())
    throw Error(ErrorCode::kShapeMismatch, "one prediction matrix per bin required");
  const std::size_t channels = x.channels();
  for (const auto& m : g.per_bin)
    if (m.cols() != channels || m.rows() == 0 || m.rows() % channels != 0)
      throw Error(ErrorCode::kShapeMismatch, "prediction matrix has wrong shape");
  ComplexSpectrogram out = x;
  parallel_for(x.bins(), threads, [&](std::size_t f) {
    const auto& gf = g.per_bin[f];
    const std::size_t taps = gf.rows() / channels;
    std::vector<Complex> stacked(gf.rows());
    for (std::size_t t = 0; t < x.frames(); ++t) {
      detail::fill_delayed(x, t, f, delay, taps, stacked);
      for (std::size_t c = 0; c < channels; ++c) {
        Complex pred = 0.0;
        for (std::size_t r = 0; r < gf.rows(); ++r) pred += std::conj(gf(r, c)) * stacked[r];
        out(t, f, c) -= pred;
      }
    }
  });
  return out;
}

/// Mask-based WPE. The first iteration estimates lambda from the input
/// spectrum with the given mask (all-ones when absent); later iterations
/// re-estimate lambda from the current output with a uniform mask. The
/// prediction statistics always come from the input.
inline ComplexSpectrogram wpe_run(const ComplexSpectrogram& x,
                                  const std::optional<TimeFrequencyMask>& mask,
                                  const WpeConfig& cfg, ThreadCount threads = {}) {
  cfg.validate();
  detail::require_frames(x, cfg.delay, cfg.taps);
  const auto ones = TimeFrequencyMask::Ones(x);
  ComplexSpectrogram estimate = x;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto& m = (it == 0 && mask) ? *mask : ones;
    auto lambda = lambda_from_mask(estimate, m, cfg.power_floor);
    apply_relative_floor(lambda, cfg.relative_floor);
    const auto g = wpe_filter(x, lambda, cfg, threads);
    estimate = wpe_apply(x, g, cfg.delay, threads);
  }
  return estimate;
}

}  // namespace convbeam
