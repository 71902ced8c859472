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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/linalg.hpp"
#include "convbeam/mvdr.hpp"
#include "convbeam/parallel.hpp"
#include "convbeam/spectrogram.hpp"
#include "convbeam/tf_masks.hpp"

namespace convbeam {

/// Which stacked frame the weight 1/lambda_{t,f} multiplies in R_f.
enum class CovarianceIndexing {
  kCurrentFrame,  // sum_t xbar_t xbar_t^H / lambda_t
  kDelayedFrame,  // sum_t xbar_{t-D} xbar_{t-D}^H / lambda_t
};

struct WpdConfig {
  std::size_t delay = 3;
  std::size_t taps = 5;  // 0 disables the convolutional part
  double loading = kDefaultLoading;
  std::size_t ref_channel = 0;
  // Use the same mask for the power weighting and for the target PSD.
  bool shared_mask = true;
  // Add the noise mask to each source mask on the power-weighting path.
  bool noise_in_power_mask = false;
  double power_floor = kDefaultPowerFloor;
  double relative_floor = kDefaultRelativeFloor;
  CovarianceIndexing indexing = CovarianceIndexing::kCurrentFrame;

  void validate() const {
    if (taps >= 1 && delay < 1) throw Error(ErrorCode::kInvalidParam, "WPD needs delay >= 1 when taps >= 1");
  }
  std::size_t stacked_size(std::size_t channels) const { return channels * (taps + 1); }
};

/// Convolutional filter per bin, length C*(K+1).
struct StackedFilter {
  std::vector<ComplexVector> per_bin;
};

/// Steering vector of one bin and its zero-padded stacked form.
struct SteeringVector {
  ComplexVector v;

  ComplexVector padded(std::size_t taps) const {
    ComplexVector out(v.size() * (taps + 1));
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c];
    if (v.norm() == 0.0) throw Error(ErrorCode::kDegenerateSteering, "zero steering vector");
    return out;
  }
};

namespace detail {

// dst = [x_t; x_{t-D}; x_{t-D-1}; ...; x_{t-D-K+1}], zero before frame 0.
// A negative t yields an all-zero stack.
inline void fill_current_and_past(const ComplexSpectrogram& x, std::ptrdiff_t t, std::size_t f,
                                  std::size_t delay, std::size_t taps, std::span<Complex> dst) {
  const std::size_t channels = x.channels();
  auto frame_or_zero = [&](std::ptrdiff_t frame, std::size_t block) {
    for (std::size_t c = 0; c < channels; ++c)
      dst[block * channels + c] = frame >= 0 ? x(static_cast<std::size_t>(frame), f, c) : Complex{};
  };
  frame_or_zero(t, 0);
  for (std::size_t k = 0; k < taps; ++k)
    frame_or_zero(t - static_cast<std::ptrdiff_t>(delay + k), k + 1);
}

}  // namespace detail

/// T x F x C(K+1) stack: the current frame, then K past frames at delays
/// D, D+1, ..., D+K-1.
inline ComplexSpectrogram stack_current_and_past(const ComplexSpectrogram& x, std::size_t delay,
                                                 std::size_t taps) {
  detail::require_frames(x, delay, taps);
  ComplexSpectrogram out(x.frames(), x.bins(), x.channels() * (taps + 1));
  for (std::size_t t = 0; t < x.frames(); ++t)
    for (std::size_t f = 0; f < x.bins(); ++f)
      detail::fill_current_and_past(x, static_cast<std::ptrdiff_t>(t), f, delay, taps, out.cell(t, f));
  return out;
}

/// Power-normalized covariance per bin, summed over frames t = D .. T-1:
///   R_f = sum_t xbar_{s,f} xbar_{s,f}^H / lambda_{t,f}
/// with s = t (kCurrentFrame) or s = t - D (kDelayedFrame). The delayed form
/// pairs each stack with the power of a frame D steps later.
inline BinMatrices wpd_covariance(const ComplexSpectrogram& x, const PowerEstimate& lambda,
                                  const WpdConfig& cfg, ThreadCount threads = {}) {
  cfg.validate();
  detail::require_frames(x, cfg.delay, cfg.taps);
  if (lambda.frames() != x.frames() || lambda.bins() != x.bins())
    throw Error(ErrorCode::kShapeMismatch, "power estimate does not match spectrogram");
  const std::size_t dim = cfg.stacked_size(x.channels());
  BinMatrices out(x.bins());
  parallel_for(x.bins(), threads, [&](std::size_t f) {
    ComplexMatrix r(dim, dim);
    std::vector<Complex> stacked(dim);
    for (std::size_t t = cfg.delay; t < x.frames(); ++t) {
      const std::size_t s = cfg.indexing == CovarianceIndexing::kCurrentFrame ? t : t - cfg.delay;
      detail::fill_current_and_past(x, static_cast<std::ptrdiff_t>(s), f, cfg.delay, cfg.taps, stacked);
      const double w = 1.0 / lambda(t, f);
      for (std::size_t i = 0; i < dim; ++i) {
        const Complex a = stacked[i] * w;
        if (a == Complex{}) continue;
        for (std::size_t j = 0; j < dim; ++j) r(i, j) += a * std::conj(stacked[j]);
      }
    }
    hermitian_symmetrize(r);
    out[f] = std::move(r);
  });
  return out;
}

/// Mask-weighted PSD of the zero-padded observation: psd() embedded in the
/// top-left C x C block of a C(K+1) square matrix.
inline BinMatrices padded_psd(const ComplexSpectrogram& x, const ChannelMask& m, const WpdConfig& cfg,
                              ThreadCount threads = {}) {
  const std::size_t channels = x.channels();
  const std::size_t dim = cfg.stacked_size(channels);
  const auto small = psd(x, m, threads);
  BinMatrices out(small.size());
  for (std::size_t f = 0; f < small.size(); ++f) {
    ComplexMatrix big(dim, dim);
    for (std::size_t r = 0; r < channels; ++r)
      for (std::size_t c = 0; c < channels; ++c) big(r, c) = small[f](r, c);
    out[f] = std::move(big);
  }
  return out;
}

/// Steering-vector-free WPD filter of one bin:
///   w = [R^{-1} Phi / tr(R^{-1} Phi)] u_bar
/// with u_bar the reference selector padded with zeros to C(K+1).
inline ComplexVector wpd_filter_new(const ComplexMatrix& r, const ComplexMatrix& padded_target,
                                    const ReferenceVector& u, double loading = kDefaultLoading) {
  if (r.rows() != padded_target.rows() || r.cols() != padded_target.cols() || !r.square())
    throw Error(ErrorCode::kDimensionMismatch, "wpd_filter_new operand sizes");
  if (u.size() == 0 || r.rows() % u.size() != 0)
    throw Error(ErrorCode::kDimensionMismatch, "stack size is not a multiple of the channel count");
  const ComplexMatrix ratio = hermitian_solve(r, padded_target, loading);
  const Complex tr = trace(ratio);
  if (!(std::abs(tr) >= kTraceFloor))
    throw Error(ErrorCode::kZeroTrace, "trace of R^{-1} Phi vanishes (silent or degenerate mask)");
  ComplexVector w = ratio.column(u.channel());
  for (auto& v : w) v /= tr;
  return w;
}

/// Steering-vector WPD filter of one bin:
///   w = R^{-1} v_bar / (v_bar^H R^{-1} v_bar) * conj(v_ref)
inline ComplexVector wpd_filter_reference(const ComplexMatrix& r, const ComplexVector& padded_steering,
                                          Complex v_ref, double loading = kDefaultLoading) {
  if (!r.square() || r.rows() != padded_steering.size())
    throw Error(ErrorCode::kDimensionMismatch, "wpd_filter_reference operand sizes");
  ComplexVector w = hermitian_solve(r, padded_steering, loading);
  const Complex denom = dot(padded_steering, w);
  if (!(std::abs(denom) > 0.0) || !std::isfinite(std::abs(denom)))
    throw Error(ErrorCode::kDegenerateSteering, "v^H R^{-1} v vanishes");
  const Complex scale = std::conj(v_ref) / denom;
  for (auto& v : w) v *= scale;
  return w;
}

/// x_hat_{t,f} = w_f^H xbar_{t,f}; single-channel output.
inline ComplexSpectrogram wpd_apply(const ComplexSpectrogram& x, const StackedFilter& w,
                                    const WpdConfig& cfg, ThreadCount threads = {}) {
  const std::size_t dim = cfg.stacked_size(x.channels());
  if (w.per_bin.size() != x.bins()) throw Error(ErrorCode::kShapeMismatch, "one filter per bin required");
  for (const auto& wf : w.per_bin)
    if (wf.size() != dim) throw Error(ErrorCode::kShapeMismatch, "filter length != C(K+1)");
  ComplexSpectrogram out(x.frames(), x.bins(), 1);
  parallel_for(x.bins(), threads, [&](std::size_t f) {
    std::vector<Complex> stacked(dim);
    const auto& wf = w.per_bin[f];
    for (std::size_t t = 0; t < x.frames(); ++t) {
      detail::fill_current_and_past(x, static_cast<std::ptrdiff_t>(t), f, cfg.delay, cfg.taps, stacked);
      Complex acc = 0.0;
      for (std::size_t i = 0; i < dim; ++i) acc += std::conj(wf[i]) * stacked[i];
      out(t, f, 0) = acc;
    }
  });
  return out;
}

/// WPD filters for one source. power_mask drives lambda (and so R),
/// psd_mask drives the padded target PSD.
inline StackedFilter wpd_source_filters(const ComplexSpectrogram& x, const TimeFrequencyMask& power_mask,
                                        const TimeFrequencyMask& psd_mask, const WpdConfig& cfg,
                                        ThreadCount threads = {}) {
  cfg.validate();
  detail::require_frames(x, cfg.delay, cfg.taps);
  const ReferenceVector u(cfg.ref_channel, x.channels());
  auto lambda = lambda_from_mask(x, power_mask, cfg.power_floor);
  apply_relative_floor(lambda, cfg.relative_floor);
  const auto r = wpd_covariance(x, lambda, cfg, threads);
  if (!psd_mask.matches(x)) throw Error(ErrorCode::kShapeMismatch, "mask does not match spectrogram");
  const auto phi = padded_psd(x, mask_channel_average(psd_mask), cfg, threads);
  StackedFilter w;
  w.per_bin.resize(x.bins());
  parallel_for(x.bins(), threads,
               [&](std::size_t f) { w.per_bin[f] = wpd_filter_new(r[f], phi[f], u, cfg.loading); });
  return w;
}

/// Multi-source WPD separation. masks holds the noise mask first, then one
/// mask per source; output k holds source k + 1. With cfg.shared_mask false,
/// psd_masks (same layout) supplies the target-PSD masks while masks drives
/// the power weighting.
inline std::vector<ComplexSpectrogram> wpd_separate(const ComplexSpectrogram& x,
                                                    const std::vector<TimeFrequencyMask>& masks,
                                                    const WpdConfig& cfg, ThreadCount threads = {},
                                                    std::span<const TimeFrequencyMask> psd_masks = {}) {
  if (masks.size() < 2)
    throw Error(ErrorCode::kInvalidParam, "need a noise mask plus at least one source mask");
  if (!cfg.shared_mask && psd_masks.size() != masks.size())
    throw Error(ErrorCode::kInvalidParam, "split-mask mode needs a second mask set of equal size");
  std::vector<ComplexSpectrogram> out;
  for (std::size_t j = 1; j < masks.size(); ++j) {
    const auto power_mask = cfg.noise_in_power_mask ? mask_union(masks[j], masks[0]) : masks[j];
    const auto& target_mask = cfg.shared_mask ? masks[j] : psd_masks[j];
    out.push_back(wpd_apply(x, wpd_source_filters(x, power_mask, target_mask, cfg, threads), cfg, threads));
  }
  return out;
}

/// Draws random Hermitian positive definite R = M^H M + I and a random
/// padded steering vector, builds the exactly rank-1 padded target PSD
/// phi * v_bar v_bar^H, and compares the steering-free filter against the
/// steering-vector filter with v_ref = v_bar^T u_bar. Returns the largest
/// relative difference over all trials.
inline double equivalence_check(std::size_t channels, std::size_t taps, std::size_t trials,
                                std::uint64_t seed, double phi_scale = 1.0,
                                double loading = kDefaultLoading) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> power(0.1, 10.0);
  std::uniform_int_distribution<std::size_t> pick_ref(0, channels - 1);
  const std::size_t dim = channels * (taps + 1);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    ComplexMatrix m(dim, dim);
    for (auto& v : m.data()) v = {gauss(rng), gauss(rng)};
    ComplexMatrix r = matmul(conj_transpose(m), m) + ComplexMatrix::Identity(dim);
    hermitian_symmetrize(r);

    SteeringVector sv{ComplexVector(channels)};
    for (auto& v : sv.v) v = {gauss(rng), gauss(rng)};
    const ComplexVector v_bar = sv.padded(taps);
    const double phi = power(rng) * phi_scale;
    ComplexMatrix target = outer(v_bar, v_bar);
    target *= phi;

    const ReferenceVector u(pick_ref(rng), channels);
    const Complex v_ref = v_bar[u.channel()];  // v_bar^T u_bar

    const auto w_new = wpd_filter_new(r, target, u, loading);
    const auto w_ref = wpd_filter_reference(r, v_bar, v_ref, loading);
    double diff = 0.0;
    for (std::size_t i = 0; i < dim; ++i) diff += std::norm(w_new[i] - w_ref[i]);
    worst = std::max(worst, std::sqrt(diff) / w_ref.norm());
  }
  return worst;
}

}  // namespace convbeam
