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
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/linalg.hpp"
#include "convbeam/parallel.hpp"
#include "convbeam/spectrogram.hpp"
#include "convbeam/tf_masks.hpp"

namespace convbeam {

/// One matrix per frequency bin.
using BinMatrices = std::vector<ComplexMatrix>;
/// One filter vector per frequency bin.
using BinFilters = std::vector<ComplexVector>;

inline constexpr double kTraceFloor = 1e-12;

/// One-hot selector of the reference microphone.
class ReferenceVector {
 public:
  ReferenceVector(std::size_t channel, std::size_t size) : channel_(channel), size_(size) {
    if (channel >= size)
      throw Error(ErrorCode::kInvalidParam, "reference channel " + std::to_string(channel) +
                                                " out of range for " + std::to_string(size) +
                                                " channels");
  }
  std::size_t channel() const noexcept { return channel_; }
  std::size_t size() const noexcept { return size_; }

  ComplexVector vector() const {
    ComplexVector u(size_);
    u[channel_] = 1.0;
    return u;
  }

 private:
  std::size_t channel_;
  std::size_t size_;
};

/// Mask-weighted spatial covariance per bin,
///   Phi_f = sum_t m_{t,f} x x^H / sum_t m_{t,f},
/// Hermitian-symmetrized. The mask sum is floored at 1e-10.
inline BinMatrices psd(const ComplexSpectrogram& x, const ChannelMask& m, ThreadCount threads = {}) {
  if (m.frames() != x.frames() || m.bins() != x.bins())
    throw Error(ErrorCode::kShapeMismatch, "mask does not match spectrogram");
  const std::size_t channels = x.channels();
  BinMatrices out(x.bins());
  parallel_for(x.bins(), threads, [&](std::size_t f) {
    ComplexMatrix phi(channels, channels);
    double norm = 0.0;
    for (std::size_t t = 0; t < x.frames(); ++t) {
      const double w = m(t, f);
      norm += w;
      if (w == 0.0) continue;
      const auto cell = x.cell(t, f);
      for (std::size_t r = 0; r < channels; ++r) {
        const Complex a = w * cell[r];
        for (std::size_t c = 0; c < channels; ++c) phi(r, c) += a * std::conj(cell[c]);
      }
    }
    phi *= 1.0 / std::max(norm, 1e-10);
    hermitian_symmetrize(phi);
    out[f] = std::move(phi);
  });
  return out;
}

/// Souden MVDR:  g = [Phi_i^{-1} Phi_t / tr(Phi_i^{-1} Phi_t)] u
inline ComplexVector mvdr_filter(const ComplexMatrix& psd_target, const ComplexMatrix& psd_interference,
                                 const ReferenceVector& u, double loading = kDefaultLoading) {
  if (psd_target.rows() != psd_interference.rows() || psd_target.cols() != psd_interference.cols() ||
      u.size() != psd_target.cols())
    throw Error(ErrorCode::kDimensionMismatch, "mvdr_filter operand sizes");
  const ComplexMatrix ratio = hermitian_solve(psd_interference, psd_target, loading);
  const Complex tr = trace(ratio);
  if (!(std::abs(tr) >= kTraceFloor))
    throw Error(ErrorCode::kZeroTrace, "trace of Phi_i^{-1} Phi_t vanishes");
  ComplexVector g = ratio.column(u.channel());
  for (auto& v : g) v /= tr;
  return g;
}

/// x_hat_{t,f} = g_f^H x_{t,f}; returns a single-channel spectrogram.
inline ComplexSpectrogram beamform_apply(const ComplexSpectrogram& x, const BinFilters& g) {
  if (g.size() != x.bins()) throw Error(ErrorCode::kShapeMismatch, "one filter per bin required");
  for (const auto& gf : g)
    if (gf.size() != x.channels()) throw Error(ErrorCode::kShapeMismatch, "filter length != channels");
  ComplexSpectrogram out(x.frames(), x.bins(), 1);
  for (std::size_t t = 0; t < x.frames(); ++t)
    for (std::size_t f = 0; f < x.bins(); ++f) {
      const auto cell = x.cell(t, f);
      Complex acc = 0.0;
      for (std::size_t c = 0; c < cell.size(); ++c) acc += std::conj(g[f][c]) * cell[c];
      out(t, f, 0) = acc;
    }
  return out;
}

/// Per-source PSDs from masks; masks[0] is the noise mask, masks[j] source j.
inline std::vector<BinMatrices> source_psds(const ComplexSpectrogram& x,
                                            const std::vector<TimeFrequencyMask>& masks,
                                            ThreadCount threads = {}) {
  std::vector<BinMatrices> out;
  out.reserve(masks.size());
  for (const auto& m : masks) {
    if (!m.matches(x)) throw Error(ErrorCode::kShapeMismatch, "mask does not match spectrogram");
    out.push_back(psd(x, mask_channel_average(m), threads));
  }
  return out;
}

/// Filters for source j (1-based, 0 is noise) against the sum of every
/// other PSD in the set.
inline BinFilters mvdr_source_filters(const std::vector<BinMatrices>& psds, std::size_t j,
                                      const ReferenceVector& u, double loading = kDefaultLoading,
                                      ThreadCount threads = {}) {
  if (j == 0 || j >= psds.size())
    throw Error(ErrorCode::kInvalidParam, "source index must be in [1, J]");
  const std::size_t bins = psds[j].size();
  BinFilters g(bins);
  parallel_for(bins, threads, [&](std::size_t f) {
    ComplexMatrix interference(psds[j][f].rows(), psds[j][f].cols());
    for (std::size_t i = 0; i < psds.size(); ++i)
      if (i != j) interference += psds[i][f];
    g[f] = mvdr_filter(psds[j][f], interference, u, loading);
  });
  return g;
}

/// Separates J sources with per-source MVDR. masks has J + 1 entries with the
/// noise mask first. Output k holds source k + 1.
inline std::vector<ComplexSpectrogram> mvdr_separate(const ComplexSpectrogram& x,
                                                     const std::vector<TimeFrequencyMask>& masks,
                                                     const ReferenceVector& u,
                                                     double loading = kDefaultLoading,
                                                     ThreadCount threads = {}) {
  if (masks.size() < 2)
    throw Error(ErrorCode::kInvalidParam, "need a noise mask plus at least one source mask");
  if (u.size() != x.channels()) throw Error(ErrorCode::kDimensionMismatch, "reference vector size");
  const auto psds = source_psds(x, masks, threads);
  std::vector<ComplexSpectrogram> out;
  for (std::size_t j = 1; j < masks.size(); ++j)
    out.push_back(beamform_apply(x, mvdr_source_filters(psds, j, u, loading, threads)));
  return out;
}

}  // namespace convbeam
