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
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/simulator.hpp"
#include "convbeam/spectrogram.hpp"
#include "convbeam/stft.hpp"

namespace convbeam {

/// Real T x F grid; used for the power estimate and channel-averaged masks.
class RealGrid {
 public:
  RealGrid() = default;
  RealGrid(std::size_t frames, std::size_t bins, double fill = 0.0)
      : frames_(frames), bins_(bins), data_(frames * bins, fill) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }
  double& operator()(std::size_t t, std::size_t f) { return data_[t * bins_ + f]; }
  double operator()(std::size_t t, std::size_t f) const { return data_[t * bins_ + f]; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<double> data_;
};

/// Time-variant power lambda_{t,f}; nonnegative and floored.
using PowerEstimate = RealGrid;
/// Mask averaged over channels, m_{t,f}.
using ChannelMask = RealGrid;

inline constexpr double kDefaultPowerFloor = 1e-10;
inline constexpr double kDefaultRelativeFloor = 1e-2;

/// Real mask in [0, 1], shape T x F x C. source_id 0 denotes noise.
class TimeFrequencyMask {
 public:
  TimeFrequencyMask() = default;
  TimeFrequencyMask(std::size_t frames, std::size_t bins, std::size_t channels, double fill = 0.0,
                    std::size_t source_id = 0)
      : frames_(frames), bins_(bins), channels_(channels), source_id_(source_id),
        data_(frames * bins * channels, fill) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t source_id() const noexcept { return source_id_; }
  void set_source_id(std::size_t id) noexcept { source_id_ = id; }

  double& operator()(std::size_t t, std::size_t f, std::size_t c) {
    return data_[(t * bins_ + f) * channels_ + c];
  }
  double operator()(std::size_t t, std::size_t f, std::size_t c) const {
    return data_[(t * bins_ + f) * channels_ + c];
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool matches(const ComplexSpectrogram& x) const noexcept {
    return frames_ == x.frames() && bins_ == x.bins() && channels_ == x.channels();
  }

  static TimeFrequencyMask Ones(const ComplexSpectrogram& x) {
    return TimeFrequencyMask(x.frames(), x.bins(), x.channels(), 1.0);
  }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t channels_ = 0;
  std::size_t source_id_ = 0;
  std::vector<double> data_;
};

/// lambda_{t,f} = (1/C) sum_c [m_{t,f,c} / mean_tau(m_{tau,f,c})] |x_{t,f,c}|^2,
/// floored at `floor`. The time-normalizer is floored at 1e-10.
inline PowerEstimate lambda_from_mask(const ComplexSpectrogram& x, const TimeFrequencyMask& m,
                                      double floor = kDefaultPowerFloor) {
  if (!m.matches(x)) throw Error(ErrorCode::kShapeMismatch, "mask does not match spectrogram");
  const std::size_t frames = x.frames(), bins = x.bins(), channels = x.channels();
  std::vector<double> mean(bins * channels, 0.0);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t f = 0; f < bins; ++f)
      for (std::size_t c = 0; c < channels; ++c) mean[f * channels + c] += m(t, f, c);
  for (auto& v : mean) v = std::max(v / static_cast<double>(frames), 1e-10);

  PowerEstimate lambda(frames, bins);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t f = 0; f < bins; ++f) {
      double acc = 0.0;
      for (std::size_t c = 0; c < channels; ++c)
        acc += m(t, f, c) / mean[f * channels + c] * std::norm(x(t, f, c));
      lambda(t, f) = std::max(acc / static_cast<double>(channels), floor);
    }
  return lambda;
}

/// Raises every lambda_{t,f} to at least `relative` times the time-average
/// of its bin. Unlike the absolute floor this commutes with rescaling the
/// input, and it bounds the 1/lambda weights where a mask is nearly zero.
inline void apply_relative_floor(PowerEstimate& lambda, double relative) {
  if (relative <= 0.0) return;
  for (std::size_t f = 0; f < lambda.bins(); ++f) {
    double mean = 0.0;
    for (std::size_t t = 0; t < lambda.frames(); ++t) mean += lambda(t, f);
    mean /= static_cast<double>(lambda.frames());
    const double floor = relative * mean;
    for (std::size_t t = 0; t < lambda.frames(); ++t) lambda(t, f) = std::max(lambda(t, f), floor);
  }
}

inline ChannelMask mask_channel_average(const TimeFrequencyMask& m) {
  ChannelMask out(m.frames(), m.bins());
  for (std::size_t t = 0; t < m.frames(); ++t)
    for (std::size_t f = 0; f < m.bins(); ++f) {
      double acc = 0.0;
      for (std::size_t c = 0; c < m.channels(); ++c) acc += m(t, f, c);
      out(t, f) = acc / static_cast<double>(m.channels());
    }
  return out;
}

/// Elementwise min(a + b, 1).
inline TimeFrequencyMask mask_union(const TimeFrequencyMask& a, const TimeFrequencyMask& b) {
  if (a.frames() != b.frames() || a.bins() != b.bins() || a.channels() != b.channels())
    throw Error(ErrorCode::kShapeMismatch, "mask shapes differ");
  TimeFrequencyMask out = a;
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::min(dst[i] + src[i], 1.0);
  return out;
}

/// Oracle magnitude-ratio masks for a simulated scene. Index 0 is the noise
/// mask, index j >= 1 belongs to source j. The target of source j is its
/// early image; noise and all late images form the residual N:
///   m^j = |S^j| / (sum_i |S^i| + |N| + eps), clipped to [0, 1].
struct OracleMasks {
  std::vector<TimeFrequencyMask> per_source;  // [0] = noise
  TimeFrequencyMask early_sum;                // all early images vs. residual
};

inline OracleMasks oracle_masks(const MixtureScene& scene, const StftConfig& cfg) {
  const std::size_t sources = scene.num_sources();
  if (sources == 0 || scene.early_images.size() != scene.late_images.size() ||
      scene.noise.empty() || scene.mixture.empty())
    throw Error(ErrorCode::kMissingGroundTruth, "scene lacks per-source images");
  constexpr double kEps = 1e-10;

  std::vector<ComplexSpectrogram> early;
  early.reserve(sources);
  for (const auto& img : scene.early_images) early.push_back(stft(img, cfg));
  Signal residual = scene.noise;
  for (const auto& late : scene.late_images)
    for (std::size_t c = 0; c < residual.size(); ++c)
      for (std::size_t n = 0; n < residual[c].size(); ++n) residual[c][n] += late[c][n];
  const auto resid = stft(residual, cfg);

  const std::size_t frames = resid.frames(), bins = resid.bins(), channels = resid.channels();
  OracleMasks out;
  for (std::size_t j = 0; j <= sources; ++j)
    out.per_source.emplace_back(frames, bins, channels, 0.0, j);
  out.early_sum = TimeFrequencyMask(frames, bins, channels, 0.0, 0);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t f = 0; f < bins; ++f)
      for (std::size_t c = 0; c < channels; ++c) {
        double speech = 0.0;
        for (std::size_t j = 0; j < sources; ++j) speech += std::abs(early[j](t, f, c));
        const double noise = std::abs(resid(t, f, c));
        const double denom = speech + noise + kEps;
        out.per_source[0](t, f, c) = std::clamp(noise / denom, 0.0, 1.0);
        for (std::size_t j = 0; j < sources; ++j)
          out.per_source[j + 1](t, f, c) = std::clamp(std::abs(early[j](t, f, c)) / denom, 0.0, 1.0);
        out.early_sum(t, f, c) = std::clamp(speech / denom, 0.0, 1.0);
      }
  return out;
}

/// Oracle mask of one source (j >= 1) or of the noise (j = 0).
inline TimeFrequencyMask oracle_irm(const MixtureScene& scene, std::size_t j, const StftConfig& cfg) {
  if (j > scene.num_sources())
    throw Error(ErrorCode::kMissingGroundTruth, "no ground truth for source " + std::to_string(j));
  return oracle_masks(scene, cfg).per_source[j];
}

// Mask tensor file:
//   bytes 0..7    magic "CBMASK01"
//   4 x uint64    count S, frames T, bins F, channels C (little-endian)
//   S*T*F*C       float64 little-endian, order [s][t][f][c]
// Mask s carries source_id s (0 = noise).
inline constexpr char kMaskMagic[8] = {'C', 'B', 'M', 'A', 'S', 'K', '0', '1'};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCode::kIo, "truncated mask file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_masks(const std::string& path, const std::vector<TimeFrequencyMask>& masks) {
  if (masks.empty()) throw Error(ErrorCode::kInvalidParam, "no masks to write");
  const auto& first = masks.front();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path);
  os.write(kMaskMagic, 8);
  detail::put_u64(os, masks.size());
  detail::put_u64(os, first.frames());
  detail::put_u64(os, first.bins());
  detail::put_u64(os, first.channels());
  for (const auto& m : masks) {
    if (m.frames() != first.frames() || m.bins() != first.bins() || m.channels() != first.channels())
      throw Error(ErrorCode::kShapeMismatch, "masks in one file must share a shape");
    for (double v : m.data()) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path);
}

inline std::vector<TimeFrequencyMask> read_masks(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMaskMagic, 8) != 0)
    throw Error(ErrorCode::kUnsupportedFormat, path + " is not a mask file");
  const auto count = detail::get_u64(is);
  const auto frames = detail::get_u64(is);
  const auto bins = detail::get_u64(is);
  const auto channels = detail::get_u64(is);
  if (count == 0 || count > 64 || frames * bins * channels == 0)
    throw Error(ErrorCode::kUnsupportedFormat, "implausible mask dimensions in " + path);
  std::vector<TimeFrequencyMask> masks;
  for (std::uint64_t s = 0; s < count; ++s) {
    TimeFrequencyMask m(frames, bins, channels, 0.0, s);
    for (auto& v : m.data()) {
      v = std::bit_cast<double>(detail::get_u64(is));
      if (!(v >= 0.0 && v <= 1.0))
        throw Error(ErrorCode::kUnsupportedFormat, "mask value outside [0, 1] in " + path);
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

}  // namespace convbeam
