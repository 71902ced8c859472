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

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/linalg.hpp"

namespace convbeam {

/// Multi-channel time-domain samples, indexed [channel][sample].
using Signal = std::vector<std::vector<double>>;

inline std::size_t signal_length(const Signal& s) { return s.empty() ? 0 : s.front().size(); }

/// T x F x C complex STFT tensor. Storage is [frame][bin][channel] so the
/// channel vector x_{t,f} of one time-frequency cell is contiguous.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t frames, std::size_t bins, std::size_t channels)
      : frames_(frames), bins_(bins), channels_(channels), data_(frames * bins * channels) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t channels() const noexcept { return channels_; }

  Complex& operator()(std::size_t t, std::size_t f, std::size_t c) {
    return data_[(t * bins_ + f) * channels_ + c];
  }
  const Complex& operator()(std::size_t t, std::size_t f, std::size_t c) const {
    return data_[(t * bins_ + f) * channels_ + c];
  }

  std::span<Complex> cell(std::size_t t, std::size_t f) {
    return {data_.data() + (t * bins_ + f) * channels_, channels_};
  }
  std::span<const Complex> cell(std::size_t t, std::size_t f) const {
    return {data_.data() + (t * bins_ + f) * channels_, channels_};
  }

  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }

  bool same_shape(const ComplexSpectrogram& o) const noexcept {
    return frames_ == o.frames_ && bins_ == o.bins_ && channels_ == o.channels_;
  }

  ComplexSpectrogram& operator*=(Complex s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  /// Copy of a single channel as a C=1 spectrogram.
  ComplexSpectrogram channel(std::size_t c) const {
    if (c >= channels_) throw Error(ErrorCode::kShapeMismatch, "channel index out of range");
    ComplexSpectrogram out(frames_, bins_, 1);
    for (std::size_t t = 0; t < frames_; ++t)
      for (std::size_t f = 0; f < bins_; ++f) out(t, f, 0) = (*this)(t, f, c);
    return out;
  }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t channels_ = 0;
  std::vector<Complex> data_;
};

inline ComplexVector cell_vector(const ComplexSpectrogram& x, std::size_t t, std::size_t f) {
  auto c = x.cell(t, f);
  return ComplexVector(std::vector<Complex>(c.begin(), c.end()));
}

namespace detail {

inline void require_frames(const ComplexSpectrogram& x, std::size_t delay, std::size_t taps) {
  if (x.frames() <= delay + taps)
    throw Error(ErrorCode::kTooFewFrames,
                std::to_string(x.frames()) + " frames, need more than delay + taps = " +
                    std::to_string(delay + taps));
}

}  // namespace detail

}  // namespace convbeam
