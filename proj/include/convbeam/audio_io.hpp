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
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/spectrogram.hpp"

namespace convbeam {

struct Waveform {
  std::uint32_t sample_rate = 16000;
  Signal samples;  // [channel][sample]

  std::size_t channels() const { return samples.size(); }
  std::size_t length() const { return signal_length(samples); }
};

enum class SampleFormat { kPcm16, kFloat32 };

namespace detail {

inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

/// Round half away from zero, then clip to the int16 range.
inline std::int16_t quantize_pcm16(double v) {
  const double scaled = std::round(v * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

/// Reads RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples, 1 to 8
/// channels. Chunks other than `fmt ` and `data` are skipped.
inline Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::kUnsupportedFormat, path + " is not RIFF/WAVE");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t len = detail::le32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(ErrorCode::kUnsupportedFormat, "short fmt chunk in " + path);
      format = detail::le16(bytes.data() + body);
      channels = detail::le16(bytes.data() + body + 2);
      rate = detail::le32(bytes.data() + body + 4);
      bits = detail::le16(bytes.data() + body + 14);
      if (format == detail::kFormatExtensible) {
        if (avail < 26) throw Error(ErrorCode::kUnsupportedFormat, "short extensible fmt in " + path);
        format = detail::le16(bytes.data() + body + 24);
      }
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (data == nullptr || channels == 0)
    throw Error(ErrorCode::kUnsupportedFormat, "missing fmt or data chunk in " + path);
  if (channels > 8) throw Error(ErrorCode::kUnsupportedFormat, "more than 8 channels in " + path);
  const bool pcm16 = format == detail::kFormatPcm && bits == 16;
  const bool float32 = format == detail::kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw Error(ErrorCode::kUnsupportedFormat,
                "only PCM16 and float32 are supported (format " + std::to_string(format) + ", " +
                    std::to_string(bits) + " bits) in " + path);

  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t frames = data_len / frame_bytes;
  Waveform wf;
  wf.sample_rate = rate;
  wf.samples.assign(channels, std::vector<double>(frames));
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + n * frame_bytes + c * (bits / 8);
      if (pcm16) {
        wf.samples[c][n] = static_cast<std::int16_t>(detail::le16(p)) / 32768.0;
      } else {
        wf.samples[c][n] = static_cast<double>(std::bit_cast<float>(detail::le32(p)));
      }
    }
  }
  return wf;
}

/// Canonical 44-byte header: RIFF, `fmt ` (16 bytes), `data`. Interleaved,
/// channel 0 first.
inline void write_wav(const std::string& path, const Waveform& wf,
                      SampleFormat format = SampleFormat::kFloat32) {
  const std::size_t channels = wf.channels();
  if (channels == 0 || channels > 8)
    throw Error(ErrorCode::kUnsupportedFormat, "WAV output supports 1 to 8 channels");
  const std::size_t frames = wf.length();
  for (const auto& ch : wf.samples)
    if (ch.size() != frames) throw Error(ErrorCode::kLengthMismatch, "channels differ in length");
  const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint32_t block = static_cast<std::uint32_t>(channels * bits / 8);
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * block);

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put32(out, 16);
  detail::put16(out, format == SampleFormat::kPcm16 ? detail::kFormatPcm : detail::kFormatFloat);
  detail::put16(out, static_cast<std::uint16_t>(channels));
  detail::put32(out, wf.sample_rate);
  detail::put32(out, wf.sample_rate * block);
  detail::put16(out, static_cast<std::uint16_t>(block));
  detail::put16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put32(out, data_len);
  for (std::size_t n = 0; n < frames; ++n)
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = wf.samples[c][n];
      if (format == SampleFormat::kPcm16)
        detail::put16(out, static_cast<std::uint16_t>(quantize_pcm16(v)));
      else
        detail::put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace convbeam
