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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"

namespace convbeam {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

TEST(Wav, Float32RoundTripIsExact) {
  testing::Rng rng(91);
  Waveform wf{22050, {}};
  for (int c = 0; c < 3; ++c) {
    auto s = rng.signal(777);
    for (auto& v : s) v = double(float(0.2 * v));
    wf.samples.push_back(s);
  }
  const auto path = temp_path("convbeam_f32.wav");
  write_wav(path, wf, SampleFormat::kFloat32);
  const auto back = read_wav(path);
  EXPECT_EQ(back.sample_rate, 22050u);
  EXPECT_EQ(back.samples, wf.samples);
  std::filesystem::remove(path);
}

TEST(Wav, Pcm16RoundTripWithinOneStep) {
  testing::Rng rng(92);
  Waveform wf{16000, {rng.signal(500)}};
  for (auto& v : wf.samples[0]) v = std::clamp(0.3 * v, -0.99, 0.99);
  const auto path = temp_path("convbeam_pcm.wav");
  write_wav(path, wf, SampleFormat::kPcm16);
  const auto back = read_wav(path);
  for (std::size_t n = 0; n < 500; ++n) EXPECT_LE(std::abs(back.samples[0][n] - wf.samples[0][n]), 1.0 / 32768.0);
  std::filesystem::remove(path);
}

TEST(Wav, Pcm16Quantization) {
  EXPECT_EQ(quantize_pcm16(1.0), 32767);
  EXPECT_EQ(quantize_pcm16(-1.0), -32768);
  EXPECT_EQ(quantize_pcm16(2.0), 32767);
  EXPECT_EQ(quantize_pcm16(0.5 / 32768.0), 1);    // half rounds away from zero
  EXPECT_EQ(quantize_pcm16(-0.5 / 32768.0), -1);
  EXPECT_EQ(quantize_pcm16(0.49 / 32768.0), 0);
}

TEST(Wav, InterleaveOrderAndHeader) {
  // Hand-built fixture: 2 channels x 2 frames, PCM16.
  Waveform wf{8000, {{1.0 / 32768.0, 3.0 / 32768.0}, {2.0 / 32768.0, 4.0 / 32768.0}}};
  const auto path = temp_path("convbeam_interleave.wav");
  write_wav(path, wf, SampleFormat::kPcm16);
  const auto bytes = read_bytes(path);
  ASSERT_EQ(bytes.size(), 44u + 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RIFF");
  EXPECT_EQ(std::string(bytes.begin() + 36, bytes.begin() + 40), "data");
  const std::vector<unsigned char> payload(bytes.begin() + 44, bytes.end());
  EXPECT_EQ(payload, (std::vector<unsigned char>{1, 0, 2, 0, 3, 0, 4, 0}));
  std::filesystem::remove(path);
}

void put(std::ofstream& os, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

TEST(Wav, SkipsUnknownChunksAndReadsExtensible) {
  const auto path = temp_path("convbeam_ext.wav");
  {
    std::ofstream os(path, std::ios::binary);
    os << "RIFF";
    put(os, 4 + (8 + 3 + 1) + (8 + 40) + (8 + 8), 4);
    os << "WAVE";
    os << "LIST";  // odd-length unknown chunk plus pad byte
    put(os, 3, 4);
    os << "abc";
    os.put(0);
    os << "fmt ";
    put(os, 40, 4);
    put(os, 0xFFFE, 2);
    put(os, 1, 2);
    put(os, 48000, 4);
    put(os, 48000 * 4, 4);
    put(os, 4, 2);
    put(os, 32, 2);
    put(os, 22, 2);
    put(os, 32, 2);
    put(os, 0, 4);
    put(os, 3, 2);  // subformat: IEEE float
    for (int i = 0; i < 14; ++i) os.put(0);
    os << "data";
    put(os, 8, 4);
    put(os, std::bit_cast<std::uint32_t>(0.25f), 4);
    put(os, std::bit_cast<std::uint32_t>(-1.5f), 4);
  }
  const auto wf = read_wav(path);
  EXPECT_EQ(wf.sample_rate, 48000u);
  ASSERT_EQ(wf.channels(), 1u);
  EXPECT_EQ(wf.samples[0], (std::vector<double>{0.25, -1.5}));
  std::filesystem::remove(path);
}

TEST(Wav, Errors) {
  EXPECT_THROW(read_wav(temp_path("convbeam_missing.wav")), Error);
  const auto path = temp_path("convbeam_bad.wav");
  std::ofstream(path, std::ios::binary) << "RIFF0000WAVEjunk";
  try {
    read_wav(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedFormat);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(write_wav(path, Waveform{16000, Signal(9, std::vector<double>(4))}), Error);
}

}  // namespace
}  // namespace convbeam
