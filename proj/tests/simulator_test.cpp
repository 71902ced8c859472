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

#include "test_support.hpp"

namespace convbeam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Rir, AnechoicIsSingleTap) {
  RirParams p;
  p.rt60 = 0.0;
  p.delay_base = 17;
  const auto rir = synth_rir(p);
  EXPECT_EQ(rir.direct_index(), 17u);
  EXPECT_EQ(rir.taps[17], 1.0);
  std::size_t nonzero = 0;
  for (double v : rir.taps) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, 1u);
}

TEST(Rir, SchroederDecayMatchesTarget) {
  for (const double rt60 : {0.3, 0.5}) {
    RirParams p;
    p.rt60 = rt60;
    p.seed = 3;
    const double measured = schroeder_rt60(synth_rir(p));
    EXPECT_NEAR(measured, rt60, 0.2 * rt60) << "target " << rt60;
  }
}

// Independent Schroeder oracle: backward-integrated energy in dB, then the
// slope between the -5 and -25 dB crossings extrapolated to 60 dB.
double schroeder_oracle(const std::vector<double>& h, double fs) {
  std::vector<double> edc(h.size());
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) edc[i] = (acc += h[i] * h[i]);
  auto crossing = [&](double db) {
    for (std::size_t i = 0; i < edc.size(); ++i)
      if (10.0 * std::log10(edc[i] / edc[0]) <= db) return double(i);
    return double(edc.size());
  };
  return 3.0 * (crossing(-25.0) - crossing(-5.0)) / fs;
}

TEST(Rir, SchroederAgreesWithOracle) {
  RirParams p;
  p.rt60 = 0.4;
  p.seed = 8;
  const auto rir = synth_rir(p);
  EXPECT_NEAR(schroeder_rt60(rir), schroeder_oracle(rir.taps, rir.sample_rate), 0.05 * 0.4);
}

TEST(Rir, DeterministicUnderSeed) {
  RirParams p;
  p.seed = 99;
  EXPECT_EQ(synth_rir(p).taps, synth_rir(p).taps);
  RirParams q = p;
  q.seed = 100;
  EXPECT_NE(synth_rir(p).taps, synth_rir(q).taps);
}

TEST(Rir, ArraySharesReflectionsAndOffsetsDirectPath) {
  RirParams p;
  p.seed = 4;
  const auto rirs = synth_array_rirs(p, {0, 2, 4}, 0.0);
  ASSERT_EQ(rirs.size(), 3u);
  EXPECT_EQ(rirs[1].direct_index(), rirs[0].direct_index() + 2);
  EXPECT_EQ(rirs[2].direct_index(), rirs[0].direct_index() + 4);
}

TEST(Rir, NegativeRt60Throws) {
  RirParams p;
  p.rt60 = -0.1;
  EXPECT_THROW(synth_rir(p), Error);
}

TEST(Convolve, MatchesDirectSum) {
  testing::Rng rng(71);
  const auto x = rng.signal(50);
  auto h = rng.signal(13);
  h[3] = 0.0;
  const auto y = convolve(x, h);
  ASSERT_EQ(y.size(), x.size() + h.size() - 1);
  for (std::size_t n = 0; n < y.size(); ++n) {
    double want = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k)
      if (n >= k && n - k < x.size()) want += h[k] * x[n - k];
    EXPECT_NEAR(y[n], want, 1e-10);
  }
}

TEST(Render, SingleTapNoNoiseIsDelayedSource) {
  testing::Rng rng(72);
  const auto dry = rng.signal(500);
  RoomImpulseResponse rir;
  rir.taps.assign(8, 0.0);
  rir.taps[7] = 1.0;
  const auto scene = render_scene({dry}, {{rir}}, kInf, 1);
  for (std::size_t n = 0; n < 500; ++n) EXPECT_EQ(scene.mixture[0][n], n >= 7 ? dry[n - 7] : 0.0);
  for (double v : scene.noise[0]) EXPECT_EQ(v, 0.0);
}

void expect_decomposition(const MixtureScene& scene) {
  for (std::size_t c = 0; c < scene.num_channels(); ++c)
    for (std::size_t n = 0; n < scene.num_samples(); ++n) {
      double sum = scene.noise[c][n];
      for (std::size_t j = 0; j < scene.num_sources(); ++j)
        sum += scene.early_images[j][c][n] + scene.late_images[j][c][n];
      ASSERT_NEAR(scene.mixture[c][n], sum, 1e-10);
    }
}

TEST(Render, ExactDecompositionAndSnr) {
  SceneParams p;
  p.num_sources = 2;
  p.num_channels = 3;
  p.snr_db = 10.0;
  p.duration_s = 1.0;
  p.seed = 12;
  const auto scene = simulate_scene(p);
  expect_decomposition(scene);
  double image = 0.0, noise = 0.0;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t n = 0; n < scene.num_samples(); ++n) {
      const double v = scene.mixture[c][n] - scene.noise[c][n];
      image += v * v;
      noise += scene.noise[c][n] * scene.noise[c][n];
    }
  EXPECT_NEAR(10.0 * std::log10(image / noise), 10.0, 0.1);
}

TEST(Render, EarlyLateSplitAtBoundary) {
  SceneParams p;
  p.num_sources = 1;
  p.num_channels = 1;
  p.snr_db = kInf;
  p.duration_s = 0.5;
  p.seed = 13;
  const auto scene = simulate_scene(p);
  const auto& rir = scene.rirs[0][0];
  const std::size_t split = rir.early_end() + 1;
  EXPECT_EQ(split - rir.direct_index(), 801u);  // 50 ms at 16 kHz, inclusive
  std::vector<double> early(rir.taps.begin(), rir.taps.begin() + std::ptrdiff_t(split));
  const auto want = convolve(scene.dry[0], early);
  for (std::size_t n = 0; n < scene.num_samples(); ++n) ASSERT_NEAR(scene.early_images[0][0][n], want[n], 1e-10);
}

TEST(Render, AdditiveOverSources) {
  SceneParams p;
  p.num_sources = 2;
  p.num_channels = 2;
  p.snr_db = kInf;
  p.duration_s = 0.5;
  p.seed = 14;
  const auto both = simulate_scene(p);
  const auto one = render_scene({both.dry[0]}, {both.rirs[0]}, kInf, 0);
  const auto two = render_scene({both.dry[1]}, {both.rirs[1]}, kInf, 0);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t n = 0; n < both.num_samples(); ++n)
      ASSERT_NEAR(both.mixture[c][n], one.mixture[c][n] + two.mixture[c][n], 1e-12);
}

TEST(Render, Errors) {
  RoomImpulseResponse rir{{1.0}, 16000.0, 50.0};
  EXPECT_THROW(render_scene({{1.0, 2.0}, {1.0}}, {{rir}, {rir}}, kInf, 0), Error);
  EXPECT_THROW(render_scene({{1.0, 2.0}}, {{rir}, {rir}}, kInf, 0), Error);
  RoomImpulseResponse other{{1.0}, 8000.0, 50.0};
  EXPECT_THROW(render_scene({{1.0}}, {{rir, other}}, kInf, 0), Error);
}

TEST(Simulate, DeterministicUnderSeed) {
  SceneParams p;
  p.duration_s = 0.5;
  p.seed = 15;
  const auto a = simulate_scene(p);
  const auto b = simulate_scene(p);
  EXPECT_EQ(a.mixture, b.mixture);
  EXPECT_EQ(a.early_images, b.early_images);
}

TEST(SceneIo, RoundTrip) {
  SceneParams p;
  p.num_sources = 2;
  p.num_channels = 2;
  p.duration_s = 0.5;
  p.seed = 16;
  const auto scene = simulate_scene(p);
  const auto dir = std::filesystem::temp_directory_path() / "convbeam_scene_io_test";
  std::filesystem::remove_all(dir);
  write_scene(dir, scene);
  const auto back = read_scene(dir);
  EXPECT_EQ(back.num_sources(), 2u);
  EXPECT_EQ(back.num_channels(), 2u);
  EXPECT_DOUBLE_EQ(back.meta.rt60, scene.meta.rt60);
  EXPECT_EQ(back.meta.seed, scene.meta.seed);
  // Components are stored as float32.
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t n = 0; n < scene.num_samples(); ++n) {
      ASSERT_EQ(back.mixture[c][n], double(float(scene.mixture[c][n])));
      ASSERT_EQ(back.early_images[1][c][n], double(float(scene.early_images[1][c][n])));
    }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace convbeam
