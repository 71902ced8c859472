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
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/spectrogram.hpp"

namespace convbeam {

struct RoomImpulseResponse {
  std::vector<double> taps;
  double sample_rate = 16000.0;
  double early_boundary_ms = 50.0;

  /// Index of the first nonzero tap (the direct path).
  std::size_t direct_index() const {
    for (std::size_t i = 0; i < taps.size(); ++i)
      if (taps[i] != 0.0) return i;
    return 0;
  }

  /// Last tap index (inclusive) that still belongs to the early part.
  std::size_t early_end() const {
    const auto boundary =
        static_cast<std::size_t>(std::llround(early_boundary_ms * 1e-3 * sample_rate));
    return direct_index() + boundary;
  }
};

struct RirParams {
  double rt60 = 0.3;              // seconds
  std::size_t delay_base = 32;    // direct-path delay, samples
  std::size_t n_reflections = 4000;
  std::uint64_t seed = 0;
  double sample_rate = 16000.0;
  double early_boundary_ms = 50.0;
  // Energy of all reflections relative to the unit direct tap, in dB.
  double reverb_to_direct_db = 0.0;
};

/// Parametric array RIRs. One reflection pattern is shared by all
/// microphones: each reflection arrives as a plane wave, so microphone c hears
/// it `c * step` samples later, with the step drawn uniformly from
/// [-max_step, max_step] per reflection. The direct path of microphone c sits
/// at delay_base + direct_offsets[c] with unit amplitude. Reflection delays
/// are uniform over the tail and their energy envelope decays as
/// exp(-6 ln(10) t / rt60); the tail ends where the envelope reaches -60 dB.
/// Reflections are scaled so their total energy (on microphone 0) is
/// reverb_to_direct_db relative to the direct tap.
inline std::vector<RoomImpulseResponse> synth_array_rirs(const RirParams& p,
                                                         const std::vector<std::size_t>& direct_offsets,
                                                         double max_step = 0.0) {
  if (!(p.rt60 >= 0.0) || !std::isfinite(p.rt60))
    throw Error(ErrorCode::kInvalidParam, "rt60 must be finite and >= 0");
  if (!(p.sample_rate > 0.0)) throw Error(ErrorCode::kInvalidParam, "sample rate must be positive");
  if (direct_offsets.empty()) throw Error(ErrorCode::kInvalidParam, "need at least one microphone");
  const std::size_t channels = direct_offsets.size();
  const auto tail = static_cast<std::size_t>(std::ceil(p.rt60 * p.sample_rate));
  const auto spread = static_cast<std::size_t>(std::ceil(max_step * static_cast<double>(channels - 1)));
  const std::size_t max_offset = *std::max_element(direct_offsets.begin(), direct_offsets.end());

  struct Reflection {
    std::size_t delay;
    double amp;
    double step;
  };
  std::vector<Reflection> reflections;
  if (tail > 0) {
    std::mt19937_64 rng(p.seed);
    std::uniform_int_distribution<std::size_t> delay(1, tail);
    std::bernoulli_distribution sign(0.5);
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    std::uniform_real_distribution<double> step(-max_step, max_step);
    const double decay = 3.0 * std::numbers::ln10 / (p.rt60 * p.sample_rate);
    for (std::size_t k = 0; k < p.n_reflections; ++k) {
      const std::size_t d = delay(rng);
      const double amp = jitter(rng) * std::exp(-decay * static_cast<double>(d));
      const double s = step(rng);
      reflections.push_back({d, sign(rng) ? amp : -amp, s});
    }
  }

  std::vector<RoomImpulseResponse> out(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    auto& rir = out[c];
    rir.sample_rate = p.sample_rate;
    rir.early_boundary_ms = p.early_boundary_ms;
    const std::size_t direct = p.delay_base + direct_offsets[c];
    rir.taps.assign(p.delay_base + max_offset + 1 + tail + spread, 0.0);
    rir.taps[direct] = 1.0;
    // Reflections land at least one sample after the direct path and never
    // before the first microphone's direct tap.
    for (const auto& r : reflections) {
      const double shift = r.step * static_cast<double>(c) + (r.step < 0 ? -r.step * static_cast<double>(channels - 1) : 0.0);
      const auto at = direct + r.delay + static_cast<std::size_t>(std::llround(shift));
      rir.taps[at] += r.amp;
    }
  }
  double energy = 0.0;
  for (std::size_t i = p.delay_base + direct_offsets[0] + 1; i < out[0].taps.size(); ++i)
    energy += out[0].taps[i] * out[0].taps[i];
  if (energy > 0.0) {
    const double gain = std::sqrt(std::pow(10.0, p.reverb_to_direct_db / 10.0) / energy);
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t direct = p.delay_base + direct_offsets[c];
      for (std::size_t i = direct + 1; i < out[c].taps.size(); ++i) out[c].taps[i] *= gain;
    }
  }
  return out;
}

/// Single-microphone parametric RIR: a unit direct tap at delay_base followed
/// by random-sign reflections with an exponentially decaying envelope.
/// rt60 = 0 gives the direct tap alone.
inline RoomImpulseResponse synth_rir(const RirParams& p) {
  return synth_array_rirs(p, {0}).front();
}

/// RT60 estimate from Schroeder backward integration, fitting the energy
/// decay curve between -5 dB and -25 dB and extrapolating to -60 dB.
inline double schroeder_rt60(const RoomImpulseResponse& rir) {
  const auto& h = rir.taps;
  std::vector<double> edc(h.size() + 1, 0.0);
  for (std::size_t i = h.size(); i-- > 0;) edc[i] = edc[i + 1] + h[i] * h[i];
  if (edc[0] <= 0.0) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double db = 10.0 * std::log10(std::max(edc[i] / edc[0], 1e-300));
    if (db <= -5.0 && db >= -25.0) {
      const double t = static_cast<double>(i) / rir.sample_rate;
      sx += t;
      sy += db;
      sxx += t * t;
      sxy += t * db;
      ++n;
    }
  }
  if (n < 2) return 0.0;
  const double slope = (static_cast<double>(n) * sxy - sx * sy) /
                       (static_cast<double>(n) * sxx - sx * sx);
  return -60.0 / slope;
}

/// Linear convolution, output length x.size() + h.size() - 1. Zero taps are
/// skipped, which makes sparse RIRs cheap.
inline std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double hk = h[k];
    if (hk == 0.0) continue;
    double* out = y.data() + k;
    for (std::size_t n = 0; n < x.size(); ++n) out[n] += hk * x[n];
  }
  return y;
}

struct SceneMetadata {
  double rt60 = 0.0;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  double sample_rate = 16000.0;
  double early_boundary_ms = 50.0;
};

/// Ground truth of a rendered scene. For every sample,
/// mixture == sum_j (early_images[j] + late_images[j]) + noise.
struct MixtureScene {
  std::vector<std::vector<double>> dry;                 // [j][n]
  std::vector<std::vector<RoomImpulseResponse>> rirs;   // [j][c]
  Signal noise;                                         // [c][n]
  Signal mixture;                                       // [c][n]
  std::vector<Signal> early_images;                     // [j][c][n]
  std::vector<Signal> late_images;                      // [j][c][n]
  SceneMetadata meta;

  std::size_t num_sources() const { return early_images.size(); }
  std::size_t num_channels() const { return mixture.size(); }
  std::size_t num_samples() const { return signal_length(mixture); }
};

/// Convolves every dry source with each microphone's RIR, splits each image
/// into early and late parts at the RIR's early boundary, then adds white
/// Gaussian noise scaled so that the total image-to-noise energy ratio over
/// all channels equals snr_db (+inf disables noise). Outputs are truncated to
/// the dry source length.
inline MixtureScene render_scene(const std::vector<std::vector<double>>& dry,
                                 const std::vector<std::vector<RoomImpulseResponse>>& rirs,
                                 double snr_db, std::uint64_t seed) {
  if (dry.empty()) throw Error(ErrorCode::kInvalidParam, "no sources");
  if (rirs.size() != dry.size())
    throw Error(ErrorCode::kLengthMismatch, "one RIR set per source required");
  const std::size_t len = dry.front().size();
  const std::size_t channels = rirs.front().size();
  if (len == 0 || channels == 0) throw Error(ErrorCode::kInvalidParam, "empty scene");
  const double fs = rirs.front().front().sample_rate;
  const double boundary_ms = rirs.front().front().early_boundary_ms;
  for (std::size_t j = 0; j < dry.size(); ++j) {
    if (dry[j].size() != len) throw Error(ErrorCode::kLengthMismatch, "dry sources differ in length");
    if (rirs[j].size() != channels)
      throw Error(ErrorCode::kLengthMismatch, "RIR sets differ in channel count");
    for (const auto& r : rirs[j])
      if (r.sample_rate != fs) throw Error(ErrorCode::kSampleRateMismatch, "RIR sample rates differ");
  }

  MixtureScene scene;
  scene.dry = dry;
  scene.rirs = rirs;
  scene.meta = {.rt60 = 0.0, .snr_db = snr_db, .seed = seed, .sample_rate = fs,
                .early_boundary_ms = boundary_ms};
  scene.early_images.assign(dry.size(), Signal(channels, std::vector<double>(len, 0.0)));
  scene.late_images.assign(dry.size(), Signal(channels, std::vector<double>(len, 0.0)));
  scene.mixture.assign(channels, std::vector<double>(len, 0.0));
  scene.noise.assign(channels, std::vector<double>(len, 0.0));

  for (std::size_t j = 0; j < dry.size(); ++j) {
    for (std::size_t c = 0; c < channels; ++c) {
      const auto& rir = rirs[j][c];
      const std::size_t split = std::min(rir.early_end() + 1, rir.taps.size());
      std::vector<double> early(rir.taps.begin(), rir.taps.begin() + static_cast<std::ptrdiff_t>(split));
      std::vector<double> late(rir.taps.size(), 0.0);
      std::copy(rir.taps.begin() + static_cast<std::ptrdiff_t>(split), rir.taps.end(),
                late.begin() + static_cast<std::ptrdiff_t>(split));
      const auto e = convolve(dry[j], early);
      const auto l = convolve(dry[j], late);
      std::copy_n(e.begin(), len, scene.early_images[j][c].begin());
      std::copy_n(l.begin(), len, scene.late_images[j][c].begin());
    }
  }

  double image_energy = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t n = 0; n < len; ++n) {
      double v = 0.0;
      for (std::size_t j = 0; j < dry.size(); ++j)
        v += scene.early_images[j][c][n] + scene.late_images[j][c][n];
      scene.mixture[c][n] = v;
      image_energy += v * v;
    }
  }

  if (std::isfinite(snr_db)) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double noise_energy = 0.0;
    for (auto& ch : scene.noise)
      for (auto& v : ch) {
        v = gauss(rng);
        noise_energy += v * v;
      }
    const double gain = std::sqrt(image_energy / (noise_energy * std::pow(10.0, snr_db / 10.0)));
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t n = 0; n < len; ++n) {
        scene.noise[c][n] *= gain;
        scene.mixture[c][n] += scene.noise[c][n];
      }
  }
  return scene;
}

/// Deterministic speech-like test signal: voiced syllables (harmonic stacks
/// with a gliding pitch and two formant bumps) and occasional noise bursts,
/// separated by short pauses. Normalized to the given RMS.
struct SpeechLikeParams {
  double duration_s = 3.0;
  double sample_rate = 16000.0;
  double f0_min = 100.0;
  double f0_max = 160.0;
  double rms = 0.05;
  // Relative standard deviation of the cycle-to-cycle pitch wander.
  double pitch_jitter = 0.05;
  // Level of aspiration noise mixed into voiced segments, relative to voicing.
  double breathiness = 0.2;
  std::uint64_t seed = 0;
};

inline std::vector<double> synth_speech_like(const SpeechLikeParams& p) {
  const auto len = static_cast<std::size_t>(std::llround(p.duration_s * p.sample_rate));
  std::vector<double> out(len, 0.0);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double fs = p.sample_rate;
  const double nyquist_guard = 0.45 * fs;

  std::size_t pos = static_cast<std::size_t>(uni(rng) * 0.15 * fs);
  while (pos < len) {
    const auto syl_len = static_cast<std::size_t>((0.12 + 0.22 * uni(rng)) * fs);
    const std::size_t end = std::min(len, pos + syl_len);
    const double gain = 0.5 + uni(rng);
    if (uni(rng) < 0.8) {
      const double f0_start = p.f0_min + (p.f0_max - p.f0_min) * uni(rng);
      const double f0_end = p.f0_min + (p.f0_max - p.f0_min) * uni(rng);
      const double formant1 = 300.0 + 600.0 * uni(rng);
      const double formant2 = 900.0 + 1600.0 * uni(rng);
      std::normal_distribution<double> gauss(0.0, 1.0);
      // Pitch wander: first-order lowpass noise with a ~5 ms time constant.
      const double pole = std::exp(-1.0 / (0.005 * fs));
      const double drive = p.pitch_jitter * std::sqrt(1.0 - pole * pole);
      double wander = p.pitch_jitter * gauss(rng);
      double phase = 0.0;
      for (std::size_t n = pos; n < end; ++n) {
        const double u = static_cast<double>(n - pos) / static_cast<double>(end - pos);
        wander = pole * wander + drive * gauss(rng);
        const double f0 = (f0_start + (f0_end - f0_start) * u) * (1.0 + wander);
        phase += 2.0 * std::numbers::pi * f0 / fs;
        const double env = std::sin(std::numbers::pi * u);
        double v = 0.0;
        for (int h = 1; h * f0 < std::min(4000.0, nyquist_guard); ++h) {
          const double fh = h * f0;
          const double shape = 1.0 / h + std::exp(-std::pow((fh - formant1) / 150.0, 2)) +
                               0.6 * std::exp(-std::pow((fh - formant2) / 250.0, 2));
          v += shape * std::sin(h * phase);
        }
        v += p.breathiness * 3.0 * gauss(rng);
        out[n] += gain * env * v;
      }
    } else {
      std::normal_distribution<double> gauss(0.0, 1.0);
      double lp = 0.0;
      for (std::size_t n = pos; n < end; ++n) {
        const double u = static_cast<double>(n - pos) / static_cast<double>(end - pos);
        const double w = gauss(rng);
        const double hp = w - lp;  // crude high-pass: fricative-like
        lp = 0.7 * lp + 0.3 * w;
        out[n] += 0.8 * gain * std::sin(std::numbers::pi * u) * hp;
      }
    }
    pos = end + static_cast<std::size_t>((0.03 + 0.15 * uni(rng)) * fs);
  }

  double energy = 0.0;
  for (double v : out) energy += v * v;
  if (energy > 0.0) {
    const double scale = p.rms / std::sqrt(energy / static_cast<double>(len));
    for (auto& v : out) v *= scale;
  }
  return out;
}

struct SceneParams {
  std::size_t num_sources = 2;
  std::size_t num_channels = 2;
  double rt60 = 0.3;
  double snr_db = 20.0;
  double duration_s = 3.0;
  double sample_rate = 16000.0;
  double early_boundary_ms = 50.0;
  double reverb_to_direct_db = 0.0;
  std::size_t n_reflections = 4000;
  // Largest inter-microphone delay step of a reflection, samples.
  double max_reflection_step = 3.0;
  double pitch_jitter = 0.05;
  double breathiness = 0.2;
  std::uint64_t seed = 0;
};

/// Draws speech-like sources and per-(source, mic) RIRs for a small array,
/// then renders. Each source gets its own inter-mic delay step so the
/// sources are spatially distinct.
inline MixtureScene simulate_scene(const SceneParams& p) {
  if (p.num_sources == 0 || p.num_sources > 4)
    throw Error(ErrorCode::kInvalidParam, "num_sources must be in [1, 4]");
  if (p.num_channels == 0 || p.num_channels > 8)
    throw Error(ErrorCode::kInvalidParam, "num_channels must be in [1, 8]");
  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<int> jitter(0, 3);
  std::vector<std::vector<double>> dry;
  std::vector<std::vector<RoomImpulseResponse>> rirs;
  // Pitch ranges alternate low/high so that concurrent talkers overlap less.
  const double f0_ranges[4][2] = {{95, 140}, {170, 240}, {120, 180}, {210, 280}};
  for (std::size_t j = 0; j < p.num_sources; ++j) {
    dry.push_back(synth_speech_like({.duration_s = p.duration_s, .sample_rate = p.sample_rate,
                                     .f0_min = f0_ranges[j][0], .f0_max = f0_ranges[j][1],
                                     .rms = 0.05, .pitch_jitter = p.pitch_jitter,
                                     .breathiness = p.breathiness, .seed = rng()}));
    // Per-mic direct-path delay step in samples; sources sit on opposite
    // sides of the array.
    const int step = (j % 2 == 0 ? 1 : -1) * (2 + static_cast<int>(j / 2) + jitter(rng) % 2);
    const std::size_t base = 40 + static_cast<std::size_t>(jitter(rng)) * 4;
    std::vector<std::size_t> offsets;
    for (std::size_t c = 0; c < p.num_channels; ++c) {
      const int cc = static_cast<int>(c);
      const int last = static_cast<int>(p.num_channels) - 1;
      offsets.push_back(static_cast<std::size_t>(step > 0 ? step * cc : -step * (last - cc)));
    }
    auto per_mic = synth_array_rirs({.rt60 = p.rt60,
                                     .delay_base = base,
                                     .n_reflections = p.n_reflections,
                                     .seed = rng(),
                                     .sample_rate = p.sample_rate,
                                     .early_boundary_ms = p.early_boundary_ms,
                                     .reverb_to_direct_db = p.reverb_to_direct_db},
                                    offsets, p.max_reflection_step);
    rirs.push_back(std::move(per_mic));
  }
  auto scene = render_scene(dry, rirs, p.snr_db, rng());
  scene.meta.rt60 = p.rt60;
  scene.meta.seed = p.seed;
  return scene;
}

}  // namespace convbeam
