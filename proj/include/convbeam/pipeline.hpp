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
#include <span>
#include <string>
#include <vector>

#include "convbeam/error.hpp"
#include "convbeam/metrics.hpp"
#include "convbeam/mvdr.hpp"
#include "convbeam/parallel.hpp"
#include "convbeam/simulator.hpp"
#include "convbeam/stft.hpp"
#include "convbeam/tf_masks.hpp"
#include "convbeam/wpd.hpp"
#include "convbeam/wpe.hpp"

namespace convbeam {

enum class Architecture {
  kMvdr,         // mask-based MVDR only
  kWpeThenMvdr,  // mask-based WPE followed by MVDR
  kWpd,          // unified convolutional beamformer
};

enum class MaskSource { kOracle, kUniform, kFile };

struct PipelineConfig {
  Architecture architecture = Architecture::kWpd;
  MaskSource mask_source = MaskSource::kOracle;
  StftConfig stft;
  WpeConfig wpe;
  WpdConfig wpd;
  std::size_t ref_channel = 0;
  double loading = kDefaultLoading;  // MVDR stage
  // Cascade only: run one WPE per source with that source's mask instead of
  // one shared WPE driven by the early-sum mask.
  bool per_source_wpe = false;
  ThreadCount threads;
};

struct SeparationResult {
  std::vector<ComplexSpectrogram> outputs;  // one single-channel stream per source
  std::vector<std::string> warnings;
};

namespace detail {

inline ComplexSpectrogram silent_like(const ComplexSpectrogram& x) {
  return ComplexSpectrogram(x.frames(), x.bins(), 1);
}

inline std::string zero_trace_warning(std::size_t j, const Error& e) {
  return "source " + std::to_string(j) + ": " + e.what() + "; emitting silence";
}

}  // namespace detail

/// Runs the selected frontend on a multi-channel spectrogram. masks[0] is
/// the noise mask, masks[j] belongs to source j. wpe_mask drives the shared
/// WPE stage of the cascade (uniform when absent). With cfg.wpd.shared_mask
/// false, psd_masks (same layout as masks) feeds the WPD target PSD while
/// masks feeds the power weighting. A degenerate source mask yields a silent
/// stream and a warning instead of an error.
inline SeparationResult separate(const ComplexSpectrogram& x, const std::vector<TimeFrequencyMask>& masks,
                                 const std::optional<TimeFrequencyMask>& wpe_mask,
                                 const PipelineConfig& cfg,
                                 std::span<const TimeFrequencyMask> psd_masks = {}) {
  if (masks.size() < 2)
    throw Error(ErrorCode::kInvalidParam, "need a noise mask plus at least one source mask");
  const ReferenceVector u(cfg.ref_channel, x.channels());
  SeparationResult result;

  switch (cfg.architecture) {
    case Architecture::kMvdr:
    case Architecture::kWpeThenMvdr: {
      const bool cascade = cfg.architecture == Architecture::kWpeThenMvdr;
      std::optional<ComplexSpectrogram> shared;
      std::optional<std::vector<BinMatrices>> shared_psds;
      if (!cascade || !cfg.per_source_wpe) {
        shared = cascade ? wpe_run(x, wpe_mask, cfg.wpe, cfg.threads) : x;
        shared_psds = source_psds(*shared, masks, cfg.threads);
      }
      for (std::size_t j = 1; j < masks.size(); ++j) {
        try {
          if (shared) {
            result.outputs.push_back(
                beamform_apply(*shared, mvdr_source_filters(*shared_psds, j, u, cfg.loading, cfg.threads)));
          } else {
            const auto dereverbed = wpe_run(x, masks[j], cfg.wpe, cfg.threads);
            const auto psds = source_psds(dereverbed, masks, cfg.threads);
            result.outputs.push_back(
                beamform_apply(dereverbed, mvdr_source_filters(psds, j, u, cfg.loading, cfg.threads)));
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kZeroTrace) throw;
          result.warnings.push_back(detail::zero_trace_warning(j, e));
          result.outputs.push_back(detail::silent_like(x));
        }
      }
      break;
    }
    case Architecture::kWpd: {
      WpdConfig wcfg = cfg.wpd;
      wcfg.ref_channel = cfg.ref_channel;
      if (!wcfg.shared_mask && psd_masks.size() != masks.size())
        throw Error(ErrorCode::kInvalidParam, "split-mask mode needs a second mask set of equal size");
      for (std::size_t j = 1; j < masks.size(); ++j) {
        try {
          const auto power_mask = wcfg.noise_in_power_mask ? mask_union(masks[j], masks[0]) : masks[j];
          const auto& target_mask = wcfg.shared_mask ? masks[j] : psd_masks[j];
          result.outputs.push_back(
              wpd_apply(x, wpd_source_filters(x, power_mask, target_mask, wcfg, cfg.threads), wcfg, cfg.threads));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kZeroTrace) throw;
          result.warnings.push_back(detail::zero_trace_warning(j, e));
          result.outputs.push_back(detail::silent_like(x));
        }
      }
      break;
    }
  }
  return result;
}

/// Time-domain wrapper: STFT, separate, inverse STFT to the input length.
struct WaveSeparation {
  std::vector<std::vector<double>> streams;
  std::vector<std::string> warnings;
};

inline WaveSeparation separate_signal(const Signal& mixture, const std::vector<TimeFrequencyMask>& masks,
                                      const std::optional<TimeFrequencyMask>& wpe_mask,
                                      const PipelineConfig& cfg,
                                      std::span<const TimeFrequencyMask> psd_masks = {}) {
  const auto x = stft(mixture, cfg.stft);
  auto res = separate(x, masks, wpe_mask, cfg, psd_masks);
  WaveSeparation out;
  out.warnings = std::move(res.warnings);
  for (const auto& y : res.outputs)
    out.streams.push_back(istft(y, cfg.stft, signal_length(mixture)).front());
  return out;
}

/// Oracle masks of a scene in the layout separate() expects, plus the
/// early-sum mask for the shared WPE stage.
struct SceneMasks {
  std::vector<TimeFrequencyMask> masks;
  TimeFrequencyMask wpe_mask;
};

inline SceneMasks scene_masks(const MixtureScene& scene, const StftConfig& cfg) {
  auto om = oracle_masks(scene, cfg);
  return {std::move(om.per_source), std::move(om.early_sum)};
}

/// Uniform masks (all ones) for J sources plus noise.
inline std::vector<TimeFrequencyMask> uniform_masks(const ComplexSpectrogram& x, std::size_t sources) {
  std::vector<TimeFrequencyMask> out;
  for (std::size_t j = 0; j <= sources; ++j) {
    out.push_back(TimeFrequencyMask::Ones(x));
    out.back().set_source_id(j);
  }
  return out;
}

/// Scores streams against each source's early image at the reference
/// channel over samples [margin, len - margin); improvements are relative to
/// the unprocessed reference-channel mixture. Pass the STFT window length as
/// margin: the first and last window of a resynthesized signal are only
/// partially overlap-added.
inline MetricReport evaluate_scene(const MixtureScene& scene, const std::vector<std::vector<double>>& streams,
                                   std::size_t ref_channel, std::size_t margin) {
  if (ref_channel >= scene.num_channels())
    throw Error(ErrorCode::kInvalidParam, "reference channel out of range");
  const std::size_t len = scene.num_samples();
  if (2 * margin >= len) throw Error(ErrorCode::kTooShort, "scene shorter than two margins");
  auto interior = [&](const std::vector<double>& s) {
    if (s.size() != len) throw Error(ErrorCode::kLengthMismatch, "stream length differs from scene");
    return std::vector<double>(s.begin() + static_cast<std::ptrdiff_t>(margin),
                               s.end() - static_cast<std::ptrdiff_t>(margin));
  };
  std::vector<std::vector<double>> refs, ests;
  for (const auto& img : scene.early_images) refs.push_back(interior(img[ref_channel]));
  for (const auto& s : streams) ests.push_back(interior(s));
  const auto mix = interior(scene.mixture[ref_channel]);
  return best_permutation_si_sdr(ests, refs, std::span<const double>(mix));
}

}  // namespace convbeam
