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

// convbeam: command-line frontend for multi-channel dereverberation and
// separation.
//
//   convbeam simulate --out DIR [scene options]
//   convbeam dereverb --in IN.wav --out OUT.wav [WPE options]
//   convbeam separate (--scene DIR | --in IN.wav) --out DIR [options]
//   convbeam eval --ref R.wav... --est E.wav... [--mixture M.wav]
//
// Every subcommand accepts --config FILE with key=value lines whose keys are
// long option names (e.g. `taps=5`); options given on the command line win.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "convbeam.hpp"

namespace fs = std::filesystem;
using namespace convbeam;

namespace {

struct CommonOptions {
  unsigned threads = 0;
  std::string config;
  std::string format = "float32";
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--threads", common.threads,
                  "Worker threads for per-frequency work (default: $CONVBEAM_THREADS or 1)");
  cmd->add_option("--config", common.config, "key=value file of default option values");
  cmd->add_option("--format", common.format, "Output sample format")
      ->check(CLI::IsMember({"float32", "pcm16"}));
}

SampleFormat sample_format(const CommonOptions& common) {
  return common.format == "pcm16" ? SampleFormat::kPcm16 : SampleFormat::kFloat32;
}

void add_wpe_options(CLI::App* cmd, WpeConfig& wpe) {
  cmd->add_option("--taps", wpe.taps, "Prediction taps K")->check(CLI::PositiveNumber);
  cmd->add_option("--delay", wpe.delay, "Prediction delay D in frames")->check(CLI::PositiveNumber);
  cmd->add_option("--iterations", wpe.iterations, "WPE iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--loading", wpe.loading, "Relative diagonal loading")->check(CLI::NonNegativeNumber);
  cmd->add_option("--relative-floor", wpe.relative_floor,
                  "Power floor as a fraction of each bin's mean power")
      ->check(CLI::NonNegativeNumber);
}

Waveform read_input(const std::string& path) {
  auto wf = read_wav(path);
  if (wf.length() == 0) throw Error(ErrorCode::kTooShort, path + " has no samples");
  return wf;
}

void check_rate(double expected, std::uint32_t got, const std::string& what) {
  if (std::llround(expected) != static_cast<long long>(got))
    throw Error(ErrorCode::kSampleRateMismatch,
                what + " is " + std::to_string(got) + " Hz, pipeline runs at " +
                    format_double(expected) + " Hz");
}

void write_manifest(const fs::path& dir, const std::string& command, const KeyValues& params) {
  KeyValues kv = params;
  kv["command"] = command;
  write_key_values(dir / "run_manifest.txt", kv, "convbeam run manifest");
}

std::string report_line(std::size_t j, const SourceScore& s) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "src=%zu si_sdr=%.4f delta=%.4f", j, s.si_sdr, s.improvement);
  return buf;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  SceneParams scene;
};

void run_simulate(const SimulateArgs& a) {
  const auto scene = simulate_scene(a.scene);
  write_scene(a.out, scene);
  write_manifest(a.out, "simulate",
                 {{"sources", std::to_string(a.scene.num_sources)},
                  {"channels", std::to_string(a.scene.num_channels)},
                  {"rt60", format_double(a.scene.rt60)},
                  {"snr", format_double(a.scene.snr_db)},
                  {"duration", format_double(a.scene.duration_s)},
                  {"sample-rate", format_double(a.scene.sample_rate)},
                  {"early-ms", format_double(a.scene.early_boundary_ms)},
                  {"reverb-db", format_double(a.scene.reverb_to_direct_db)},
                  {"reflections", std::to_string(a.scene.n_reflections)},
                  {"seed", std::to_string(a.scene.seed)}});
}

// --- dereverb -------------------------------------------------------------

struct DereverbArgs {
  std::string in;
  std::string out;
  std::string mask_file;
  std::string scene;
  WpeConfig wpe;
  StftConfig stft;
  CommonOptions common;
};

void run_dereverb(const DereverbArgs& a) {
  const auto wf = read_input(a.in);
  check_rate(a.stft.sample_rate, wf.sample_rate, a.in);
  const auto x = stft(wf.samples, a.stft);
  std::optional<TimeFrequencyMask> mask;
  if (!a.mask_file.empty()) {
    auto masks = read_masks(a.mask_file);
    mask = std::move(masks.front());
  } else if (!a.scene.empty()) {
    mask = oracle_masks(read_scene(a.scene), a.stft).early_sum;
  }
  if (mask && !mask->matches(x)) throw Error(ErrorCode::kShapeMismatch, "mask shape does not match input");
  const auto y = wpe_run(x, mask, a.wpe, ThreadCount(a.common.threads));
  const Waveform out{wf.sample_rate, istft(y, a.stft, wf.length())};
  const fs::path out_path = fs::absolute(a.out);
  fs::create_directories(out_path.parent_path());
  write_wav(a.out, out, sample_format(a.common));
  write_manifest(out_path.parent_path(), "dereverb",
                 {{"in", a.in},
                  {"out", a.out},
                  {"mask-file", a.mask_file},
                  {"scene", a.scene},
                  {"taps", std::to_string(a.wpe.taps)},
                  {"delay", std::to_string(a.wpe.delay)},
                  {"iterations", std::to_string(a.wpe.iterations)},
                  {"loading", format_double(a.wpe.loading)},
                  {"relative-floor", format_double(a.wpe.relative_floor)},
                  {"format", a.common.format},
                  {"sample-rate", format_double(a.stft.sample_rate)},
                  {"win-len", std::to_string(a.stft.win_len)},
                  {"hop", std::to_string(a.stft.hop)},
                  {"fft-size", std::to_string(a.stft.fft_size)}});
}

// --- separate -------------------------------------------------------------

struct SeparateArgs {
  std::string scene;
  std::string in;
  std::string out;
  std::string arch = "wpd";
  std::string masks = "oracle";
  std::string mask_file;
  std::string psd_mask_file;
  std::string export_masks;
  std::size_t sources = 2;
  bool shared_mask = true;
  bool noise_in_power = false;
  bool delayed_covariance = false;
  PipelineConfig cfg;
  CommonOptions common;
};

void run_separate(SeparateArgs a) {
  if (a.scene.empty() == a.in.empty()) throw CLI::ValidationError("give exactly one of --scene or --in");
  auto& cfg = a.cfg;
  cfg.architecture = a.arch == "mvdr" ? Architecture::kMvdr
                     : a.arch == "wpe-mvdr" ? Architecture::kWpeThenMvdr
                                            : Architecture::kWpd;
  cfg.mask_source = a.masks == "oracle" ? MaskSource::kOracle
                    : a.masks == "uniform" ? MaskSource::kUniform
                                           : MaskSource::kFile;
  cfg.wpd.delay = cfg.wpe.delay;
  cfg.wpd.taps = cfg.wpe.taps;
  cfg.wpd.loading = cfg.wpe.loading;
  cfg.wpd.relative_floor = cfg.wpe.relative_floor;
  cfg.loading = cfg.wpe.loading;
  cfg.wpd.shared_mask = a.shared_mask;
  cfg.wpd.noise_in_power_mask = a.noise_in_power;
  cfg.wpd.indexing = a.delayed_covariance ? CovarianceIndexing::kDelayedFrame : CovarianceIndexing::kCurrentFrame;
  cfg.threads = ThreadCount(a.common.threads);

  std::optional<MixtureScene> scene;
  Waveform mixture;
  if (!a.scene.empty()) {
    scene = read_scene(a.scene);
    mixture = {static_cast<std::uint32_t>(std::llround(scene->meta.sample_rate)), scene->mixture};
  } else {
    mixture = read_input(a.in);
  }
  check_rate(cfg.stft.sample_rate, mixture.sample_rate, "input");
  if (cfg.ref_channel >= mixture.channels())
    throw Error(ErrorCode::kInvalidParam, "--ref-channel out of range for " +
                                              std::to_string(mixture.channels()) + " channels");
  const auto x = stft(mixture.samples, cfg.stft);

  std::vector<TimeFrequencyMask> masks;
  std::optional<TimeFrequencyMask> wpe_mask;
  switch (cfg.mask_source) {
    case MaskSource::kOracle: {
      if (!scene) throw CLI::ValidationError("--masks oracle requires --scene");
      auto sm = scene_masks(*scene, cfg.stft);
      masks = std::move(sm.masks);
      wpe_mask = std::move(sm.wpe_mask);
      break;
    }
    case MaskSource::kUniform:
      masks = uniform_masks(x, scene ? scene->num_sources() : a.sources);
      break;
    case MaskSource::kFile:
      if (a.mask_file.empty()) throw CLI::ValidationError("--masks file requires --mask-file");
      masks = read_masks(a.mask_file);
      break;
  }
  for (const auto& m : masks)
    if (!m.matches(x)) throw Error(ErrorCode::kShapeMismatch, "mask shape does not match the input STFT");
  std::vector<TimeFrequencyMask> psd_masks;
  if (!a.shared_mask) {
    if (a.psd_mask_file.empty()) throw CLI::ValidationError("--split-masks requires --psd-mask-file");
    psd_masks = read_masks(a.psd_mask_file);
  }
  if (!a.export_masks.empty()) write_masks(a.export_masks, masks);

  const auto result = separate_signal(mixture.samples, masks, wpe_mask, cfg, psd_masks);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(a.out);
  for (std::size_t j = 0; j < result.streams.size(); ++j)
    write_wav((fs::path(a.out) / ("source_" + std::to_string(j + 1) + ".wav")).string(),
              {mixture.sample_rate, {result.streams[j]}}, sample_format(a.common));

  if (scene) {
    const auto report = evaluate_scene(*scene, result.streams, cfg.ref_channel, cfg.stft.win_len);
    std::ofstream os(fs::path(a.out) / "report.txt");
    for (std::size_t j = 0; j < report.per_source.size(); ++j) {
      const auto line = report_line(j + 1, report.per_source[j]);
      os << line << "\n";
      std::cout << line << "\n";
    }
  }

  write_manifest(a.out, "separate",
                 {{"scene", a.scene},
                  {"in", a.in},
                  {"arch", a.arch},
                  {"masks", a.masks},
                  {"mask-file", a.mask_file},
                  {"psd-mask-file", a.psd_mask_file},
                  {"sources", std::to_string(masks.size() - 1)},
                  {"taps", std::to_string(cfg.wpe.taps)},
                  {"delay", std::to_string(cfg.wpe.delay)},
                  {"iterations", std::to_string(cfg.wpe.iterations)},
                  {"loading", format_double(cfg.wpe.loading)},
                  {"relative-floor", format_double(cfg.wpe.relative_floor)},
                  {"ref-channel", std::to_string(cfg.ref_channel)},
                  {"shared-mask", a.shared_mask ? "true" : "false"},
                  {"noise-in-power", a.noise_in_power ? "true" : "false"},
                  {"delayed-covariance", a.delayed_covariance ? "true" : "false"},
                  {"per-source-wpe", cfg.per_source_wpe ? "true" : "false"},
                  {"format", a.common.format},
                  {"sample-rate", format_double(cfg.stft.sample_rate)},
                  {"win-len", std::to_string(cfg.stft.win_len)},
                  {"hop", std::to_string(cfg.stft.hop)},
                  {"fft-size", std::to_string(cfg.stft.fft_size)}});
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> refs;
  std::vector<std::string> ests;
  std::string mixture;
  std::size_t channel = 0;
  std::size_t margin = 0;
};

std::vector<double> eval_channel(const std::string& path, std::size_t channel) {
  auto wf = read_wav(path);
  const std::size_t c = wf.channels() == 1 ? 0 : channel;
  if (c >= wf.channels()) throw Error(ErrorCode::kInvalidParam, path + " lacks channel " + std::to_string(channel));
  return std::move(wf.samples[c]);
}

std::vector<double> trim(std::vector<double> v, std::size_t margin) {
  if (2 * margin >= v.size()) throw Error(ErrorCode::kTooShort, "signal shorter than two margins");
  return {v.begin() + static_cast<std::ptrdiff_t>(margin), v.end() - static_cast<std::ptrdiff_t>(margin)};
}

void run_eval(const EvalArgs& a) {
  if (a.refs.size() != a.ests.size()) throw CLI::ValidationError("need one --est per --ref");
  std::vector<std::vector<double>> refs, ests;
  for (const auto& r : a.refs) refs.push_back(trim(eval_channel(r, a.channel), a.margin));
  for (const auto& e : a.ests) ests.push_back(trim(eval_channel(e, 0), a.margin));
  std::optional<std::vector<double>> mix;
  if (!a.mixture.empty()) mix = trim(eval_channel(a.mixture, a.channel), a.margin);
  const auto report = mix ? best_permutation_si_sdr(ests, refs, std::span<const double>(*mix))
                          : best_permutation_si_sdr(ests, refs);
  for (std::size_t j = 0; j < report.per_source.size(); ++j)
    std::cout << report_line(j + 1, report.per_source[j]) << "\n";
}

// Options from --config are spliced in right after the subcommand name so
// that anything given on the command line (parsed later) overrides them.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::vector<std::string> injected;
  for (const auto& [k, v] : read_key_values(path)) injected.push_back("--" + k + "=" + v);
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-channel dereverberation and separation (WPE, MVDR, WPD)"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic reverberant scene directory");
  simulate->add_option("--out", sim.out, "Scene directory to write")->required();
  simulate->add_option("--sources", sim.scene.num_sources, "Number of speakers")->check(CLI::Range(1, 4));
  simulate->add_option("--channels", sim.scene.num_channels, "Number of microphones")->check(CLI::Range(1, 8));
  simulate->add_option("--rt60", sim.scene.rt60, "Reverberation time, seconds")->check(CLI::NonNegativeNumber);
  simulate->add_option("--snr", sim.scene.snr_db, "Image-to-noise ratio, dB (inf: no noise)");
  simulate->add_option("--duration", sim.scene.duration_s, "Seconds")->check(CLI::PositiveNumber);
  simulate->add_option("--sample-rate", sim.scene.sample_rate, "Hz")->check(CLI::PositiveNumber);
  simulate->add_option("--early-ms", sim.scene.early_boundary_ms, "Early/late boundary after the direct path, ms");
  simulate->add_option("--reverb-db", sim.scene.reverb_to_direct_db, "Reflection energy relative to direct path, dB");
  simulate->add_option("--reflections", sim.scene.n_reflections, "Reflections per RIR");
  simulate->add_option("--seed", sim.scene.seed, "Random seed");
  CommonOptions sim_common;
  add_common(simulate, sim_common);

  DereverbArgs der;
  auto* dereverb = app.add_subcommand("dereverb", "Mask-based WPE dereverberation of a multi-channel WAV");
  dereverb->add_option("--in", der.in, "Input WAV")->required();
  dereverb->add_option("--out", der.out, "Output WAV")->required();
  auto* der_mask = dereverb->add_option("--mask-file", der.mask_file, "Mask tensor file; the first mask drives lambda");
  dereverb->add_option("--scene", der.scene, "Scene directory for an oracle early-sum mask")->excludes(der_mask);
  add_wpe_options(dereverb, der.wpe);
  add_common(dereverb, der.common);

  SeparateArgs sep;
  auto* separate_cmd = app.add_subcommand("separate", "Separate J speakers into mono WAVs");
  separate_cmd->add_option("--scene", sep.scene, "Scene directory (mixture, ground truth for oracle masks and scoring)");
  separate_cmd->add_option("--in", sep.in, "Mixture WAV (instead of --scene)");
  separate_cmd->add_option("--out", sep.out, "Output directory")->required();
  separate_cmd->add_option("--arch", sep.arch, "Frontend")->check(CLI::IsMember({"mvdr", "wpe-mvdr", "wpd"}));
  separate_cmd->add_option("--masks", sep.masks, "Mask source")->check(CLI::IsMember({"oracle", "uniform", "file"}));
  separate_cmd->add_option("--mask-file", sep.mask_file, "Mask tensor file (noise mask first)");
  separate_cmd->add_option("--psd-mask-file", sep.psd_mask_file, "Second mask set for the WPD target PSD");
  separate_cmd->add_option("--export-masks", sep.export_masks, "Write the masks used to this file");
  separate_cmd->add_option("--sources", sep.sources, "Speaker count for uniform masks without a scene")
      ->check(CLI::Range(1, 4));
  separate_cmd->add_option("--ref-channel", sep.cfg.ref_channel, "Reference microphone index");
  separate_cmd->add_flag("--shared-mask,!--split-masks", sep.shared_mask,
                         "One mask per source for both WPD paths (default) or two");
  separate_cmd->add_flag("--noise-in-power", sep.noise_in_power, "Add the noise mask to the WPD power mask");
  separate_cmd->add_flag("--delayed-covariance", sep.delayed_covariance,
                         "Weight x(t-D) stacks by 1/lambda(t) in the WPD covariance");
  separate_cmd->add_flag("--per-source-wpe", sep.cfg.per_source_wpe, "Cascade: one WPE per source mask");
  add_wpe_options(separate_cmd, sep.cfg.wpe);
  add_common(separate_cmd, sep.common);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "SI-SDR report for estimates against references");
  eval->add_option("--ref", ev.refs, "Reference WAV (repeat per source)")->required()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  eval->add_option("--est", ev.ests, "Estimate WAV (repeat per source)")->required()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  eval->add_option("--mixture", ev.mixture, "Unprocessed mixture for improvement deltas");
  eval->add_option("--channel", ev.channel, "Channel of multi-channel references and mixture");
  eval->add_option("--margin", ev.margin, "Samples dropped at each end before scoring");
  CommonOptions eval_common;
  add_common(eval, eval_common);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*simulate) run_simulate(sim);
    if (*dereverb) run_dereverb(der);
    if (*separate_cmd) run_separate(sep);
    if (*eval) run_eval(ev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
