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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "convbeam/audio_io.hpp"
#include "convbeam/error.hpp"
#include "convbeam/simulator.hpp"

namespace convbeam {

using KeyValues = std::map<std::string, std::string>;

/// Parses `key=value` lines. Blank lines and lines starting with '#' are
/// ignored; surrounding whitespace is trimmed.
inline KeyValues parse_key_values(std::istream& is) {
  KeyValues out;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kUnsupportedFormat, "expected key=value: " + line);
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_key_values(is);
}

inline void write_key_values(const std::filesystem::path& path, const KeyValues& kv,
                             const std::string& comment = {}) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  if (!comment.empty()) os << "# " << comment << "\n";
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kUnsupportedFormat, "not a number: '" + s + "'");
  }
}

namespace detail {

inline const std::string& require_key(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error(ErrorCode::kMissingGroundTruth, "manifest lacks '" + key + "'");
  return it->second;
}

inline Waveform as_waveform(const Signal& s, double fs) {
  return {static_cast<std::uint32_t>(std::llround(fs)), s};
}

}  // namespace detail

// Scene directory layout (all audio float32 WAV):
//   manifest.txt       key=value metadata and the file name of each component
//   mixture.wav        C channels
//   noise.wav          C channels
//   dry_<j>.wav        mono dry source j (1-based)
//   early_<j>.wav      C channels, early image of source j
//   late_<j>.wav       C channels, late image of source j
//   rir_<j>.wav        C channels, RIRs of source j zero-padded to equal length
inline constexpr const char* kSceneFormat = "convbeam-scene-1";

inline void write_scene(const std::filesystem::path& dir, const MixtureScene& scene) {
  std::filesystem::create_directories(dir);
  const double fs = scene.meta.sample_rate;
  KeyValues kv;
  kv["format"] = kSceneFormat;
  kv["sample_rate"] = format_double(fs);
  kv["num_sources"] = std::to_string(scene.num_sources());
  kv["num_channels"] = std::to_string(scene.num_channels());
  kv["num_samples"] = std::to_string(scene.num_samples());
  kv["rt60"] = format_double(scene.meta.rt60);
  kv["snr_db"] = format_double(scene.meta.snr_db);
  kv["seed"] = std::to_string(scene.meta.seed);
  kv["early_boundary_ms"] = format_double(scene.meta.early_boundary_ms);
  kv["mixture"] = "mixture.wav";
  kv["noise"] = "noise.wav";
  write_wav((dir / "mixture.wav").string(), detail::as_waveform(scene.mixture, fs));
  write_wav((dir / "noise.wav").string(), detail::as_waveform(scene.noise, fs));
  for (std::size_t j = 0; j < scene.num_sources(); ++j) {
    const std::string id = std::to_string(j + 1);
    kv["dry_" + id] = "dry_" + id + ".wav";
    kv["early_" + id] = "early_" + id + ".wav";
    kv["late_" + id] = "late_" + id + ".wav";
    kv["rir_" + id] = "rir_" + id + ".wav";
    write_wav((dir / kv["dry_" + id]).string(), detail::as_waveform({scene.dry[j]}, fs));
    write_wav((dir / kv["early_" + id]).string(), detail::as_waveform(scene.early_images[j], fs));
    write_wav((dir / kv["late_" + id]).string(), detail::as_waveform(scene.late_images[j], fs));
    std::size_t longest = 0;
    for (const auto& r : scene.rirs[j]) longest = std::max(longest, r.taps.size());
    Signal rir(scene.rirs[j].size(), std::vector<double>(longest, 0.0));
    for (std::size_t c = 0; c < rir.size(); ++c)
      std::copy(scene.rirs[j][c].taps.begin(), scene.rirs[j][c].taps.end(), rir[c].begin());
    write_wav((dir / kv["rir_" + id]).string(), detail::as_waveform(rir, fs));
  }
  write_key_values(dir / "manifest.txt", kv, "convbeam scene manifest");
}

inline MixtureScene read_scene(const std::filesystem::path& dir) {
  const auto kv = read_key_values(dir / "manifest.txt");
  if (detail::require_key(kv, "format") != kSceneFormat)
    throw Error(ErrorCode::kUnsupportedFormat, "unknown scene format in " + dir.string());
  MixtureScene scene;
  scene.meta.sample_rate = parse_double(detail::require_key(kv, "sample_rate"));
  scene.meta.rt60 = parse_double(detail::require_key(kv, "rt60"));
  scene.meta.snr_db = parse_double(detail::require_key(kv, "snr_db"));
  scene.meta.seed = std::stoull(detail::require_key(kv, "seed"));
  scene.meta.early_boundary_ms = parse_double(detail::require_key(kv, "early_boundary_ms"));
  const auto sources = std::stoul(detail::require_key(kv, "num_sources"));
  const auto fs = static_cast<std::uint32_t>(std::llround(scene.meta.sample_rate));

  auto load = [&](const std::string& key) {
    auto wf = read_wav((dir / detail::require_key(kv, key)).string());
    if (wf.sample_rate != fs)
      throw Error(ErrorCode::kSampleRateMismatch, key + " sample rate differs from manifest");
    return wf.samples;
  };
  scene.mixture = load("mixture");
  scene.noise = load("noise");
  for (std::size_t j = 1; j <= sources; ++j) {
    const std::string id = std::to_string(j);
    scene.dry.push_back(load("dry_" + id).front());
    scene.early_images.push_back(load("early_" + id));
    scene.late_images.push_back(load("late_" + id));
    std::vector<RoomImpulseResponse> rirs;
    for (auto& taps : load("rir_" + id))
      rirs.push_back({std::move(taps), scene.meta.sample_rate, scene.meta.early_boundary_ms});
    scene.rirs.push_back(std::move(rirs));
  }
  return scene;
}

}  // namespace convbeam
