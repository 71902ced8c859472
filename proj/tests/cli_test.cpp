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

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "test_support.hpp"

namespace convbeam {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int status = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(CONVBEAM_CLI) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("convbeam_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run("simulate --out " + path("a") + " --duration 1 --seed 3").status, 0);
  ASSERT_EQ(run("simulate --out " + path("b") + " --duration 1 --seed 3").status, 0);
  for (const char* f : {"mixture.wav", "early_1.wav", "late_2.wav", "noise.wav", "manifest.txt"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  const auto scene = read_scene(path("a"));
  EXPECT_EQ(scene.num_sources(), 2u);
  EXPECT_EQ(scene.num_samples(), 16000u);
}

TEST_F(CliTest, SimulatedComponentsSumToMixture) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1 --sources 2 --channels 3 --seed 4").status, 0);
  const auto scene = read_scene(path("s"));
  // Components are stored as float32, so the sum holds to float precision.
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t n = 0; n < scene.num_samples(); ++n) {
      double sum = scene.noise[c][n];
      for (std::size_t j = 0; j < 2; ++j) sum += scene.early_images[j][c][n] + scene.late_images[j][c][n];
      ASSERT_NEAR(scene.mixture[c][n], sum, 1e-6);
    }
}

TEST_F(CliTest, AnechoicSimulateHasNoLateImage) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 0.5 --rt60 0 --seed 1").status, 0);
  const auto scene = read_scene(path("s"));
  for (const auto& img : scene.late_images)
    for (const auto& ch : img)
      for (double v : ch) ASSERT_EQ(v, 0.0);
}

TEST_F(CliTest, SeparateWritesStreamsReportAndManifest) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1.5 --rt60 0.4 --seed 5").status, 0);
  const auto r = run("separate --scene " + path("s") + " --out " + path("o"));
  ASSERT_EQ(r.status, 0);
  const std::regex line(R"(src=[12] si_sdr=-?\d+\.\d{4} delta=-?\d+\.\d{4})");
  std::istringstream report(slurp(dir_ / "o" / "report.txt"));
  std::string l;
  int lines = 0;
  while (std::getline(report, l)) {
    EXPECT_TRUE(std::regex_match(l, line)) << l;
    // The unified beamformer beats the unprocessed mixture.
    EXPECT_GT(std::stod(l.substr(l.find("delta=") + 6)), 0.0);
    ++lines;
  }
  EXPECT_EQ(lines, 2);
  EXPECT_EQ(r.out, slurp(dir_ / "o" / "report.txt"));

  const auto manifest = read_key_values(dir_ / "o" / "run_manifest.txt");
  for (const char* key : {"arch", "masks", "taps", "delay", "iterations", "loading", "ref-channel",
                          "shared-mask", "sources", "format", "command"})
    EXPECT_TRUE(manifest.count(key)) << key;
  EXPECT_EQ(manifest.at("taps"), "5");
  EXPECT_EQ(manifest.at("delay"), "3");
  EXPECT_EQ(manifest.at("iterations"), "1");

  for (const char* f : {"source_1.wav", "source_2.wav"}) {
    const auto wf = read_wav(path(std::string("o/") + f));
    EXPECT_EQ(wf.channels(), 1u);
    EXPECT_EQ(wf.length(), 24000u);
  }
}

TEST_F(CliTest, ArchitectureChangesOnlyTheFrontend) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1 --seed 6").status, 0);
  for (const char* arch : {"mvdr", "wpe-mvdr", "wpd"}) {
    const std::string out = path(std::string("o_") + arch);
    ASSERT_EQ(run(std::string("separate --scene ") + path("s") + " --out " + out + " --arch " + arch).status, 0);
    for (const char* f : {"source_1.wav", "source_2.wav"}) {
      const auto wf = read_wav((fs::path(out) / f).string());
      EXPECT_EQ(wf.channels(), 1u);
      EXPECT_EQ(wf.length(), 16000u);
    }
  }
}

TEST_F(CliTest, SingleSpeakerSupported) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1 --sources 1 --seed 7").status, 0);
  ASSERT_EQ(run("separate --scene " + path("s") + " --out " + path("o")).status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "source_1.wav"));
  EXPECT_FALSE(fs::exists(dir_ / "o" / "source_2.wav"));
}

TEST_F(CliTest, ConfigFileIsOverriddenByFlags) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1 --seed 8").status, 0);
  std::ofstream(path("cfg.txt")) << "# defaults\ntaps=2\ndelay=4\narch=wpe-mvdr\n";
  ASSERT_EQ(run("separate --scene " + path("s") + " --out " + path("o") + " --config " + path("cfg.txt") +
                " --taps 4")
                .status,
            0);
  const auto manifest = read_key_values(dir_ / "o" / "run_manifest.txt");
  EXPECT_EQ(manifest.at("taps"), "4");
  EXPECT_EQ(manifest.at("delay"), "4");
  EXPECT_EQ(manifest.at("arch"), "wpe-mvdr");
}

TEST_F(CliTest, MaskFileAndSplitMasks) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1 --seed 9").status, 0);
  ASSERT_EQ(run("separate --scene " + path("s") + " --out " + path("a") + " --export-masks " + path("m.bin")).status, 0);
  ASSERT_EQ(run("separate --scene " + path("s") + " --out " + path("b") + " --masks file --mask-file " +
                path("m.bin"))
                .status,
            0);
  EXPECT_EQ(slurp(dir_ / "a" / "source_1.wav"), slurp(dir_ / "b" / "source_1.wav"));
  // Split mode with the same file on both paths reproduces shared mode.
  ASSERT_EQ(run("separate --scene " + path("s") + " --out " + path("c") + " --split-masks --psd-mask-file " +
                path("m.bin"))
                .status,
            0);
  EXPECT_EQ(slurp(dir_ / "a" / "source_2.wav"), slurp(dir_ / "c" / "source_2.wav"));
  EXPECT_NE(run("separate --scene " + path("s") + " --out " + path("d") + " --split-masks").status, 0);
}

TEST_F(CliTest, DereverbZeroInputGivesZeroOutput) {
  write_wav(path("zero.wav"), Waveform{16000, Signal(2, std::vector<double>(8000, 0.0))});
  ASSERT_EQ(run("dereverb --in " + path("zero.wav") + " --out " + path("y.wav")).status, 0);
  const auto y = read_wav(path("y.wav"));
  ASSERT_EQ(y.channels(), 2u);
  for (const auto& ch : y.samples)
    for (double v : ch) ASSERT_EQ(v, 0.0);
}

TEST_F(CliTest, DereverbKeepsChannelsAndDefaultsToOneIteration) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1 --channels 3 --seed 10").status, 0);
  ASSERT_EQ(run("dereverb --in " + path("s/mixture.wav") + " --out " + path("y.wav") + " --scene " + path("s")).status, 0);
  EXPECT_EQ(read_wav(path("y.wav")).channels(), 3u);
  EXPECT_EQ(read_wav(path("y.wav")).length(), 16000u);
  EXPECT_EQ(read_key_values(dir_ / "run_manifest.txt").at("iterations"), "1");
}

TEST_F(CliTest, EvalGoldenFormatAndPermutation) {
  testing::Rng rng(101);
  std::vector<double> a(4000), b(4000), mix(4000);
  for (std::size_t i = 0; i < 4000; ++i) {
    a[i] = 0.1 * rng.gauss();
    b[i] = 0.1 * rng.gauss();
    mix[i] = a[i] + b[i];
  }
  write_wav(path("a.wav"), Waveform{16000, {a}});
  write_wav(path("b.wav"), Waveform{16000, {b}});
  write_wav(path("mix.wav"), Waveform{16000, {mix}});
  const auto ident = run("eval --ref " + path("a.wav") + " --est " + path("a.wav"));
  EXPECT_EQ(ident.status, 0);
  EXPECT_EQ(ident.out, "src=1 si_sdr=100.0000 delta=0.0000\n");

  const auto swapped = run("eval --ref " + path("a.wav") + " --ref " + path("b.wav") + " --est " + path("b.wav") +
                           " --est " + path("a.wav") + " --mixture " + path("mix.wav"));
  ASSERT_EQ(swapped.status, 0);
  std::ostringstream want;
  const double base_a = si_sdr(read_wav(path("mix.wav")).samples[0], read_wav(path("a.wav")).samples[0]);
  const double base_b = si_sdr(read_wav(path("mix.wav")).samples[0], read_wav(path("b.wav")).samples[0]);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "src=1 si_sdr=100.0000 delta=%.4f\nsrc=2 si_sdr=100.0000 delta=%.4f\n",
                100.0 - base_a, 100.0 - base_b);
  EXPECT_EQ(swapped.out, buf);
}

TEST_F(CliTest, ErrorsGiveNonzeroExit) {
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("separate --out " + path("o")).status, 0);
  EXPECT_NE(run("dereverb --in " + path("missing.wav") + " --out " + path("y.wav")).status, 0);
  EXPECT_NE(run("separate --in x.wav --scene y --out " + path("o")).status, 0);
  EXPECT_NE(run("simulate --out " + path("s") + " --sources 9").status, 0);
  EXPECT_NE(run("separate --scene " + path("nothing") + " --out " + path("o") + " --arch beam").status, 0);
  write_wav(path("short.wav"), Waveform{16000, Signal(2, std::vector<double>(100, 0.1))});
  EXPECT_NE(run("dereverb --in " + path("short.wav") + " --out " + path("y.wav")).status, 0);
  write_wav(path("rate.wav"), Waveform{8000, Signal(2, std::vector<double>(8000, 0.1))});
  EXPECT_NE(run("dereverb --in " + path("rate.wav") + " --out " + path("y.wav")).status, 0);
}

TEST_F(CliTest, ThreadsFlagAndEnvironmentGiveIdenticalBytes) {
  ASSERT_EQ(run("simulate --out " + path("s") + " --duration 1 --seed 11").status, 0);
  ASSERT_EQ(run("separate --scene " + path("s") + " --out " + path("t1") + " --threads 1").status, 0);
  ASSERT_EQ(run("separate --scene " + path("s") + " --out " + path("t3") + " --threads 3").status, 0);
  ASSERT_EQ(std::system(("CONVBEAM_THREADS=4 " + std::string(CONVBEAM_CLI) + " separate --scene " + path("s") +
                         " --out " + path("env") + " > /dev/null")
                            .c_str()),
            0);
  for (const char* f : {"source_1.wav", "source_2.wav"}) {
    EXPECT_EQ(slurp(dir_ / "t1" / f), slurp(dir_ / "t3" / f));
    EXPECT_EQ(slurp(dir_ / "t1" / f), slurp(dir_ / "env" / f));
  }
}

}  // namespace
}  // namespace convbeam
