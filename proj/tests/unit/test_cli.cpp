// Copyright (c) 2026 The ascene Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ascene/cli/cli.hpp"
#include "ascene/cli/config.hpp"
#include "ascene/features/audio.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace ascene;
using namespace ascene::cli;
using ascene::testing::KindOf;
using ascene::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ASCENE_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// A tone whose pitch depends on the class plus a little noise.
void WriteClip(const fs::path& p, double freq, std::uint64_t seed) {
  const int sr = 22050;
  std::vector<float> x = ascene::testing::RandomSignal(2 * sr, seed, 0.05f);
  for (int i = 0; i < 2 * sr; ++i)
    x[i] += 0.4f * static_cast<float>(std::sin(2 * M_PI * freq * i / sr));
  features::SaveWav(p, features::AudioClip::Mono(std::move(x), sr));
}

const char* kSmallConfig =
    "[run]\nseed = 7\n"
    "[spectro]\nn_mels = 40\n"
    "[arch]\nname = small_fcnn\nwidth = 0.125\n"
    "[train]\nepochs = 2\nbatch_size = 4\nmixup = false\n"
    "[schedule]\nfirst_cycle_epochs = 1\n";

// Nine clips over three scenes.
void WriteCorpus(const fs::path& dir) {
  const std::vector<std::pair<std::string, double>> scenes{
      {"airport", 300.0}, {"park", 1200.0}, {"bus", 4000.0}};
  std::string manifest = "filename\tscene_label\n";
  std::uint64_t seed = 1;
  for (const auto& [scene, freq] : scenes)
    for (int k = 0; k < 3; ++k) {
      const std::string name = scene + "-x-" + std::to_string(k) + "-a.wav";
      WriteClip(dir / name, freq * (1.0 + 0.02 * k), seed++);
      manifest += name + "\t" + scene + "\n";
    }
  WriteText(dir / "manifest.tsv", manifest);
  WriteText(dir / "run.ini", kSmallConfig);
}

}  // namespace

TEST_CASE("config parses sections and rejects unknown keys") {
  const RunConfig c = RunConfig::Parse(kSmallConfig);
  CHECK(c.seed == 7);
  CHECK(c.spectro.n_mels == 40);
  CHECK(c.arch.width_mult == 0.125);
  CHECK(c.train.epochs == 2);
  CHECK_FALSE(c.train.mixup);
  CHECK(KindOf([] { RunConfig::Parse("[run]\nseeed = 1\n"); }) == ErrorKind::kConfig);
  CHECK(KindOf([] { RunConfig::Parse("[nothing]\nx = 1\n"); }) == ErrorKind::kConfig);
  CHECK(KindOf([] { RunConfig::Parse("[run]\nseed = -3\n"); }) == ErrorKind::kConfig);
  CHECK(KindOf([] { RunConfig::Parse("[train]\nmixup = maybe\n"); }) == ErrorKind::kConfig);
  CHECK(KindOf([] { RunConfig::Parse("[augment]\nwaveform_methods = warp\n"); }) ==
        ErrorKind::kConfig);
  CHECK(KindOf([] { RunConfig::Parse("[arch]\nname = vgg\n"); }) == ErrorKind::kConfig);
}

TEST_CASE("config canonical form and hash") {
  const RunConfig a = RunConfig::Parse(kSmallConfig);
  const RunConfig b = RunConfig::Parse(
      "[schedule]\nfirst_cycle_epochs = 1\n[train]\nmixup = false\nbatch_size = 4\n"
      "epochs = 2\n[arch]\nwidth = 0.125\nname = small_fcnn\n[spectro]\nn_mels = 40\n"
      "[run]\nseed = 7\n");
  CHECK(a.Canonical() == b.Canonical());
  CHECK(a.Hash() == b.Hash());
  // the canonical text parses back to the same config
  std::string ini;
  std::string section;
  std::istringstream lines(a.Canonical());
  for (std::string line; std::getline(lines, line);) {
    const auto dot = line.find('.');
    const std::string s = line.substr(0, dot);
    if (s != section) ini += "[" + (section = s) + "]\n";
    ini += line.substr(dot + 1) + "\n";
  }
  CHECK(RunConfig::Parse(ini).Canonical() == a.Canonical());
  RunConfig c = a;
  c.seed = 8;
  CHECK(c.Hash() != a.Hash());
}

TEST_CASE("relative hierarchy paths resolve against the config directory") {
  const RunConfig c = RunConfig::Parse("[paths]\nhierarchy = h.tsv\n", "/data/run");
  CHECK(c.hierarchy == fs::path("/data/run/h.tsv"));
}

TEST_CASE("exit codes distinguish config and data errors") {
  TempDir dir;
  WriteText(dir / "bad.ini", "[run]\nbogus = 1\n");
  WriteText(dir / "empty.tsv", "");
  WriteText(dir / "ok.tsv", "filename\tscene_label\nmissing-a.wav\tpark\n");

  RunResult r = RunCli("extract --manifest " + (dir / "ok.tsv").string() + " --config " +
                           (dir / "bad.ini").string() + " --out " + (dir / "f").string(),
                       dir / "log");
  CHECK(r.code == kExitConfig);
  CHECK(r.out.find("bogus") != std::string::npos);

  r = RunCli("extract --manifest " + (dir / "empty.tsv").string() + " --out " +
                 (dir / "f").string(),
             dir / "log");
  CHECK(r.code == kExitData);
  CHECK(r.out.find("empty manifest") != std::string::npos);

  r = RunCli("extract --manifest " + (dir / "ok.tsv").string() + " --out " +
                 (dir / "f").string(),
             dir / "log");
  CHECK(r.code == kExitData);
  CHECK(r.out.find("missing-a.wav") != std::string::npos);

  r = RunCli("frobnicate", dir / "log");
  CHECK(r.code == kExitConfig);
  r = RunCli("extract --out x", dir / "log");
  CHECK(r.code == kExitConfig);
  r = RunCli("--version", dir / "log");
  CHECK(r.code == kExitOk);
}

TEST_CASE("pipeline through the binary is deterministic") {
  TempDir dir;
  WriteCorpus(dir.path());
  const std::string manifest = (dir / "manifest.tsv").string();
  const std::string config = (dir / "run.ini").string();

  std::string outputs[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir / ("run" + std::to_string(run));
    const std::string common = " --manifest " + manifest + " --config " + config;
    // different worker counts must not change anything
    RunResult r = RunCli("extract" + common + " --workers " + std::to_string(run + 1) +
                             " --out " + (out / "feat").string(),
                         dir / "log");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    CHECK(r.out.find("config fnv1a64:") != std::string::npos);
    int files = 0;
    for (const auto& e : fs::directory_iterator(out / "feat"))
      files += e.path().extension() == ".ascf";
    CHECK(files == 9);
    CHECK(fs::exists(out / "feat" / "scale_stats.txt"));

    r = RunCli("train" + common + " --features " + (out / "feat").string() + " --out " +
                   (out / "model.ascm").string(),
               dir / "log");
    REQUIRE_MESSAGE(r.code == 0, r.out);

    r = RunCli("evaluate" + common + " --features " + (out / "feat").string() +
                   " --model " + (out / "model.ascm").string() + " --out " +
                   (out / "eval").string(),
               dir / "log");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    CHECK(r.out.find("Avg acc. %") != std::string::npos);
    const auto j = nlohmann::json::parse(Slurp(out / "eval.report.json"));
    CHECK(j.at("items") == 9);

    r = RunCli("quantize --model " + (out / "model.ascm").string() + " --out " +
                   (out / "model.ascq").string(),
               dir / "log");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    CHECK(r.out.find("ratio") != std::string::npos);

    for (const char* f : {"feat/airport-x-0-a.ascf", "feat/scale_stats.txt", "model.ascm",
                          "eval.scores.tsv", "eval.report.json", "model.ascq"})
      outputs[run] += Slurp(out / f) + "|";
  }
  CHECK(outputs[0] == outputs[1]);
}
