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

#include "ascene/cli/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "ascene/error.hpp"
#include "ascene/util/rng.hpp"

namespace ascene::cli {
namespace {

namespace pt = boost::property_tree;

[[noreturn]] void BadValue(const std::string& key, const std::string& v,
                           const char* want) {
  ThrowConfig("config key " + key + ": '" + v + "' is not " + want);
}

template <class T>
RunConfig::Field Int(std::string key, T& ref) {
  return {key,
          [key, &ref](const std::string& v) {
            try {
              std::size_t used = 0;
              const long long x = std::stoll(v, &used);
              if (used != v.size() || x < std::numeric_limits<T>::min() ||
                  x > std::numeric_limits<T>::max())
                throw std::invalid_argument(v);
              ref = static_cast<T>(x);
            } catch (const std::logic_error&) {
              BadValue(key, v, "an integer");
            }
          },
          [&ref] { return std::to_string(ref); }};
}

RunConfig::Field U64(std::string key, std::uint64_t& ref) {
  return {key,
          [key, &ref](const std::string& v) {
            try {
              std::size_t used = 0;
              if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
              ref = std::stoull(v, &used);
              if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::logic_error&) {
              BadValue(key, v, "an unsigned integer");
            }
          },
          [&ref] { return std::to_string(ref); }};
}

template <class T>
RunConfig::Field Real(std::string key, T& ref) {
  return {key,
          [key, &ref](const std::string& v) {
            try {
              std::size_t used = 0;
              const double x = std::stod(v, &used);
              if (used != v.size() || !std::isfinite(x))
                throw std::invalid_argument(v);
              ref = static_cast<T>(x);
            } catch (const std::logic_error&) {
              BadValue(key, v, "a finite number");
            }
          },
          [&ref] {
            std::ostringstream os;
            os.precision(std::numeric_limits<double>::max_digits10);
            os << static_cast<double>(ref);
            return os.str();
          }};
}

RunConfig::Field Bool(std::string key, bool& ref) {
  return {key,
          [key, &ref](const std::string& v) {
            if (v == "true" || v == "1" || v == "yes" || v == "on") ref = true;
            else if (v == "false" || v == "0" || v == "no" || v == "off") ref = false;
            else BadValue(key, v, "a boolean");
          },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

RunConfig::Field Str(std::string key, std::string& ref) {
  return {key, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }};
}

std::vector<std::string> SplitList(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::vector<RunConfig::Field> RunConfig::Fields() {
  std::vector<Field> f;
  f.push_back(U64("run.seed", seed));
  f.push_back(Int("run.workers", workers));

  f.push_back(Int("spectro.n_fft", spectro.n_fft));
  f.push_back(Int("spectro.win_length", spectro.win_length));
  f.push_back(Int("spectro.hop", spectro.hop));
  f.push_back(Int("spectro.n_mels", spectro.n_mels));
  f.push_back(Real("spectro.fmin", spectro.fmin));
  f.push_back(Real("spectro.fmax", spectro.fmax));
  f.push_back(Real("spectro.log_floor", spectro.log_floor));
  f.push_back(Bool("spectro.slaney_norm", spectro.slaney_norm));
  f.push_back(Bool("spectro.stereo", stereo));

  f.push_back(Real("augment.mixup_alpha", aug.mixup_alpha));
  f.push_back(Int("augment.crop_len", aug.crop_len));
  f.push_back(Real("augment.specaug_time_frac", aug.specaug_time_frac));
  f.push_back(Real("augment.specaug_freq_frac", aug.specaug_freq_frac));
  f.push_back(Real("augment.pitch_semitone_range", aug.pitch_semitone_range));
  f.push_back(Real("augment.speed_lo", aug.speed_lo));
  f.push_back(Real("augment.speed_hi", aug.speed_hi));
  f.push_back(Real("augment.noise_std", aug.noise_std));
  f.push_back(Real("augment.rt60_lo", aug.rt60_lo));
  f.push_back(Real("augment.rt60_hi", aug.rt60_hi));
  f.push_back(Real("augment.mix_weight_lo", aug.mix_weight_lo));
  f.push_back(Real("augment.mix_weight_hi", aug.mix_weight_hi));
  f.push_back({"augment.waveform_methods",
               [this](const std::string& v) { waveform_methods = SplitList(v); },
               [this] {
                 std::string s;
                 for (const auto& m : waveform_methods) s += (s.empty() ? "" : ",") + m;
                 return s;
               }});

  f.push_back({"arch.name",
               [this](const std::string& v) { arch.arch = zoo::ArchFromName(v); },
               [this] { return std::string(zoo::ArchName(arch.arch)); }});
  f.push_back(Real("arch.width", arch.width_mult));
  f.push_back(Int("arch.n_classes", arch.n_classes));
  f.push_back(Bool("arch.attention", arch.attention));
  f.push_back(Real("arch.dropout", arch.dropout));

  f.push_back(Real("schedule.lr_max", train.schedule.lr_max));
  f.push_back(Real("schedule.lr_min", train.schedule.lr_min));
  f.push_back(Int("schedule.first_cycle_epochs", train.first_cycle_epochs));
  f.push_back(Real("schedule.cycle_mult", train.schedule.cycle_mult));
  f.push_back(Real("schedule.momentum", train.schedule.momentum));

  f.push_back(Int("train.epochs", train.epochs));
  f.push_back(Int("train.batch_size", train.batch_size));
  f.push_back(Bool("train.mixup", train.mixup));
  f.push_back(Bool("train.spec_augment", train.spec_augment));
  f.push_back(Bool("train.random_crop", train.random_crop));
  f.push_back(Bool("train.channel_confusion", train.channel_confusion));
  f.push_back(Str("train.label_level", label_level));

  f.push_back({"paths.hierarchy",
               [this](const std::string& v) { hierarchy = v; },
               [this] { return hierarchy.string(); }});
  return f;
}

RunConfig RunConfig::Parse(const std::string& text,
                           const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    ThrowConfig(std::string("config syntax error: ") + e.message() + " (line " +
                std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  std::vector<Field> fields = cfg.Fields();
  for (const auto& [section, body] : tree) {
    if (body.empty())
      ThrowConfig("config key '" + section + "' must live inside a [section]");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      auto it = std::find_if(fields.begin(), fields.end(),
                             [&](const Field& f) { return f.key == full; });
      if (it == fields.end()) ThrowConfig("unknown config key '" + full + "'");
      it->set(node.get_value<std::string>());
    }
  }
  if (!cfg.hierarchy.empty() && cfg.hierarchy.is_relative() && !base_dir.empty())
    cfg.hierarchy = base_dir / cfg.hierarchy;
  cfg.Validate();
  return cfg;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ThrowConfig("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path.parent_path());
}

std::string RunConfig::Canonical() const {
  RunConfig copy = *this;
  std::vector<std::string> lines;
  for (const Field& f : copy.Fields()) lines.push_back(f.key + " = " + f.get());
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::uint64_t RunConfig::Hash() const { return Fnv1a(Canonical()); }

void RunConfig::Validate() const {
  if (workers < 1) ThrowConfig("run.workers must be >= 1");
  spectro.Validate();
  aug.Validate();
  if (arch.width_mult < 0.0) ThrowConfig("arch.width must be positive");
  if (label_level != "scene" && label_level != "superclass")
    ThrowConfig("train.label_level must be 'scene' or 'superclass'");
  if (train.epochs < 1) ThrowConfig("train.epochs must be >= 1");
  if (train.batch_size < 2) ThrowConfig("train.batch_size must be >= 2");
  if (train.first_cycle_epochs < 1)
    ThrowConfig("schedule.first_cycle_epochs must be >= 1");
  static const char* kMethods[] = {"pitch", "speed", "noise", "reverb", "mix",
                                   "spectrum"};
  for (const auto& m : waveform_methods)
    if (std::find(std::begin(kMethods), std::end(kMethods), m) == std::end(kMethods))
      ThrowConfig("unknown waveform augmentation method '" + m +
                  "' (valid: pitch, speed, noise, reverb, mix, spectrum)");
}

}  // namespace ascene::cli
