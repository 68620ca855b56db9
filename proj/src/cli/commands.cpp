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

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fftw3.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "ascene/augment/waveform_aug.hpp"
#include "ascene/cli/cli.hpp"
#include "ascene/cli/config.hpp"
#include "ascene/error.hpp"
#include "ascene/eval/eval.hpp"
#include "ascene/features/audio.hpp"
#include "ascene/features/spectro.hpp"
#include "ascene/fusion/fusion.hpp"
#include "ascene/nn/checkpoint.hpp"
#include "ascene/nn/trainer.hpp"
#include "ascene/quant/quant.hpp"
#include "ascene/util/parallel.hpp"
#include "ascene/version.hpp"
#include "json.hpp"

namespace ascene::cli {
namespace {

namespace fs = std::filesystem;
using eval::Manifest;
using eval::ManifestRow;
using features::FeatureTensor;

struct CommonOpts {
  std::string config;
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string arch;
  std::optional<double> width;
};

void AddCommon(CLI::App* app, CommonOpts& o, bool needs_manifest) {
  app->add_option("--config", o.config, "INI run configuration")
      ->check(CLI::ExistingFile);
  auto* m = app->add_option("--manifest", o.manifest, "tab-separated manifest")
                ->check(CLI::ExistingFile);
  if (needs_manifest) m->required();
  app->add_option("--out", o.out, "output path")->required();
  app->add_option("--seed", o.seed, "overrides run.seed");
  app->add_option("--workers", o.workers, "overrides run.workers")
      ->check(CLI::PositiveNumber);
  app->add_option("--arch", o.arch, "overrides arch.name");
  app->add_option("--width", o.width, "overrides arch.width")
      ->check(CLI::PositiveNumber);
}

RunConfig ResolveConfig(const CommonOpts& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::Load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.arch.empty()) cfg.arch.arch = zoo::ArchFromName(o.arch);
  if (o.width) cfg.arch.width_mult = *o.width;
  cfg.Validate();
  return cfg;
}

void PrintRepro(const std::string& command, const RunConfig& cfg) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << cfg.Hash();
  std::cout << "# ascene " << kVersion << " | command " << command
            << " | seed " << cfg.seed << " | config fnv1a64:" << hash.str()
            << " | workers " << cfg.workers << " | " << fftw_version
            << " | eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION
            << '.' << EIGEN_MINOR_VERSION << '\n';
}

fusion::ClassHierarchy Hierarchy(const RunConfig& cfg) {
  return cfg.hierarchy.empty() ? fusion::ClassHierarchy::Default()
                               : fusion::ClassHierarchy::Load(cfg.hierarchy);
}

// Rows tagged "train"; every row when the manifest has no split tags.
std::vector<int> TrainRows(const Manifest& m) {
  std::vector<int> rows;
  bool tagged = false;
  for (int i = 0; i < static_cast<int>(m.size()); ++i) {
    tagged |= !m.rows[i].split.empty();
    if (m.rows[i].split == "train") rows.push_back(i);
  }
  if (!tagged) {
    rows.resize(m.size());
    for (int i = 0; i < static_cast<int>(m.size()); ++i) rows[i] = i;
  }
  return rows;
}

std::vector<int> RowsWithSplit(const Manifest& m, const std::string& split) {
  std::vector<int> rows;
  for (int i = 0; i < static_cast<int>(m.size()); ++i)
    if (split.empty() || m.rows[i].split == split) rows.push_back(i);
  if (rows.empty()) ThrowData("no manifest rows with split '" + split + "'");
  return rows;
}

fs::path FeaturePath(const fs::path& dir, const std::string& filename) {
  return dir / fs::path(filename).replace_extension(".ascf");
}

void ThrowCollected(const std::vector<std::string>& errors,
                    const std::vector<std::string>& names, const char* what) {
  int failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) {
      std::cerr << "error: " << names[i] << ": " << errors[i] << '\n';
      ++failed;
    }
  if (failed)
    ThrowData(std::to_string(failed) + " of " + std::to_string(errors.size()) +
              " " + what + " failed");
}

int LabelIndex(const fusion::ClassHierarchy& h, const std::string& label,
               bool superclass) {
  const int k = h.ClassIndex(label);
  if (k < 0) ThrowData("scene label '" + label + "' is not in the class hierarchy");
  return superclass ? h.parent[k] : k;
}

std::vector<FeatureTensor> LoadFeatures(const Manifest& m,
                                        const std::vector<int>& rows,
                                        const fs::path& dir,
                                        const features::ScaleStats& stats,
                                        int workers) {
  std::vector<FeatureTensor> items(rows.size());
  std::vector<std::string> names;
  for (int r : rows) names.push_back(m.rows[r].filename);
  const auto errors = ParallelFor(static_cast<int>(rows.size()), workers, [&](int i) {
    items[i] = features::ReadFeatureFile(FeaturePath(dir, m.rows[rows[i]].filename));
    features::ApplyScale01InPlace(items[i], stats);
  });
  ThrowCollected(errors, names, "feature files");
  return items;
}

// ---- extract ---------------------------------------------------------------

int CmdExtract(const CommonOpts& o) {
  const RunConfig cfg = ResolveConfig(o);
  PrintRepro("extract", cfg);
  const Manifest m = Manifest::Load(o.manifest);
  const fs::path out = o.out;
  fs::create_directories(out);
  const int n = static_cast<int>(m.size());
  std::vector<features::ScaleAccumulator> acc(n);
  std::vector<std::string> names;
  for (const auto& r : m.rows) names.push_back(r.filename);
  const auto errors = ParallelFor(n, cfg.workers, [&](int i) {
    const features::AudioClip clip = features::LoadWav(m.AudioPath(m.rows[i]));
    const FeatureTensor t = features::ExtractFeatures(clip, cfg.spectro, !cfg.stereo);
    const fs::path dst = FeaturePath(out, m.rows[i].filename);
    fs::create_directories(dst.parent_path());
    features::WriteFeatureFile(dst, t);
    acc[i].Add(t);
  });
  ThrowCollected(errors, names, "audio files");
  features::ScaleAccumulator train;
  for (int r : TrainRows(m)) train.Merge(acc[r]);
  if (train.empty()) ThrowData("no training rows to fit scale statistics");
  const features::ScaleStats stats = train.Finish();
  features::SaveScaleStats(out / "scale_stats.txt", stats);
  std::cout << "extracted " << n << " feature files into " << out.string()
            << "\nscale statistics fitted on " << TrainRows(m).size()
            << " training rows: " << (out / "scale_stats.txt").string() << '\n';
  return kExitOk;
}

// ---- augment ---------------------------------------------------------------

int CmdAugment(const CommonOpts& o) {
  const RunConfig cfg = ResolveConfig(o);
  PrintRepro("augment", cfg);
  const Manifest m = Manifest::Load(o.manifest);
  const fs::path out = o.out;
  fs::create_directories(out);
  const std::vector<int> rows = TrainRows(m);
  const int n = static_cast<int>(rows.size());

  std::vector<features::AudioClip> clips(n);
  std::vector<std::string> names;
  for (int r : rows) names.push_back(m.rows[r].filename);
  ThrowCollected(ParallelFor(n, cfg.workers, [&](int i) {
                   clips[i] = features::LoadWav(m.AudioPath(m.rows[rows[i]]));
                 }),
                 names, "audio files");

  const auto uses = [&](const char* method) {
    return std::find(cfg.waveform_methods.begin(), cfg.waveform_methods.end(),
                     method) != cfg.waveform_methods.end();
  };
  std::vector<double> spectrum_coeffs;
  if (uses("spectrum")) {
    std::vector<std::pair<std::string, const features::AudioClip*>> corpus;
    for (int i = 0; i < n; ++i) corpus.emplace_back(m.rows[rows[i]].device, &clips[i]);
    const auto profiles = augment::FitSpectrumProfiles(corpus, cfg.spectro);
    if (!profiles.count("a"))
      ThrowData("spectrum correction needs device 'a' recordings in the training rows");
    spectrum_coeffs = augment::CorrectionCoefficients(
        augment::ReferenceSpectrum(profiles, "a"), profiles.at("a").mean_magnitude);
  }

  struct Job {
    int item;
    std::string method;
  };
  std::vector<Job> jobs;
  for (const auto& method : cfg.waveform_methods)
    for (int i = 0; i < n; ++i) {
      if (method == "spectrum" && m.rows[rows[i]].device != "a") continue;
      jobs.push_back({i, method});
    }
  std::vector<std::string> out_names(jobs.size());
  std::vector<bool> produced(jobs.size(), false);
  std::vector<std::string> job_names;
  for (const auto& j : jobs) job_names.push_back(names[j.item] + " [" + j.method + "]");

  const auto errors = ParallelFor(static_cast<int>(jobs.size()), cfg.workers, [&](int k) {
    const Job& job = jobs[k];
    const ManifestRow& row = m.rows[rows[job.item]];
    Rng rng = DeriveRng(cfg.seed, row.filename + "#" + job.method);
    const features::AudioClip& clip = clips[job.item];
    features::AudioClip result;
    if (job.method == "pitch") {
      result = augment::PitchShift(clip, cfg.aug, rng);
    } else if (job.method == "speed") {
      result = augment::SpeedChange(clip, cfg.aug, rng);
    } else if (job.method == "noise") {
      result = augment::AddNoise(clip, cfg.aug.noise_std, rng);
    } else if (job.method == "reverb") {
      result = augment::ReverbDrc(clip, cfg.aug, augment::CompressorParams{}, rng);
    } else if (job.method == "spectrum") {
      result = augment::SpectrumCorrect(clip, spectrum_coeffs, cfg.spectro);
    } else if (job.method == "mix") {
      std::vector<int> partners;
      for (int j = 0; j < n; ++j)
        if (j != job.item && m.rows[rows[j]].scene_label == row.scene_label)
          partners.push_back(j);
      if (partners.empty()) return;  // nothing of the same class to mix with
      const int p = partners[UniformInt(rng, 0, static_cast<long>(partners.size()) - 1)];
      result = augment::MixSameClass(clip, clips[p], cfg.aug, rng);
    }
    const fs::path stem = fs::path(row.filename).replace_extension("");
    const std::string rel = stem.string() + "_" + job.method + ".wav";
    fs::create_directories((out / rel).parent_path());
    features::SaveWav(out / rel, result, features::WavEncoding::kFloat32);
    out_names[k] = rel;
    produced[k] = true;
  });
  ThrowCollected(errors, job_names, "augmentations");

  std::ofstream manifest(out / "manifest.tsv");
  manifest << "filename\tscene_label\tsource_label\tsplit\n";
  int count = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!produced[k]) continue;
    const ManifestRow& row = m.rows[rows[jobs[k].item]];
    manifest << out_names[k] << '\t' << row.scene_label << '\t' << row.device
             << "\ttrain\n";
    ++count;
  }
  if (!manifest) ThrowData("failed writing " + (out / "manifest.tsv").string());
  std::cout << "wrote " << count << " augmented clips and "
            << (out / "manifest.tsv").string() << '\n';
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainOpts {
  std::string features;
  std::string stats;
};

int CmdTrain(const CommonOpts& o, const TrainOpts& t) {
  RunConfig cfg = ResolveConfig(o);
  PrintRepro("train", cfg);
  const Manifest m = Manifest::Load(o.manifest);
  const fusion::ClassHierarchy h = Hierarchy(cfg);
  const bool superclass = cfg.label_level == "superclass";
  const fs::path feat_dir = t.features;
  const fs::path stats_path =
      t.stats.empty() ? feat_dir / "scale_stats.txt" : fs::path(t.stats);
  const features::ScaleStats stats = features::LoadScaleStats(stats_path);

  const std::vector<int> rows = TrainRows(m);
  nn::Dataset data;
  data.items = LoadFeatures(m, rows, feat_dir, stats, cfg.workers);
  for (int r : rows) data.labels.push_back(LabelIndex(h, m.rows[r].scene_label, superclass));
  data.num_classes = superclass ? h.num_superclasses() : h.num_classes();

  zoo::ArchConfig arch = cfg.arch;
  arch.n_classes = data.num_classes;
  arch.frames = cfg.train.random_crop
                    ? std::min(cfg.aug.crop_len, data.items[0].frames)
                    : data.items[0].frames;
  arch.bins = data.items[0].bins;
  arch.channels = data.items[0].channels;
  nn::Network<float> net = nn::Network<float>::Build(zoo::Build(arch), Mix64(cfg.seed));

  nn::TrainConfig tc = cfg.train;
  tc.aug = cfg.aug;
  tc.seed = cfg.seed;
  tc.on_epoch = [](int epoch, double loss) {
    std::cout << "epoch " << epoch + 1 << " loss " << std::setprecision(6)
              << loss << '\n';
  };
  std::cout << "training " << zoo::ArchName(arch.arch) << " ("
            << net.NumTrainableParams() << " trainable parameters) on "
            << data.size() << " items, " << data.num_classes << " classes\n";
  const nn::TrainResult res = nn::Train(net, data, tc);

  const fs::path out = o.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  nn::SaveCheckpoint(out, net);
  std::vector<std::string> snapshot_files;
  for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
    fs::path snap = out;
    snap.replace_extension(".snap" + std::to_string(k) + ".ascm");
    nn::SaveCheckpoint(snap, res.snapshots[k]);
    snapshot_files.push_back(snap.string());
  }
  fs::path log = out;
  log.replace_extension(".log.tsv");
  std::ofstream lf(log);
  lf << "epoch\tloss\n" << std::setprecision(9);
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
    lf << e + 1 << '\t' << res.epoch_loss[e] << '\n';
  std::cout << "saved " << out.string() << " and " << snapshot_files.size()
            << " snapshot(s)\n";
  for (const auto& s : snapshot_files) std::cout << "  " << s << '\n';
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvalOpts {
  std::vector<std::string> models;
  std::string features;
  std::string stats;
  std::string split;
  bool weight_only = false;
};

ScoreMatrix PredictWith(const std::string& model_path,
                        std::span<const FeatureTensor> items, bool weight_only) {
  if (fs::path(model_path).extension() == ".ascq") {
    const quant::QuantizedModel qm = quant::LoadQuantized(model_path);
    const auto mode = weight_only ? quant::ActivationMode::kWeightOnly
                                  : quant::ActivationMode::kDynamic;
    ScoreMatrix out;
    for (int i = 0; i < static_cast<int>(items.size()); ++i) {
      const auto y = quant::QuantizedForward(qm, nn::ToBatch(items.subspan(i, 1)), mode);
      if (out.rows == 0) out = ScoreMatrix(static_cast<int>(items.size()), y.shape.c);
      for (int k = 0; k < y.shape.c; ++k) out.at(i, k) = y.data[k];
    }
    return out;
  }
  nn::Network<float> net = nn::LoadCheckpoint(model_path);
  return nn::Predict(net, items);
}

int CmdEvaluate(const CommonOpts& o, const EvalOpts& e) {
  const RunConfig cfg = ResolveConfig(o);
  PrintRepro("evaluate", cfg);
  const Manifest full = Manifest::Load(o.manifest);
  const fusion::ClassHierarchy h = Hierarchy(cfg);
  const fs::path feat_dir = e.features;
  const features::ScaleStats stats = features::LoadScaleStats(
      e.stats.empty() ? feat_dir / "scale_stats.txt" : fs::path(e.stats));
  const std::vector<int> rows = RowsWithSplit(full, e.split);
  Manifest m;
  m.base_dir = full.base_dir;
  for (int r : rows) m.rows.push_back(full.rows[r]);
  std::vector<int> all(m.size());
  for (int i = 0; i < static_cast<int>(m.size()); ++i) all[i] = i;
  const std::vector<FeatureTensor> items = LoadFeatures(m, all, feat_dir, stats, cfg.workers);

  std::vector<ScoreMatrix> members;
  for (const auto& path : e.models) members.push_back(PredictWith(path, items, e.weight_only));
  const ScoreMatrix scores = nn::SnapshotAverage(members);

  std::vector<std::string> classes;
  Manifest labelled = m;
  if (scores.cols == h.num_classes()) {
    classes = h.classes;
  } else if (scores.cols == h.num_superclasses()) {
    classes = h.superclasses;
    for (auto& row : labelled.rows)
      row.scene_label = h.superclasses[LabelIndex(h, row.scene_label, true)];
  } else {
    ThrowShape("model outputs " + std::to_string(scores.cols) +
               " classes; hierarchy has " + std::to_string(h.num_classes()) +
               " classes and " + std::to_string(h.num_superclasses()) +
               " superclasses");
  }
  const eval::EvalReport report = eval::Evaluate(scores, labelled, classes);

  eval::ScoreFile sf;
  for (const auto& row : m.rows) sf.filenames.push_back(row.filename);
  sf.classes = classes;
  sf.scores = scores;
  const std::string prefix = o.out;
  if (fs::path(prefix).has_parent_path())
    fs::create_directories(fs::path(prefix).parent_path());
  sf.Save(prefix + ".scores.tsv");
  std::ofstream(prefix + ".report.txt") << report.ToText();
  std::ofstream(prefix + ".report.json") << report.ToJson();
  std::cout << report.ToText() << "wrote " << prefix
            << ".{scores.tsv,report.txt,report.json}\n";
  return kExitOk;
}

// ---- fuse ------------------------------------------------------------------

struct FuseOpts {
  std::string scores3;
  std::string scores10;
};

int CmdFuse(const CommonOpts& o, const FuseOpts& f) {
  const RunConfig cfg = ResolveConfig(o);
  PrintRepro("fuse", cfg);
  const fusion::ClassHierarchy h = Hierarchy(cfg);
  const eval::ScoreFile s10 = eval::ScoreFile::Load(f.scores10);
  const eval::ScoreFile s3 = eval::ScoreFile::Load(f.scores3).Aligned(s10.filenames);
  if (s10.classes != h.classes)
    ThrowData(f.scores10 + ": class columns do not match the hierarchy classes");
  if (s3.classes != h.superclasses)
    ThrowData(f.scores3 + ": class columns do not match the hierarchy superclasses");
  eval::ScoreFile out;
  out.filenames = s10.filenames;
  out.classes = h.classes;
  out.scores = fusion::TwoStageFuse(s3.scores, s10.scores, h);
  out.Save(o.out);
  std::cout << "fused " << out.scores.rows << " items into " << o.out << '\n';
  return kExitOk;
}

// ---- ensemble --------------------------------------------------------------

struct EnsembleOpts {
  std::vector<std::string> scores;
  std::string method = "average";
};

int CmdEnsemble(const CommonOpts& o, const EnsembleOpts& e) {
  const RunConfig cfg = ResolveConfig(o);
  PrintRepro("ensemble", cfg);
  std::vector<eval::ScoreFile> files;
  for (const auto& p : e.scores) {
    eval::ScoreFile f = eval::ScoreFile::Load(p);
    if (!files.empty()) {
      f = f.Aligned(files[0].filenames);
      if (f.classes != files[0].classes)
        ThrowData(p + ": class columns differ from " + e.scores[0]);
    }
    files.push_back(std::move(f));
  }
  std::vector<ScoreMatrix> members;
  for (const auto& f : files) members.push_back(f.scores);

  eval::ScoreFile out;
  out.filenames = files[0].filenames;
  out.classes = files[0].classes;
  if (e.method == "average") {
    out.scores = fusion::AverageEnsemble(members);
  } else {
    if (o.manifest.empty())
      ThrowConfig("logistic ensembling needs --manifest with labels to fit on");
    const Manifest m = Manifest::Load(o.manifest);
    std::map<std::string, std::string> label_of;
    for (const auto& r : m.rows) label_of[r.filename] = r.scene_label;
    const ScoreMatrix x = fusion::ConcatScores(members);
    std::vector<std::string> fit_names;
    for (const auto& r : m.rows)
      if (r.split.empty() || r.split == "train") fit_names.push_back(r.filename);
    std::map<std::string, int> row_of;
    for (int i = 0; i < static_cast<int>(out.filenames.size()); ++i)
      row_of[out.filenames[i]] = i;
    ScoreMatrix fit_x(0, x.cols);
    std::vector<int> fit_y;
    for (const auto& name : fit_names) {
      auto it = row_of.find(name);
      if (it == row_of.end()) continue;
      const auto cls = std::find(out.classes.begin(), out.classes.end(), label_of[name]);
      if (cls == out.classes.end())
        ThrowData("label '" + label_of[name] + "' is not a score column");
      fit_x.data.insert(fit_x.data.end(), x.row(it->second).begin(), x.row(it->second).end());
      ++fit_x.rows;
      fit_y.push_back(static_cast<int>(cls - out.classes.begin()));
    }
    const auto model = fusion::LogisticEnsemble::Fit(
        fit_x, fit_y, static_cast<int>(out.classes.size()));
    out.scores = model.Apply(x);
    fs::path weights = o.out;
    weights.replace_extension(".logistic.txt");
    model.Save(weights);
    std::cout << "logistic ensemble fitted on " << fit_x.rows << " items in "
              << model.iterations << " iterations (gradient norm "
              << model.final_grad_norm << "), weights in " << weights.string()
              << '\n';
  }
  out.Save(o.out);
  std::cout << e.method << " ensemble of " << files.size() << " members over "
            << out.scores.rows << " items written to " << o.out << '\n';
  return kExitOk;
}

// ---- quantize --------------------------------------------------------------

int CmdQuantize(const CommonOpts& o, const std::string& model) {
  const RunConfig cfg = ResolveConfig(o);
  PrintRepro("quantize", cfg);
  const nn::Network<float> net = nn::LoadCheckpoint(model);
  const quant::QuantizedModel qm = quant::QuantizeModel(net);
  quant::SaveQuantized(o.out, qm);
  std::cout << quant::MeasureSizes(net, qm).ToText();
  return kExitOk;
}

// ---- report ----------------------------------------------------------------

struct ReportOpts {
  std::string scores;
  std::string compare;
};

int CmdReport(const CommonOpts& o, const ReportOpts& r) {
  const RunConfig cfg = ResolveConfig(o);
  PrintRepro("report", cfg);
  const Manifest full = Manifest::Load(o.manifest);
  std::vector<std::string> names;
  for (const auto& row : full.rows) names.push_back(row.filename);
  const eval::ScoreFile sf = eval::ScoreFile::Load(r.scores).Aligned(names);
  const fusion::ClassHierarchy h = Hierarchy(cfg);
  Manifest labelled = full;
  if (sf.classes == h.superclasses)
    for (auto& row : labelled.rows)
      row.scene_label = h.superclasses[LabelIndex(h, row.scene_label, true)];
  const eval::EvalReport report = eval::Evaluate(sf.scores, labelled, sf.classes);
  std::cout << report.ToText();
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(report.ToJson());
  if (!r.compare.empty()) {
    const eval::ScoreFile other = eval::ScoreFile::Load(r.compare).Aligned(names);
    const double overlap = eval::PredictionOverlap(ArgmaxRows(sf.scores),
                                                   ArgmaxRows(other.scores));
    std::cout << "prediction overlap with " << r.compare << ": " << std::fixed
              << std::setprecision(2) << overlap << " %\n";
    j["prediction_overlap"] = overlap;
  }
  std::ofstream(o.out) << j.dump(2) << '\n';
  return kExitOk;
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return kExitConfig;
    case ErrorKind::kData: return kExitData;
    case ErrorKind::kNumeric: return kExitNumeric;
  }
  return kExitInternal;
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"ascene: acoustic scene classification toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOpts common;
  TrainOpts train_opts;
  EvalOpts eval_opts;
  FuseOpts fuse_opts;
  EnsembleOpts ens_opts;
  ReportOpts report_opts;
  std::string quant_model;

  auto* extract = app.add_subcommand("extract", "audio -> feature files + scale statistics");
  AddCommon(extract, common, true);
  auto* augment = app.add_subcommand("augment", "generate an augmented waveform corpus");
  AddCommon(augment, common, true);
  auto* train = app.add_subcommand("train", "train a model on extracted features");
  AddCommon(train, common, true);
  train->add_option("--features", train_opts.features, "feature directory")->required();
  train->add_option("--stats", train_opts.stats, "scale statistics file");
  auto* evaluate = app.add_subcommand("evaluate", "score and evaluate models");
  AddCommon(evaluate, common, true);
  evaluate->add_option("--model", eval_opts.models, "checkpoint(s); several are averaged")
      ->required();
  evaluate->add_option("--features", eval_opts.features, "feature directory")->required();
  evaluate->add_option("--stats", eval_opts.stats, "scale statistics file");
  evaluate->add_option("--split", eval_opts.split, "only rows with this split tag");
  evaluate->add_flag("--weight-only", eval_opts.weight_only,
                     "float activations for quantized models");
  auto* fuse = app.add_subcommand("fuse", "two-stage fusion of 3-class and 10-class scores");
  AddCommon(fuse, common, false);
  fuse->add_option("--scores3", fuse_opts.scores3)->required()->check(CLI::ExistingFile);
  fuse->add_option("--scores10", fuse_opts.scores10)->required()->check(CLI::ExistingFile);
  auto* ensemble = app.add_subcommand("ensemble", "combine score files");
  AddCommon(ensemble, common, false);
  ensemble->add_option("--scores", ens_opts.scores)->required()->check(CLI::ExistingFile);
  ensemble->add_option("--method", ens_opts.method)
      ->check(CLI::IsMember({"average", "logistic"}));
  auto* quantize = app.add_subcommand("quantize", "int8 post-training quantization");
  AddCommon(quantize, common, false);
  quantize->add_option("--model", quant_model)->required()->check(CLI::ExistingFile);
  auto* report = app.add_subcommand("report", "evaluate a score file");
  AddCommon(report, common, true);
  report->add_option("--scores", report_opts.scores)->required()->check(CLI::ExistingFile);
  report->add_option("--compare", report_opts.compare, "second score file for overlap")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "extract") return CmdExtract(common);
    if (name == "augment") return CmdAugment(common);
    if (name == "train") return CmdTrain(common, train_opts);
    if (name == "evaluate") return CmdEvaluate(common, eval_opts);
    if (name == "fuse") return CmdFuse(common, fuse_opts);
    if (name == "ensemble") return CmdEnsemble(common, ens_opts);
    if (name == "quantize") return CmdQuantize(common, quant_model);
    if (name == "report") return CmdReport(common, report_opts);
  } catch (const Error& e) {
    std::cerr << "ascene " << name << ": " << e.what() << '\n';
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ascene " << name << ": internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace ascene::cli
