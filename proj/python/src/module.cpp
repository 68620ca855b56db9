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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ascene/error.hpp"
#include "ascene/eval/eval.hpp"
#include "ascene/features/audio.hpp"
#include "ascene/features/spectro.hpp"
#include "ascene/fusion/fusion.hpp"
#include "ascene/nn/checkpoint.hpp"
#include "ascene/nn/optim.hpp"
#include "ascene/nn/trainer.hpp"
#include "ascene/quant/quant.hpp"
#include "ascene/version.hpp"
#include "ascene/zoo/zoo.hpp"

namespace py = pybind11;
using namespace ascene;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (n,) or (channels, n) samples.
features::AudioClip ClipFromArray(const FloatArray& samples, int sample_rate) {
  features::AudioClip clip;
  clip.sample_rate = sample_rate;
  if (samples.ndim() == 1) {
    clip.channels.emplace_back(samples.data(), samples.data() + samples.shape(0));
  } else if (samples.ndim() == 2) {
    for (py::ssize_t c = 0; c < samples.shape(0); ++c) {
      const float* row = samples.data() + c * samples.shape(1);
      clip.channels.emplace_back(row, row + samples.shape(1));
    }
  } else {
    ThrowShape("samples must be 1-D or (channels, samples)");
  }
  clip.Validate();
  return clip;
}

FloatArray ClipToArray(const features::AudioClip& clip) {
  FloatArray out({static_cast<py::ssize_t>(clip.num_channels()),
                  static_cast<py::ssize_t>(clip.num_samples())});
  float* dst = out.mutable_data();
  for (const auto& ch : clip.channels) dst = std::copy(ch.begin(), ch.end(), dst);
  return out;
}

FloatArray TensorToArray(const features::FeatureTensor& t) {
  FloatArray out({t.frames, t.bins, t.channels});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

features::FeatureTensor ArrayToTensor(const FloatArray& a) {
  if (a.ndim() != 3) ThrowShape("feature tensors are (frames, bins, channels)");
  features::FeatureTensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                            static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), t.data.begin());
  return t;
}

ScoreMatrix ArrayToScores(const DoubleArray& a) {
  if (a.ndim() != 2) ThrowShape("score arrays are (items, classes)");
  ScoreMatrix s(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), s.data.begin());
  return s;
}

DoubleArray ScoresToArray(const ScoreMatrix& s) {
  DoubleArray out({s.rows, s.cols});
  std::copy(s.data.begin(), s.data.end(), out.mutable_data());
  return out;
}

fusion::ClassHierarchy HierarchyOrDefault(const std::optional<std::string>& text) {
  return text ? fusion::ClassHierarchy::Parse(*text) : fusion::ClassHierarchy::Default();
}

}  // namespace

PYBIND11_MODULE(_ascene, m) {
  m.doc() = "Acoustic scene classification toolkit";
  m.attr("__version__") = std::string(kVersion);

  static py::exception<Error> base(m, "AsceneError", PyExc_RuntimeError);
  static py::exception<Error> config_error(m, "ConfigError", base.ptr());
  static py::exception<Error> data_error(m, "DataError", base.ptr());
  static py::exception<Error> numeric_error(m, "NumericError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::kConfig: config_error(e.what()); return;
        case ErrorKind::kData: data_error(e.what()); return;
        case ErrorKind::kNumeric: numeric_error(e.what()); return;
      }
      base(e.what());
    }
  });

  m.def(
      "extract_features",
      [](const FloatArray& samples, int sample_rate, bool downmix, int n_mels, int n_fft,
         int hop) {
        features::SpectroConfig cfg;
        cfg.n_mels = n_mels;
        cfg.n_fft = cfg.win_length = n_fft;
        cfg.hop = hop;
        const auto clip = ClipFromArray(samples, sample_rate);
        py::gil_scoped_release release;
        auto t = features::ExtractFeatures(clip, cfg, downmix);
        py::gil_scoped_acquire acquire;
        return TensorToArray(t);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("downmix") = true,
      py::arg("n_mels") = 128, py::arg("n_fft") = 2048, py::arg("hop") = 1024,
      "Log-mel statics, deltas and delta-deltas as a (frames, bins, channels) array.");

  m.def("num_frames", &features::NumFrames, py::arg("num_samples"), py::arg("hop") = 1024);

  m.def(
      "load_wav",
      [](const std::filesystem::path& path) {
        const auto clip = features::LoadWav(path);
        return py::make_tuple(ClipToArray(clip), clip.sample_rate);
      },
      py::arg("path"), "Returns (samples[channels, n], sample_rate).");
  m.def(
      "save_wav",
      [](const std::filesystem::path& path, const FloatArray& samples, int sample_rate,
         bool float32) {
        features::SaveWav(path, ClipFromArray(samples, sample_rate),
                          float32 ? features::WavEncoding::kFloat32
                                  : features::WavEncoding::kPcm16);
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate"),
      py::arg("float32") = false);

  m.def(
      "two_stage_fuse",
      [](const DoubleArray& f1, const DoubleArray& f2,
         const std::optional<std::string>& hierarchy) {
        return ScoresToArray(fusion::TwoStageFuse(ArrayToScores(f1), ArrayToScores(f2),
                                                  HierarchyOrDefault(hierarchy)));
      },
      py::arg("f1"), py::arg("f2"), py::arg("hierarchy") = py::none(),
      "Superclass scores times class scores, per row. `hierarchy` is the text of "
      "a class-to-superclass table; the built-in table is used when omitted.");
  m.def(
      "average_ensemble",
      [](const std::vector<DoubleArray>& members) {
        std::vector<ScoreMatrix> s;
        for (const auto& a : members) s.push_back(ArrayToScores(a));
        return ScoresToArray(fusion::AverageEnsemble(s));
      },
      py::arg("members"));
  m.def("class_hierarchy", [] {
    const auto h = fusion::ClassHierarchy::Default();
    return py::make_tuple(h.classes, h.superclasses, h.parent);
  });

  m.def(
      "cosine_restart_lr",
      [](long step, double lr_max, double lr_min, long first_cycle_len, double cycle_mult) {
        nn::ScheduleConfig c;
        c.lr_max = lr_max;
        c.lr_min = lr_min;
        c.first_cycle_len = first_cycle_len;
        c.cycle_mult = cycle_mult;
        c.Validate();
        return nn::CosineRestartLr(step, c);
      },
      py::arg("step"), py::arg("lr_max") = 0.1, py::arg("lr_min") = 1e-5,
      py::arg("first_cycle_len"), py::arg("cycle_mult") = 2.0);

  m.def(
      "quantize_tensor",
      [](const FloatArray& w) {
        const auto q = quant::QuantizeTensor(std::span<const float>(w.data(), w.size()));
        py::array_t<std::int8_t> values(
            std::vector<py::ssize_t>{static_cast<py::ssize_t>(q.values.size())},
            q.values.data());
        return py::make_tuple(values, q.scale);
      },
      py::arg("weights"), "Symmetric per-tensor int8: returns (values, scale).");

  m.def("arch_names", &zoo::ArchNames);
  m.def(
      "build_graph",
      [](const std::string& arch, int frames, int bins, int channels, int n_classes,
         double width) {
        zoo::ArchConfig c;
        c.arch = zoo::ArchFromName(arch);
        c.frames = frames;
        c.bins = bins;
        c.channels = channels;
        c.n_classes = n_classes;
        c.width_mult = width;
        return nn::SerializeGraph(zoo::Build(c));
      },
      py::arg("arch"), py::arg("frames") = 423, py::arg("bins") = 128,
      py::arg("channels") = 3, py::arg("n_classes") = 10, py::arg("width") = 0.0,
      "Graph text of a zoo architecture.");

  py::class_<nn::Network<float>>(m, "Model")
      .def_static("load", &nn::LoadCheckpoint, py::arg("path"))
      .def_static(
          "build",
          [](const std::string& graph_text, std::uint64_t seed) {
            return nn::Network<float>::Build(nn::ParseGraph(graph_text), seed);
          },
          py::arg("graph"), py::arg("seed") = 0)
      .def("save", [](const nn::Network<float>& n,
                      const std::filesystem::path& p) { nn::SaveCheckpoint(p, n); })
      .def_property_readonly("num_params", &nn::Network<float>::NumParams)
      .def_property_readonly("graph",
                             [](const nn::Network<float>& n) {
                               return nn::SerializeGraph(n.graph());
                             })
      .def(
          "predict",
          [](nn::Network<float>& n, const std::vector<FloatArray>& items) {
            std::vector<features::FeatureTensor> t;
            for (const auto& a : items) t.push_back(ArrayToTensor(a));
            py::gil_scoped_release release;
            ScoreMatrix s = nn::Predict(n, t);
            py::gil_scoped_acquire acquire;
            return ScoresToArray(s);
          },
          py::arg("items"), "Class probabilities, one row per (frames, bins, channels) item.");

  m.def(
      "evaluate",
      [](const DoubleArray& scores, const std::string& manifest_text,
         const std::vector<std::string>& classes) {
        return eval::Evaluate(ArrayToScores(scores), eval::Manifest::Parse(manifest_text),
                              classes)
            .ToJson();
      },
      py::arg("scores"), py::arg("manifest"), py::arg("classes"),
      "Accuracy report as JSON text.");
}
