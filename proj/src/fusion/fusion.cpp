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

#include "ascene/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ascene/error.hpp"

namespace ascene::fusion {
namespace {

void CheckScores(std::span<const double> v, const char* what) {
  for (double s : v) {
    if (!std::isfinite(s)) ThrowNumeric(std::string(what) + " has a non-finite score");
    if (s < 0.0) ThrowData(std::string(what) + " has a negative score");
  }
}

void SoftmaxInPlace(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - m));
  for (double& v : z) v /= sum;
}

}  // namespace

ClassHierarchy ClassHierarchy::Default() {
  ClassHierarchy h;
  h.superclasses = {"indoor", "outdoor", "transportation"};
  const std::pair<const char*, int> table[] = {
      {"airport", 0},       {"bus", 2},           {"metro", 2},
      {"metro_station", 0}, {"park", 1},          {"public_square", 1},
      {"shopping_mall", 0}, {"street_pedestrian", 1}, {"street_traffic", 1},
      {"tram", 2},
  };
  for (const auto& [name, p] : table) {
    h.classes.emplace_back(name);
    h.parent.push_back(p);
  }
  return h;
}

ClassHierarchy ClassHierarchy::Parse(const std::string& text) {
  ClassHierarchy h;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string cls, parent, extra;
    if (!(fields >> cls)) continue;
    if (!(fields >> parent) || (fields >> extra))
      ThrowConfig("hierarchy line " + std::to_string(lineno) +
                  ": expected 'class parent'");
    if (h.ClassIndex(cls) >= 0)
      ThrowConfig("hierarchy lists class '" + cls + "' twice");
    int p = h.SuperclassIndex(parent);
    if (p < 0) {
      p = h.num_superclasses();
      h.superclasses.push_back(parent);
    }
    h.classes.push_back(cls);
    h.parent.push_back(p);
  }
  h.Validate();
  return h;
}

ClassHierarchy ClassHierarchy::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    ThrowData("cannot open hierarchy file " + path.string(),
              ErrorCode::kFileNotFound);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

int ClassHierarchy::ClassIndex(const std::string& name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

int ClassHierarchy::SuperclassIndex(const std::string& name) const {
  auto it = std::find(superclasses.begin(), superclasses.end(), name);
  return it == superclasses.end() ? -1
                                  : static_cast<int>(it - superclasses.begin());
}

void ClassHierarchy::Validate() const {
  if (classes.empty() || superclasses.empty())
    ThrowConfig("hierarchy is empty");
  if (parent.size() != classes.size())
    ThrowConfig("hierarchy parent map does not cover every class");
  std::vector<int> members(superclasses.size(), 0);
  for (int p : parent) {
    if (p < 0 || p >= num_superclasses())
      ThrowConfig("hierarchy parent index out of range");
    ++members[p];
  }
  for (int s = 0; s < num_superclasses(); ++s)
    if (members[s] == 0)
      ThrowConfig("superclass '" + superclasses[s] + "' has no classes");
}

FusedScores TwoStageFuse(std::span<const double> f1, std::span<const double> f2,
                         const ClassHierarchy& h) {
  if (static_cast<int>(f1.size()) != h.num_superclasses())
    ThrowShape("first-stage scores have " + std::to_string(f1.size()) +
               " entries, hierarchy has " +
               std::to_string(h.num_superclasses()) + " superclasses");
  if (static_cast<int>(f2.size()) != h.num_classes())
    ThrowShape("second-stage scores have " + std::to_string(f2.size()) +
               " entries, hierarchy has " + std::to_string(h.num_classes()) +
               " classes");
  CheckScores(f1, "first-stage output");
  CheckScores(f2, "second-stage output");
  FusedScores out;
  out.fused.resize(f2.size());
  for (std::size_t q = 0; q < f2.size(); ++q)
    out.fused[q] = f1[h.parent[q]] * f2[q];
  out.predicted = Argmax(out.fused);
  return out;
}

ScoreMatrix TwoStageFuse(const ScoreMatrix& f1, const ScoreMatrix& f2,
                         const ClassHierarchy& h) {
  if (f1.rows != f2.rows)
    ThrowShape("fusion inputs differ in item count (" + std::to_string(f1.rows) +
               " vs " + std::to_string(f2.rows) + ")");
  ScoreMatrix out(f2.rows, h.num_classes());
  for (int r = 0; r < f2.rows; ++r) {
    const FusedScores fs = TwoStageFuse(f1.row(r), f2.row(r), h);
    std::copy(fs.fused.begin(), fs.fused.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> AverageEnsemble(std::span<const std::vector<double>> members) {
  if (members.empty()) ThrowConfig("ensemble needs at least one member");
  const std::size_t n = members[0].size();
  std::vector<double> out(n, 0.0);
  for (const auto& m : members) {
    if (m.size() != n) ThrowShape("ensemble members differ in length");
    for (std::size_t i = 0; i < n; ++i) out[i] += m[i];
  }
  for (double& v : out) v /= static_cast<double>(members.size());
  return out;
}

ScoreMatrix AverageEnsemble(std::span<const ScoreMatrix> members) {
  if (members.empty()) ThrowConfig("ensemble needs at least one member");
  ScoreMatrix out(members[0].rows, members[0].cols);
  for (const auto& m : members) {
    if (m.rows != out.rows || m.cols != out.cols)
      ThrowShape("ensemble members differ in shape");
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += m.data[i];
  }
  for (double& v : out.data) v /= static_cast<double>(members.size());
  return out;
}

ScoreMatrix ConcatScores(std::span<const ScoreMatrix> members) {
  if (members.empty()) ThrowConfig("nothing to concatenate");
  int cols = 0;
  for (const auto& m : members) {
    if (m.rows != members[0].rows) ThrowShape("score files differ in item count");
    cols += m.cols;
  }
  ScoreMatrix out(members[0].rows, cols);
  for (int r = 0; r < out.rows; ++r) {
    int c0 = 0;
    for (const auto& m : members) {
      std::copy(m.row(r).begin(), m.row(r).end(), out.row(r).begin() + c0);
      c0 += m.cols;
    }
  }
  return out;
}

LogisticEnsemble LogisticEnsemble::Zeros(int in_dim, int num_classes) {
  LogisticEnsemble m;
  m.in_dim = in_dim;
  m.num_classes = num_classes;
  m.weights.assign(static_cast<std::size_t>(in_dim) * num_classes, 0.0);
  m.bias.assign(num_classes, 0.0);
  return m;
}

LogisticEnsemble LogisticEnsemble::Fit(const ScoreMatrix& x,
                                       std::span<const int> labels,
                                       int num_classes,
                                       const LogisticConfig& cfg) {
  if (x.rows != static_cast<int>(labels.size()))
    ThrowShape("logistic fit: " + std::to_string(x.rows) + " rows but " +
               std::to_string(labels.size()) + " labels");
  if (num_classes < 2) ThrowConfig("logistic fit needs at least 2 classes");
  for (double v : x.data)
    if (!std::isfinite(v)) ThrowNumeric("logistic fit: non-finite input score");
  std::vector<int> counts(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) ThrowData("logistic fit: label out of range");
    ++counts[y];
  }
  if (std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) < 2)
    ThrowData("logistic fit: labels contain a single class",
              ErrorCode::kDegenerate);
  for (int k = 0; k < num_classes; ++k)
    if (counts[k] < 2)
      ThrowData("logistic fit: class " + std::to_string(k) +
                " has fewer than 2 items");

  const int n = x.rows;
  const int d = x.cols;
  const int K = num_classes;
  LogisticEnsemble m = Zeros(d, K);
  // Lipschitz bound of the mean multinomial loss: 0.5 * max |[x, 1]|^2.
  double max_norm2 = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 1.0;
    for (double v : x.row(r)) s += v * v;
    max_norm2 = std::max(max_norm2, s);
  }
  const double step = 1.0 / (0.5 * max_norm2 + cfg.l2);

  std::vector<double> gw(m.weights.size()), gb(K), p(K);
  for (int it = 0; it < cfg.max_iters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (int r = 0; r < n; ++r) {
      auto xr = x.row(r);
      for (int k = 0; k < K; ++k) {
        double z = m.bias[k];
        for (int j = 0; j < d; ++j) z += m.weights[k * d + j] * xr[j];
        p[k] = z;
      }
      SoftmaxInPlace(p);
      p[labels[r]] -= 1.0;
      for (int k = 0; k < K; ++k) {
        gb[k] += p[k];
        for (int j = 0; j < d; ++j) gw[k * d + j] += p[k] * xr[j];
      }
    }
    double norm2 = 0.0;
    for (std::size_t i = 0; i < gw.size(); ++i) {
      gw[i] = gw[i] / n + cfg.l2 * m.weights[i];
      norm2 += gw[i] * gw[i];
    }
    for (double& g : gb) {
      g /= n;
      norm2 += g * g;
    }
    m.final_grad_norm = std::sqrt(norm2);
    m.iterations = it;
    if (m.final_grad_norm < cfg.grad_tol) break;
    for (std::size_t i = 0; i < gw.size(); ++i) m.weights[i] -= step * gw[i];
    for (int k = 0; k < K; ++k) m.bias[k] -= step * gb[k];
    m.iterations = it + 1;
  }
  return m;
}

ScoreMatrix LogisticEnsemble::Apply(const ScoreMatrix& x) const {
  if (x.cols != in_dim)
    ThrowShape("logistic ensemble expects " + std::to_string(in_dim) +
               " input scores per item, got " + std::to_string(x.cols));
  ScoreMatrix out(x.rows, num_classes);
  for (int r = 0; r < x.rows; ++r) {
    auto xr = x.row(r);
    auto z = out.row(r);
    for (int k = 0; k < num_classes; ++k) {
      double s = bias[k];
      for (int j = 0; j < in_dim; ++j) s += weights[k * in_dim + j] * xr[j];
      z[k] = s;
    }
    SoftmaxInPlace(z);
  }
  return out;
}

void LogisticEnsemble::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) ThrowData("cannot write " + path.string(), ErrorCode::kFileNotFound);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "ascene-logistic 1\n" << in_dim << ' ' << num_classes << '\n';
  for (int k = 0; k < num_classes; ++k) {
    out << bias[k];
    for (int j = 0; j < in_dim; ++j) out << ' ' << weights[k * in_dim + j];
    out << '\n';
  }
}

LogisticEnsemble LogisticEnsemble::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ThrowData("cannot open " + path.string(), ErrorCode::kFileNotFound);
  std::string magic;
  int version = 0, d = 0, k = 0;
  if (!(in >> magic >> version >> d >> k) || magic != "ascene-logistic" ||
      version != 1 || d < 1 || k < 2)
    ThrowData(path.string() + ": not a logistic ensemble file",
              ErrorCode::kMalformedHeader);
  LogisticEnsemble m = Zeros(d, k);
  for (int c = 0; c < k; ++c) {
    in >> m.bias[c];
    for (int j = 0; j < d; ++j) in >> m.weights[c * d + j];
  }
  if (!in) ThrowData(path.string() + ": truncated", ErrorCode::kMalformedHeader);
  return m;
}

}  // namespace ascene::fusion
