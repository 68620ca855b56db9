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

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ascene/scores.hpp"

namespace ascene::fusion {

/// Ten scene classes grouped under three superclasses.
struct ClassHierarchy {
  std::vector<std::string> classes;
  std::vector<std::string> superclasses;
  std::vector<int> parent;  // class index -> superclass index

  /// Built-in DCASE meta-class table, classes in alphabetical order.
  static ClassHierarchy Default();
  /// "class parent" per line, '#' comments. Class order follows the file;
  /// superclasses are numbered by first appearance.
  static ClassHierarchy Load(const std::filesystem::path& path);
  static ClassHierarchy Parse(const std::string& text);

  int num_classes() const { return static_cast<int>(classes.size()); }
  int num_superclasses() const { return static_cast<int>(superclasses.size()); }
  int ClassIndex(const std::string& name) const;        // -1 if absent
  int SuperclassIndex(const std::string& name) const;   // -1 if absent

  /// Parent map total and every superclass non-empty.
  void Validate() const;
};

struct FusedScores {
  std::vector<double> fused;  // not renormalized
  int predicted = 0;          // argmax, lowest index on ties
};

/// fused[q] = f1[parent(q)] * f2[q].
FusedScores TwoStageFuse(std::span<const double> f1, std::span<const double> f2,
                         const ClassHierarchy& h);

/// Row-wise TwoStageFuse.
ScoreMatrix TwoStageFuse(const ScoreMatrix& f1, const ScoreMatrix& f2,
                         const ClassHierarchy& h);

/// Elementwise mean of member outputs.
std::vector<double> AverageEnsemble(std::span<const std::vector<double>> members);
ScoreMatrix AverageEnsemble(std::span<const ScoreMatrix> members);

/// Member score matrices side by side (rows must agree).
ScoreMatrix ConcatScores(std::span<const ScoreMatrix> members);

struct LogisticConfig {
  double l2 = 1e-4;
  double grad_tol = 1e-5;
  int max_iters = 5000;
};

/// Multinomial logistic regression on concatenated member scores.
struct LogisticEnsemble {
  int in_dim = 0;
  int num_classes = 0;
  std::vector<double> weights;  // num_classes x in_dim, row-major
  std::vector<double> bias;     // num_classes
  int iterations = 0;
  double final_grad_norm = 0.0;

  static LogisticEnsemble Zeros(int in_dim, int num_classes);

  /// Full-batch gradient descent on mean cross-entropy + l2/2 |W|^2.
  static LogisticEnsemble Fit(const ScoreMatrix& x, std::span<const int> labels,
                              int num_classes, const LogisticConfig& cfg = {});

  /// Softmax of W x + b per row.
  ScoreMatrix Apply(const ScoreMatrix& x) const;

  void Save(const std::filesystem::path& path) const;
  static LogisticEnsemble Load(const std::filesystem::path& path);
};

}  // namespace ascene::fusion
