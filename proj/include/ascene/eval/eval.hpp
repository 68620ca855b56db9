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

namespace ascene::eval {

struct ManifestRow {
  std::string filename;
  std::string scene_label;
  std::string device;  // lowercase; "unknown" when not derivable
  std::string split;   // empty when the column is absent
};

/// Tab-separated text with a header row. Required columns: filename,
/// scene_label. Optional: source_label, split. Other columns are ignored.
/// Missing source_label is derived from a "-<device>.wav" suffix.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;  // audio paths are relative to this

  static Manifest Parse(const std::string& text);
  static Manifest Load(const std::filesystem::path& path);

  std::size_t size() const { return rows.size(); }
  std::filesystem::path AudioPath(const ManifestRow& row) const {
    return base_dir / row.filename;
  }
};

/// "a", "b", ..., "s6" from e.g. "airport-lisbon-1000-40000-a.wav".
std::string DeviceFromFilename(const std::string& filename);

/// Report row for a device: "A", "B&C", "s1-s3", "s4-s6", "s7-s11" or
/// "unknown".
std::string DeviceGroup(const std::string& device);

/// Groups in report order.
std::vector<std::string> ReportGroups();

struct GroupStats {
  std::string name;
  int count = 0;
  int correct = 0;
  double accuracy() const { return count ? 100.0 * correct / count : 0.0; }
};

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<GroupStats> groups;  // every ReportGroups() entry
  int count = 0;
  int correct = 0;
  double loss = 0.0;                      // mean cross-entropy
  double group_mean_accuracy = 0.0;       // unweighted over non-empty groups
  std::vector<std::vector<int>> confusion;  // [true][predicted]

  double accuracy() const { return count ? 100.0 * correct / count : 0.0; }
  /// -1 for classes without items.
  std::vector<double> PerClassAccuracy() const;

  std::string ToText() const;
  std::string ToJson() const;
};

/// One probability row per manifest row, columns aligned with `classes`.
EvalReport Evaluate(const ScoreMatrix& predictions, const Manifest& manifest,
                    std::span<const std::string> classes);

/// Percentage of positions where both lists agree.
double PredictionOverlap(std::span<const int> a, std::span<const int> b);

/// Score table: header "filename<TAB>class..." then one row per item.
struct ScoreFile {
  std::vector<std::string> filenames;
  std::vector<std::string> classes;
  ScoreMatrix scores;

  static ScoreFile Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
  /// Rows reordered to follow `filenames`; throws on a missing item.
  ScoreFile Aligned(std::span<const std::string> order) const;
};

}  // namespace ascene::eval
