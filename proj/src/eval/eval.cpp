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

#include "ascene/eval/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "ascene/error.hpp"
#include "json.hpp"

namespace ascene::eval {
namespace {

constexpr double kProbFloor = 1e-15;

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, '\t')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ThrowData("cannot open " + path.string(), ErrorCode::kFileNotFound);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string DeviceFromFilename(const std::string& filename) {
  const std::string stem = std::filesystem::path(filename).stem().string();
  const auto dash = stem.rfind('-');
  if (dash == std::string::npos) return "unknown";
  const std::string dev = Lower(stem.substr(dash + 1));
  if (dev == "a" || dev == "b" || dev == "c") return dev;
  if (dev.size() >= 2 && dev[0] == 's' &&
      std::all_of(dev.begin() + 1, dev.end(), ::isdigit))
    return dev;
  return "unknown";
}

std::string DeviceGroup(const std::string& device) {
  const std::string d = Lower(device);
  if (d == "a") return "A";
  if (d == "b" || d == "c") return "B&C";
  if (d.size() >= 2 && d[0] == 's' &&
      std::all_of(d.begin() + 1, d.end(), ::isdigit)) {
    const int k = std::stoi(d.substr(1));
    if (k >= 1 && k <= 3) return "s1-s3";
    if (k >= 4 && k <= 6) return "s4-s6";
    if (k >= 7 && k <= 11) return "s7-s11";
  }
  return "unknown";
}

std::vector<std::string> ReportGroups() {
  return {"A", "B&C", "s1-s3", "s4-s6", "s7-s11", "unknown"};
}

Manifest Manifest::Parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line))
    if (!line.empty() && line != "\r") header = SplitTabs(line);
  if (header.empty()) ThrowData("empty manifest");
  auto col = [&](const char* name) {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_file = col("filename");
  const int c_scene = col("scene_label");
  const int c_dev = col("source_label");
  const int c_split = col("split");
  if (c_file < 0 || c_scene < 0)
    ThrowData("manifest header must contain filename and scene_label columns",
              ErrorCode::kMalformedHeader);
  Manifest m;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = SplitTabs(line);
    auto cell = [&](int c) -> std::string {
      return c >= 0 && c < static_cast<int>(cells.size()) ? cells[c] : "";
    };
    ManifestRow r;
    r.filename = cell(c_file);
    r.scene_label = cell(c_scene);
    if (r.filename.empty() || r.scene_label.empty())
      ThrowData("manifest line " + std::to_string(lineno) +
                ": missing filename or scene_label");
    r.device = Lower(cell(c_dev));
    if (r.device.empty()) r.device = DeviceFromFilename(r.filename);
    r.split = cell(c_split);
    m.rows.push_back(std::move(r));
  }
  if (m.rows.empty()) ThrowData("empty manifest");
  return m;
}

Manifest Manifest::Load(const std::filesystem::path& path) {
  Manifest m = Parse(ReadText(path));
  m.base_dir = path.parent_path();
  return m;
}

std::vector<double> EvalReport::PerClassAccuracy() const {
  std::vector<double> out;
  for (const auto& row : confusion) {
    int total = 0;
    for (int v : row) total += v;
    const int k = static_cast<int>(out.size());
    out.push_back(total ? 100.0 * row[k] / total : -1.0);
  }
  return out;
}

EvalReport Evaluate(const ScoreMatrix& predictions, const Manifest& manifest,
                    std::span<const std::string> classes) {
  const int n = static_cast<int>(manifest.size());
  const int K = static_cast<int>(classes.size());
  if (predictions.rows != n)
    ThrowData("missing predictions: " + std::to_string(predictions.rows) +
              " rows for " + std::to_string(n) + " manifest items");
  if (predictions.cols != K)
    ThrowShape("predictions have " + std::to_string(predictions.cols) +
               " columns, expected " + std::to_string(K) + " classes");
  std::map<std::string, int> index;
  for (int k = 0; k < K; ++k) index[classes[k]] = k;

  EvalReport rep;
  rep.classes.assign(classes.begin(), classes.end());
  for (const auto& g : ReportGroups()) rep.groups.push_back({g, 0, 0});
  rep.confusion.assign(K, std::vector<int>(K, 0));
  std::vector<double> losses;
  losses.reserve(n);
  for (int i = 0; i < n; ++i) {
    const ManifestRow& row = manifest.rows[i];
    auto it = index.find(row.scene_label);
    if (it == index.end())
      ThrowData("manifest label '" + row.scene_label + "' is not a known class");
    const int y = it->second;
    const auto p = predictions.row(i);
    for (double v : p)
      if (!std::isfinite(v)) ThrowNumeric("non-finite prediction for " + row.filename);
    const int pred = Argmax(p);
    const bool ok = pred == y;
    losses.push_back(-std::log(std::max(p[y], kProbFloor)));
    ++rep.confusion[y][pred];
    ++rep.count;
    rep.correct += ok;
    const std::string group = DeviceGroup(row.device);
    for (auto& g : rep.groups)
      if (g.name == group) {
        ++g.count;
        g.correct += ok;
      }
  }
  // ascending-order sum
  std::sort(losses.begin(), losses.end());
  double loss = 0.0;
  for (double l : losses) loss += l;
  rep.loss = n ? loss / n : 0.0;
  int nonempty = 0;
  for (const auto& g : rep.groups)
    if (g.count) {
      rep.group_mean_accuracy += g.accuracy();
      ++nonempty;
    }
  if (nonempty) rep.group_mean_accuracy /= nonempty;
  return rep;
}

std::string EvalReport::ToText() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  const char* cols[] = {"A acc. %", "B&C acc. %", "s1-s3 acc. %",
                        "s4-s6 acc. %", "val loss", "Avg acc. %"};
  for (const char* c : cols) os << std::setw(14) << c;
  os << '\n';
  for (int g = 0; g < 4; ++g) {
    if (groups[g].count) os << std::setw(14) << groups[g].accuracy();
    else os << std::setw(14) << "-";
  }
  os << std::setw(14) << std::setprecision(4) << loss << std::setprecision(2)
     << std::setw(14) << accuracy() << "\n\n";
  os << "items " << count << ", correct " << correct
     << ", item-weighted acc. % " << accuracy()
     << ", group-mean acc. % " << group_mean_accuracy << '\n';
  for (const auto& g : groups)
    if (g.count)
      os << "  " << std::left << std::setw(8) << g.name << std::right
         << std::setw(6) << g.count << " items  " << std::setw(7)
         << g.accuracy() << " %\n";
  os << "\nper-class accuracy %\n";
  const auto per = PerClassAccuracy();
  for (std::size_t k = 0; k < classes.size(); ++k) {
    os << "  " << std::left << std::setw(20) << classes[k] << std::right;
    if (per[k] < 0) os << std::setw(8) << "-";
    else os << std::setw(8) << per[k];
    os << '\n';
  }
  os << "\nconfusion (rows true, columns predicted)\n";
  for (std::size_t k = 0; k < confusion.size(); ++k) {
    os << "  " << std::left << std::setw(20) << classes[k] << std::right;
    for (int v : confusion[k]) os << std::setw(6) << v;
    os << '\n';
  }
  return os.str();
}

std::string EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["items"] = count;
  j["correct"] = correct;
  j["accuracy"] = accuracy();
  j["group_mean_accuracy"] = group_mean_accuracy;
  j["val_loss"] = loss;
  nlohmann::ordered_json g = nlohmann::ordered_json::object();
  for (const auto& s : groups) {
    if (!s.count) continue;
    g[s.name] = {{"items", s.count}, {"correct", s.correct},
                 {"accuracy", s.accuracy()}};
  }
  j["groups"] = g;
  j["classes"] = classes;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (double a : PerClassAccuracy())
    per.push_back(a < 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(a));
  j["per_class_accuracy"] = per;
  j["confusion"] = confusion;
  return j.dump(2) + "\n";
}

double PredictionOverlap(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    ThrowShape("prediction lists differ in length (" + std::to_string(a.size()) +
               " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) ThrowData("prediction lists are empty");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return 100.0 * static_cast<double>(same) / static_cast<double>(a.size());
}

ScoreFile ScoreFile::Load(const std::filesystem::path& path) {
  std::istringstream in(ReadText(path));
  std::string line;
  if (!std::getline(in, line))
    ThrowData(path.string() + ": empty score file", ErrorCode::kMalformedHeader);
  std::vector<std::string> header = SplitTabs(line);
  if (header.size() < 2 || header[0] != "filename")
    ThrowData(path.string() + ": score header must start with 'filename'",
              ErrorCode::kMalformedHeader);
  ScoreFile f;
  f.classes.assign(header.begin() + 1, header.end());
  const int K = static_cast<int>(f.classes.size());
  std::vector<double> data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = SplitTabs(line);
    if (static_cast<int>(cells.size()) != K + 1)
      ThrowData(path.string() + " line " + std::to_string(lineno) + ": expected " +
                std::to_string(K + 1) + " fields");
    f.filenames.push_back(cells[0]);
    for (int k = 1; k <= K; ++k) {
      try {
        std::size_t used = 0;
        data.push_back(std::stod(cells[k], &used));
        if (used != cells[k].size()) throw std::invalid_argument(cells[k]);
      } catch (const std::logic_error&) {
        ThrowData(path.string() + " line " + std::to_string(lineno) +
                  ": bad score '" + cells[k] + "'");
      }
    }
  }
  f.scores = ScoreMatrix(static_cast<int>(f.filenames.size()), K);
  f.scores.data = std::move(data);
  return f;
}

void ScoreFile::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) ThrowData("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "filename";
  for (const auto& c : classes) out << '\t' << c;
  out << '\n';
  for (int r = 0; r < scores.rows; ++r) {
    out << filenames[r];
    for (double v : scores.row(r)) out << '\t' << v;
    out << '\n';
  }
  if (!out) ThrowData("failed writing " + path.string());
}

ScoreFile ScoreFile::Aligned(std::span<const std::string> order) const {
  std::map<std::string, int> where;
  for (int r = 0; r < static_cast<int>(filenames.size()); ++r) where[filenames[r]] = r;
  ScoreFile out;
  out.classes = classes;
  out.scores = ScoreMatrix(static_cast<int>(order.size()), scores.cols);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto it = where.find(order[i]);
    if (it == where.end()) ThrowData("no scores for " + order[i]);
    out.filenames.push_back(order[i]);
    std::copy(scores.row(it->second).begin(), scores.row(it->second).end(),
              out.scores.row(static_cast<int>(i)).begin());
  }
  return out;
}

}  // namespace ascene::eval
