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

#include <chrono>
#include <cmath>
#include <map>

#include "ascene/fusion/fusion.hpp"
#include "ascene/util/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ascene;
using namespace ascene::fusion;
using ascene::testing::CodeOf;
using ascene::testing::KindOf;
using ascene::testing::TempDir;

namespace {

// Group membership written out by name, independent of the library table.
const std::map<std::string, std::string> kParentByName = {
    {"airport", "indoor"},          {"shopping_mall", "indoor"},
    {"metro_station", "indoor"},    {"street_pedestrian", "outdoor"},
    {"public_square", "outdoor"},   {"street_traffic", "outdoor"},
    {"park", "outdoor"},            {"tram", "transportation"},
    {"bus", "transportation"},      {"metro", "transportation"},
};

std::vector<double> RandomDistribution(int n, Rng& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> v(n);
  double s = 0;
  for (double& x : v) s += (x = g(rng));
  for (double& x : v) x /= s;
  return v;
}

// argmax over valid (p, q) pairs of f1[p] * f2[q]; lowest q on ties.
int BruteForce(const std::vector<double>& f1, const std::vector<double>& f2,
               const ClassHierarchy& h) {
  int best = -1;
  double best_v = -1.0;
  for (int q = 0; q < 10; ++q)
    for (int p = 0; p < 3; ++p) {
      if (kParentByName.at(h.classes[q]) != h.superclasses[p]) continue;
      const double v = f1[p] * f2[q];
      if (v > best_v) {
        best_v = v;
        best = q;
      }
    }
  return best;
}

int ArgmaxOf(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("default hierarchy matches the meta-class table") {
  const ClassHierarchy h = ClassHierarchy::Default();
  h.Validate();
  REQUIRE(h.num_classes() == 10);
  REQUIRE(h.num_superclasses() == 3);
  for (int q = 0; q < 10; ++q)
    CHECK(h.superclasses[h.parent[q]] == kParentByName.at(h.classes[q]));
  CHECK(std::is_sorted(h.classes.begin(), h.classes.end()));
}

TEST_CASE("two-stage fusion equals brute-force enumeration") {
  const ClassHierarchy h = ClassHierarchy::Default();
  Rng rng(2024);
  int mismatches = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const auto f1 = RandomDistribution(3, rng);
    const auto f2 = RandomDistribution(10, rng);
    const FusedScores r = TwoStageFuse(f1, f2, h);
    mismatches += r.predicted != BruteForce(f1, f2, h);
    for (int q = 0; q < 10; ++q)
      CHECK(r.fused[q] == doctest::Approx(f1[h.parent[q]] * f2[q]));
    double s = 0;
    for (double v : r.fused) s += v;
    CHECK(s <= 1.0 + 1e-12);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(mismatches == 0);
  CHECK(secs < 1.0);
}

TEST_CASE("uniform superclass scores reduce to the flat argmax") {
  const ClassHierarchy h = ClassHierarchy::Default();
  Rng rng(1);
  const std::vector<double> f1(3, 1.0 / 3.0);
  for (int i = 0; i < 100; ++i) {
    const auto f2 = RandomDistribution(10, rng);
    CHECK(TwoStageFuse(f1, f2, h).predicted == ArgmaxOf(f2));
  }
}

TEST_CASE("one-hot transportation masks out park") {
  const ClassHierarchy h = ClassHierarchy::Default();
  std::vector<double> f1(3, 0.0);
  f1[h.SuperclassIndex("transportation")] = 1.0;
  std::vector<double> f2(10, 0.01);
  f2[h.ClassIndex("park")] = 0.6;
  f2[h.ClassIndex("tram")] = 0.3;
  CHECK(h.classes[TwoStageFuse(f1, f2, h).predicted] == "tram");
}

TEST_CASE("ties go to the lowest class index") {
  const ClassHierarchy h = ClassHierarchy::Default();
  const std::vector<double> f1(3, 1.0);
  const std::vector<double> f2(10, 0.1);
  CHECK(TwoStageFuse(f1, f2, h).predicted == 0);
}

TEST_CASE("fusion is invariant to positive rescaling") {
  const ClassHierarchy h = ClassHierarchy::Default();
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    auto f1 = RandomDistribution(3, rng);
    auto f2 = RandomDistribution(10, rng);
    const int base = TwoStageFuse(f1, f2, h).predicted;
    for (double& v : f2) v *= 7.5;
    CHECK(TwoStageFuse(f1, f2, h).predicted == base);
    for (double& v : f1) v *= 0.125;
    CHECK(TwoStageFuse(f1, f2, h).predicted == base);
  }
}

TEST_CASE("oracle superclass scores never lose to the flat classifier") {
  const ClassHierarchy h = ClassHierarchy::Default();
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(100 + trial);
    const int n = 10000;
    ScoreMatrix f1(n, 3), f2(n, 10);
    std::vector<int> truth(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(UniformInt(rng, 0, 9));
      f1.at(i, h.parent[truth[i]]) = 1.0;
      auto p = RandomDistribution(10, rng);
      p[truth[i]] += Uniform(rng, 0.0, 0.3);  // weakly informative
      for (int q = 0; q < 10; ++q) f2.at(i, q) = p[q];
    }
    const ScoreMatrix fused = TwoStageFuse(f1, f2, h);
    int flat = 0, two = 0;
    for (int i = 0; i < n; ++i) {
      flat += Argmax(f2.row(i)) == truth[i];
      two += Argmax(fused.row(i)) == truth[i];
    }
    CHECK(two >= flat);
  }
}

TEST_CASE("fusion input errors") {
  const ClassHierarchy h = ClassHierarchy::Default();
  std::vector<double> f1{0.5, 0.5, 0.0};
  std::vector<double> f2(10, 0.1);
  f2[3] = -0.1;
  CHECK(KindOf([&] { TwoStageFuse(f1, f2, h); }) == ErrorKind::kData);
  f2[3] = std::nan("");
  CHECK(KindOf([&] { TwoStageFuse(f1, f2, h); }) == ErrorKind::kNumeric);
  std::vector<double> short2(9, 0.1);
  CHECK(KindOf([&] { TwoStageFuse(f1, short2, h); }) == ErrorKind::kData);
}

TEST_CASE("hierarchy file parsing") {
  const ClassHierarchy h = ClassHierarchy::Parse(
      "# toy\n"
      "cat pets\n"
      "dog pets\n"
      "oak trees\n");
  CHECK(h.classes == std::vector<std::string>{"cat", "dog", "oak"});
  CHECK(h.superclasses == std::vector<std::string>{"pets", "trees"});
  CHECK(h.parent == std::vector<int>{0, 0, 1});
  CHECK(KindOf([] { ClassHierarchy::Parse("cat\n"); }) == ErrorKind::kConfig);
  CHECK(KindOf([] { ClassHierarchy::Parse("cat a\ncat b\n"); }) == ErrorKind::kConfig);
  TempDir dir;
  CHECK(CodeOf([&] { ClassHierarchy::Load(dir / "none.txt"); }) == ErrorCode::kFileNotFound);
}

TEST_CASE("average ensemble") {
  const std::vector<std::vector<double>> two{{1.0, 0.0}, {0.0, 1.0}};
  CHECK(AverageEnsemble(two) == std::vector<double>{0.5, 0.5});
  const std::vector<std::vector<double>> same{{0.2, 0.8}, {0.2, 0.8}};
  const auto avg = AverageEnsemble(same);
  CHECK(avg[0] == doctest::Approx(0.2));
  CHECK(avg[1] == doctest::Approx(0.8));
  Rng rng(3);
  std::vector<ScoreMatrix> members;
  for (int m = 0; m < 3; ++m) {
    ScoreMatrix s(5, 4);
    for (int i = 0; i < 5; ++i) {
      const auto p = RandomDistribution(4, rng);
      std::copy(p.begin(), p.end(), s.row(i).begin());
    }
    members.push_back(s);
  }
  const ScoreMatrix a = AverageEnsemble(members);
  std::vector<ScoreMatrix> rev(members.rbegin(), members.rend());
  const ScoreMatrix b = AverageEnsemble(rev);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]));
  for (int i = 0; i < 5; ++i) {
    double s = 0;
    for (double v : a.row(i)) s += v;
    CHECK(s == doctest::Approx(1.0));
  }
  const std::vector<std::vector<double>> none;
  CHECK_THROWS_AS(AverageEnsemble(none), Error);
  const std::vector<std::vector<double>> mixed{{1.0}, {0.5, 0.5}};
  CHECK(KindOf([&] { AverageEnsemble(mixed); }) == ErrorKind::kData);
}

TEST_CASE("logistic ensemble: zero weights give a uniform output") {
  const LogisticEnsemble z = LogisticEnsemble::Zeros(6, 3);
  ScoreMatrix x(2, 6, 0.3);
  for (double v : z.Apply(x).data) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("logistic ensemble fits perfect members and beats the best member") {
  Rng rng(4);
  const int n = 300, k = 3;
  std::vector<int> labels(n);
  ScoreMatrix perfect(n, 2 * k), noisy(n, 2 * k);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % k;
    for (int m = 0; m < 2; ++m) perfect.at(i, m * k + labels[i]) = 1.0;
    // member 0 is right 70% of the time, member 1 is right 60%
    for (int m = 0; m < 2; ++m) {
      const bool right = Uniform(rng, 0, 1) < (m == 0 ? 0.7 : 0.6);
      const int said = right ? labels[i] : (labels[i] + 1 + static_cast<int>(UniformInt(rng, 0, 1))) % k;
      auto p = RandomDistribution(k, rng);
      for (double& v : p) v *= 0.3;
      p[said] += 0.7;
      for (int c = 0; c < k; ++c) noisy.at(i, m * k + c) = p[c];
    }
  }
  auto accuracy = [&](const ScoreMatrix& s) {
    int ok = 0;
    for (int i = 0; i < n; ++i) ok += Argmax(s.row(i)) == labels[i];
    return static_cast<double>(ok) / n;
  };
  const LogisticEnsemble a = LogisticEnsemble::Fit(perfect, labels, k);
  CHECK(accuracy(a.Apply(perfect)) == 1.0);

  LogisticConfig cfg;
  cfg.l2 = 1e-8;
  cfg.max_iters = 20000;
  const LogisticEnsemble b = LogisticEnsemble::Fit(noisy, labels, k, cfg);
  double best_member = 0;
  for (int m = 0; m < 2; ++m) {
    ScoreMatrix one(n, k);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) one.at(i, c) = noisy.at(i, m * k + c);
    best_member = std::max(best_member, accuracy(one));
  }
  CHECK(accuracy(b.Apply(noisy)) >= best_member);
  const ScoreMatrix probs = b.Apply(noisy);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (double v : probs.row(i)) s += v;
    CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("logistic ensemble converges and round-trips through a file") {
  Rng rng(6);
  const int n = 60;
  ScoreMatrix x(n, 4);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    for (int c = 0; c < 4; ++c) x.at(i, c) = Uniform(rng, 0, 1) + (c == y[i] ? 0.5 : 0.0);
  }
  const LogisticEnsemble e = LogisticEnsemble::Fit(x, y, 2);
  CHECK((e.final_grad_norm < 1e-5 || e.iterations == 5000));
  TempDir dir;
  e.Save(dir / "l.txt");
  const LogisticEnsemble r = LogisticEnsemble::Load(dir / "l.txt");
  CHECK(r.weights == e.weights);
  CHECK(r.bias == e.bias);
  CHECK(r.Apply(x) == e.Apply(x));
}

TEST_CASE("logistic ensemble errors") {
  ScoreMatrix x(4, 2, 0.5);
  const std::vector<int> one_class{0, 0, 0, 0};
  CHECK(CodeOf([&] { LogisticEnsemble::Fit(x, one_class, 2); }) == ErrorCode::kDegenerate);
  const std::vector<int> thin{0, 0, 0, 1};
  CHECK_THROWS_AS(LogisticEnsemble::Fit(x, thin, 2), Error);
  x.at(1, 1) = std::nan("");
  const std::vector<int> ok{0, 0, 1, 1};
  CHECK(KindOf([&] { LogisticEnsemble::Fit(x, ok, 2); }) == ErrorKind::kNumeric);
}
