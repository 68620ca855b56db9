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

#include <complex>
#include <span>

namespace ascene::features {

/// Real-input FFT of a fixed size backed by FFTW. Each instance owns its
/// plans and buffers, so separate instances may run on separate threads.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  /// in: n real samples; out: n/2+1 complex bins.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out);

  /// in: n/2+1 bins; out: n real samples, scaled by 1/n (true inverse).
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out);

 private:
  int n_;
  double* real_ = nullptr;
  void* spec_ = nullptr;  // fftw_complex*
  void* fwd_ = nullptr;   // fftw_plan
  void* inv_ = nullptr;
};

}  // namespace ascene::features
