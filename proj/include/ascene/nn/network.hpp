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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ascene/nn/graph.hpp"
#include "ascene/nn/tensor.hpp"
#include "ascene/util/rng.hpp"

namespace ascene::nn {

enum class Mode { kTrain, kEval };

template <class Real>
struct Param {
  std::string name;
  std::vector<int> dims;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool trainable = true;
};

inline constexpr double kBatchNormEps = 1e-3;
inline constexpr double kBatchNormMomentum = 0.9;

/// A model graph together with its parameters and the activation caches
/// needed for reverse-mode gradients. Instantiated for float (training,
/// inference) and double (gradient checking).
///
/// forward/backward on one instance are single-threaded; separate
/// instances are independent.
template <class Real>
class Network {
 public:
  Network() = default;

  /// He-normal conv/dense weights, zero biases, BN gamma=1 beta=0,
  /// running mean 0 / var 1.
  static Network Build(GraphSpec graph, std::uint64_t seed);

  const GraphSpec& graph() const { return graph_; }
  int num_layers() const { return graph_.size(); }

  std::vector<Param<Real>>& params(int layer) { return params_[layer]; }
  const std::vector<Param<Real>>& params(int layer) const {
    return params_[layer];
  }
  Param<Real>& param(int layer, std::string_view name);
  const Param<Real>& param(int layer, std::string_view name) const;

  std::size_t NumTrainableParams() const;
  std::size_t NumParams() const;

  /// Runs the graph; the returned reference stays valid until the next
  /// call. Throws kData naming the layer on shape mismatch.
  const Tensor4<Real>& Forward(const Tensor4<Real>& x, Mode mode);

  /// Cross-entropy with soft targets (one row of `targets` per batch item,
  /// length = output classes) against the last Forward(), which must have
  /// been run in train mode. Zeroes then fills every parameter gradient and
  /// the input gradient. Returns the mean loss.
  double Backward(std::span<const Real> targets);

  /// Backward from an arbitrary upstream gradient of the output tensor;
  /// used by the gradient checker for non-softmax outputs.
  void BackwardFrom(const Tensor4<Real>& output_grad);

  const Tensor4<Real>& input_grad() const { return grads_[0]; }
  const Tensor4<Real>& activation(int layer) const { return acts_[layer]; }

  void ZeroGrad();
  /// Drops activation and gradient caches (e.g. before storing a copy).
  void ClearCaches();
  void ReseedDropout(std::uint64_t seed) { dropout_rng_.seed(seed); }

  /// Copies parameter values (and graph) into another scalar type.
  template <class Other>
  Network<Other> Cast() const;

 private:
  template <class>
  friend class Network;

  void ForwardLayer(int id, Mode mode);
  void BackwardLayer(int id);
  Tensor4<Real>& GradFor(int id);

  GraphSpec graph_;
  std::vector<Shape> declared_shapes_;
  std::vector<std::vector<Param<Real>>> params_;

  // Per-forward caches.
  Mode last_mode_ = Mode::kEval;
  std::vector<Tensor4<Real>> acts_;
  std::vector<Tensor4<Real>> grads_;
  std::vector<bool> grad_live_;
  std::vector<std::vector<std::vector<Real>>> aux_;  // masks, xhat, gates
  std::vector<std::vector<int>> aux_index_;   // maxpool argmax
  Rng dropout_rng_{0x5eedULL};
};

/// Mean soft-target cross-entropy of a probability batch; rows of
/// `targets` align with output rows.
template <class Real>
double CrossEntropy(const Tensor4<Real>& probs, std::span<const Real> targets);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace ascene::nn
