// Copyright 2026 The fpca Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Bias-free ReLU networks F(x) = W_{L+1} phi(W_L ... phi(W_0 x)).

#ifndef FPCA_NETWORK_H_
#define FPCA_NETWORK_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "fpca/common.h"
#include "fpca/subspace.h"

namespace fpca {

// Hidden widths (k_0, ..., k_L). The output width is always 1.
using Architecture = std::vector<int>;

struct NetworkMeta {
  std::optional<double> B;
  std::optional<double> Lambda;
  std::optional<uint64_t> seed;
  std::optional<int> rank;  // row rank of W_0

  bool operator==(const NetworkMeta&) const = default;
};

class ReluNetwork {
 public:
  // layers[i] is W_i; needs at least two matrices, chained shapes and a
  // single output row.
  explicit ReluNetwork(std::vector<Matrix> layers, NetworkMeta meta = {});

  int input_dim() const { return static_cast<int>(layers_.front().cols()); }
  // L, the number of hidden layers minus one.
  int depth() const { return static_cast<int>(layers_.size()) - 2; }
  // S = k_0 + ... + k_L.
  int size() const;
  Architecture architecture() const;
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<Matrix>& layers() const { return layers_; }
  const Matrix& layer(int i) const { return layers_.at(i); }
  const NetworkMeta& meta() const { return meta_; }
  NetworkMeta& mutable_meta() { return meta_; }

  double Eval(const Vector& x) const;
  // One output per column of X.
  Vector EvalBatch(const Matrix& X) const;

  bool operator==(const ReluNetwork& other) const;

 private:
  std::vector<Matrix> layers_;
  NetworkMeta meta_;
};

// Product of the layer operator norms.
double LipschitzUpper(const ReluNetwork& net);

int FirstLayerRank(const ReluNetwork& net);

// x -> F(Pi_W x): replaces W_0 by W_0 Pi_W.
ReluNetwork Restrict(const ReluNetwork& net, const Frame& frame);

// Gaussian weights rescaled so every layer has operator norm exactly B.
ReluNetwork RandomNetwork(int input_dim, const Architecture& arch, double B,
                          uint64_t seed);

// phi(x1 + L x2) + phi(3 x1 + L x2) - 2 phi(-x1 + L x2).
ReluNetwork SpikeNetwork(double Lambda);

// Exact network for a function on {-1,1}^n given by 2^n values. Entry b of
// the table is the value at x with x_i = -1 when bit i of b is set and +1
// otherwise. n <= 6.
ReluNetwork CompileBoolean(const std::vector<double>& truth_table);
constexpr int kMaxBooleanArity = 6;

// Zeroes every weight with |w| <= eta.
ReluNetwork ClipWeights(const ReluNetwork& net, double eta);

}  // namespace fpca

#endif  // FPCA_NETWORK_H_
