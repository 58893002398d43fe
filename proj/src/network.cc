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

#include "fpca/network.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace fpca {

ReluNetwork::ReluNetwork(std::vector<Matrix> layers, NetworkMeta meta)
    : layers_(std::move(layers)), meta_(meta) {
  if (layers_.size() < 2) {
    throw InvalidArgument("a network needs at least two weight matrices");
  }
  if (layers_.front().cols() < 1) throw InvalidArgument("input dimension is 0");
  for (size_t i = 0; i < layers_.size(); ++i) {
    const Matrix& W = layers_[i];
    if (W.rows() < 1) {
      throw InvalidArgument("layer " + std::to_string(i) + " has no rows");
    }
    if (i > 0 && W.cols() != layers_[i - 1].rows()) {
      throw InvalidArgument("layer " + std::to_string(i) +
                            " does not chain with the previous layer");
    }
    if (!W.allFinite()) {
      throw InvalidArgument("layer " + std::to_string(i) + " is not finite");
    }
  }
  if (layers_.back().rows() != 1) throw InvalidArgument("output width must be 1");
}

int ReluNetwork::size() const {
  int s = 0;
  for (size_t i = 0; i + 1 < layers_.size(); ++i) s += layers_[i].rows();
  return s;
}

Architecture ReluNetwork::architecture() const {
  Architecture arch;
  for (size_t i = 0; i + 1 < layers_.size(); ++i) arch.push_back(layers_[i].rows());
  return arch;
}

double ReluNetwork::Eval(const Vector& x) const {
  if (x.size() != input_dim()) throw InvalidArgument("input dimension mismatch");
  Vector h = x;
  for (size_t i = 0; i + 1 < layers_.size(); ++i) {
    h = (layers_[i] * h).cwiseMax(0.0);
  }
  return (layers_.back() * h)(0);
}

Vector ReluNetwork::EvalBatch(const Matrix& X) const {
  if (X.rows() != input_dim()) throw InvalidArgument("input dimension mismatch");
  Matrix H = (layers_.front() * X).cwiseMax(0.0);
  for (size_t i = 1; i + 1 < layers_.size(); ++i) {
    H = (layers_[i] * H).cwiseMax(0.0);
  }
  return (layers_.back() * H).transpose();
}

bool ReluNetwork::operator==(const ReluNetwork& other) const {
  if (layers_.size() != other.layers_.size() || !(meta_ == other.meta_)) {
    return false;
  }
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].rows() != other.layers_[i].rows() ||
        layers_[i].cols() != other.layers_[i].cols() ||
        layers_[i] != other.layers_[i]) {
      return false;
    }
  }
  return true;
}

double LipschitzUpper(const ReluNetwork& net) {
  double bound = 1.0;
  for (const Matrix& W : net.layers()) bound *= OperatorNorm(W);
  return bound;
}

int FirstLayerRank(const ReluNetwork& net) {
  Eigen::JacobiSVD<Matrix> svd(net.layer(0));
  svd.setThreshold(1e-10);
  return static_cast<int>(svd.rank());
}

ReluNetwork Restrict(const ReluNetwork& net, const Frame& frame) {
  if (frame.ambient_dim() != net.input_dim()) {
    throw InvalidArgument("frame dimension differs from the network input");
  }
  std::vector<Matrix> layers = net.layers();
  layers[0] = (layers[0] * frame.basis()) * frame.basis().transpose();
  return ReluNetwork(std::move(layers), net.meta());
}

ReluNetwork RandomNetwork(int input_dim, const Architecture& arch, double B,
                          uint64_t seed) {
  if (input_dim < 1) throw InvalidArgument("input dimension must be positive");
  if (arch.empty()) throw InvalidArgument("architecture has no hidden layers");
  for (int k : arch) {
    if (k < 1) throw InvalidArgument("hidden widths must be positive");
  }
  if (!(B > 0) || !std::isfinite(B)) throw InvalidArgument("B must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Matrix> layers;
  int cols = input_dim;
  auto make = [&](int rows) {
    Matrix W(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) W(i, j) = normal(rng);
    W *= B / OperatorNorm(W);
    layers.push_back(std::move(W));
    cols = rows;
  };
  for (int k : arch) make(k);
  make(1);
  NetworkMeta meta;
  meta.B = B;
  meta.seed = seed;
  ReluNetwork net(std::move(layers), meta);
  net.mutable_meta().rank = FirstLayerRank(net);
  return net;
}

ReluNetwork SpikeNetwork(double Lambda) {
  if (!(Lambda > 0) || !std::isfinite(Lambda)) {
    throw InvalidArgument("Lambda must be positive");
  }
  Matrix W0(3, 2);
  W0 << 1, Lambda, 3, Lambda, -1, Lambda;
  Matrix W1(1, 3);
  W1 << 1, 1, -2;
  NetworkMeta meta;
  meta.Lambda = Lambda;
  return ReluNetwork({W0, W1}, meta);
}

namespace {

// Sparse linear functional over the units of one layer.
using Signal = std::vector<std::pair<int, double>>;

Signal Unit(int i) { return {{i, 1.0}}; }

Signal Combine(std::initializer_list<std::pair<double, const Signal*>> parts) {
  Signal out;
  for (const auto& [c, s] : parts)
    for (const auto& [i, v] : *s) out.emplace_back(i, c * v);
  return out;
}

class LayerBuilder {
 public:
  explicit LayerBuilder(int in_width) : in_width_(in_width) {}
  int Add(const Signal& s) {
    Vector row = Vector::Zero(in_width_);
    for (const auto& [i, v] : s) row(i) += v;
    rows_.push_back(std::move(row));
    return static_cast<int>(rows_.size()) - 1;
  }
  Matrix Build() const {
    Matrix W(rows_.size(), in_width_);
    for (size_t i = 0; i < rows_.size(); ++i) W.row(i) = rows_[i];
    return W;
  }
  int width() const { return static_cast<int>(rows_.size()); }

 private:
  int in_width_;
  std::vector<Vector> rows_;
};

struct Monomial {
  double coef;
  std::vector<int> vars;
  size_t next = 0;  // vars[0..next) are already in the product
  Signal product;
};

}  // namespace

ReluNetwork CompileBoolean(const std::vector<double>& truth_table) {
  const size_t size = truth_table.size();
  if (size < 2 || (size & (size - 1)) != 0) {
    throw InvalidArgument("truth table size must be a power of two >= 2");
  }
  int n = 0;
  while ((size_t{1} << n) < size) ++n;
  if (n > kMaxBooleanArity) {
    throw InvalidArgument("boolean compiler supports n <= " +
                          std::to_string(kMaxBooleanArity));
  }
  for (double v : truth_table) {
    if (!std::isfinite(v)) throw InvalidArgument("truth table is not finite");
  }

  // Fourier coefficients over subsets encoded as bitmasks.
  std::vector<Monomial> monomials;
  for (size_t mask = 0; mask < size; ++mask) {
    double c = 0.0;
    for (size_t b = 0; b < size; ++b) {
      bool odd = (__builtin_popcountll(mask & b) & 1) != 0;
      c += odd ? -truth_table[b] : truth_table[b];
    }
    c /= static_cast<double>(size);
    if (std::abs(c) < 1e-15) continue;
    Monomial m{c, {}, 0, {}};
    for (int i = 0; i < n; ++i)
      if (mask & (size_t{1} << i)) m.vars.push_back(i);
    monomials.push_back(std::move(m));
  }

  const int hidden = std::max(n - 1, 1);
  std::vector<Signal> x(n);
  for (int i = 0; i < n; ++i) x[i] = Unit(i);
  std::vector<Matrix> layers;
  int width = n;
  for (int t = 0; t < hidden; ++t) {
    LayerBuilder layer(width);
    std::vector<int> pos(n), neg(n);
    for (int i = 0; i < n; ++i) {
      pos[i] = layer.Add(x[i]);
      neg[i] = layer.Add(Combine({{-1.0, &x[i]}}));
    }
    for (Monomial& m : monomials) {
      if (m.vars.empty()) {
        // The constant 1 is |x_0| on the hypercube, then carried by phi.
        if (t == 0) {
          m.product = {{pos[0], 1.0}, {neg[0], 1.0}};
        } else {
          m.product = Unit(layer.Add(m.product));
        }
        continue;
      }
      if (m.next == 0) {
        m.product = x[m.vars[0]];
        m.next = 1;
      }
      if (m.next < m.vars.size()) {
        // x1 x2 = phi(x1 + x2) + phi(-x1 - x2) - phi(x2) - phi(-x2).
        int v = m.vars[m.next++];
        Signal sum = Combine({{1.0, &m.product}, {1.0, &x[v]}});
        Signal neg_sum = Combine({{-1.0, &sum}});
        int a = layer.Add(sum);
        int b = layer.Add(neg_sum);
        m.product = {{a, 1.0}, {b, 1.0}, {pos[v], -1.0}, {neg[v], -1.0}};
      } else {
        Signal minus = Combine({{-1.0, &m.product}});
        int a = layer.Add(m.product);
        int b = layer.Add(minus);
        m.product = {{a, 1.0}, {b, -1.0}};
      }
    }
    for (int i = 0; i < n; ++i) x[i] = {{pos[i], 1.0}, {neg[i], -1.0}};
    layers.push_back(layer.Build());
    width = layer.width();
  }
  Matrix out = Matrix::Zero(1, width);
  for (const Monomial& m : monomials)
    for (const auto& [i, v] : m.product) out(0, i) += m.coef * v;
  layers.push_back(out);
  return ReluNetwork(std::move(layers));
}

ReluNetwork ClipWeights(const ReluNetwork& net, double eta) {
  if (!(eta >= 0) || !std::isfinite(eta)) {
    throw InvalidArgument("clip threshold must be >= 0");
  }
  std::vector<Matrix> layers = net.layers();
  for (Matrix& W : layers) {
    W = W.unaryExpr([eta](double w) { return std::abs(w) <= eta ? 0.0 : w; });
  }
  return ReluNetwork(std::move(layers), net.meta());
}

}  // namespace fpca
