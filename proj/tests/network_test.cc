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

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace fpca {
namespace {

constexpr double kTol = 1e-9;

Matrix Mat(int rows, int cols, std::initializer_list<double> values) {
  Matrix m(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

Vector Vec(std::initializer_list<double> values) {
  Vector v(values.size());
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

Vector RandomGaussian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

// Straight-line forward pass used as the oracle.
double ReferenceEval(const ReluNetwork& net, const Vector& x) {
  Vector h = x;
  for (int i = 0; i < net.num_layers(); ++i) {
    h = net.layer(i) * h;
    if (i + 1 < net.num_layers()) {
      for (int j = 0; j < h.size(); ++j) h(j) = h(j) > 0 ? h(j) : 0.0;
    }
  }
  return h(0);
}

TEST(ReluNetworkTest, SingleReluIsZeroOnNegativeInput) {
  ReluNetwork net({Mat(1, 1, {1}), Mat(1, 1, {1})});
  EXPECT_EQ(net.Eval(Vec({-1})), 0.0);
  EXPECT_EQ(net.Eval(Vec({2.5})), 2.5);
}

TEST(ReluNetworkTest, ZeroInputGivesZero) {
  ReluNetwork net = RandomNetwork(6, {4, 3}, 2.0, 1);
  EXPECT_EQ(net.Eval(Vector::Zero(6)), 0.0);
}

TEST(ReluNetworkTest, ShapesAndSize) {
  ReluNetwork net = RandomNetwork(5, {4, 3, 2}, 1.0, 2);
  EXPECT_EQ(net.input_dim(), 5);
  EXPECT_EQ(net.depth(), 2);
  EXPECT_EQ(net.size(), 9);
  EXPECT_EQ(net.architecture(), (Architecture{4, 3, 2}));
}

TEST(ReluNetworkTest, RejectsBadShapes) {
  EXPECT_THROW(ReluNetwork({Mat(2, 3, {1, 2, 3, 4, 5, 6})}), InvalidArgument);
  EXPECT_THROW(ReluNetwork({Mat(2, 3, {1, 2, 3, 4, 5, 6}), Mat(1, 3, {1, 1, 1})}),
               InvalidArgument);
  EXPECT_THROW(ReluNetwork({Mat(1, 1, {1}), Mat(2, 1, {1, 1})}), InvalidArgument);
}

TEST(ReluNetworkTest, RejectsDimensionMismatch) {
  ReluNetwork net = RandomNetwork(3, {2}, 1.0, 3);
  EXPECT_THROW(net.Eval(Vector::Zero(4)), InvalidArgument);
  EXPECT_THROW(net.EvalBatch(Matrix::Zero(2, 5)), InvalidArgument);
}

TEST(ReluNetworkTest, MatchesReferenceForwardPass) {
  std::mt19937_64 rng(7);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    ReluNetwork net = RandomNetwork(4, {3, 2}, 1.5, seed);
    Matrix X(4, 50);
    for (int j = 0; j < 50; ++j) X.col(j) = RandomGaussian(4, rng);
    Vector batch = net.EvalBatch(X);
    for (int j = 0; j < 50; ++j) {
      double want = ReferenceEval(net, X.col(j));
      EXPECT_NEAR(net.Eval(X.col(j)), want, kTol * (1 + std::abs(want)));
      EXPECT_NEAR(batch(j), want, kTol * (1 + std::abs(want)));
    }
  }
}

TEST(ReluNetworkTest, PositivelyHomogeneous) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(0.0, 10.0);
  for (uint64_t seed = 0; seed < 50; ++seed) {
    ReluNetwork net = RandomNetwork(5, {4, 3}, 1.3, seed);
    Vector x = RandomGaussian(5, rng);
    double lambda = scale(rng);
    double fx = net.Eval(x);
    EXPECT_NEAR(net.Eval(lambda * x), lambda * fx, kTol * (1 + std::abs(lambda * fx)));
  }
}

TEST(LipschitzUpperTest, ProductOfOperatorNorms) {
  EXPECT_NEAR(LipschitzUpper(ReluNetwork({Mat(1, 1, {1}), Mat(1, 1, {1})})), 1.0, kTol);
  ReluNetwork net({Mat(2, 2, {2, 0, 0, 1}), Mat(1, 2, {3, 0})});
  EXPECT_NEAR(LipschitzUpper(net), 6.0, kTol);
}

TEST(LipschitzUpperTest, BoundsRandomPairs) {
  std::mt19937_64 rng(13);
  ReluNetwork net = RandomNetwork(6, {5, 4}, 1.7, 4);
  double bound = LipschitzUpper(net);
  for (int t = 0; t < 10000; ++t) {
    Vector x = RandomGaussian(6, rng);
    Vector xp = RandomGaussian(6, rng);
    EXPECT_LE(std::abs(net.Eval(x) - net.Eval(xp)), bound * (x - xp).norm() + kTol);
  }
}

TEST(LipschitzUpperTest, InvariantUnderHiddenPermutation) {
  ReluNetwork net = RandomNetwork(4, {3, 2}, 1.0, 5);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
  perm.indices() << 2, 0, 1;
  std::vector<Matrix> layers = net.layers();
  layers[0] = perm * layers[0];
  layers[1] = layers[1] * perm.transpose();
  ReluNetwork permuted(layers);
  EXPECT_NEAR(LipschitzUpper(permuted), LipschitzUpper(net), 1e-12);
  Vector x = Vector::LinSpaced(4, -1, 2);
  EXPECT_NEAR(permuted.Eval(x), net.Eval(x), kTol);
}

TEST(RestrictTest, FullFrameKeepsValues) {
  std::mt19937_64 rng(17);
  ReluNetwork net = RandomNetwork(5, {3}, 1.0, 6);
  ReluNetwork r = Restrict(net, Frame(Matrix::Identity(5, 5)));
  for (int t = 0; t < 1000; ++t) {
    Vector x = RandomGaussian(5, rng);
    EXPECT_NEAR(r.Eval(x), net.Eval(x), kTol);
  }
}

TEST(RestrictTest, EmptyFrameIsZero) {
  std::mt19937_64 rng(19);
  ReluNetwork r = Restrict(RandomNetwork(5, {3}, 1.0, 7), Frame::Empty(5));
  for (int t = 0; t < 100; ++t) EXPECT_EQ(r.Eval(RandomGaussian(5, rng)), 0.0);
}

TEST(RestrictTest, FirstAxisMatchesMaskedInput) {
  std::mt19937_64 rng(23);
  ReluNetwork net = RandomNetwork(3, {4, 2}, 1.0, 8);
  ReluNetwork r = Restrict(net, Frame(Matrix::Identity(3, 1)));
  for (int t = 0; t < 1000; ++t) {
    Vector x = RandomGaussian(3, rng);
    EXPECT_NEAR(r.Eval(x), net.Eval(Vec({x(0), 0, 0})), kTol);
  }
}

TEST(RestrictTest, Composes) {
  std::mt19937_64 rng(29);
  ReluNetwork net = RandomNetwork(6, {3, 3}, 1.0, 9);
  Matrix raw(6, 2);
  for (int j = 0; j < 2; ++j) raw.col(j) = RandomGaussian(6, rng);
  Frame W = Frame::Orthonormalize(raw);
  ReluNetwork once = Restrict(net, W);
  ReluNetwork twice = Restrict(once, W);
  for (int t = 0; t < 200; ++t) {
    Vector x = RandomGaussian(6, rng);
    EXPECT_NEAR(twice.Eval(x), once.Eval(x), kTol);
    EXPECT_NEAR(once.Eval(x), net.Eval(W.Project(x)), kTol);
  }
}

TEST(RestrictTest, RejectsDimensionMismatch) {
  EXPECT_THROW(Restrict(RandomNetwork(3, {2}, 1.0, 0), Frame::Empty(4)), InvalidArgument);
}

TEST(RandomNetworkTest, DeterministicPerSeed) {
  EXPECT_TRUE(RandomNetwork(5, {3, 2}, 1.0, 42) == RandomNetwork(5, {3, 2}, 1.0, 42));
  EXPECT_FALSE(RandomNetwork(5, {3, 2}, 1.0, 42) == RandomNetwork(5, {3, 2}, 1.0, 43));
}

TEST(RandomNetworkTest, LayerNormsAtMostB) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    ReluNetwork net = RandomNetwork(7, {4, 3, 2}, 0.8, seed);
    for (const Matrix& W : net.layers()) {
      Eigen::JacobiSVD<Matrix> svd(W);
      EXPECT_LE(svd.singularValues()(0), 0.8 + kTol);
    }
  }
}

TEST(RandomNetworkTest, FirstLayerHasFullRowRank) {
  ReluNetwork net = RandomNetwork(5, {2, 1}, 1.0, 10);
  Eigen::FullPivLU<Matrix> lu(net.layer(0));
  EXPECT_EQ(lu.rank(), 2);
  ASSERT_TRUE(net.meta().rank.has_value());
  EXPECT_EQ(*net.meta().rank, 2);
}

TEST(SpikeNetworkTest, HandEvaluatedPoints) {
  for (double Lambda : {10.0, 100.0}) {
    ReluNetwork net = SpikeNetwork(Lambda);
    EXPECT_NEAR(net.Eval(Vec({0, 1 / Lambda})), 0.0, kTol);
    EXPECT_NEAR(net.Eval(Vec({1, 1 / Lambda})), 6.0, kTol);
    for (double t : {0.1, 1.0, 7.0}) EXPECT_EQ(net.Eval(Vec({-t, -t})), 0.0);
  }
}

TEST(SpikeNetworkTest, RejectsNonPositiveLambda) {
  EXPECT_THROW(SpikeNetwork(0.0), InvalidArgument);
  EXPECT_THROW(SpikeNetwork(-1.0), InvalidArgument);
}

std::vector<double> TableOf(int n, auto f) {
  std::vector<double> table(size_t{1} << n);
  for (size_t b = 0; b < table.size(); ++b) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = (b >> i) & 1 ? -1.0 : 1.0;
    table[b] = f(x);
  }
  return table;
}

void ExpectAgreesOnCube(const ReluNetwork& net, const std::vector<double>& table) {
  int n = net.input_dim();
  for (size_t b = 0; b < table.size(); ++b) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = (b >> i) & 1 ? -1.0 : 1.0;
    EXPECT_NEAR(net.Eval(x), table[b], kTol) << "corner " << b;
  }
}

TEST(CompileBooleanTest, And) {
  auto table = TableOf(2, [](const std::vector<double>& x) {
    return x[0] > 0 && x[1] > 0 ? 1.0 : -1.0;
  });
  ExpectAgreesOnCube(CompileBoolean(table), table);
}

TEST(CompileBooleanTest, Parity) {
  auto table = TableOf(3, [](const std::vector<double>& x) { return x[0] * x[1] * x[2]; });
  ReluNetwork net = CompileBoolean(table);
  EXPECT_EQ(net.input_dim(), 3);
  ExpectAgreesOnCube(net, table);
}

TEST(CompileBooleanTest, Constant) {
  std::vector<double> table(4, 1.0);
  ExpectAgreesOnCube(CompileBoolean(table), table);
}

TEST(CompileBooleanTest, RandomTablesUpToCap) {
  std::mt19937_64 rng(31);
  std::bernoulli_distribution coin;
  for (int n = 1; n <= kMaxBooleanArity; ++n) {
    std::vector<double> table(size_t{1} << n);
    for (double& v : table) v = coin(rng) ? 1.0 : -1.0;
    ExpectAgreesOnCube(CompileBoolean(table), table);
  }
}

TEST(CompileBooleanTest, RejectsBadSizes) {
  EXPECT_THROW(CompileBoolean({1, -1, 1}), InvalidArgument);
  EXPECT_THROW(CompileBoolean({1}), InvalidArgument);
  EXPECT_THROW(CompileBoolean(std::vector<double>(size_t{1} << (kMaxBooleanArity + 1), 1.0)),
               InvalidArgument);
}

TEST(ClipWeightsTest, ZeroThresholdIsIdentity) {
  ReluNetwork net = RandomNetwork(4, {3}, 1.0, 12);
  EXPECT_TRUE(ClipWeights(net, 0.0) == net);
}

TEST(ClipWeightsTest, LargeThresholdZeroesEverything) {
  ReluNetwork net = RandomNetwork(4, {3}, 1.0, 13);
  ReluNetwork clipped = ClipWeights(net, 10.0);
  for (const Matrix& W : clipped.layers()) EXPECT_TRUE(W.isZero(0.0));
}

TEST(ClipWeightsTest, SignAgreementWithNearbyReference) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  constexpr double kEta = 0.1;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    ReluNetwork ref = RandomNetwork(4, {3, 3}, 0.5, seed);
    std::vector<Matrix> noisy = ref.layers();
    for (Matrix& W : noisy) {
      for (int i = 0; i < W.rows(); ++i)
        for (int j = 0; j < W.cols(); ++j) W(i, j) += kEta * unit(rng);
    }
    ReluNetwork clipped = ClipWeights(ReluNetwork(noisy), kEta);
    for (int l = 0; l < ref.num_layers(); ++l) {
      const Matrix& V = ref.layer(l);
      const Matrix& C = clipped.layer(l);
      for (int i = 0; i < V.rows(); ++i)
        for (int j = 0; j < V.cols(); ++j) EXPECT_GE(V(i, j) * C(i, j), 0.0);
    }
  }
}

}  // namespace
}  // namespace fpca
