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

#include "fpca/lattice.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace fpca {
namespace {

using ::testing::ElementsAre;

constexpr double kTol = 1e-9;

Matrix RandomGaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Independent evaluation straight from the definition.
double MaxMin(const Matrix& leaves, const std::vector<Clause>& clauses, const Vector& x) {
  double best = -1e300;
  for (const Clause& c : clauses) {
    double lo = 1e300;
    for (int i : c) lo = std::min(lo, leaves.row(i).dot(x));
    best = std::max(best, lo);
  }
  return best;
}

LatticePolynomial RandomLattice(int n, int M, int m, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, M - 1);
  std::vector<Clause> clauses(m);
  for (Clause& c : clauses) {
    int size = 1 + pick(rng) % 3;
    for (int s = 0; s < size; ++s) c.push_back(pick(rng));
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  return LatticePolynomial(RandomGaussian(M, n, rng), clauses);
}

TEST(LatticePolynomialTest, ValidatesClauses) {
  Matrix leaves = Matrix::Identity(2, 2);
  EXPECT_THROW(LatticePolynomial(leaves, {}), InvalidArgument);
  EXPECT_THROW(LatticePolynomial(leaves, {{}}), InvalidArgument);
  EXPECT_THROW(LatticePolynomial(leaves, {{2}}), InvalidArgument);
  EXPECT_THROW(LatticePolynomial(Matrix(0, 2), {{0}}), InvalidArgument);
}

TEST(LatticePolynomialTest, ReluStructure) {
  std::mt19937_64 rng(1);
  Vector w = RandomGaussian(3, 1, rng);
  Matrix leaves(2, 3);
  leaves << w.transpose(), Matrix::Zero(1, 3);
  LatticePolynomial g(leaves, {{0}, {1}});
  for (int t = 0; t < 100; ++t) {
    Vector x = RandomGaussian(3, 1, rng);
    EXPECT_NEAR(g.Eval(x), std::max(w.dot(x), 0.0), kTol);
  }
}

TEST(LatticePolynomialTest, SingleLeafIsLinear) {
  Matrix leaf(1, 2);
  leaf << 2, -3;
  LatticePolynomial g(leaf, {{0}});
  Vector x(2);
  x << 1.5, 0.5;
  EXPECT_NEAR(g.Eval(x), 1.5, kTol);
}

TEST(LatticePolynomialTest, EvalMatchesDefinitionAndIsHomogeneous) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> scale(0, 5);
  for (int t = 0; t < 50; ++t) {
    LatticePolynomial g = RandomLattice(4, 5, 3, rng);
    Matrix X = RandomGaussian(4, 20, rng);
    Vector batch = g.EvalBatch(X);
    for (int j = 0; j < 20; ++j) {
      Vector x = X.col(j);
      double want = MaxMin(g.leaves(), g.clauses(), x);
      EXPECT_NEAR(g.Eval(x), want, kTol);
      EXPECT_NEAR(batch(j), want, kTol);
      double lambda = scale(rng);
      EXPECT_NEAR(g.Eval(lambda * x), lambda * want, kTol * (1 + lambda));
    }
  }
}

TEST(LatticePolynomialTest, RejectsDimensionMismatch) {
  LatticePolynomial g(Matrix::Identity(2, 2), {{0, 1}});
  EXPECT_THROW(g.Eval(Vector::Zero(3)), InvalidArgument);
}

TEST(ReluWrapTest, AppendsZeroLeafAndIsIdempotentPointwise) {
  std::mt19937_64 rng(3);
  LatticePolynomial g = RandomLattice(3, 4, 3, rng);
  LatticePolynomial once = ReluWrap(g);
  LatticePolynomial twice = ReluWrap(once);
  EXPECT_EQ(once.num_leaves(), g.num_leaves() + 1);
  EXPECT_TRUE(once.leaf(g.num_leaves()).isZero(0.0));
  EXPECT_THAT(once.clauses().back(), ElementsAre(g.num_leaves()));
  for (int t = 0; t < 10000; ++t) {
    Vector x = RandomGaussian(3, 1, rng);
    double want = std::max(g.Eval(x), 0.0);
    EXPECT_NEAR(once.Eval(x), want, kTol);
    EXPECT_NEAR(twice.Eval(x), want, kTol);
  }
}

TEST(ScaleTest, PositiveKeepsClauses) {
  std::mt19937_64 rng(4);
  LatticePolynomial g = RandomLattice(3, 4, 3, rng);
  LatticePolynomial one = Scale(g, 1.0);
  EXPECT_EQ(one.clauses(), g.clauses());
  EXPECT_EQ(one.leaves(), g.leaves());
  LatticePolynomial three = Scale(g, 3.0);
  EXPECT_EQ(three.clauses(), g.clauses());
}

TEST(ScaleTest, NegationUsesTransversals) {
  // max(a, min(b, c)) with leaves a, b, c.
  Matrix leaves(3, 2);
  leaves << 1, 0, 0, 1, 1, 1;
  LatticePolynomial g(leaves, {{0}, {1, 2}});
  LatticePolynomial neg = Scale(g, -1.0);
  EXPECT_THAT(neg.clauses(), ElementsAre(Clause{0, 1}, Clause{0, 2}));
  EXPECT_EQ(neg.leaves(), -leaves);
}

TEST(ScaleTest, NegativeScaleMatchesPointwise) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    LatticePolynomial g = RandomLattice(3, 5, 4, rng);
    LatticePolynomial h = Scale(g, -2.0);
    LatticePolynomial back = Scale(Scale(g, -1.0), -1.0);
    for (int s = 0; s < 1000; ++s) {
      Vector x = RandomGaussian(3, 1, rng);
      double gx = g.Eval(x);
      EXPECT_NEAR(h.Eval(x), -2.0 * gx, kTol * (1 + std::abs(gx)));
      EXPECT_NEAR(back.Eval(x), gx, kTol * (1 + std::abs(gx)));
    }
  }
}

TEST(ScaleTest, ClauseBudgetEnforced) {
  // Ten disjoint pairs give 2^10 transversals.
  std::vector<Clause> clauses;
  for (int i = 0; i < 10; ++i) clauses.push_back({2 * i, 2 * i + 1});
  LatticePolynomial g(Matrix::Identity(20, 20), clauses);
  EXPECT_THROW(Scale(g, -1.0, {.max_clauses = 100}), BudgetError);
  EXPECT_EQ(Scale(g, -1.0).num_clauses(), 1024);
}

TEST(SumTest, PairOfMaxima) {
  Matrix left(2, 1), right(2, 1);
  left << 1, 2;
  right << 10, 20;
  LatticePolynomial a(left, {{0}, {1}}), b(right, {{0}, {1}});
  LatticePolynomial s = Sum({a, b});
  ASSERT_EQ(s.num_leaves(), 4);
  EXPECT_THAT(std::vector<double>(s.leaves().data(), s.leaves().data() + 4),
              ElementsAre(11, 21, 12, 22));
  EXPECT_THAT(s.clauses(), ElementsAre(Clause{0}, Clause{1}, Clause{2}, Clause{3}));
}

TEST(SumTest, ZeroSummandKeepsValues) {
  std::mt19937_64 rng(6);
  LatticePolynomial g = RandomLattice(3, 4, 3, rng);
  LatticePolynomial zero(Matrix::Zero(1, 3), {{0}});
  LatticePolynomial s = Sum({g, zero});
  for (int t = 0; t < 100; ++t) {
    Vector x = RandomGaussian(3, 1, rng);
    EXPECT_NEAR(s.Eval(x), g.Eval(x), kTol);
  }
}

TEST(SumTest, ThreeRandomTerms) {
  std::mt19937_64 rng(7);
  LatticePolynomial a = RandomLattice(4, 3, 2, rng);
  LatticePolynomial b = RandomLattice(4, 4, 3, rng);
  LatticePolynomial c = RandomLattice(4, 2, 2, rng);
  LatticePolynomial s = Sum({a, b, c});
  EXPECT_EQ(s.num_leaves(), 3 * 4 * 2);
  EXPECT_EQ(s.num_clauses(), 2 * 3 * 2);
  for (int t = 0; t < 10000; ++t) {
    Vector x = RandomGaussian(4, 1, rng);
    double want = a.Eval(x) + b.Eval(x) + c.Eval(x);
    EXPECT_NEAR(s.Eval(x), want, kTol * (1 + std::abs(want)));
  }
}

TEST(SumTest, RejectsMismatchedDimensions) {
  LatticePolynomial a(Matrix::Zero(1, 2), {{0}}), b(Matrix::Zero(1, 3), {{0}});
  EXPECT_THROW(Sum({a, b}), InvalidArgument);
}

TEST(FromNetworkTest, SingleRelu) {
  Matrix W0(1, 3), W1(1, 1);
  W0 << 1, -2, 0.5;
  W1 << 1;
  LatticePolynomial g = FromNetwork(ReluNetwork({W0, W1}));
  ASSERT_EQ(g.num_leaves(), 2);
  std::vector<Vector> leaves = {g.leaf(0), g.leaf(1)};
  bool has_w = false, has_zero = false;
  for (const Vector& v : leaves) {
    has_w |= (v - W0.row(0).transpose()).norm() < kTol;
    has_zero |= v.isZero(kTol);
  }
  EXPECT_TRUE(has_w && has_zero);
}

TEST(FromNetworkTest, DepthTwoSumOfRelus) {
  std::mt19937_64 rng(8);
  Matrix W0 = RandomGaussian(3, 4, rng);
  Matrix W1(1, 3);
  W1 << 1.5, -0.7, 0.3;
  ReluNetwork net({W0, W1});
  LatticePolynomial g = FromNetwork(net);
  EXPECT_EQ(g.num_leaves(), 8);
  for (int t = 0; t < 10000; ++t) {
    Vector x = RandomGaussian(4, 1, rng);
    double want = net.Eval(x);
    EXPECT_NEAR(g.Eval(x), want, kTol * (1 + std::abs(want)));
  }
}

TEST(FromNetworkTest, SpikeNetworkAgrees) {
  std::mt19937_64 rng(9);
  ReluNetwork net = SpikeNetwork(10.0);
  LatticePolynomial g = FromNetwork(net);
  for (int t = 0; t < 10000; ++t) {
    Vector x = RandomGaussian(2, 1, rng);
    double want = net.Eval(x);
    EXPECT_NEAR(g.Eval(x), want, kTol * (1 + std::abs(want)));
  }
}

TEST(FromNetworkTest, DeepNetworksAgreeAndRespectNormBound) {
  std::mt19937_64 rng(10);
  const std::vector<Architecture> archs = {{2, 2}, {3, 1, 2}, {1, 1, 1}, {4, 2}};
  for (size_t a = 0; a < archs.size(); ++a) {
    ReluNetwork net = RandomNetwork(3, archs[a], 1.2, a);
    LatticePolynomial g = FromNetwork(net);
    EXPECT_LE(LeafNormBound(g), LipschitzUpper(net) + kTol);
    for (int t = 0; t < 2000; ++t) {
      Vector x = RandomGaussian(3, 1, rng);
      double want = net.Eval(x);
      EXPECT_NEAR(g.Eval(x), want, kTol * (1 + std::abs(want)));
    }
  }
}

TEST(FromNetworkTest, ShallowLeafCountIsTwoToTheS) {
  EXPECT_EQ(FromNetwork(RandomNetwork(3, {5}, 1.0, 11)).num_leaves(), 32);
  EXPECT_EQ(FromNetworkLeafCount({5}), 32);
}

TEST(FromNetworkTest, LeafBudgetEnforced) {
  EXPECT_THROW(FromNetwork(RandomNetwork(3, {13}, 1.0, 12)), BudgetError);
}

// Same signs entrywise, different magnitudes.
ReluNetwork SignAligned(const ReluNetwork& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> factor(0.2, 3.0);
  std::vector<Matrix> layers = net.layers();
  for (Matrix& W : layers)
    for (int i = 0; i < W.rows(); ++i)
      for (int j = 0; j < W.cols(); ++j) W(i, j) *= factor(rng);
  return ReluNetwork(layers);
}

TEST(FromNetworkTest, ClausesDependOnlyOnSigns) {
  std::mt19937_64 rng(13);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    ReluNetwork net = RandomNetwork(3, {2, 2}, 1.0, seed);
    LatticePolynomial a = FromNetwork(net);
    LatticePolynomial b = FromNetwork(SignAligned(net, rng));
    EXPECT_EQ(a.clauses(), b.clauses());
    EXPECT_EQ(a.num_leaves(), b.num_leaves());
  }
}

TEST(FromNetworkTest, SignReferenceAlignsClippedNetwork) {
  ReluNetwork net = RandomNetwork(3, {3}, 1.0, 14);
  std::vector<Matrix> layers = net.layers();
  layers[1](0, 1) = 0.0;
  ReluNetwork clipped(layers);
  LatticePolynomial a = FromNetwork(net);
  LatticePolynomial b = FromNetwork(clipped, net);
  EXPECT_EQ(a.clauses(), b.clauses());
  Vector x = Vector::LinSpaced(3, -1, 1);
  EXPECT_NEAR(b.Eval(x), clipped.Eval(x), kTol);
}

TEST(StructuralDistanceTest, SelfAndShift) {
  std::mt19937_64 rng(15);
  LatticePolynomial g = RandomLattice(3, 4, 3, rng);
  EXPECT_EQ(StructuralDistance(g, g), 0.0);
  Vector delta(3);
  delta << 0.3, -0.4, 0.0;
  Matrix shifted = g.leaves().rowwise() + delta.transpose();
  EXPECT_NEAR(StructuralDistance(g, LatticePolynomial(shifted, g.clauses())), 0.5, kTol);
}

TEST(StructuralDistanceTest, RejectsDifferentClauses) {
  LatticePolynomial a(Matrix::Identity(2, 2), {{0}, {1}});
  LatticePolynomial b(Matrix::Identity(2, 2), {{0, 1}});
  EXPECT_THROW(StructuralDistance(a, b), IncompatibleRepresentation);
}

TEST(StructuralDistanceTest, CloseLatticesAreCloseInL2) {
  std::mt19937_64 rng(16);
  constexpr double kEta = 0.05;
  constexpr int kSamples = 20000;
  for (int t = 0; t < 10; ++t) {
    int n = 2 + t % 3;
    LatticePolynomial g = RandomLattice(n, 5, 3, rng);
    Matrix noise = RandomGaussian(5, n, rng);
    for (int i = 0; i < 5; ++i) noise.row(i) *= kEta / noise.row(i).norm();
    LatticePolynomial h(g.leaves() + noise, g.clauses());
    ASSERT_NEAR(StructuralDistance(g, h), kEta, kTol);
    Matrix X = RandomGaussian(n, kSamples, rng);
    double l2 = std::sqrt((g.EvalBatch(X) - h.EvalBatch(X)).squaredNorm() / kSamples);
    EXPECT_LE(l2, kEta * std::sqrt(static_cast<double>(n)));
  }
}

TEST(CompactTest, PreservesValues) {
  std::mt19937_64 rng(17);
  ReluNetwork net = RandomNetwork(3, {3, 2}, 1.0, 18);
  LatticePolynomial g = FromNetwork(net);
  LatticePolynomial c = Compact(g);
  EXPECT_LE(c.num_leaves(), g.num_leaves());
  EXPECT_LE(c.num_clauses(), g.num_clauses());
  for (int t = 0; t < 1000; ++t) {
    Vector x = RandomGaussian(3, 1, rng);
    EXPECT_NEAR(c.Eval(x), g.Eval(x), kTol * (1 + std::abs(g.Eval(x))));
  }
}

Vector Values(std::initializer_list<double> v) {
  Vector out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(OrderTypeTest, Examples) {
  EXPECT_THAT(ComputeOrderType(Values({1, 1, 2}), 0).ranks, ElementsAre(1, 1, 2));
  EXPECT_THAT(ComputeOrderType(Values({3, 1, 2}), 0).ranks, ElementsAre(3, 1, 2));
  constexpr double kEps = 1e-6;
  EXPECT_THAT(ComputeOrderType(Values({1.0, 1.0 + kEps, 5}), 2 * kEps).ranks,
              ElementsAre(1, 1, 2));
  EXPECT_THAT(ComputeOrderType(Values({1.0, 1.0 + kEps, 5}), 0).ranks,
              ElementsAre(1, 2, 3));
}

TEST(OrderTypeTest, SingleLinkageChainsMerge) {
  EXPECT_THAT(ComputeOrderType(Values({0.0, 0.9, 1.8, 5.0}), 1.0).ranks,
              ElementsAre(1, 1, 1, 2));
}

// Ordered Bell numbers.
TEST(OrderTypeTest, CountsOfAllOrderTypes) {
  EXPECT_EQ(AllOrderTypes(1).size(), 1u);
  EXPECT_EQ(AllOrderTypes(2).size(), 3u);
  EXPECT_EQ(AllOrderTypes(3).size(), 13u);
  EXPECT_EQ(AllOrderTypes(4).size(), 75u);
  for (size_t i = 0; i < AllOrderTypes(3).size(); ++i) {
    EXPECT_EQ(OrderTypeIndex(AllOrderTypes(3)[i]), static_cast<int>(i));
  }
}

TEST(SelectorKickerTest, SingleLeafIsLinear) {
  Matrix leaf(1, 2);
  leaf << 1, -1;
  SelectorKicker s(leaf, {0});
  Vector x = Values({3, 1});
  EXPECT_NEAR(s.Eval(x), 2.0, kTol);
}

TEST(SelectorKickerTest, EqualLeavesGiveCommonValue) {
  Matrix leaves(3, 2);
  leaves << 1, 2, 1, 2, 1, 2;
  std::vector<int> table(AllOrderTypes(3).size(), -1);
  table[OrderTypeIndex(OrderType{{1, 1, 1}})] = 2;
  SelectorKicker s(leaves, table);
  EXPECT_NEAR(s.Eval(Values({1, 1})), 3.0, kTol);
}

TEST(SelectorKickerTest, MissingEntryIsAnError) {
  Matrix leaves(2, 1);
  leaves << 1, -1;
  std::vector<int> table = {0, -1, -1};
  SelectorKicker s(leaves, table);
  EXPECT_THROW(s.Eval(Values({1})), EvaluationError);
}

TEST(SelectorKickerTest, FromLatticeAgreesEverywhere) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 5; ++t) {
    LatticePolynomial g = RandomLattice(3, 4, 3, rng);
    SelectorKicker s = SelectorFromLattice(g);
    Matrix X = RandomGaussian(3, 10000, rng);
    Vector got = s.EvalBatch(X);
    for (int j = 0; j < X.cols(); ++j) {
      double want = g.Eval(X.col(j));
      EXPECT_NEAR(got(j), want, kTol * (1 + std::abs(want)));
    }
  }
}

}  // namespace
}  // namespace fpca
