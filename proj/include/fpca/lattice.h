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

// Max-min (lattice) polynomials over linear leaves, their exact construction
// from ReLU networks, and order-type selectors.

#ifndef FPCA_LATTICE_H_
#define FPCA_LATTICE_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "fpca/common.h"
#include "fpca/network.h"
#include "fpca/subspace.h"

namespace fpca {

using Clause = std::vector<int>;  // sorted leaf indices

// x -> max_j min_{i in I_j} <v_i, x>. Leaves are the rows of an M x n matrix.
class LatticePolynomial {
 public:
  LatticePolynomial(Matrix leaves, std::vector<Clause> clauses);

  int dim() const { return static_cast<int>(leaves_.cols()); }
  int num_leaves() const { return static_cast<int>(leaves_.rows()); }
  int num_clauses() const { return static_cast<int>(clauses_.size()); }
  const Matrix& leaves() const { return leaves_; }
  Vector leaf(int i) const { return leaves_.row(i).transpose(); }
  const std::vector<Clause>& clauses() const { return clauses_; }
  int64_t clause_entries() const;

  double Eval(const Vector& x) const;
  Vector EvalBatch(const Matrix& X) const;

 private:
  Matrix leaves_;
  std::vector<Clause> clauses_;
};

struct LatticeBudget {
  int64_t max_leaves = 4096;
  int64_t max_clauses = 1000000;
  int64_t max_clause_entries = 50000000;
};

// phi(G): appends a zero leaf and the singleton clause selecting it.
LatticePolynomial ReluWrap(const LatticePolynomial& g);

// lambda G. For lambda >= 0 only the leaves change. For lambda < 0 the
// clauses become the minimal transversals of the original clauses.
LatticePolynomial Scale(const LatticePolynomial& g, double lambda,
                        const LatticeBudget& budget = {});

// Pointwise sum. Leaves are all tuples (first summand most significant);
// clauses are products of one clause per summand.
LatticePolynomial Sum(const std::vector<LatticePolynomial>& terms,
                      const LatticeBudget& budget = {});

// Layer-by-layer construction: unit b of layer a+1 is
// sum_b' W_{a+1}[b,b'] phi(unit b' of layer a).
LatticePolynomial FromNetwork(const ReluNetwork& net,
                              const LatticeBudget& budget = {});
// Same, but a zero weight takes the sign of the matching weight in
// sign_reference, so that a clipped network shares the clause structure of
// its reference.
LatticePolynomial FromNetwork(const ReluNetwork& net,
                              const ReluNetwork& sign_reference,
                              const LatticeBudget& budget = {});

// Leaf count produced by FromNetwork for an architecture.
int64_t FromNetworkLeafCount(const Architecture& arch);

// max_i ||v_i - v'_i||; throws IncompatibleRepresentation unless the clause
// lists are identical.
double StructuralDistance(const LatticePolynomial& a, const LatticePolynomial& b);

// Function-preserving cleanup for display: merges identical leaves, drops
// absorbed clauses and unused leaves. Breaks leaf alignment.
LatticePolynomial Compact(const LatticePolynomial& g);

// max_i ||v_i||, an upper bound on the Lipschitz constant.
double LeafNormBound(const LatticePolynomial& g);

// Canonical ranks 1..r of M values; values within tie_tol of a neighbour in
// sorted order share a rank.
struct OrderType {
  std::vector<int> ranks;
  auto operator<=>(const OrderType&) const = default;
};

OrderType ComputeOrderType(const Vector& values, double tie_tol);
double DefaultTieTolerance(const Vector& values);

constexpr int kMaxOrderTypeLeaves = 7;
// All order types of M values in lexicographic order of their rank vectors.
const std::vector<OrderType>& AllOrderTypes(int M);
// Position of an order type in AllOrderTypes.
int OrderTypeIndex(const OrderType& omega);

// Kicker given by leaves u_1..u_M and a table from order types to a leaf.
class SelectorKicker {
 public:
  // table[i] is the selected leaf for AllOrderTypes(M)[i], or -1 if missing.
  SelectorKicker(Matrix leaves, std::vector<int> table);

  int dim() const { return static_cast<int>(leaves_.cols()); }
  int num_leaves() const { return static_cast<int>(leaves_.rows()); }
  const Matrix& leaves() const { return leaves_; }
  const std::vector<int>& table() const { return table_; }

  // Throws EvaluationError if the order type at x has no table entry.
  double Eval(const Vector& x) const;
  double Eval(const Vector& x, double tie_tol) const;
  Vector EvalBatch(const Matrix& X) const;

 private:
  Matrix leaves_;
  std::vector<int> table_;
};

// The selector agreeing with g everywhere. For every order type the rank
// vector itself serves as the witness leaf values.
SelectorKicker SelectorFromLattice(const LatticePolynomial& g);

}  // namespace fpca

#endif  // FPCA_LATTICE_H_
