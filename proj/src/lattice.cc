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
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

namespace fpca {

LatticePolynomial::LatticePolynomial(Matrix leaves, std::vector<Clause> clauses)
    : leaves_(std::move(leaves)), clauses_(std::move(clauses)) {
  if (leaves_.rows() < 1) throw InvalidArgument("lattice needs a leaf");
  if (leaves_.cols() < 1) throw InvalidArgument("lattice dimension is 0");
  if (clauses_.empty()) throw InvalidArgument("lattice needs a clause");
  if (!leaves_.allFinite()) throw InvalidArgument("lattice leaves are not finite");
  for (Clause& c : clauses_) {
    if (c.empty()) throw InvalidArgument("empty clause");
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    if (c.front() < 0 || c.back() >= leaves_.rows()) {
      throw InvalidArgument("clause index out of range");
    }
  }
}

int64_t LatticePolynomial::clause_entries() const {
  int64_t n = 0;
  for (const Clause& c : clauses_) n += static_cast<int64_t>(c.size());
  return n;
}

double LatticePolynomial::Eval(const Vector& x) const {
  if (x.size() != dim()) throw InvalidArgument("input dimension mismatch");
  Vector values = leaves_ * x;
  double best = -std::numeric_limits<double>::infinity();
  for (const Clause& c : clauses_) {
    double m = std::numeric_limits<double>::infinity();
    for (int i : c) m = std::min(m, values(i));
    best = std::max(best, m);
  }
  return best;
}

namespace {

// Identical leaves share one index and repeated clauses are dropped; the
// function is unchanged.
void MergeDuplicates(const Matrix& leaves, const std::vector<Clause>& clauses,
                     Matrix* merged_leaves, std::vector<Clause>* merged_clauses) {
  std::map<std::vector<double>, int> seen;
  std::vector<int> remap(leaves.rows());
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < leaves.rows(); ++i) {
    std::vector<double> key(leaves.cols());
    for (Eigen::Index j = 0; j < leaves.cols(); ++j) key[j] = leaves(i, j);
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(rows.size()));
    if (inserted) rows.push_back(i);
    remap[i] = it->second;
  }
  *merged_leaves = Matrix(rows.size(), leaves.cols());
  for (size_t r = 0; r < rows.size(); ++r) merged_leaves->row(r) = leaves.row(rows[r]);
  merged_clauses->clear();
  merged_clauses->reserve(clauses.size());
  for (const Clause& c : clauses) {
    Clause r;
    r.reserve(c.size());
    for (int i : c) r.push_back(remap[i]);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    merged_clauses->push_back(std::move(r));
  }
  std::sort(merged_clauses->begin(), merged_clauses->end());
  merged_clauses->erase(std::unique(merged_clauses->begin(), merged_clauses->end()),
                        merged_clauses->end());
}

}  // namespace

Vector LatticePolynomial::EvalBatch(const Matrix& X) const {
  if (X.rows() != dim()) throw InvalidArgument("input dimension mismatch");
  const Eigen::Index n = X.cols();
  const Matrix* leaves = &leaves_;
  const std::vector<Clause>* clauses = &clauses_;
  Matrix merged_leaves;
  std::vector<Clause> merged_clauses;
  if (n >= 256 && clause_entries() >= 1024) {
    MergeDuplicates(leaves_, clauses_, &merged_leaves, &merged_clauses);
    leaves = &merged_leaves;
    clauses = &merged_clauses;
  }
  Vector out(n);
  // Blocks of points keep the leaf values of a block in cache.
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    // rows x M, so each leaf is a contiguous column.
    Matrix values = X.middleCols(start, rows).transpose() * leaves->transpose();
    Vector best = Vector::Constant(rows, -std::numeric_limits<double>::infinity());
    Vector m(rows);
    for (const Clause& c : *clauses) {
      m = values.col(c[0]);
      for (size_t j = 1; j < c.size(); ++j) m = m.cwiseMin(values.col(c[j]));
      best = best.cwiseMax(m);
    }
    out.segment(start, rows) = best;
  }
  return out;
}

LatticePolynomial ReluWrap(const LatticePolynomial& g) {
  Matrix leaves(g.num_leaves() + 1, g.dim());
  leaves << g.leaves(), Matrix::Zero(1, g.dim());
  std::vector<Clause> clauses = g.clauses();
  clauses.push_back({g.num_leaves()});
  return LatticePolynomial(std::move(leaves), std::move(clauses));
}

namespace {

class Bits {
 public:
  explicit Bits(int n) : words_((n + 63) / 64, 0) {}
  void Set(int i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }
  bool Intersects(const Bits& o) const {
    for (size_t w = 0; w < words_.size(); ++w)
      if (words_[w] & o.words_[w]) return true;
    return false;
  }
  bool SubsetOf(const Bits& o) const {
    for (size_t w = 0; w < words_.size(); ++w)
      if (words_[w] & ~o.words_[w]) return false;
    return true;
  }
  int Count() const {
    int c = 0;
    for (uint64_t w : words_) c += __builtin_popcountll(w);
    return c;
  }
  Clause Indices() const {
    Clause out;
    for (size_t w = 0; w < words_.size(); ++w) {
      uint64_t bits = words_[w];
      while (bits) {
        int b = __builtin_ctzll(bits);
        out.push_back(static_cast<int>(w * 64 + b));
        bits &= bits - 1;
      }
    }
    return out;
  }

 private:
  std::vector<uint64_t> words_;
};

// Minimal sets meeting every clause, in lexicographic order.
std::vector<Clause> MinimalTransversals(const std::vector<Clause>& clauses,
                                        int num_leaves,
                                        const LatticeBudget& budget) {
  std::vector<Bits> family{Bits(num_leaves)};
  for (const Clause& c : clauses) {
    Bits cb(num_leaves);
    for (int i : c) cb.Set(i);
    std::vector<Bits> next;
    std::vector<Bits> extended;
    for (const Bits& t : family) {
      if (t.Intersects(cb)) {
        next.push_back(t);
      } else {
        for (int i : c) {
          Bits e = t;
          e.Set(i);
          extended.push_back(std::move(e));
        }
      }
    }
    std::stable_sort(extended.begin(), extended.end(),
                     [](const Bits& a, const Bits& b) { return a.Count() < b.Count(); });
    for (Bits& e : extended) {
      bool absorbed = false;
      for (const Bits& f : next) {
        if (f.SubsetOf(e)) {
          absorbed = true;
          break;
        }
      }
      if (!absorbed) next.push_back(std::move(e));
      if (static_cast<int64_t>(next.size()) > budget.max_clauses) {
        throw BudgetError("lattice clause budget exceeded in negation (" +
                          std::to_string(budget.max_clauses) + ")");
      }
    }
    family = std::move(next);
  }
  std::vector<Clause> out;
  out.reserve(family.size());
  for (const Bits& b : family) out.push_back(b.Indices());
  std::sort(out.begin(), out.end());
  return out;
}

LatticePolynomial ScaleImpl(const LatticePolynomial& g, double lambda,
                            bool negate_clauses, const LatticeBudget& budget) {
  if (!std::isfinite(lambda)) throw InvalidArgument("scale must be finite");
  Matrix leaves = lambda * g.leaves();
  if (!negate_clauses) return LatticePolynomial(std::move(leaves), g.clauses());
  std::vector<Clause> clauses =
      MinimalTransversals(g.clauses(), g.num_leaves(), budget);
  int64_t entries = 0;
  for (const Clause& c : clauses) entries += static_cast<int64_t>(c.size());
  if (entries > budget.max_clause_entries) {
    throw BudgetError("lattice clause-entry budget exceeded in negation");
  }
  return LatticePolynomial(std::move(leaves), std::move(clauses));
}

int64_t SaturatingMul(int64_t a, int64_t b) {
  if (a != 0 && b > std::numeric_limits<int64_t>::max() / a) {
    return std::numeric_limits<int64_t>::max();
  }
  return a * b;
}

LatticePolynomial FromNetworkImpl(const ReluNetwork& net,
                                  const ReluNetwork* reference,
                                  const LatticeBudget& budget) {
  if (reference && reference->architecture() != net.architecture()) {
    throw InvalidArgument("sign reference has a different architecture");
  }
  if (reference && reference->input_dim() != net.input_dim()) {
    throw InvalidArgument("sign reference has a different input dimension");
  }
  const Matrix& W0 = net.layer(0);
  std::vector<LatticePolynomial> units;
  for (int b = 0; b < W0.rows(); ++b) {
    units.emplace_back(W0.row(b), std::vector<Clause>{{0}});
  }
  for (int a = 1; a < net.num_layers(); ++a) {
    const Matrix& W = net.layer(a);
    std::vector<LatticePolynomial> wrapped;
    for (const LatticePolynomial& u : units) wrapped.push_back(ReluWrap(u));
    std::vector<LatticePolynomial> next;
    for (int b = 0; b < W.rows(); ++b) {
      std::vector<LatticePolynomial> terms;
      for (int c = 0; c < W.cols(); ++c) {
        double w = W(b, c);
        double sign = w;
        if (w == 0.0 && reference) sign = reference->layer(a)(b, c);
        terms.push_back(ScaleImpl(wrapped[c], w, sign < 0, budget));
      }
      next.push_back(Sum(terms, budget));
    }
    units = std::move(next);
  }
  return units.front();
}

}  // namespace

LatticePolynomial Scale(const LatticePolynomial& g, double lambda,
                        const LatticeBudget& budget) {
  return ScaleImpl(g, lambda, lambda < 0, budget);
}

LatticePolynomial Sum(const std::vector<LatticePolynomial>& terms,
                      const LatticeBudget& budget) {
  if (terms.empty()) throw InvalidArgument("sum of no terms");
  const int n = terms.front().dim();
  int64_t leaves = 1, clauses = 1, entries = 1;
  for (const LatticePolynomial& t : terms) {
    if (t.dim() != n) throw InvalidArgument("summands differ in dimension");
    leaves = SaturatingMul(leaves, t.num_leaves());
    clauses = SaturatingMul(clauses, t.num_clauses());
    entries = SaturatingMul(entries, t.clause_entries());
  }
  if (leaves > budget.max_leaves) {
    throw BudgetError("lattice leaf budget exceeded (" + std::to_string(leaves) +
                      " > " + std::to_string(budget.max_leaves) + ")");
  }
  if (clauses > budget.max_clauses) {
    throw BudgetError("lattice clause budget exceeded (" +
                      std::to_string(clauses) + " > " +
                      std::to_string(budget.max_clauses) + ")");
  }
  if (entries > budget.max_clause_entries) {
    throw BudgetError("lattice clause-entry budget exceeded");
  }

  Matrix acc = terms.front().leaves();
  std::vector<Clause> acc_clauses = terms.front().clauses();
  for (size_t t = 1; t < terms.size(); ++t) {
    const Matrix& next = terms[t].leaves();
    const int m = static_cast<int>(next.rows());
    Matrix combined(acc.rows() * m, n);
    for (Eigen::Index i = 0; i < acc.rows(); ++i)
      for (int j = 0; j < m; ++j) combined.row(i * m + j) = acc.row(i) + next.row(j);
    std::vector<Clause> combined_clauses;
    combined_clauses.reserve(acc_clauses.size() * terms[t].num_clauses());
    for (const Clause& a : acc_clauses) {
      for (const Clause& b : terms[t].clauses()) {
        Clause c;
        c.reserve(a.size() * b.size());
        for (int i : a)
          for (int j : b) c.push_back(i * m + j);
        combined_clauses.push_back(std::move(c));
      }
    }
    acc = std::move(combined);
    acc_clauses = std::move(combined_clauses);
  }
  return LatticePolynomial(std::move(acc), std::move(acc_clauses));
}

LatticePolynomial FromNetwork(const ReluNetwork& net, const LatticeBudget& budget) {
  return FromNetworkImpl(net, nullptr, budget);
}

LatticePolynomial FromNetwork(const ReluNetwork& net,
                              const ReluNetwork& sign_reference,
                              const LatticeBudget& budget) {
  return FromNetworkImpl(net, &sign_reference, budget);
}

int64_t FromNetworkLeafCount(const Architecture& arch) {
  int64_t per_unit = 1;
  for (int k : arch) {
    int64_t next = 1;
    for (int i = 0; i < k; ++i) {
      next = SaturatingMul(next, per_unit == std::numeric_limits<int64_t>::max()
                                     ? per_unit
                                     : per_unit + 1);
    }
    per_unit = next;
  }
  return per_unit;
}

double StructuralDistance(const LatticePolynomial& a, const LatticePolynomial& b) {
  if (a.dim() != b.dim() || a.num_leaves() != b.num_leaves() ||
      a.clauses() != b.clauses()) {
    throw IncompatibleRepresentation("lattice polynomials have different clauses");
  }
  return (a.leaves() - b.leaves()).rowwise().norm().maxCoeff();
}

LatticePolynomial Compact(const LatticePolynomial& g) {
  std::map<std::vector<double>, int> seen;
  std::vector<int> remap(g.num_leaves());
  std::vector<int> representative;
  for (int i = 0; i < g.num_leaves(); ++i) {
    Vector v = g.leaf(i);
    std::vector<double> key(v.data(), v.data() + v.size());
    auto [it, inserted] = seen.emplace(key, static_cast<int>(representative.size()));
    if (inserted) representative.push_back(i);
    remap[i] = it->second;
  }
  std::vector<Clause> clauses;
  for (const Clause& c : g.clauses()) {
    Clause r;
    for (int i : c) r.push_back(remap[i]);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    clauses.push_back(std::move(r));
  }
  std::sort(clauses.begin(), clauses.end(), [](const Clause& a, const Clause& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  clauses.erase(std::unique(clauses.begin(), clauses.end()), clauses.end());
  std::vector<Clause> kept;
  for (const Clause& c : clauses) {
    bool absorbed = false;
    for (const Clause& k : kept) {
      if (std::includes(c.begin(), c.end(), k.begin(), k.end())) {
        absorbed = true;
        break;
      }
    }
    if (!absorbed) kept.push_back(c);
  }
  std::vector<int> used_index(representative.size(), -1);
  std::vector<int> used;
  for (const Clause& c : kept)
    for (int i : c)
      if (used_index[i] < 0) {
        used_index[i] = 0;
        used.push_back(i);
      }
  std::sort(used.begin(), used.end());
  for (size_t j = 0; j < used.size(); ++j) used_index[used[j]] = static_cast<int>(j);
  Matrix leaves(used.size(), g.dim());
  for (size_t j = 0; j < used.size(); ++j) {
    leaves.row(j) = g.leaves().row(representative[used[j]]);
  }
  for (Clause& c : kept)
    for (int& i : c) i = used_index[i];
  std::sort(kept.begin(), kept.end());
  return LatticePolynomial(std::move(leaves), std::move(kept));
}

double LeafNormBound(const LatticePolynomial& g) {
  return g.leaves().rowwise().norm().maxCoeff();
}

OrderType ComputeOrderType(const Vector& values, double tie_tol) {
  const int m = static_cast<int>(values.size());
  if (m == 0) throw InvalidArgument("order type of no values");
  if (!values.allFinite()) throw InvalidArgument("order type of non-finite values");
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return values(a) < values(b); });
  OrderType out;
  out.ranks.assign(m, 0);
  int rank = 1;
  out.ranks[idx[0]] = rank;
  for (int j = 1; j < m; ++j) {
    if (values(idx[j]) - values(idx[j - 1]) > tie_tol) ++rank;
    out.ranks[idx[j]] = rank;
  }
  return out;
}

double DefaultTieTolerance(const Vector& values) {
  return 1e-12 * values.cwiseAbs().maxCoeff();
}

namespace {

std::vector<OrderType> GenerateOrderTypes(int M) {
  std::vector<OrderType> out;
  std::vector<int> ranks(M);
  std::function<void(int)> rec = [&](int i) {
    if (i == M) {
      int top = *std::max_element(ranks.begin(), ranks.end());
      std::vector<bool> hit(top + 1, false);
      for (int r : ranks) hit[r] = true;
      for (int r = 1; r <= top; ++r)
        if (!hit[r]) return;
      out.push_back(OrderType{ranks});
      return;
    }
    for (int v = 1; v <= M; ++v) {
      ranks[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace

const std::vector<OrderType>& AllOrderTypes(int M) {
  if (M < 1) throw InvalidArgument("order types need M >= 1");
  if (M > kMaxOrderTypeLeaves) {
    throw BudgetError("order types for M > " + std::to_string(kMaxOrderTypeLeaves) +
                      " are not enumerated");
  }
  static std::mutex mu;
  static std::map<int, std::vector<OrderType>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(M);
  if (it == cache.end()) it = cache.emplace(M, GenerateOrderTypes(M)).first;
  return it->second;
}

int OrderTypeIndex(const OrderType& omega) {
  const auto& all = AllOrderTypes(static_cast<int>(omega.ranks.size()));
  auto it = std::lower_bound(all.begin(), all.end(), omega);
  if (it == all.end() || *it != omega) throw InvalidArgument("not an order type");
  return static_cast<int>(it - all.begin());
}

SelectorKicker::SelectorKicker(Matrix leaves, std::vector<int> table)
    : leaves_(std::move(leaves)), table_(std::move(table)) {
  if (leaves_.rows() < 1 || leaves_.cols() < 1) {
    throw InvalidArgument("selector needs leaves");
  }
  if (!leaves_.allFinite()) throw InvalidArgument("selector leaves not finite");
  const auto& all = AllOrderTypes(num_leaves());
  if (table_.size() != all.size()) {
    throw InvalidArgument("selector table must cover every order type slot");
  }
  for (int v : table_) {
    if (v < -1 || v >= num_leaves()) throw InvalidArgument("bad selector entry");
  }
}

double SelectorKicker::Eval(const Vector& x) const {
  if (x.size() != dim()) throw InvalidArgument("input dimension mismatch");
  Vector values = leaves_ * x;
  return Eval(x, DefaultTieTolerance(values));
}

double SelectorKicker::Eval(const Vector& x, double tie_tol) const {
  if (x.size() != dim()) throw InvalidArgument("input dimension mismatch");
  Vector values = leaves_ * x;
  int pick = table_[OrderTypeIndex(ComputeOrderType(values, tie_tol))];
  if (pick < 0) throw EvaluationError("order type missing from selector table");
  return values(pick);
}

Vector SelectorKicker::EvalBatch(const Matrix& X) const {
  if (X.rows() != dim()) throw InvalidArgument("input dimension mismatch");
  Matrix values = leaves_ * X;
  Vector out(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Vector v = values.col(j);
    int pick = table_[OrderTypeIndex(ComputeOrderType(v, DefaultTieTolerance(v)))];
    if (pick < 0) throw EvaluationError("order type missing from selector table");
    out(j) = v(pick);
  }
  return out;
}

SelectorKicker SelectorFromLattice(const LatticePolynomial& g) {
  const auto& all = AllOrderTypes(g.num_leaves());
  std::vector<int> table(all.size());
  for (size_t t = 0; t < all.size(); ++t) {
    const std::vector<int>& r = all[t].ranks;
    int best_rank = -1, best_leaf = -1;
    for (const Clause& c : g.clauses()) {
      int leaf = c[0];
      for (int i : c)
        if (r[i] < r[leaf]) leaf = i;
      if (r[leaf] > best_rank) {
        best_rank = r[leaf];
        best_leaf = leaf;
      }
    }
    table[t] = best_leaf;
  }
  return SelectorKicker(g.leaves(), std::move(table));
}

}  // namespace fpca
