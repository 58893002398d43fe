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

#include "fpca/enumeration.h"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace fpca {

namespace {

constexpr int64_t kSaturated = std::numeric_limits<int64_t>::max();

int64_t SatMul(int64_t a, int64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

int64_t SatAdd(int64_t a, int64_t b) {
  if (a > kSaturated - b) return kSaturated;
  return a + b;
}

void CheckPositive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be positive");
  }
}

}  // namespace

std::vector<Architecture> Architectures(int S, int L) {
  if (L < 0) throw InvalidArgument("depth must be >= 0");
  if (S < L + 1) throw InvalidArgument("S must be at least L + 1");
  std::vector<Architecture> out;
  Architecture cur;
  std::function<void(int, int)> rec = [&](int parts_left, int sum_left) {
    if (parts_left == 1) {
      cur.push_back(sum_left);
      out.push_back(cur);
      cur.pop_back();
      return;
    }
    for (int k = 1; k <= sum_left - (parts_left - 1); ++k) {
      cur.push_back(k);
      rec(parts_left - 1, sum_left - k);
      cur.pop_back();
    }
  };
  rec(L + 1, S);
  return out;
}

CandidateCursor::CandidateCursor(int64_t total, const EnumBudget& budget)
    : total_(total),
      budget_(budget),
      rng_(budget.seed),
      start_(std::chrono::steady_clock::now()) {
  if (!(budget.subsample_rate > 0) || budget.subsample_rate > 1) {
    throw InvalidArgument("subsample rate must lie in (0, 1]");
  }
  if (budget.paper_strict && budget.subsample_rate != 1.0) {
    throw InvalidArgument("subsampling is disabled in paper-strict mode");
  }
  if (budget.max_candidates < 1) throw InvalidArgument("max_candidates must be >= 1");
  if (budget.subsample_rate == 1.0 && total > budget.max_candidates) {
    throw BudgetError("candidate list has " +
                      (total == kSaturated ? std::string("more than 2^63")
                                           : std::to_string(total)) +
                      " entries, over the budget of " +
                      std::to_string(budget.max_candidates));
  }
}

std::optional<int64_t> CandidateCursor::Next() {
  if (budget_.max_seconds > 0) {
    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start_).count();
    if (elapsed > budget_.max_seconds) {
      throw BudgetError("enumeration wall-clock budget exhausted");
    }
  }
  if (emitted_ >= budget_.max_candidates) {
    truncated_ = position_ + 1 < total_;
    return std::nullopt;
  }
  int64_t step = 1;
  if (budget_.subsample_rate < 1.0) {
    std::geometric_distribution<int64_t> skip(budget_.subsample_rate);
    step = SatAdd(1, skip(rng_));
  }
  if (position_ > total_ - 1 - step) {
    position_ = total_;
    return std::nullopt;
  }
  position_ += step;
  ++emitted_;
  return position_;
}

NetworkCandidates::NetworkCandidates(const Frame& frame, double eps_prime, int S,
                                     int L, double B, const EnumBudget& budget)
    : frame_(frame),
      eps_prime_(eps_prime),
      archs_(Architectures(S, L)),
      cursor_([&] {
        if (frame.size() < 1) throw InvalidArgument("frame must be non-empty");
        CheckPositive(eps_prime, "eps_prime");
        CheckPositive(B, "B");
        return int64_t{0};
      }(), budget) {
  const int l = frame.size();
  const double cover = B + eps_prime;
  auto net_for = [&](int rows, int cols) {
    auto key = std::make_pair(rows, cols);
    if (nets_.count(key)) return;
    std::vector<Matrix> kept;
    for (Matrix& A : EpsilonNetMatrices(rows, cols, cover, eps_prime,
                                        budget.max_net_points)) {
      A = A.unaryExpr([&](double w) { return std::abs(w) <= eps_prime ? 0.0 : w; });
      if (OperatorNorm(A) <= (B + 2 * eps_prime) * (1 + 1e-12)) {
        kept.push_back(std::move(A));
      }
    }
    nets_.emplace(key, std::move(kept));
  };
  int64_t total = 0;
  for (const Architecture& arch : archs_) {
    int64_t count = 1;
    int cols = l;
    for (size_t i = 0; i <= arch.size(); ++i) {
      int rows = i < arch.size() ? arch[i] : 1;
      net_for(rows, cols);
      count = SatMul(count, static_cast<int64_t>(nets_[{rows, cols}].size()));
      cols = rows;
    }
    arch_offsets_.push_back(total);
    total = SatAdd(total, count);
  }
  cursor_ = CandidateCursor(total, budget);
}

std::map<std::pair<int, int>, int64_t> NetworkCandidates::NetSizes() const {
  std::map<std::pair<int, int>, int64_t> out;
  for (const auto& [shape, net] : nets_) out[shape] = static_cast<int64_t>(net.size());
  return out;
}

ReluNetwork NetworkCandidates::At(int64_t index) const {
  if (index < 0 || index >= total()) throw InvalidArgument("candidate index out of range");
  size_t a = archs_.size() - 1;
  while (arch_offsets_[a] > index) --a;
  const Architecture& arch = archs_[a];
  int64_t rest = index - arch_offsets_[a];
  const size_t layers = arch.size() + 1;
  std::vector<const std::vector<Matrix>*> nets(layers);
  int cols = frame_.size();
  for (size_t i = 0; i < layers; ++i) {
    int rows = i < arch.size() ? arch[i] : 1;
    nets[i] = &nets_.at({rows, cols});
    cols = rows;
  }
  std::vector<Matrix> weights(layers);
  for (size_t i = layers; i-- > 0;) {
    int64_t n = static_cast<int64_t>(nets[i]->size());
    weights[i] = (*nets[i])[rest % n];
    rest /= n;
  }
  return ReluNetwork(std::move(weights));
}

std::optional<NetworkCandidate> NetworkCandidates::Next() {
  std::optional<int64_t> index = cursor_.Next();
  if (!index) return std::nullopt;
  return NetworkCandidate{*index, At(*index)};
}

ReluNetwork NetworkCandidates::Lift(const ReluNetwork& coords) const {
  if (coords.input_dim() != frame_.size()) {
    throw InvalidArgument("candidate does not act on frame coordinates");
  }
  std::vector<Matrix> layers = coords.layers();
  layers[0] = coords.layer(0) * frame_.basis().transpose();
  return ReluNetwork(std::move(layers), coords.meta());
}

NetworkCandidates EnumerateNetworks(const Frame& frame, double eps_prime, int S,
                                    int L, double B, const EnumBudget& budget) {
  return NetworkCandidates(frame, eps_prime, S, L, B, budget);
}

KickerCandidates::KickerCandidates(const Frame& frame, double eps_prime, int M,
                                   double Lambda, const EnumBudget& budget)
    : frame_(frame),
      M_(M),
      net_(),
      num_tables_(0),
      num_types_(0),
      cursor_([&] {
        if (frame.size() < 1) throw InvalidArgument("frame must be non-empty");
        if (M < 1) throw InvalidArgument("M must be >= 1");
        CheckPositive(eps_prime, "eps_prime");
        CheckPositive(Lambda, "Lambda");
        return int64_t{0};
      }(), budget) {
  num_types_ = static_cast<int>(AllOrderTypes(M).size());
  num_tables_ = 1;
  for (int i = 0; i < num_types_; ++i) num_tables_ = SatMul(num_tables_, M);
  if (num_tables_ == kSaturated) {
    throw BudgetError("selector tables for M = " + std::to_string(M) +
                      " overflow the candidate index space");
  }
  net_ = EpsilonNetBall(frame.size(), Lambda, eps_prime * Lambda,
                        budget.max_net_points);
  int64_t tuples = 1;
  for (int i = 0; i < M; ++i) tuples = SatMul(tuples, static_cast<int64_t>(net_.size()));
  int64_t total = SatMul(tuples, num_tables_);
  if (total == kSaturated) throw BudgetError("kicker candidate count overflows");
  cursor_ = CandidateCursor(total, budget);
}

SelectorKicker KickerCandidates::At(int64_t index) const {
  if (index < 0 || index >= total()) throw InvalidArgument("candidate index out of range");
  int64_t table_index = index % num_tables_;
  int64_t tuple_index = index / num_tables_;
  const int l = frame_.size();
  Matrix leaves(M_, l);
  const int64_t n = static_cast<int64_t>(net_.size());
  for (int i = M_; i-- > 0;) {
    leaves.row(i) = net_[tuple_index % n].transpose();
    tuple_index /= n;
  }
  std::vector<int> table(num_types_);
  for (int t = num_types_; t-- > 0;) {
    table[t] = static_cast<int>(table_index % M_);
    table_index /= M_;
  }
  return SelectorKicker(std::move(leaves), std::move(table));
}

std::optional<KickerCandidate> KickerCandidates::Next() {
  std::optional<int64_t> index = cursor_.Next();
  if (!index) return std::nullopt;
  return KickerCandidate{*index, At(*index)};
}

SelectorKicker KickerCandidates::Lift(const SelectorKicker& coords) const {
  if (coords.dim() != frame_.size()) {
    throw InvalidArgument("candidate does not act on frame coordinates");
  }
  return SelectorKicker(coords.leaves() * frame_.basis().transpose(), coords.table());
}

KickerCandidates EnumerateKickers(const Frame& frame, double eps_prime, int M,
                                  double Lambda, const EnumBudget& budget) {
  return KickerCandidates(frame, eps_prime, M, Lambda, budget);
}

}  // namespace fpca
