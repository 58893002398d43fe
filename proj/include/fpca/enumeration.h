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

// Lazy candidate lists over a frame: networks built from matrix epsilon-nets
// and selector kickers built from vector epsilon-nets.

#ifndef FPCA_ENUMERATION_H_
#define FPCA_ENUMERATION_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "fpca/lattice.h"
#include "fpca/network.h"
#include "fpca/subspace.h"

namespace fpca {

struct EnumBudget {
  int64_t max_candidates = 1000000;
  double max_seconds = 0;       // 0 disables the wall-clock limit
  double subsample_rate = 1.0;  // 1 emits every candidate
  uint64_t seed = 0;
  int64_t max_net_points = 1000000;
  bool paper_strict = false;    // forbids subsampling
};

// Positive compositions of S into L+1 parts, in lexicographic order.
std::vector<Architecture> Architectures(int S, int L);

// Walks candidate indices 0..total-1, optionally as a seeded Bernoulli
// subsequence, and enforces the budget.
class CandidateCursor {
 public:
  CandidateCursor(int64_t total, const EnumBudget& budget);
  // Next index to emit, or nullopt when exhausted. Throws BudgetError when the
  // wall-clock limit is hit.
  std::optional<int64_t> Next();
  int64_t total() const { return total_; }
  int64_t emitted() const { return emitted_; }
  // True when the candidate cap stopped a subsampled walk early.
  bool truncated() const { return truncated_; }

 private:
  int64_t total_;
  EnumBudget budget_;
  std::mt19937_64 rng_;
  int64_t position_ = -1;
  int64_t emitted_ = 0;
  bool truncated_ = false;
  std::chrono::steady_clock::time_point start_;
};

struct NetworkCandidate {
  int64_t index;
  ReluNetwork net;  // input dimension is the frame size
};

// Networks of size S and depth L whose first layer acts on frame
// coordinates. Layer nets cover operator norm B + eps_prime at granularity
// eps_prime and every weight is clipped at eps_prime.
class NetworkCandidates {
 public:
  NetworkCandidates(const Frame& frame, double eps_prime, int S, int L, double B,
                    const EnumBudget& budget = {});

  std::optional<NetworkCandidate> Next();
  // Random access by candidate index.
  ReluNetwork At(int64_t index) const;
  // The candidate as a network on R^d.
  ReluNetwork Lift(const ReluNetwork& coords) const;

  int64_t total() const { return cursor_.total(); }
  int64_t emitted() const { return cursor_.emitted(); }
  bool truncated() const { return cursor_.truncated(); }
  double eps_prime() const { return eps_prime_; }
  const std::vector<Architecture>& architectures() const { return archs_; }
  // Number of points in the net used for each layer shape.
  std::map<std::pair<int, int>, int64_t> NetSizes() const;

 private:
  Frame frame_;
  double eps_prime_;
  std::vector<Architecture> archs_;
  std::vector<int64_t> arch_offsets_;
  std::map<std::pair<int, int>, std::vector<Matrix>> nets_;
  CandidateCursor cursor_;
};

NetworkCandidates EnumerateNetworks(const Frame& frame, double eps_prime, int S,
                                    int L, double B, const EnumBudget& budget = {});

struct KickerCandidate {
  int64_t index;
  SelectorKicker kicker;  // leaves in frame coordinates
};

// M-tuples of vectors from an (eps_prime Lambda)-net of the radius-Lambda
// ball in frame coordinates, crossed with every selector table.
class KickerCandidates {
 public:
  KickerCandidates(const Frame& frame, double eps_prime, int M, double Lambda,
                   const EnumBudget& budget = {});

  std::optional<KickerCandidate> Next();
  SelectorKicker At(int64_t index) const;
  SelectorKicker Lift(const SelectorKicker& coords) const;

  int64_t total() const { return cursor_.total(); }
  int64_t emitted() const { return cursor_.emitted(); }
  bool truncated() const { return cursor_.truncated(); }
  int64_t net_size() const { return static_cast<int64_t>(net_.size()); }
  int64_t num_tables() const { return num_tables_; }

 private:
  Frame frame_;
  int M_;
  std::vector<Vector> net_;
  int64_t num_tables_;
  int num_types_;
  CandidateCursor cursor_;
};

KickerCandidates EnumerateKickers(const Frame& frame, double eps_prime, int M,
                                  double Lambda, const EnumBudget& budget = {});

}  // namespace fpca

#endif  // FPCA_ENUMERATION_H_
