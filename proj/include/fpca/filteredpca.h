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

// Threshold-filtered PCA: recovers the relevant subspace of a function of
// Gaussian inputs one direction at a time, then searches a grid of
// hypotheses over the recovered frame.

#ifndef FPCA_FILTEREDPCA_H_
#define FPCA_FILTEREDPCA_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "fpca/enumeration.h"
#include "fpca/lattice.h"
#include "fpca/network.h"
#include "fpca/subspace.h"

namespace fpca {

struct SampleSet {
  Matrix X;  // d x N, one sample per column
  Vector y;
  uint64_t seed = 0;
  int64_t offset = 0;  // index of the first sample in the oracle stream

  int dim() const { return static_cast<int>(X.rows()); }
  int64_t size() const { return X.cols(); }
};

// Deterministic stream of (x, f(x)) with x ~ N(0, I_d).
class SampleOracle {
 public:
  SampleOracle(int d, BatchFunction target, uint64_t seed);

  SampleSet Draw(int64_t n);
  int dim() const { return d_; }
  uint64_t seed() const { return seed_; }
  int64_t drawn() const { return drawn_; }
  const BatchFunction& target() const { return target_; }

 private:
  int d_;
  BatchFunction target_;
  uint64_t seed_;
  std::mt19937_64 rng_;
  int64_t drawn_ = 0;
};

SampleOracle GaussianOracle(const ReluNetwork& net, uint64_t seed);

enum class Mode { kPractical, kPaperStrict };
enum class HypothesisKind { kNetwork, kKicker };
enum class TauMode { kFormula, kQuantile };

struct LearnConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  int k = 1;
  int S = 2;
  int L = 0;
  double B = 1.0;
  double Lambda = 1.0;
  double c = 2.0;
  // Paper-strict mode needs lambda_bar; practical mode calibrates lambda_acc
  // unless it is given.
  std::optional<double> lambda_bar;
  std::optional<double> lambda_acc;
  double lambda_acc_fraction = 0.25;
  int64_t N = 0;              // 0 selects the mode default
  int64_t N_prime = 0;
  int64_t N_calibration = 0;
  std::optional<double> nu0;
  std::optional<double> xi;
  uint64_t seed = 0;
  Mode mode = Mode::kPractical;
  HypothesisKind hypothesis = HypothesisKind::kNetwork;
  int M = 2;                  // kicker leaf count
  // Practical runs threshold at a quantile of |residual|; paper-strict runs
  // use c sqrt(k) Lambda.
  TauMode tau_mode = TauMode::kQuantile;
  double tau_quantile = 0.9;
  std::optional<double> eps_prime_loop;
  std::optional<double> eps_prime_final;
  EnumBudget budget;          // loop enumeration
  EnumBudget final_budget = {.max_candidates = 10000000};  // terminal search

  double tau() const;
  void Validate() const;
};

// Every constant a run used, resolved from the config.
struct EffectiveConstants {
  double tau = 0;
  double lambda_bar = 0;
  double lambda_acc = 0;
  double nu0 = 0;
  double xi = 0;
  int64_t N = 0;
  int64_t N_prime = 0;
  int64_t N_calibration = 0;
  std::vector<double> eps_prime_loop;  // one per iteration
  double eps_prime_final = 0;
  double svd_eta = 0;
};

struct IterationTrace {
  int ell = 0;
  int64_t accepted_index = -1;  // -1 when nothing was accepted
  double lambda = 0;            // accepted lambda, or the best seen
  int64_t candidates_examined = 0;
  int64_t candidates_total = 0;
  double tau_used = 0;
  bool svd_converged = false;
  std::optional<double> nearness;  // against the planted subspace, if known
};

using Hypothesis = std::variant<ReluNetwork, SelectorKicker>;

struct RecoveryResult {
  Frame frame;
  std::optional<Hypothesis> hypothesis;
  std::vector<IterationTrace> trace;
  double eps_hat = 0;
  bool certified = false;
  int64_t final_candidates_examined = 0;
  int64_t final_candidates_total = 0;
  std::optional<std::string> failure_reason;
  EffectiveConstants constants;
};

Vector EvalHypothesis(const Hypothesis& h, const Matrix& X);

// Pi_perp ((1/N) sum_i 1{|r_i| > tau} (x_i x_i^T - I)) Pi_perp for residuals r.
Matrix FilterMatrixFromResiduals(const Matrix& X, const Vector& residuals,
                                 const Frame& frame, double tau);

// Residuals y_i - candidate(Pi_W x_i).
Matrix FilterMatrix(const SampleSet& samples, const Frame& frame,
                    const BatchFunction& candidate, double tau);

double EstimateL2Error(const BatchFunction& candidate, SampleOracle& oracle,
                       int64_t n_prime);
double EmpiricalL2(const Vector& a, const Vector& b);

// The filter matrix with the true restriction F(Pi_W x) as candidate.
Matrix IdealizedFilterMatrix(SampleOracle& oracle, const ReluNetwork& true_net,
                             const Frame& W, double tau, int64_t N);

EffectiveConstants ResolveConstants(const LearnConfig& config, int d);

// Runs the algorithm. If truth is given, each accepted direction's nearness
// to it is recorded in the trace.
RecoveryResult Run(SampleOracle& oracle, const LearnConfig& config,
                   const std::optional<Frame>& truth = std::nullopt);

// Row space of W_0.
Frame RelevantSubspace(const ReluNetwork& net);

}  // namespace fpca

#endif  // FPCA_FILTEREDPCA_H_
