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

#include "fpca/filteredpca.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fpca {

SampleOracle::SampleOracle(int d, BatchFunction target, uint64_t seed)
    : d_(d), target_(std::move(target)), seed_(seed), rng_(seed) {
  if (d < 1) throw InvalidArgument("oracle dimension must be positive");
  if (!target_) throw InvalidArgument("oracle needs a target function");
}

SampleSet SampleOracle::Draw(int64_t n) {
  if (n < 1) throw InvalidArgument("must draw at least one sample");
  std::normal_distribution<double> normal;
  SampleSet s;
  s.X.resize(d_, n);
  for (int64_t j = 0; j < n; ++j)
    for (int i = 0; i < d_; ++i) s.X(i, j) = normal(rng_);
  s.y = target_(s.X);
  if (s.y.size() != n || !s.y.allFinite()) {
    throw EvaluationError("target returned malformed labels");
  }
  s.seed = seed_;
  s.offset = drawn_;
  drawn_ += n;
  return s;
}

SampleOracle GaussianOracle(const ReluNetwork& net, uint64_t seed) {
  return SampleOracle(
      net.input_dim(), [net](const Matrix& X) { return net.EvalBatch(X); }, seed);
}

double LearnConfig::tau() const { return c * std::sqrt(static_cast<double>(k)) * Lambda; }

void LearnConfig::Validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v > 0 && v < 1)) throw InvalidArgument(std::string(name) + " must lie in (0, 1)");
  };
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(name) + " must be positive");
    }
  };
  unit(epsilon, "epsilon");
  unit(delta, "delta");
  if (k < 0) throw InvalidArgument("k must be >= 0");
  if (L < 0 || S < L + 1) throw InvalidArgument("need L >= 0 and S >= L + 1");
  positive(B, "B");
  positive(Lambda, "Lambda");
  positive(c, "c");
  if (M < 1) throw InvalidArgument("M must be >= 1");
  if (N < 0 || N_prime < 0 || N_calibration < 0) {
    throw InvalidArgument("sample sizes must be >= 0");
  }
  if (!(lambda_acc_fraction > 0)) throw InvalidArgument("lambda_acc_fraction must be > 0");
  if (!(tau_quantile > 0 && tau_quantile < 1)) {
    throw InvalidArgument("tau_quantile must lie in (0, 1)");
  }
  if (lambda_bar) positive(*lambda_bar, "lambda_bar");
  if (lambda_acc && !(*lambda_acc >= 0)) throw InvalidArgument("lambda_acc must be >= 0");
  if (eps_prime_loop) positive(*eps_prime_loop, "eps_prime_loop");
  if (eps_prime_final) positive(*eps_prime_final, "eps_prime_final");
  if (mode == Mode::kPaperStrict) {
    if (!lambda_bar) throw InvalidArgument("paper-strict mode requires lambda_bar");
    if (tau_mode != TauMode::kFormula) {
      throw InvalidArgument("paper-strict mode uses the formula threshold only");
    }
    if (budget.subsample_rate != 1.0 || final_budget.subsample_rate != 1.0) {
      throw InvalidArgument("subsampling is disabled in paper-strict mode");
    }
  }
}

Vector EvalHypothesis(const Hypothesis& h, const Matrix& X) {
  return std::visit([&](const auto& f) { return f.EvalBatch(X); }, h);
}

Matrix FilterMatrixFromResiduals(const Matrix& X, const Vector& residuals,
                                 const Frame& frame, double tau) {
  const int d = static_cast<int>(X.rows());
  const int64_t n = X.cols();
  if (n < 1) throw InvalidArgument("empty sample set");
  if (residuals.size() != n) throw InvalidArgument("residual count mismatch");
  if (frame.ambient_dim() != d) throw InvalidArgument("frame dimension mismatch");
  if (!(tau >= 0)) throw InvalidArgument("tau must be >= 0");
  int64_t selected = 0;
  for (int64_t i = 0; i < n; ++i)
    if (std::abs(residuals(i)) > tau) ++selected;
  Matrix M = Matrix::Zero(d, d);
  if (selected > 0) {
    Matrix Xs(d, selected);
    int64_t j = 0;
    for (int64_t i = 0; i < n; ++i)
      if (std::abs(residuals(i)) > tau) Xs.col(j++) = X.col(i);
    M = Xs * Xs.transpose();
    M.diagonal().array() -= static_cast<double>(selected);
    M /= static_cast<double>(n);
  }
  if (frame.size() > 0) {
    Matrix P = frame.ComplementProjector();
    M = P * M * P;
  }
  return 0.5 * (M + M.transpose());
}

Matrix FilterMatrix(const SampleSet& samples, const Frame& frame,
                    const BatchFunction& candidate, double tau) {
  if (samples.size() < 1) throw InvalidArgument("empty sample set");
  if (!(tau > 0)) throw InvalidArgument("tau must be positive");
  Vector pred = candidate(frame.size() > 0 ? frame.Project(samples.X)
                                           : Matrix::Zero(samples.dim(), samples.size()));
  return FilterMatrixFromResiduals(samples.X, samples.y - pred, frame, tau);
}

double EmpiricalL2(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0) throw InvalidArgument("size mismatch");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double EstimateL2Error(const BatchFunction& candidate, SampleOracle& oracle,
                       int64_t n_prime) {
  SampleSet s = oracle.Draw(n_prime);
  return EmpiricalL2(s.y, candidate(s.X));
}

Matrix IdealizedFilterMatrix(SampleOracle& oracle, const ReluNetwork& true_net,
                             const Frame& W, double tau, int64_t N) {
  ReluNetwork restricted = Restrict(true_net, W);
  SampleSet s = oracle.Draw(N);
  return FilterMatrix(s, W, [&](const Matrix& X) { return restricted.EvalBatch(X); },
                      tau);
}

Frame RelevantSubspace(const ReluNetwork& net) {
  Eigen::JacobiSVD<Matrix> svd(net.layer(0), Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s(r) > 1e-10 * std::max(1.0, s(0))) ++r;
  Matrix V = svd.matrixV().leftCols(r);
  return Frame::Orthonormalize(V);
}

namespace {

int64_t CeilCount(double v) {
  if (!(v < 1e15)) return static_cast<int64_t>(1e15);
  return std::max<int64_t>(1, static_cast<int64_t>(std::ceil(v)));
}

double EffectiveM(const LearnConfig& config) {
  if (config.hypothesis == HypothesisKind::kKicker) return config.M;
  return std::pow(2.0, config.S);
}

// nu_0 and xi from their functional forms with unit constants.
void FillNuXi(const LearnConfig& config, EffectiveConstants* out) {
  const double k = std::max(config.k, 1);
  const double M = EffectiveM(config);
  out->nu0 = config.nu0.value_or(
      std::min(1.0, std::pow(out->lambda_bar / (k * M), k) / config.Lambda));
  double base = std::sqrt(out->nu0 * k) * M * M / config.c;
  out->xi = config.xi.value_or(
      std::max(k * std::pow(base, 1.0 - 1.0 / k), std::sqrt(out->nu0 * k)));
}

double Quantile(const Vector& v, double q) {
  std::vector<double> a(v.data(), v.data() + v.size());
  for (double& x : a) x = std::abs(x);
  size_t pos = static_cast<size_t>(std::floor(q * (a.size() - 1)));
  std::nth_element(a.begin(), a.begin() + pos, a.end());
  return a[pos];
}

Hypothesis ZeroHypothesis(const LearnConfig& config, int d) {
  if (config.hypothesis == HypothesisKind::kKicker) {
    return SelectorKicker(Matrix::Zero(1, d), {0});
  }
  return ReluNetwork({Matrix::Zero(1, d), Matrix::Zero(1, 1)});
}

}  // namespace

EffectiveConstants ResolveConstants(const LearnConfig& config, int d) {
  config.Validate();
  EffectiveConstants out;
  const bool strict = config.mode == Mode::kPaperStrict;
  const bool network = config.hypothesis == HypothesisKind::kNetwork;
  const double k = std::max(config.k, 1);
  out.tau = config.tau();
  if (strict) {
    out.lambda_bar = *config.lambda_bar;
    out.lambda_acc = config.lambda_acc.value_or(9.0 * out.lambda_bar / 16.0);
  } else if (config.lambda_acc) {
    out.lambda_acc = *config.lambda_acc;
    out.lambda_bar = 16.0 * out.lambda_acc / 9.0;
  } else if (config.lambda_bar) {
    out.lambda_bar = *config.lambda_bar;
    out.lambda_acc = 9.0 * out.lambda_bar / 16.0;
  }
  FillNuXi(config, &out);
  if (config.N > 0) {
    out.N = config.N;
  } else if (strict) {
    out.N = CeilCount(std::max<double>(d, std::log(2 * k / config.delta)) /
                      (out.xi * out.xi));
  } else {
    out.N = 100000;
  }
  const double reach = network ? std::pow(config.B, 2.0 * (config.L + 2))
                               : config.Lambda * config.Lambda;
  double nprime = reach * k / (config.epsilon * config.epsilon) *
                  std::log(1.0 / config.delta);
  if (config.N_prime > 0) {
    out.N_prime = config.N_prime;
  } else if (strict) {
    out.N_prime = CeilCount(nprime);
  } else {
    out.N_prime = std::clamp<int64_t>(CeilCount(nprime), 2000, 1000000);
  }
  out.N_calibration = config.N_calibration > 0 ? config.N_calibration : out.N;
  for (int ell = 0; ell < config.k; ++ell) {
    double e;
    if (strict) {
      e = 2.0 * std::sqrt(out.nu0) * ell * (network ? std::sqrt(k) * config.B : 1.0);
    } else {
      e = config.eps_prime_loop.value_or(network ? 0.25 * config.B : 0.25);
    }
    out.eps_prime_loop.push_back(e);
  }
  if (strict) {
    out.eps_prime_final =
        network ? std::pow(config.B, -config.L - 1.0) * std::pow(2.0, -config.L) *
                      config.epsilon / std::sqrt(k)
                : config.epsilon / (2.0 * std::sqrt(k) * config.Lambda);
  } else {
    out.eps_prime_final =
        config.eps_prime_final.value_or(network ? 0.15 * config.B : 0.15);
  }
  out.svd_eta = out.lambda_bar > 0 ? out.lambda_bar / 1000.0 : 1e-3;
  return out;
}

RecoveryResult Run(SampleOracle& oracle, const LearnConfig& config,
                   const std::optional<Frame>& truth) {
  const int d = oracle.dim();
  RecoveryResult result;
  result.constants = ResolveConstants(config, d);
  EffectiveConstants& K = result.constants;
  const bool network = config.hypothesis == HypothesisKind::kNetwork;
  if (truth && truth->ambient_dim() != d) {
    throw InvalidArgument("planted subspace dimension differs from the oracle");
  }

  auto tau_for = [&](const Vector& residual) {
    if (config.tau_mode == TauMode::kQuantile) return Quantile(residual, config.tau_quantile);
    return K.tau;
  };
  auto svd_options = [&](int64_t list_size, int ell) {
    TopSvdOptions o;
    o.eta = std::min(K.svd_eta, 0.5);
    o.delta = std::min(0.5, config.delta / (2.0 * std::max<int64_t>(list_size, 1) *
                                            std::max(config.k, 1)));
    o.seed = config.seed + 7919u * static_cast<uint64_t>(ell + 1);
    return o;
  };

  if (config.mode == Mode::kPractical && !config.lambda_acc && !config.lambda_bar &&
      config.k > 0) {
    SampleSet cal = oracle.Draw(K.N_calibration);
    Matrix M0 = FilterMatrixFromResiduals(cal.X, cal.y, Frame::Empty(d), tau_for(cal.y));
    TopSvdResult top = ApproxTopSvd(M0, 1, svd_options(1, -1));
    K.lambda_acc = config.lambda_acc_fraction * top.singular_values(0);
    K.lambda_bar = 16.0 * K.lambda_acc / 9.0;
    K.svd_eta = K.lambda_bar > 0 ? K.lambda_bar / 1000.0 : 1e-3;
    FillNuXi(config, &K);
  }

  Frame frame = Frame::Empty(d);
  for (int ell = 0; ell < config.k; ++ell) {
    SampleSet s = oracle.Draw(K.N);
    IterationTrace tr;
    tr.ell = ell;
    bool accepted = false;
    Vector accepted_w;

    // Returns true when the candidate's residuals yield an accepted direction.
    auto consider = [&](int64_t index, const Vector& residual, int64_t list_size) {
      double tau = tau_for(residual);
      Matrix M = FilterMatrixFromResiduals(s.X, residual, frame, tau);
      TopSvdResult top = ApproxTopSvd(M, 1, svd_options(list_size, ell));
      Vector w = top.vectors.vector(0);
      if (frame.size() > 0) w = frame.ComplementProject(w);
      double norm = w.norm();
      if (norm < 1e-8) return false;
      w /= norm;
      double lambda = w.dot(M * w);
      tr.lambda = tr.candidates_examined == 0 ? lambda : std::max(tr.lambda, lambda);
      ++tr.candidates_examined;
      if (lambda >= K.lambda_acc && lambda > 0) {
        tr.accepted_index = index;
        tr.lambda = lambda;
        tr.tau_used = tau;
        tr.svd_converged = top.converged;
        accepted_w = w;
        return true;
      }
      return false;
    };

    try {
      if (ell == 0) {
        tr.candidates_total = 1;
        accepted = consider(0, s.y, 1);
      } else {
        Matrix Z = frame.Coordinates(s.X);
        if (network) {
          NetworkCandidates list = EnumerateNetworks(frame, K.eps_prime_loop[ell],
                                                     config.S, config.L, config.B,
                                                     config.budget);
          tr.candidates_total = list.total();
          while (auto cand = list.Next()) {
            if ((accepted = consider(cand->index, s.y - cand->net.EvalBatch(Z),
                                     list.total()))) {
              break;
            }
          }
        } else {
          KickerCandidates list = EnumerateKickers(frame, K.eps_prime_loop[ell],
                                                   config.M, config.Lambda,
                                                   config.budget);
          tr.candidates_total = list.total();
          while (auto cand = list.Next()) {
            if ((accepted = consider(cand->index, s.y - cand->kicker.EvalBatch(Z),
                                     list.total()))) {
              break;
            }
          }
        }
      }
    } catch (const BudgetError& e) {
      result.failure_reason = std::string("iteration ") + std::to_string(ell) + ": " +
                              e.what();
      result.trace.push_back(tr);
      break;
    }
    if (!accepted) {
      result.trace.push_back(tr);
      break;
    }
    frame = frame.Append(accepted_w);
    if (truth) tr.nearness = FrameNearness(Frame(accepted_w), *truth);
    result.trace.push_back(tr);
  }
  result.frame = frame;

  // Terminal search over hypotheses on the recovered frame.
  SampleSet s = oracle.Draw(K.N_prime);
  const double target = 3.0 * config.epsilon;
  if (frame.size() == 0) {
    Hypothesis zero = ZeroHypothesis(config, d);
    result.eps_hat = EmpiricalL2(s.y, EvalHypothesis(zero, s.X));
    result.certified = result.eps_hat <= target;
    result.hypothesis = std::move(zero);
    result.final_candidates_examined = 1;
    result.final_candidates_total = 1;
    return result;
  }
  Matrix Z = frame.Coordinates(s.X);
  double best = std::numeric_limits<double>::infinity();
  try {
    if (network) {
      NetworkCandidates list = EnumerateNetworks(frame, K.eps_prime_final, config.S,
                                                 config.L, config.B, config.final_budget);
      result.final_candidates_total = list.total();
      std::optional<ReluNetwork> best_net;
      try {
        while (auto cand = list.Next()) {
          ++result.final_candidates_examined;
          double e = EmpiricalL2(s.y, cand->net.EvalBatch(Z));
          if (e < best) {
            best = e;
            best_net = cand->net;
          }
          if (e <= target) break;
        }
      } catch (const BudgetError& e) {
        result.failure_reason = std::string("final search: ") + e.what();
      }
      if (best_net) result.hypothesis = list.Lift(*best_net);
    } else {
      KickerCandidates list = EnumerateKickers(frame, K.eps_prime_final, config.M,
                                               config.Lambda, config.final_budget);
      result.final_candidates_total = list.total();
      std::optional<SelectorKicker> best_kicker;
      try {
        while (auto cand = list.Next()) {
          ++result.final_candidates_examined;
          double e = EmpiricalL2(s.y, cand->kicker.EvalBatch(Z));
          if (e < best) {
            best = e;
            best_kicker = cand->kicker;
          }
          if (e <= target) break;
        }
      } catch (const BudgetError& e) {
        result.failure_reason = std::string("final search: ") + e.what();
      }
      if (best_kicker) result.hypothesis = list.Lift(*best_kicker);
    }
  } catch (const BudgetError& e) {
    result.failure_reason = std::string("final search: ") + e.what();
  }
  if (!result.hypothesis) {
    Hypothesis zero = ZeroHypothesis(config, d);
    best = EmpiricalL2(s.y, EvalHypothesis(zero, s.X));
    result.hypothesis = std::move(zero);
  }
  result.eps_hat = best;
  result.certified = best <= target;
  return result;
}

}  // namespace fpca
