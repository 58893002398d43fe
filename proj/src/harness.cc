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

#include "fpca/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace fpca {

namespace {

using namespace json_detail;

constexpr int64_t kChunk = 65536;

uint64_t Substream(uint64_t seed, uint64_t i) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Feeds n Gaussian columns to fn in blocks, drawn from one stream so the
// result matches GaussianMatrix(d, n, seed).
template <typename Fn>
void ForChunks(int d, int64_t n, uint64_t seed, Fn fn) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int64_t start = 0; start < n; start += kChunk) {
    int64_t len = std::min(kChunk, n - start);
    Matrix X(d, len);
    for (int64_t j = 0; j < len; ++j)
      for (int i = 0; i < d; ++i) X(i, j) = normal(rng);
    fn(X);
  }
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

Matrix RandomGaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix G(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) G(i, j) = normal(rng);
  return G;
}

Matrix RandomSymmetric(int d, std::mt19937_64& rng) {
  Matrix G = RandomGaussian(d, d, rng);
  return 0.5 * (G + G.transpose());
}

Matrix Orth(const Matrix& G) { return Frame::Orthonormalize(G).basis(); }

// Eigenvectors ordered by decreasing |eigenvalue|.
void SortedEigen(const Matrix& A, Vector* abs_values, Matrix* vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  const int d = static_cast<int>(A.rows());
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
  });
  abs_values->resize(d);
  vectors->resize(d, d);
  for (int i = 0; i < d; ++i) {
    (*abs_values)(i) = std::abs(es.eigenvalues()(order[i]));
    vectors->col(i) = es.eigenvectors().col(order[i]);
  }
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Json OptionalToJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Json CheckToJson(const Check& c) {
  Json j;
  j["name"] = c.name;
  j["passed"] = c.passed;
  j["measured"] = c.measured;
  return j;
}

Json SuiteToJson(const SuiteReport& s) {
  Json j;
  j["suite"] = s.suite;
  j["passed"] = s.passed();
  Json checks = Json::array();
  for (const Check& c : s.checks) checks.push_back(CheckToJson(c));
  j["checks"] = std::move(checks);
  return j;
}

Matrix GaussianMatrix(int d, int64_t n, uint64_t seed) {
  if (d < 1 || n < 0) throw InvalidArgument("bad Gaussian matrix shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix X(d, n);
  for (int64_t j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) X(i, j) = normal(rng);
  return X;
}

Check VerifyAntiConcentration(const BatchFunction& G, const AntiConcentrationParams& p) {
  if (!(p.s >= 0) || p.m < 1 || !(p.Lambda > 0) || !(p.sigma2 > 0) || p.trials < 1) {
    throw InvalidArgument("bad anti-concentration parameters");
  }
  int64_t hits = 0;
  ForChunks(p.m, p.trials, p.seed, [&](const Matrix& X) {
    Vector g = G(X);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (std::abs(g(i)) > p.s) ++hits;
  });
  const double n = static_cast<double>(p.trials);
  const double prob = hits / n;
  const double sigma = std::sqrt(p.sigma2);
  const double bound = p.constant * std::exp(-3.0 * p.m * p.s * p.s / p.sigma2) * p.s *
                       sigma / (std::sqrt(static_cast<double>(p.m)) * p.Lambda * p.Lambda);
  // A violation needs the bound above the upper confidence limit; with no
  // hits that limit is 3 / n.
  const double std_dev = std::sqrt(prob * (1 - prob) / n);
  const double upper = hits > 0 ? prob + 3 * std_dev : 3 / n;
  Check c;
  c.name = "anti_concentration";
  c.passed = bound <= upper;
  c.measured["s"] = p.s;
  c.measured["m"] = p.m;
  c.measured["Lambda"] = p.Lambda;
  c.measured["sigma2"] = p.sigma2;
  c.measured["trials"] = p.trials;
  c.measured["probability"] = prob;
  c.measured["std"] = std_dev;
  c.measured["upper_confidence"] = upper;
  c.measured["constant"] = p.constant;
  c.measured["bound"] = bound;
  return c;
}

double DisagreementRate(const Vector& g, const Vector& g_prime, const Vector& f,
                        double tau) {
  if (g.size() != g_prime.size() || g.size() != f.size() || g.size() == 0) {
    throw InvalidArgument("size mismatch");
  }
  int64_t hits = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(g(i) - f(i)) > tau && std::abs(g_prime(i) - f(i)) <= tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(g.size());
}

Check VerifyStability(const LatticePolynomial& g, const LatticePolynomial& g_prime,
                      const LatticePolynomial& f, const StabilityParams& p) {
  if (g.dim() != f.dim() || g_prime.dim() != f.dim()) {
    throw InvalidArgument("dimension mismatch");
  }
  if (!(p.tau > 0) || p.trials < 1) throw InvalidArgument("bad stability parameters");
  const double eta = StructuralDistance(g, g_prime);
  const int m = std::max(g.num_leaves(), f.num_leaves());
  double events = 0;
  ForChunks(g.dim(), p.trials, p.seed, [&](const Matrix& X) {
    events += DisagreementRate(g.EvalBatch(X), g_prime.EvalBatch(X), f.EvalBatch(X), p.tau) *
              static_cast<double>(X.cols());
  });
  const double n = static_cast<double>(p.trials);
  const double prob = events / n;
  const double std = std::sqrt(prob * (1 - prob) / n);
  const double bound = 9.0 * eta * m * m / p.tau;
  Check c;
  c.name = "stability";
  c.passed = prob <= bound + 3.0 * std;
  c.measured["eta"] = eta;
  c.measured["m"] = m;
  c.measured["tau"] = p.tau;
  c.measured["trials"] = p.trials;
  c.measured["probability"] = prob;
  c.measured["std"] = std;
  c.measured["bound"] = bound;
  return c;
}

Matrix WeightedSecondMoment(const Matrix& X, const Vector& weights) {
  if (weights.size() != X.cols() || X.cols() == 0) throw InvalidArgument("size mismatch");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) >= 0 && weights(i) <= 1)) {
      throw InvalidArgument("filter weights must lie in [0, 1]");
    }
  }
  Matrix M = (X * weights.asDiagonal()) * X.transpose();
  M.diagonal().array() -= weights.sum();
  return M / static_cast<double>(X.cols());
}

Check VerifyMatrixConcentration(const BatchFunction& filter, const ConcentrationParams& p,
                                const std::optional<Matrix>& population) {
  if (p.d < 1 || p.sizes.size() < 2 || p.trials < 1 || p.proxy_factor < 1) {
    throw InvalidArgument("bad concentration parameters");
  }
  Matrix P;
  if (population) {
    if (population->rows() != p.d || population->cols() != p.d) {
      throw InvalidArgument("population matrix has the wrong shape");
    }
    P = *population;
  } else {
    const int64_t n = p.proxy_factor * *std::max_element(p.sizes.begin(), p.sizes.end());
    P = Matrix::Zero(p.d, p.d);
    ForChunks(p.d, n, Substream(p.seed, 0), [&](const Matrix& X) {
      P += WeightedSecondMoment(X, filter(X)) * static_cast<double>(X.cols());
    });
    P /= static_cast<double>(n);
  }
  Json errors = Json::array();
  std::vector<double> logs_n, logs_e;
  bool all_zero = true;
  for (size_t s = 0; s < p.sizes.size(); ++s) {
    std::vector<double> errs;
    for (int t = 0; t < p.trials; ++t) {
      Matrix X = GaussianMatrix(p.d, p.sizes[s], Substream(p.seed, 1 + s * 1000 + t));
      errs.push_back(OperatorNorm(WeightedSecondMoment(X, filter(X)) - P));
    }
    double med = Median(errs);
    if (med > 0) all_zero = false;
    errors.push_back(med);
    logs_n.push_back(std::log(static_cast<double>(p.sizes[s])));
    logs_e.push_back(std::log(std::max(med, 1e-300)));
  }
  Check c;
  c.name = "matrix_concentration";
  c.measured["d"] = p.d;
  c.measured["sizes"] = p.sizes;
  c.measured["median_errors"] = errors;
  c.measured["proxy"] = !population.has_value();
  if (all_zero) {
    c.passed = true;
    c.measured["exact_zero"] = true;
    return c;
  }
  const double k = static_cast<double>(logs_n.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < logs_n.size(); ++i) {
    mx += logs_n[i] / k;
    my += logs_e[i] / k;
  }
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < logs_n.size(); ++i) {
    sxy += (logs_n[i] - mx) * (logs_e[i] - my);
    sxx += (logs_n[i] - mx) * (logs_n[i] - mx);
  }
  const double slope = sxy / sxx;
  c.measured["slope"] = slope;
  c.passed = std::abs(slope - p.slope) <= p.slope_tolerance;
  return c;
}

int64_t VarianceSampleSize(double mu, const VarianceParams& p) {
  double base = mu + p.Lambda * p.Lambda * p.k;
  double n = p.constant * base * base * std::log(1.0 / p.delta) / (p.t * p.t);
  return std::max<int64_t>(1, static_cast<int64_t>(std::ceil(n)));
}

Check VerifyVarianceEstimator(const BatchFunction& F, int d, const VarianceParams& p) {
  if (d < 1 || p.k < 1 || p.trials < 1 || !(p.Lambda > 0) || p.reference_samples < 1) {
    throw InvalidArgument("bad variance parameters");
  }
  if (!(p.t > 0) || p.t > p.Lambda * p.Lambda * p.k) {
    throw InvalidArgument("need 0 < t <= Lambda^2 k");
  }
  if (!(p.delta > 0 && p.delta < 1)) throw InvalidArgument("delta must lie in (0, 1)");
  double sum = 0;
  ForChunks(d, p.reference_samples, Substream(p.seed, 0),
            [&](const Matrix& X) { sum += F(X).squaredNorm(); });
  const double mu = sum / static_cast<double>(p.reference_samples);
  const int64_t n = VarianceSampleSize(mu, p);
  int within = 0;
  double worst = 0;
  for (int t = 0; t < p.trials; ++t) {
    double s = 0;
    ForChunks(d, n, Substream(p.seed, t + 1),
              [&](const Matrix& X) { s += F(X).squaredNorm(); });
    double dev = std::abs(s / static_cast<double>(n) - mu);
    worst = std::max(worst, dev);
    if (dev <= p.t) ++within;
  }
  const double coverage = static_cast<double>(within) / p.trials;
  Check c;
  c.name = "variance_estimator";
  c.passed = coverage >= 1.0 - p.delta;
  c.measured["mu"] = mu;
  c.measured["t"] = p.t;
  c.measured["delta"] = p.delta;
  c.measured["N"] = n;
  c.measured["trials"] = p.trials;
  c.measured["coverage"] = coverage;
  c.measured["max_deviation"] = worst;
  return c;
}

Check VerifyLipschitzKey(const ReluNetwork& net, const Frame& V, const Frame& W,
                         int64_t trials, uint64_t seed) {
  const int d = net.input_dim();
  if (V.ambient_dim() != d || W.ambient_dim() != d) {
    throw InvalidArgument("frame dimension mismatch");
  }
  if (trials < 1) throw InvalidArgument("need at least one trial");
  if (W.size() > 0 && FrameNearness(W, V) > 1e-8) {
    throw InvalidArgument("W must lie inside V");
  }
  // Orthonormal basis Q of V \ W.
  Matrix Q(d, 0);
  if (V.size() > 0) {
    Matrix R = W.ComplementProject(V.basis());
    Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeThinU);
    int r = 0;
    while (r < svd.singularValues().size() && svd.singularValues()(r) > 1e-8) ++r;
    Q = svd.matrixU().leftCols(r);
  }
  const int r = static_cast<int>(Q.cols());
  Matrix X = GaussianMatrix(d, trials, seed);
  std::mt19937_64 rng(Substream(seed, 1));
  std::uniform_real_distribution<double> uniform;
  std::normal_distribution<double> normal;
  for (int64_t j = 0; j < trials; ++j) {
    Vector x = std::pow(10.0, -1.0 + 3.0 * uniform(rng)) * X.col(j);
    if (r > 0) {
      x -= Q * (Q.transpose() * x);
      Vector u(r);
      for (int i = 0; i < r; ++i) u(i) = normal(rng);
      double radius = j % 2 == 0 ? 1.0 : std::pow(uniform(rng), 1.0 / r);
      x += Q * (radius * u / u.norm());
    }
    X.col(j) = x;
  }
  Vector diff = net.EvalBatch(X) - net.EvalBatch(W.Project(X));
  const double worst = diff.cwiseAbs().maxCoeff();
  const double bound = LipschitzUpper(net);
  Check c;
  c.name = "lipschitz_key";
  c.passed = worst <= bound * (1 + 1e-9) + 1e-12;
  c.measured["W_size"] = W.size();
  c.measured["V_size"] = V.size();
  c.measured["trials"] = trials;
  c.measured["max_difference"] = worst;
  c.measured["bound"] = bound;
  return c;
}

Check VerifyWedin(int instances, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform;
  int checked = 0, nontrivial = 0, attempts = 0;
  double worst = 0;
  bool ok = true;
  while (checked < instances && attempts < 100 * instances) {
    ++attempts;
    const int d = 4 + static_cast<int>(rng() % 9);
    Matrix A = RandomSymmetric(d, rng);
    Matrix E = RandomSymmetric(d, rng);
    const double eps = (0.02 + 0.3 * uniform(rng)) * OperatorNorm(A);
    E *= eps / OperatorNorm(E);
    Vector a, ahat;
    Matrix U, Uhat;
    SortedEigen(A, &a, &U);
    SortedEigen(A + E, &ahat, &Uhat);
    const int j = static_cast<int>(rng() % (d / 2 + 1));
    const double mu = ahat(j);
    const double gap = mu - a.minCoeff();
    if (!(gap > 0)) continue;
    const double xi = gap > eps ? eps + uniform(rng) * (gap - eps) : uniform(rng) * gap;
    if (!(xi > 0)) continue;
    std::vector<int> top, low;
    for (int i = 0; i < d; ++i) {
      if (ahat(i) >= mu) top.push_back(i);
      if (a(i) <= mu - xi) low.push_back(i);
    }
    if (top.empty() || low.empty()) continue;
    Matrix Ut(d, top.size()), Ul(d, low.size());
    for (size_t i = 0; i < top.size(); ++i) Ut.col(i) = Uhat.col(top[i]);
    for (size_t i = 0; i < low.size(); ++i) Ul.col(i) = U.col(low[i]);
    const double lhs = OperatorNorm(Ut.transpose() * Ul);
    const double rhs = eps / xi;
    if (rhs < 1) ++nontrivial;
    worst = std::max(worst, lhs / rhs);
    ok = ok && lhs <= rhs * (1 + 1e-9) + 1e-12;
    ++checked;
  }
  Check c;
  c.name = "gap_free_wedin";
  c.passed = ok && checked == instances;
  c.measured["instances"] = checked;
  c.measured["nontrivial"] = nontrivial;
  c.measured["max_ratio"] = worst;
  return c;
}

Check VerifyTopSingular(int instances, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform;
  double min_slack = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (int n = 0; n < instances; ++n) {
    const int d = 4 + static_cast<int>(rng() % 9);
    const int r = 1 + static_cast<int>(rng() % (d - 1));
    Matrix Q = Orth(RandomGaussian(d, r, rng));
    Vector s(r);
    for (int i = 0; i < r; ++i) s(i) = (1.0 + 2.0 * uniform(rng)) * (rng() % 2 ? 1.0 : -1.0);
    Matrix A = Q * s.asDiagonal() * Q.transpose();
    Matrix E = RandomSymmetric(d, rng);
    const double eps = 0.01 + 0.4 * uniform(rng);
    E *= eps / OperatorNorm(E);
    Vector ahat;
    Matrix Uhat;
    SortedEigen(A + E, &ahat, &Uhat);
    const double lambda = ahat(0) + eps;
    if (lambda < 2 * eps) throw std::logic_error("precondition violated by construction");
    const double proj = (Q.transpose() * Uhat.col(0)).norm();
    const double bound = 1.0 - 4.0 * eps * eps / (lambda * lambda);
    min_slack = std::min(min_slack, proj - bound);
    ok = ok && proj >= bound - 1e-12;
  }
  Check c;
  c.name = "top_singular_vector";
  c.passed = ok;
  c.measured["instances"] = instances;
  c.measured["min_slack"] = min_slack;
  return c;
}

Check VerifyProjectError(int instances, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform;
  double worst = 0;
  int violations = 0;
  for (int n = 0; n < instances; ++n) {
    const int d = 4 + static_cast<int>(rng() % 9);
    const int l = 1 + static_cast<int>(rng() % std::min(3, d - 1));
    Matrix M = RandomGaussian(d, d, rng);
    Frame W(Orth(RandomGaussian(d, l, rng)));
    const double noise = 0.01 + 0.3 * uniform(rng);
    Frame Wt(Orth(W.basis() + noise * RandomGaussian(d, l, rng)));
    Matrix P = W.ComplementProjector(), Pt = Wt.ComplementProjector();
    const double lhs = OperatorNorm(Pt * M * Pt - P * M * P);
    const double scale = OperatorNorm(M) * ChordalDistance(Wt, W);
    const double ratio = lhs / scale;
    worst = std::max(worst, ratio);
    if (lhs > std::sqrt(2.0) * scale * (1 + 1e-9) + 1e-12) ++violations;
  }
  Check c;
  c.name = "projector_perturbation";
  c.passed = violations == 0;
  c.measured["instances"] = instances;
  c.measured["violations"] = violations;
  c.measured["max_ratio"] = worst;
  c.measured["constant"] = std::sqrt(2.0);
  return c;
}

Check VerifySubspaceInequality(int instances, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform;
  double worst = 0;
  bool ok = true;
  for (int n = 0; n < instances; ++n) {
    const int d = 3 + static_cast<int>(rng() % 10);
    const int l = 1 + static_cast<int>(rng() % (d - 1));
    Frame U1(Orth(RandomGaussian(d, l, rng)));
    const double noise = 2.0 * uniform(rng);
    Frame U2(Orth(U1.basis() + noise * RandomGaussian(d, l, rng)));
    const double dp = ProcrustesDistance(U1, U2), dc = ChordalDistance(U1, U2);
    if (dc > 0) worst = std::max(worst, dp / dc);
    ok = ok && dp <= std::sqrt(2.0) * dc + 1e-12;
  }
  Check c;
  c.name = "procrustes_vs_chordal";
  c.passed = ok;
  c.measured["instances"] = instances;
  c.measured["max_ratio"] = worst;
  return c;
}

Check VerifyPowerMethod(int instances, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform;
  const int d = 50;
  double worst = 1;
  bool ok = true;
  for (int n = 0; n < instances; ++n) {
    const int k = 1 + n % 3;
    Matrix Q = Orth(RandomGaussian(d, d, rng));
    Vector ev(d);
    for (int i = 0; i < d; ++i) {
      ev(i) = i < k ? (5.0 + 5.0 * uniform(rng)) * (rng() % 2 ? 1.0 : -1.0)
                    : -1.0 + 2.0 * uniform(rng);
    }
    Matrix M = Q * ev.asDiagonal() * Q.transpose();
    M = 0.5 * (M + M.transpose());
    TopSvdOptions options;
    options.seed = Substream(seed, n);
    TopSvdResult res = ApproxTopSvd(M, k, options);
    Vector a;
    Matrix U;
    SortedEigen(M, &a, &U);
    Matrix C = res.vectors.basis().transpose() * U.leftCols(k);
    Eigen::JacobiSVD<Matrix> svd(C);
    double align = svd.singularValues().minCoeff();
    worst = std::min(worst, align);
    ok = ok && align >= 1 - 1e-6;
  }
  Check c;
  c.name = "power_method";
  c.passed = ok;
  c.measured["instances"] = instances;
  c.measured["min_alignment"] = worst;
  return c;
}

SuiteReport VerifyToolbox(int instances, uint64_t seed) {
  SuiteReport s;
  s.suite = "toolbox";
  s.checks.push_back(VerifyWedin(instances, Substream(seed, 0)));
  s.checks.push_back(VerifyTopSingular(instances, Substream(seed, 1)));
  s.checks.push_back(VerifyProjectError(instances, Substream(seed, 2)));
  s.checks.push_back(VerifySubspaceInequality(instances, Substream(seed, 3)));
  s.checks.push_back(VerifyPowerMethod(std::max(1, instances / 2), Substream(seed, 4)));
  return s;
}

ReluNetwork PlantedNetwork(int d, const Architecture& arch, double B, uint64_t seed,
                           bool mixed_signs) {
  ReluNetwork net = RandomNetwork(d, arch, B, seed);
  const int n = static_cast<int>(net.layers().back().cols());
  if (!mixed_signs || n < 2) return net;
  std::vector<Matrix> layers = net.layers();
  std::mt19937_64 rng(Substream(seed, 17));
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);
  Matrix& w = layers.back();
  for (int i = 0; i < n; ++i) w(0, i) = (i % 2 ? -1.0 : 1.0) * magnitude(rng);
  w *= B / w.norm();
  return ReluNetwork(std::move(layers), net.meta());
}

ReluNetwork AbsNetwork(int d, uint64_t seed) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  std::mt19937_64 rng(seed);
  Vector v = RandomGaussian(d, 1, rng).col(0);
  v.normalize();
  Matrix W0(2, d);
  W0.row(0) = v.transpose();
  W0.row(1) = -v.transpose();
  Matrix W1(1, 2);
  W1 << 1, 1;
  NetworkMeta meta;
  meta.B = std::sqrt(2.0);
  meta.Lambda = 1.0;
  meta.seed = seed;
  meta.rank = 1;
  return ReluNetwork({W0, W1}, meta);
}

ReluNetwork MakeInstance(const InstanceRecipe& recipe) {
  std::optional<ReluNetwork> net;
  if (recipe.kind == "planted") {
    net = PlantedNetwork(recipe.d, recipe.arch, recipe.B, recipe.seed, recipe.mixed_signs);
  } else if (recipe.kind == "abs") {
    net = AbsNetwork(recipe.d, recipe.seed);
  } else if (recipe.kind == "spike") {
    net = SpikeNetwork(recipe.Lambda);
  } else if (recipe.kind == "file") {
    net = NetworkFromText(ReadFile(recipe.path));
  } else {
    throw InvalidArgument("unknown instance kind '" + recipe.kind + "'");
  }
  if (!net->meta().Lambda) {
    try {
      net->mutable_meta().Lambda = LeafNormBound(FromNetwork(*net));
    } catch (const BudgetError&) {
      net->mutable_meta().Lambda = LipschitzUpper(*net);
    }
  }
  return *net;
}

Json ExperimentSpecToJson(const ExperimentSpec& spec) {
  Json j;
  j["name"] = spec.name;
  Json inst;
  inst["kind"] = spec.instance.kind;
  inst["d"] = spec.instance.d;
  inst["arch"] = spec.instance.arch;
  inst["B"] = spec.instance.B;
  inst["seed"] = spec.instance.seed;
  inst["mixed_signs"] = spec.instance.mixed_signs;
  inst["Lambda"] = spec.instance.Lambda;
  inst["path"] = spec.instance.path;
  j["instance"] = std::move(inst);
  j["config"] = LearnConfigToJson(spec.config);
  j["lambda_from_instance"] = spec.lambda_from_instance;
  j["learn"] = spec.learn;
  j["trials"] = spec.trials;
  Json v;
  v["lipschitz_key"] = spec.verify.lipschitz_key;
  v["anti_concentration"] = spec.verify.anti_concentration;
  v["matrix_concentration"] = spec.verify.matrix_concentration;
  v["toolbox"] = spec.verify.toolbox;
  v["trials"] = spec.verify.trials;
  j["verify"] = std::move(v);
  Json t;
  t["max_chordal"] = OptionalToJson(spec.thresholds.max_chordal);
  t["min_alignment"] = OptionalToJson(spec.thresholds.min_alignment);
  t["max_relative_eps"] = OptionalToJson(spec.thresholds.max_relative_eps);
  t["min_pass_fraction"] = spec.thresholds.min_pass_fraction;
  j["thresholds"] = std::move(t);
  Json o;
  o["report"] = spec.report_path;
  o["trace_csv"] = spec.trace_csv_path;
  o["samples_csv"] = spec.samples_csv_path;
  o["samples_csv_count"] = spec.samples_csv_count;
  j["outputs"] = std::move(o);
  j["evaluation_samples"] = spec.evaluation_samples;
  return j;
}

ExperimentSpec ExperimentSpecFromJson(const Json& j) {
  if (!j.is_object()) Fail("expected an object", "");
  RejectUnknown(j, {"name", "instance", "config", "lambda_from_instance", "learn", "trials",
                    "verify", "thresholds", "outputs", "evaluation_samples"}, "");
  ExperimentSpec spec;
  if (j.contains("name")) spec.name = String(j["name"], "/name");
  if (j.contains("instance")) {
    const Json& in = j["instance"];
    const std::string p = "/instance";
    if (!in.is_object()) Fail("expected an object", p);
    RejectUnknown(in, {"kind", "d", "arch", "B", "seed", "mixed_signs", "Lambda", "path"}, p);
    InstanceRecipe& r = spec.instance;
    if (in.contains("kind")) r.kind = String(in["kind"], p + "/kind");
    if (in.contains("d")) r.d = static_cast<int>(Integer(in["d"], p + "/d"));
    if (in.contains("arch")) {
      const Json& a = in["arch"];
      if (!a.is_array() || a.empty()) Fail("expected a non-empty list of widths", p + "/arch");
      r.arch.clear();
      for (size_t i = 0; i < a.size(); ++i) {
        r.arch.push_back(static_cast<int>(Integer(a[i], p + "/arch/" + std::to_string(i))));
      }
    }
    if (in.contains("B")) r.B = Number(in["B"], p + "/B");
    if (in.contains("seed")) r.seed = Unsigned(in["seed"], p + "/seed");
    if (in.contains("mixed_signs")) r.mixed_signs = Boolean(in["mixed_signs"], p + "/mixed_signs");
    if (in.contains("Lambda")) r.Lambda = Number(in["Lambda"], p + "/Lambda");
    if (in.contains("path")) r.path = String(in["path"], p + "/path");
    if (r.kind != "planted" && r.kind != "abs" && r.kind != "spike" && r.kind != "file") {
      Fail("kind must be planted, abs, spike or file", p + "/kind");
    }
  }
  if (j.contains("config")) {
    try {
      spec.config = LearnConfigFromJson(j["config"]);
    } catch (const ParseError& e) {
      Fail(e.message, "/config" + (e.location == "/" ? std::string() : e.location));
    }
    spec.lambda_from_instance = !j["config"].contains("Lambda");
  }
  if (j.contains("lambda_from_instance")) {
    spec.lambda_from_instance = Boolean(j["lambda_from_instance"], "/lambda_from_instance");
  }
  if (j.contains("learn")) spec.learn = Boolean(j["learn"], "/learn");
  if (j.contains("trials")) {
    spec.trials = static_cast<int>(Integer(j["trials"], "/trials"));
    if (spec.trials < 1) Fail("trials must be >= 1", "/trials");
  }
  if (j.contains("verify")) {
    const Json& v = j["verify"];
    const std::string p = "/verify";
    if (!v.is_object()) Fail("expected an object", p);
    RejectUnknown(v, {"lipschitz_key", "anti_concentration", "matrix_concentration",
                      "toolbox", "trials"}, p);
    VerifyToggles& t = spec.verify;
    if (v.contains("lipschitz_key")) t.lipschitz_key = Boolean(v["lipschitz_key"], p + "/lipschitz_key");
    if (v.contains("anti_concentration")) {
      t.anti_concentration = Boolean(v["anti_concentration"], p + "/anti_concentration");
    }
    if (v.contains("matrix_concentration")) {
      t.matrix_concentration = Boolean(v["matrix_concentration"], p + "/matrix_concentration");
    }
    if (v.contains("toolbox")) t.toolbox = Boolean(v["toolbox"], p + "/toolbox");
    if (v.contains("trials")) t.trials = Integer(v["trials"], p + "/trials");
    if (t.trials < 1) Fail("trials must be >= 1", p + "/trials");
  }
  if (j.contains("thresholds")) {
    const Json& t = j["thresholds"];
    const std::string p = "/thresholds";
    if (!t.is_object()) Fail("expected an object", p);
    RejectUnknown(t, {"max_chordal", "min_alignment", "max_relative_eps", "min_pass_fraction"}, p);
    auto opt = [&](const char* key, std::optional<double>* out) {
      if (t.contains(key) && !t[key].is_null()) *out = Number(t[key], p + "/" + key);
    };
    opt("max_chordal", &spec.thresholds.max_chordal);
    opt("min_alignment", &spec.thresholds.min_alignment);
    opt("max_relative_eps", &spec.thresholds.max_relative_eps);
    if (t.contains("min_pass_fraction")) {
      spec.thresholds.min_pass_fraction = Number(t["min_pass_fraction"], p + "/min_pass_fraction");
    }
  }
  if (j.contains("outputs")) {
    const Json& o = j["outputs"];
    const std::string p = "/outputs";
    if (!o.is_object()) Fail("expected an object", p);
    RejectUnknown(o, {"report", "trace_csv", "samples_csv", "samples_csv_count"}, p);
    if (o.contains("report")) spec.report_path = String(o["report"], p + "/report");
    if (o.contains("trace_csv")) spec.trace_csv_path = String(o["trace_csv"], p + "/trace_csv");
    if (o.contains("samples_csv")) spec.samples_csv_path = String(o["samples_csv"], p + "/samples_csv");
    if (o.contains("samples_csv_count")) {
      spec.samples_csv_count = Integer(o["samples_csv_count"], p + "/samples_csv_count");
    }
  }
  if (j.contains("evaluation_samples")) {
    spec.evaluation_samples = Integer(j["evaluation_samples"], "/evaluation_samples");
    if (spec.evaluation_samples < 1) Fail("must be >= 1", "/evaluation_samples");
  }
  return spec;
}

Report RunExperiment(const ExperimentSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  Report r;
  r.spec = spec;
  ReluNetwork net = MakeInstance(spec.instance);
  const int d = net.input_dim();
  if (spec.lambda_from_instance) r.spec.config.Lambda = *net.meta().Lambda;
  const LearnConfig& cfg = r.spec.config;
  cfg.Validate();
  const Frame V = RelevantSubspace(net);
  r.instance["network"] = NetworkToJson(net);
  r.instance["relevant_dim"] = V.size();

  const Matrix Xe = GaussianMatrix(d, spec.evaluation_samples, Substream(cfg.seed, 101));
  const Vector ye = net.EvalBatch(Xe);
  const double fnorm = std::sqrt(ye.squaredNorm() / static_cast<double>(ye.size()));
  r.instance["l2_norm"] = fnorm;

  if (!spec.samples_csv_path.empty()) {
    SampleOracle oracle = GaussianOracle(net, cfg.seed);
    r.samples_csv = SamplesToCsv(oracle.Draw(std::max<int64_t>(1, spec.samples_csv_count)));
  }

  int passed_trials = 0;
  if (spec.learn) {
    for (int t = 0; t < spec.trials; ++t) {
      const auto trial_start = std::chrono::steady_clock::now();
      TrialOutcome o;
      o.seed = cfg.seed + static_cast<uint64_t>(t);
      LearnConfig c = cfg;
      c.seed = o.seed;
      c.budget.seed += static_cast<uint64_t>(t);
      c.final_budget.seed += static_cast<uint64_t>(t);
      SampleOracle oracle = GaussianOracle(net, o.seed);
      o.result = Run(oracle, c, V);
      const Frame& W = o.result.frame;
      if (W.size() == V.size() && V.size() > 0) {
        o.chordal = ChordalDistance(W, V);
        o.procrustes = ProcrustesDistance(W, V);
      }
      if (V.size() == 1 && W.size() >= 1) o.alignment = std::abs(W.vector(0).dot(V.vector(0)));
      o.true_error = EmpiricalL2(ye, EvalHypothesis(*o.result.hypothesis, Xe));
      o.relative_error = fnorm > 0 ? o.true_error / fnorm : o.true_error;
      const Thresholds& th = spec.thresholds;
      if (th.max_chordal) o.passed &= o.chordal && *o.chordal <= *th.max_chordal;
      if (th.min_alignment) o.passed &= o.alignment && *o.alignment >= *th.min_alignment;
      if (th.max_relative_eps) o.passed &= o.relative_error <= *th.max_relative_eps;
      if (o.passed) ++passed_trials;
      o.seconds = Seconds(trial_start);
      r.trials.push_back(std::move(o));
    }
    r.passed = passed_trials >= spec.thresholds.min_pass_fraction * spec.trials - 1e-9;
  }

  const VerifyToggles& v = spec.verify;
  if (v.lipschitz_key) {
    SuiteReport s;
    s.suite = "lipschitz_key";
    s.checks.push_back(VerifyLipschitzKey(net, V, Frame::Empty(d), v.trials, Substream(cfg.seed, 201)));
    if (V.size() >= 2) {
      s.checks.push_back(VerifyLipschitzKey(net, V, Frame(Matrix(V.basis().leftCols(1))),
                                            v.trials, Substream(cfg.seed, 202)));
    }
    if (V.size() >= 1) {
      s.checks.push_back(VerifyLipschitzKey(net, V, V, v.trials, Substream(cfg.seed, 203)));
    }
    r.suites.push_back(std::move(s));
  }
  if (v.anti_concentration && V.size() > 0) {
    SuiteReport s;
    s.suite = "anti_concentration";
    const double n = static_cast<double>(ye.size());
    const double second = ye.squaredNorm() / n;
    const double spread = std::sqrt((ye.array().square() - second).square().sum() / n / n);
    const double sigma2 = second - 3.0 * spread;
    if (sigma2 > 0) {
      const Matrix basis = V.basis();
      BatchFunction G = [&](const Matrix& Z) { return net.EvalBatch(basis * Z); };
      for (double sv : {0.5, 1.0, 2.0}) {
        AntiConcentrationParams p;
        p.s = sv;
        p.m = V.size();
        p.Lambda = cfg.Lambda;
        p.sigma2 = sigma2;
        p.trials = v.trials;
        p.seed = Substream(cfg.seed, 300 + static_cast<uint64_t>(sv * 4));
        s.checks.push_back(VerifyAntiConcentration(G, p));
      }
    }
    r.suites.push_back(std::move(s));
  }
  if (v.matrix_concentration) {
    SuiteReport s;
    s.suite = "matrix_concentration";
    const double tau = cfg.tau();
    BatchFunction filter = [&](const Matrix& X) -> Vector {
      return (net.EvalBatch(X).array().abs() > tau).cast<double>();
    };
    ConcentrationParams p;
    p.d = d;
    p.seed = Substream(cfg.seed, 401);
    s.checks.push_back(VerifyMatrixConcentration(filter, p));
    r.suites.push_back(std::move(s));
  }
  if (v.toolbox) r.suites.push_back(VerifyToolbox(100, Substream(cfg.seed, 501)));
  for (const SuiteReport& s : r.suites) r.passed = r.passed && s.passed();
  r.seconds = Seconds(start);
  return r;
}

Json ReportToJson(const Report& r) {
  Json j;
  j["spec"] = ExperimentSpecToJson(r.spec);
  j["instance"] = r.instance;
  j["passed"] = r.passed;
  Json trials = Json::array();
  for (const TrialOutcome& o : r.trials) {
    Json t;
    t["seed"] = o.seed;
    t["passed"] = o.passed;
    t["frame_size"] = o.result.frame.size();
    t["chordal"] = OptionalToJson(o.chordal);
    t["procrustes"] = OptionalToJson(o.procrustes);
    t["alignment"] = OptionalToJson(o.alignment);
    t["true_error"] = o.true_error;
    t["relative_error"] = o.relative_error;
    t["recovery"] = RecoveryToJson(o.result);
    trials.push_back(std::move(t));
  }
  j["trials"] = std::move(trials);
  Json suites = Json::array();
  for (const SuiteReport& s : r.suites) suites.push_back(SuiteToJson(s));
  j["suites"] = std::move(suites);
  Json timing;
  timing["total_seconds"] = r.seconds;
  Json per = Json::array();
  for (const TrialOutcome& o : r.trials) per.push_back(o.seconds);
  timing["trial_seconds"] = std::move(per);
  j["timing"] = std::move(timing);
  Json env;
#ifdef __VERSION__
  env["compiler"] = __VERSION__;
#endif
  env["cplusplus"] = static_cast<int64_t>(__cplusplus);
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                 "." + std::to_string(EIGEN_MINOR_VERSION);
#ifdef NDEBUG
  env["assertions"] = false;
#else
  env["assertions"] = true;
#endif
  j["environment"] = std::move(env);
  return j;
}

std::string ReportSummary(const Json& report) {
  std::ostringstream out;
  auto num = [](const Json& v) { return v.is_number() ? FormatDouble(v.get<double>()) : "-"; };
  const Json& spec = report.at("spec");
  out << "experiment " << spec.at("name").get<std::string>() << ": "
      << (report.at("passed").get<bool>() ? "PASS" : "FAIL") << "\n";
  const Json& inst = report.at("instance");
  out << "instance relevant_dim=" << inst.at("relevant_dim").get<int>()
      << " l2_norm=" << num(inst.at("l2_norm")) << "\n";
  for (const Json& t : report.at("trials")) {
    out << "trial seed=" << t.at("seed").get<uint64_t>()
        << " frame=" << t.at("frame_size").get<int>() << " chordal=" << num(t.at("chordal"))
        << " alignment=" << num(t.at("alignment"))
        << " eps_hat=" << num(t.at("recovery").at("eps_hat"))
        << " relative_error=" << num(t.at("relative_error"))
        << (t.at("passed").get<bool>() ? " ok" : " FAIL") << "\n";
  }
  for (const Json& s : report.at("suites")) {
    for (const Json& c : s.at("checks")) {
      out << "check " << s.at("suite").get<std::string>() << "/"
          << c.at("name").get<std::string>() << ": "
          << (c.at("passed").get<bool>() ? "ok" : "FAIL") << " " << c.at("measured").dump()
          << "\n";
    }
  }
  return out.str();
}

std::string TraceCsv(const Report& r) {
  std::string out =
      "trial,seed,ell,accepted_index,lambda,candidates_examined,candidates_total,tau_used,"
      "svd_converged,nearness\n";
  for (size_t t = 0; t < r.trials.size(); ++t) {
    for (const IterationTrace& tr : r.trials[t].result.trace) {
      out += std::to_string(t) + "," + std::to_string(r.trials[t].seed) + "," +
             std::to_string(tr.ell) + "," + std::to_string(tr.accepted_index) + "," +
             FormatDouble(tr.lambda) + "," + std::to_string(tr.candidates_examined) + "," +
             std::to_string(tr.candidates_total) + "," + FormatDouble(tr.tau_used) + "," +
             (tr.svd_converged ? "1" : "0") + "," +
             (tr.nearness ? FormatDouble(*tr.nearness) : std::string()) + "\n";
    }
  }
  return out;
}

void WriteOutputs(const Report& r) {
  if (!r.spec.report_path.empty()) WriteFile(r.spec.report_path, ReportToJson(r).dump(2) + "\n");
  if (!r.spec.trace_csv_path.empty()) WriteFile(r.spec.trace_csv_path, TraceCsv(r));
  if (!r.spec.samples_csv_path.empty()) WriteFile(r.spec.samples_csv_path, r.samples_csv);
}

}  // namespace fpca
