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

// Experiment orchestration and Monte-Carlo checks of the supporting
// inequalities: anti-concentration, stability, matrix concentration, the
// Lipschitz slab bound and the subspace perturbation toolbox.

#ifndef FPCA_HARNESS_H_
#define FPCA_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpca/filteredpca.h"
#include "fpca/lattice.h"
#include "fpca/network.h"
#include "fpca/serialize.h"
#include "fpca/subspace.h"

namespace fpca {

// One assertion with the quantities it measured.
struct Check {
  std::string name;
  bool passed = false;
  Json measured = Json::object();
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const;
};

Json CheckToJson(const Check& c);
Json SuiteToJson(const SuiteReport& s);

// Standard normal draws, d x n, from a seeded stream.
Matrix GaussianMatrix(int d, int64_t n, uint64_t seed);

// 1/sqrt(pi): lower bound of erfc(s/sqrt 2) / (s exp(-3 s^2)) over s > 0.
inline constexpr double kAntiConcentrationConstant = 0.56418958354775628;

struct AntiConcentrationParams {
  double s = 1.0;
  int m = 1;
  double Lambda = 1.0;
  double sigma2 = 1.0;
  int64_t trials = 1000000;
  uint64_t seed = 0;
  double constant = kAntiConcentrationConstant;
};

// G acts on R^m. Estimates Pr[|G| > s] and compares it with
// C exp(-3 m s^2 / sigma^2) s sigma / (sqrt(m) Lambda^2).
Check VerifyAntiConcentration(const BatchFunction& G, const AntiConcentrationParams& p);

// Fraction of columns with |g - f| > tau and |g' - f| <= tau.
double DisagreementRate(const Vector& g, const Vector& g_prime, const Vector& f,
                        double tau);

struct StabilityParams {
  double tau = 1.0;
  int64_t trials = 200000;
  uint64_t seed = 0;
};

// g and g' must share their clause list. Asserts the disagreement rate is at
// most 9 eta m^2 / tau plus three Monte-Carlo standard deviations, where
// eta is their structural distance and m the larger leaf count of g and f.
Check VerifyStability(const LatticePolynomial& g, const LatticePolynomial& g_prime,
                      const LatticePolynomial& f, const StabilityParams& p);

struct ConcentrationParams {
  int d = 20;
  std::vector<int64_t> sizes = {1000, 10000, 100000};
  int trials = 5;
  int64_t proxy_factor = 100;
  uint64_t seed = 0;
  double slope = -0.5;
  double slope_tolerance = 0.15;
};

// (1/N) sum_i f(x_i) (x_i x_i^T - I) for weights f(x_i) in [0, 1].
Matrix WeightedSecondMoment(const Matrix& X, const Vector& weights);

// Median operator-norm error of the empirical weighted second moment for each
// size, against the population matrix if given and otherwise against a
// proxy_factor times larger sample. Asserts the log-log slope.
Check VerifyMatrixConcentration(const BatchFunction& filter, const ConcentrationParams& p,
                                const std::optional<Matrix>& population = std::nullopt);

struct VarianceParams {
  double t = 0.1;
  double delta = 0.1;
  double Lambda = 1.0;
  int k = 1;
  int trials = 200;
  uint64_t seed = 0;
  double constant = 2.0;
  int64_t reference_samples = 2000000;
};

// Sample size constant (mu + Lambda^2 k)^2 log(1/delta) / t^2 for estimating
// E[F^2] to within t.
int64_t VarianceSampleSize(double mu, const VarianceParams& p);

// Repeats the empirical second moment of F at VarianceSampleSize and asserts
// that at least a 1 - delta fraction lands within t of the long-run mean.
Check VerifyVarianceEstimator(const BatchFunction& F, int d, const VarianceParams& p);

// Samples x with ||Pi_{V\W} x|| <= 1 and arbitrary mass elsewhere; asserts
// |F(x) - F(Pi_W x)| <= LipschitzUpper(net).
Check VerifyLipschitzKey(const ReluNetwork& net, const Frame& V, const Frame& W,
                         int64_t trials, uint64_t seed);

// Perturbation toolbox, each on random instances.
Check VerifyWedin(int instances, uint64_t seed);
Check VerifyTopSingular(int instances, uint64_t seed);
Check VerifyProjectError(int instances, uint64_t seed);
Check VerifySubspaceInequality(int instances, uint64_t seed);
Check VerifyPowerMethod(int instances, uint64_t seed);
SuiteReport VerifyToolbox(int instances, uint64_t seed);

// Where the target function comes from.
struct InstanceRecipe {
  std::string kind = "planted";  // planted | abs | spike | file
  int d = 4;
  Architecture arch = {1};
  double B = 1.0;
  uint64_t seed = 0;
  bool mixed_signs = true;  // planted: force output weights of both signs
  double Lambda = 10.0;     // spike
  std::string path;         // file
};

ReluNetwork MakeInstance(const InstanceRecipe& recipe);

// Gaussian layers normalised so every layer has operator norm B. With
// mixed_signs the output weights alternate in sign with magnitudes drawn from
// [0.5, 1] before normalisation.
ReluNetwork PlantedNetwork(int d, const Architecture& arch, double B, uint64_t seed,
                           bool mixed_signs);

// |<v, x>| = phi(<v,x>) + phi(-<v,x>) for a random unit v.
ReluNetwork AbsNetwork(int d, uint64_t seed);

struct VerifyToggles {
  bool lipschitz_key = false;
  bool anti_concentration = false;
  bool matrix_concentration = false;
  bool toolbox = false;
  int64_t trials = 100000;
};

struct Thresholds {
  std::optional<double> max_chordal;
  std::optional<double> min_alignment;     // k = 1: |<w, v>|
  std::optional<double> max_relative_eps;  // true L2 error / ||F||
  double min_pass_fraction = 1.0;          // of trials
};

struct ExperimentSpec {
  std::string name = "experiment";
  InstanceRecipe instance;
  LearnConfig config;
  bool lambda_from_instance = true;  // Lambda := max leaf norm of the instance
  bool learn = true;
  int trials = 1;                    // seeds config.seed, config.seed + 1, ...
  VerifyToggles verify;
  Thresholds thresholds;
  std::string report_path;
  std::string trace_csv_path;
  std::string samples_csv_path;
  int64_t samples_csv_count = 1000;
  int64_t evaluation_samples = 100000;
};

Json ExperimentSpecToJson(const ExperimentSpec& spec);
ExperimentSpec ExperimentSpecFromJson(const Json& j);

struct TrialOutcome {
  uint64_t seed = 0;
  RecoveryResult result;
  // Against the planted subspace; set only when the dimensions agree.
  std::optional<double> chordal;
  std::optional<double> procrustes;
  std::optional<double> alignment;  // k = 1: |<w, v>|
  double true_error = 0;   // L2 distance to F on fresh samples
  double relative_error = 0;
  bool passed = true;
  double seconds = 0;
};

struct Report {
  ExperimentSpec spec;
  Json instance;
  std::vector<TrialOutcome> trials;
  std::vector<SuiteReport> suites;
  bool passed = true;
  double seconds = 0;
  std::string samples_csv;  // filled when the spec names a samples path
};

// Timing and environment live under "timing" and "environment"; everything
// else is a function of the spec.
Json ReportToJson(const Report& r);
std::string ReportSummary(const Json& report);
std::string TraceCsv(const Report& r);

Report RunExperiment(const ExperimentSpec& spec);

// Writes the report and CSV extracts named in the spec.
void WriteOutputs(const Report& r);

}  // namespace fpca

#endif  // FPCA_HARNESS_H_
