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

#ifndef FPCA_COMMON_H_
#define FPCA_COMMON_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fpca {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Evaluates a function on every column of X and returns one value per column.
using BatchFunction = std::function<Vector(const Matrix& X)>;

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A configured size or time limit was exceeded.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompatibleRepresentation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::string loc)
      : std::runtime_error(what + " at " + loc), message(what), location(std::move(loc)) {}
  std::string message;
  std::string location;
};

// Largest singular value, computed from a dense SVD.
double OperatorNorm(const Matrix& A);

// Two-sided Gaussian tail Pr[|g| >= t] for g ~ N(0,1).
double GaussianTail(double t);

}  // namespace fpca

#endif  // FPCA_COMMON_H_
