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

// Orthonormal frames, subspace distances, block power iteration and grid
// epsilon-nets.

#ifndef FPCA_SUBSPACE_H_
#define FPCA_SUBSPACE_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "fpca/common.h"

namespace fpca {

// An ordered orthonormal set of vectors in R^d, stored as the columns of a
// d x l matrix. l may be zero.
class Frame {
 public:
  static constexpr double kOrthonormalTol = 1e-9;

  Frame() = default;
  // Throws InvalidArgument unless the columns are orthonormal to kOrthonormalTol.
  explicit Frame(Matrix basis);

  static Frame Empty(int d);
  // Householder QR of the columns; throws DegeneracyError on rank deficiency.
  static Frame Orthonormalize(const Matrix& vectors);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int size() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  Vector vector(int i) const { return basis_.col(i); }

  // Returns a new frame with w appended; w must be a unit vector orthogonal to
  // the frame.
  Frame Append(const Vector& w) const;

  Vector Coordinates(const Vector& x) const { return basis_.transpose() * x; }
  Matrix Coordinates(const Matrix& X) const { return basis_.transpose() * X; }
  Vector Project(const Vector& x) const;
  Matrix Project(const Matrix& X) const;
  Vector ComplementProject(const Vector& x) const;
  Matrix ComplementProject(const Matrix& X) const;
  Matrix Projector() const;
  Matrix ComplementProjector() const;

 private:
  Matrix basis_;
};

// Throws InvalidArgument unless M is square and symmetric to 1e-12 relative.
void RequireSymmetric(const Matrix& M);

// sqrt(l - ||U1^T U2||_F^2).
double ChordalDistance(const Frame& a, const Frame& b);
// min over orthogonal O of ||U2 - U1 O||_F.
double ProcrustesDistance(const Frame& a, const Frame& b);

// 1 - min_i ||Pi_V w_i||; zero for an empty frame.
double FrameNearness(const Frame& frame, const Frame& target);

// Replaces each frame vector by its projection onto the target subspace and
// re-orthonormalizes with the symmetric (Lowdin) orthogonalization. The
// frame must be nu-nearly within the target with nu <= 1/(2 l^2).
Frame SnapFrameInto(const Frame& frame, const Frame& target);

// Applies a symmetric d x d matrix to a d x b block.
using BlockOperator = std::function<Matrix(const Matrix&)>;

struct TopSvdOptions {
  double eta = 1e-3;
  double delta = 1e-3;
  uint64_t seed = 0;
  int max_iterations = 0;  // 0 selects ceil(10 log(d / (eta delta))).
  double tol = 1e-12;
};

struct TopSvdResult {
  Frame vectors;         // top-k singular vectors, ordered by singular value
  Vector singular_values;
  Vector rayleigh;       // signed Rayleigh quotients w^T M w
  int iterations = 0;
  bool converged = false;
};

// Seeded block power iteration for the top-k singular subspace of a symmetric
// operator, with Rayleigh-Ritz rotation each step.
TopSvdResult ApproxTopSvd(const BlockOperator& op, int d, int k,
                          const TopSvdOptions& options = {});
TopSvdResult ApproxTopSvd(const Matrix& M, int k,
                          const TopSvdOptions& options = {});

// Grid points of spacing 2 eps / sqrt(m) inside the ball of radius R + eps.
// Covers the radius-R ball to within eps. Returns {0} when eps >= R.
std::vector<Vector> EpsilonNetBall(int m, double R, double eps,
                                   int64_t max_points = 1000000);

// eps-net (in operator norm) of rows x cols matrices with operator norm at
// most B. Points are a Frobenius grid of spacing 2 eps / sqrt(rows cols),
// kept when their operator norm is at most B + eps.
std::vector<Matrix> EpsilonNetMatrices(int rows, int cols, double B, double eps,
                                       int64_t max_points = 1000000);

}  // namespace fpca

#endif  // FPCA_SUBSPACE_H_
