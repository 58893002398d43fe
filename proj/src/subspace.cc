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

#include "fpca/subspace.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace fpca {

double OperatorNorm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() == 1 || A.cols() == 1) return A.norm();
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

double GaussianTail(double t) { return std::erfc(t / std::sqrt(2.0)); }

Frame::Frame(Matrix basis) : basis_(std::move(basis)) {
  if (!basis_.allFinite()) throw InvalidArgument("frame has non-finite entries");
  if (basis_.cols() > basis_.rows()) {
    throw InvalidArgument("frame has more vectors than the ambient dimension");
  }
  const int l = size();
  if (l == 0) return;
  Matrix gram = basis_.transpose() * basis_;
  double err = (gram - Matrix::Identity(l, l)).cwiseAbs().maxCoeff();
  if (err > kOrthonormalTol) {
    throw InvalidArgument("frame is not orthonormal (Gram error " +
                          std::to_string(err) + ")");
  }
}

Frame Frame::Empty(int d) {
  if (d <= 0) throw InvalidArgument("ambient dimension must be positive");
  return Frame(Matrix(d, 0));
}

Frame Frame::Orthonormalize(const Matrix& vectors) {
  const int d = static_cast<int>(vectors.rows());
  const int l = static_cast<int>(vectors.cols());
  if (l == 0) return Empty(d);
  if (l > d) throw InvalidArgument("too many vectors to orthonormalize");
  Eigen::HouseholderQR<Matrix> qr(vectors);
  Matrix R = qr.matrixQR().topRows(l).triangularView<Eigen::Upper>();
  double scale = std::max(1.0, vectors.cwiseAbs().maxCoeff());
  for (int i = 0; i < l; ++i) {
    if (std::abs(R(i, i)) < 1e-12 * scale) {
      throw DegeneracyError("vectors are linearly dependent");
    }
  }
  Matrix Q = qr.householderQ() * Matrix::Identity(d, l);
  // Fix signs so that the result does not depend on the QR sign convention.
  for (int i = 0; i < l; ++i) {
    if (R(i, i) < 0) Q.col(i) *= -1.0;
  }
  return Frame(std::move(Q));
}

Frame Frame::Append(const Vector& w) const {
  if (w.size() != basis_.rows()) throw InvalidArgument("dimension mismatch");
  Matrix next(basis_.rows(), basis_.cols() + 1);
  next << basis_, w;
  return Frame(std::move(next));
}

Vector Frame::Project(const Vector& x) const {
  return basis_ * (basis_.transpose() * x);
}

Matrix Frame::Project(const Matrix& X) const {
  return basis_ * (basis_.transpose() * X);
}

Vector Frame::ComplementProject(const Vector& x) const {
  return x - Project(x);
}

Matrix Frame::ComplementProject(const Matrix& X) const {
  return X - Project(X);
}

Matrix Frame::Projector() const { return basis_ * basis_.transpose(); }

Matrix Frame::ComplementProjector() const {
  const int d = ambient_dim();
  return Matrix::Identity(d, d) - Projector();
}

void RequireSymmetric(const Matrix& M) {
  if (M.rows() != M.cols()) throw InvalidArgument("matrix is not square");
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("matrix is not symmetric");
  }
}

namespace {

void RequireComparable(const Frame& a, const Frame& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.size() != b.size()) {
    throw InvalidArgument("frames differ in dimension or size");
  }
}

}  // namespace

double ChordalDistance(const Frame& a, const Frame& b) {
  RequireComparable(a, b);
  double overlap = (a.basis().transpose() * b.basis()).squaredNorm();
  return std::sqrt(std::max(0.0, a.size() - overlap));
}

double ProcrustesDistance(const Frame& a, const Frame& b) {
  RequireComparable(a, b);
  if (a.size() == 0) return 0.0;
  Matrix cross = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix O = svd.matrixU() * svd.matrixV().transpose();
  return (b.basis() - a.basis() * O).norm();
}

double FrameNearness(const Frame& frame, const Frame& target) {
  if (frame.ambient_dim() != target.ambient_dim()) {
    throw InvalidArgument("frames live in different ambient spaces");
  }
  if (frame.size() == 0) return 0.0;
  Matrix coords = target.basis().transpose() * frame.basis();
  return 1.0 - coords.colwise().norm().minCoeff();
}

Frame SnapFrameInto(const Frame& frame, const Frame& target) {
  const int l = frame.size();
  if (l == 0) return frame;
  const double nu = FrameNearness(frame, target);
  if (nu > 1.0 / (2.0 * l * l)) {
    throw InvalidArgument("frame is not nearly within the target (nu = " +
                          std::to_string(nu) + ")");
  }
  Matrix P = target.Project(frame.basis());
  Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() < 1e-10) {
    throw DegeneracyError("projected frame is rank deficient");
  }
  Frame snapped(svd.matrixU() * svd.matrixV().transpose());

  const double slack = 1e-9;
  double dc = ChordalDistance(frame, snapped);
  if (dc > std::sqrt(2.0 * nu * l) + slack) {
    throw std::logic_error("snapped frame violates the chordal bound");
  }
  double drift = (snapped.basis() - frame.basis()).colwise().norm().maxCoeff();
  if (drift > 2.0 * std::sqrt(nu * l) + slack) {
    throw std::logic_error("snapped frame violates the drift bound");
  }
  return snapped;
}

TopSvdResult ApproxTopSvd(const BlockOperator& op, int d, int k,
                          const TopSvdOptions& options) {
  if (d <= 0 || k <= 0 || k > d) throw InvalidArgument("need 1 <= k <= d");
  if (!(options.eta > 0) || !(options.delta > 0) || options.delta >= 1) {
    throw InvalidArgument("eta and delta must lie in (0, 1)");
  }
  int cap = options.max_iterations;
  if (cap <= 0) {
    cap = static_cast<int>(
        std::ceil(10.0 * std::log(d / (options.eta * options.delta))));
    cap = std::max(cap, 1);
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Matrix G(d, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < d; ++i) G(i, j) = normal(rng);
  Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ() *
             Matrix::Identity(d, k);

  auto ritz = [&](const Matrix& basis, const Matrix& image, Matrix* rotated,
                  Vector* values) {
    Matrix T = basis.transpose() * image;
    T = 0.5 * (T + T.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(T);
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(eig.eigenvalues()(a)) > std::abs(eig.eigenvalues()(b));
    });
    rotated->resize(d, k);
    values->resize(k);
    for (int i = 0; i < k; ++i) {
      rotated->col(i) = basis * eig.eigenvectors().col(order[i]);
      (*values)(i) = eig.eigenvalues()(order[i]);
    }
  };

  TopSvdResult result;
  Vector previous;
  Matrix rotated;
  Vector values;
  for (int it = 1; it <= cap; ++it) {
    Matrix Z = op(Q);
    if (Z.rows() != d || Z.cols() != k) {
      throw InvalidArgument("operator returned a block of the wrong shape");
    }
    ritz(Q, Z, &rotated, &values);
    result.iterations = it;
    if (previous.size() == k) {
      double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
      if ((values - previous).cwiseAbs().maxCoeff() <= options.tol * scale) {
        result.converged = true;
        break;
      }
    }
    previous = values;
    Q = Eigen::HouseholderQR<Matrix>(Z).householderQ() * Matrix::Identity(d, k);
  }
  if (!result.converged) {
    ritz(Q, op(Q), &rotated, &values);
  }
  // Re-orthonormalize to remove rounding drift before building the frame.
  Eigen::HouseholderQR<Matrix> qr(rotated);
  Matrix R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix clean = qr.householderQ() * Matrix::Identity(d, k);
  for (int i = 0; i < k; ++i) {
    if (R(i, i) < 0) clean.col(i) *= -1.0;
  }
  result.vectors = Frame(std::move(clean));
  result.rayleigh = values;
  result.singular_values = values.cwiseAbs();
  return result;
}

TopSvdResult ApproxTopSvd(const Matrix& M, int k, const TopSvdOptions& options) {
  RequireSymmetric(M);
  return ApproxTopSvd([&M](const Matrix& B) -> Matrix { return M * B; },
                      static_cast<int>(M.rows()), k, options);
}

namespace {

// Visits integer points z in Z^m with |z|^2 <= r2 in lexicographic order.
template <typename Visit>
void VisitLatticeBall(int m, double r2, Visit&& visit, int64_t max_visits) {
  std::vector<int> z(m, 0);
  int64_t visits = 0;
  std::function<void(int, double)> rec = [&](int i, double left) {
    if (i == m) {
      if (++visits > max_visits) throw BudgetError("epsilon-net too large");
      visit(z);
      return;
    }
    int bound = static_cast<int>(std::floor(std::sqrt(std::max(0.0, left))));
    for (int v = -bound; v <= bound; ++v) {
      double rest = left - static_cast<double>(v) * v;
      if (rest < -1e-9) continue;
      z[i] = v;
      rec(i + 1, rest);
    }
    z[i] = 0;
  };
  rec(0, r2);
}

void CheckNetArgs(int m, double R, double eps) {
  if (m <= 0) throw InvalidArgument("net dimension must be positive");
  if (!(R >= 0) || !std::isfinite(R)) throw InvalidArgument("radius must be >= 0");
  if (!(eps > 0) || !std::isfinite(eps)) throw InvalidArgument("eps must be > 0");
}

}  // namespace

std::vector<Vector> EpsilonNetBall(int m, double R, double eps,
                                   int64_t max_points) {
  CheckNetArgs(m, R, eps);
  if (eps >= R) return {Vector::Zero(m)};
  const double h = 2.0 * eps / std::sqrt(static_cast<double>(m));
  const double r = (R + eps) / h;
  std::vector<Vector> points;
  VisitLatticeBall(m, r * r * (1 + 1e-12), [&](const std::vector<int>& z) {
    if (static_cast<int64_t>(points.size()) >= max_points) {
      throw BudgetError("epsilon-net exceeds " + std::to_string(max_points) +
                        " points");
    }
    Vector p(m);
    for (int i = 0; i < m; ++i) p(i) = h * z[i];
    points.push_back(std::move(p));
  }, max_points);
  return points;
}

std::vector<Matrix> EpsilonNetMatrices(int rows, int cols, double B, double eps,
                                       int64_t max_points) {
  if (rows <= 0 || cols <= 0) throw InvalidArgument("empty matrix shape");
  const int m = rows * cols;
  CheckNetArgs(m, B, eps);
  const double h = 2.0 * eps / std::sqrt(static_cast<double>(m));
  const double frob = B * std::sqrt(static_cast<double>(std::min(rows, cols)));
  const double r = (frob + eps) / h;
  std::vector<Matrix> points;
  VisitLatticeBall(m, r * r * (1 + 1e-12), [&](const std::vector<int>& z) {
    Matrix A(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) A(i, j) = h * z[i * cols + j];
    if (OperatorNorm(A) > (B + eps) * (1 + 1e-12)) return;
    if (static_cast<int64_t>(points.size()) >= max_points) {
      throw BudgetError("matrix epsilon-net exceeds " +
                        std::to_string(max_points) + " points");
    }
    points.push_back(std::move(A));
  }, 64 * max_points);
  return points;
}

}  // namespace fpca
