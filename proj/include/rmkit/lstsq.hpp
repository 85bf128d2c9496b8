// Copyright 2026 The rmkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RMKIT_LSTSQ_HPP_
#define RMKIT_LSTSQ_HPP_

#include "rmkit/qcore.hpp"

namespace rmkit {

// Real view of a complex matrix: [Re(vec A); Im(vec A)].
inline RVector stack_real(const Operator& a) {
  Eigen::Index m = a.size();
  RVector v(2 * m);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      v[j * a.rows() + i] = a(i, j).real();
      v[m + j * a.rows() + i] = a(i, j).imag();
    }
  return v;
}

inline Operator unstack_real(const RVector& v, Eigen::Index d) {
  Operator a(d, d);
  Eigen::Index m = d * d;
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) a(i, j) = cplx(v[j * d + i], v[m + j * d + i]);
  return a;
}

// One SVD, many solves of min ||A x - y||^2 + lambda ||x||^2. At lambda = 0 the
// minimum-norm least-squares solution is returned; singular values below
// rcond * s_max are treated as zero.
class RidgeSolver {
 public:
  explicit RidgeSolver(const RMatrix& a, double rcond = 1e-10) : a_(a) {
    // BDCSVD loses ~1e-4 relative accuracy on these nearly degenerate systems
    Eigen::JacobiSVD<RMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u_ = svd.matrixU();
    v_ = svd.matrixV();
    s_ = svd.singularValues();
    cut_ = s_.size() ? rcond * s_[0] : 0.0;
  }

  RVector solve(const RVector& y, double lambda = 0.0) const {
    if (lambda < 0.0) throw DomainError("ridge parameter must be >= 0");
    RVector uy = u_.transpose() * y;
    for (Eigen::Index i = 0; i < s_.size(); ++i) {
      double s = s_[i];
      uy[i] = (s <= cut_) ? 0.0 : uy[i] * s / (s * s + lambda);
    }
    return v_ * uy;
  }

  double residual(const RVector& x, const RVector& y) const { return (a_ * x - y).norm(); }
  Eigen::Index rank() const { return (s_.array() > cut_).count(); }
  const RVector& singular_values() const { return s_; }
  const RMatrix& matrix() const { return a_; }

 private:
  RMatrix a_, u_, v_;
  RVector s_;
  double cut_ = 0.0;
};

}  // namespace rmkit

#endif  // RMKIT_LSTSQ_HPP_
