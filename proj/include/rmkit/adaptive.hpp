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

#ifndef RMKIT_ADAPTIVE_HPP_
#define RMKIT_ADAPTIVE_HPP_

#include <cmath>
#include <vector>

#include "rmkit/estimator.hpp"

namespace rmkit {

// Sampling densities below this are set to zero; under the support
// precondition their kernels are ~0, so dropping them changes nothing.
inline constexpr double kPruneDensity = 1e-15;

namespace detail {

inline const KernelTable& require_discrete(const KernelTable& k, const char* what) {
  if (k.analytic()) throw DomainError(std::string(what) + ": adaptive densities need a discrete ensemble");
  return k;
}

// Normalize p .* s, prune tiny entries, renormalize.
inline RVector density_from_scores(const RVector& p, const RVector& s, const char* what) {
  RVector q = p.cwiseProduct(s);
  double z = q.sum();
  if (!(z > 0.0)) throw DomainError(std::string(what) + ": kernel is zero on the support of p");
  q /= z;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q[i] < kPruneDensity) q[i] = 0.0;
  return q / q.sum();
}

}  // namespace detail

// K_q = K p / q with density q. Members with q = 0 must carry (numerically)
// zero weighted kernel.
inline KernelTable reweight(const KernelTable& k, const RVector& q) {
  detail::require_discrete(k, "reweight");
  const RVector& p = k.density();
  const RMatrix& t = k.values();
  if (q.size() != p.size()) throw DomainError("reweight: density has the wrong length");
  double scale = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) scale = std::max(scale, p[i] * t.row(i).cwiseAbs().maxCoeff());
  RMatrix out = RMatrix::Zero(t.rows(), t.cols());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    double mass = p[i] * t.row(i).cwiseAbs().maxCoeff();
    if (q[i] == 0.0) {
      if (mass > 1e-12 * scale)
        throw DomainError("reweight: q vanishes on member " + std::to_string(i) + " where p K does not");
      continue;
    }
    if (p[i] != 0.0) out.row(i) = t.row(i) * (p[i] / q[i]);
  }
  return KernelTable(k.ensemble().with_weights(q), out, k.residual());
}

// argmin_q Var_max: q ~ p max_b |K|
inline RVector q_optimal(const KernelTable& k) {
  detail::require_discrete(k, "q_optimal");
  return detail::density_from_scores(k.density(), k.values().cwiseAbs().rowwise().maxCoeff(), "q_optimal");
}

// Shared density for several kernels: q ~ p max_{i,b} |K_i|
inline RVector q_multi(const std::vector<KernelTable>& ks) {
  if (ks.empty()) throw DomainError("q_multi: no kernels");
  const RVector& p = detail::require_discrete(ks.front(), "q_multi").density();
  RVector s = RVector::Zero(p.size());
  for (const auto& k : ks) {
    detail::require_discrete(k, "q_multi");
    if (k.values().rows() != p.size() || k.density() != p)
      throw DomainError("q_multi: kernels do not share an ensemble");
    s = s.cwiseMax(k.values().cwiseAbs().rowwise().maxCoeff());
  }
  return detail::density_from_scores(p, s, "q_multi");
}

// argmin_q Var under the maximally mixed state: q ~ p sqrt(sum_b K^2)
inline RVector q_maxmixed(const KernelTable& k) {
  detail::require_discrete(k, "q_maxmixed");
  return detail::density_from_scores(k.density(), k.values().rowwise().norm(), "q_maxmixed");
}

}  // namespace rmkit

#endif  // RMKIT_ADAPTIVE_HPP_
