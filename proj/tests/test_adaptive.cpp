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

#include "gtest/gtest.h"
#include "rmkit/adaptive.hpp"

using namespace rmkit;

namespace {

Operator P(const char* w) { return PauliString::parse(w).dense(); }

Operator link_term() { return P("ZZ") / 3.0 + (P("XX") + P("YY")) / 12.0; }

RVector random_simplex(Eigen::Index m, Rng& rng) {
  RVector q(m);
  for (Eigen::Index i = 0; i < m; ++i) q[i] = -std::log(1.0 - rng.uniform());  // Dirichlet(1)
  return q / q.sum();
}

KernelTable link_kernel(int members, std::uint64_t seed) {
  Rng rng(seed);
  return kernel_least_squares(link_term(), subsample_su2(2, members, rng));
}

double var_mm(const KernelTable& k) { return var_under_state(k, DensityMatrix::maximally_mixed(k.qubits())); }

}  // namespace

TEST(adaptive, reweight_examples) {
  auto k = link_kernel(25, 1);
  auto same = reweight(k, k.density());
  EXPECT_LT((same.values() - k.values()).cwiseAbs().maxCoeff(), 1e-15);
  Rng rng(2);
  RVector q = random_simplex(25, rng);
  auto kq = reweight(k, q);
  EXPECT_LT((reconstruct(kq) - reconstruct(k)).norm(), 1e-10);
  EXPECT_EQ(kq.density(), q);
  // doubling one member's weight halves its kernel
  RVector p2 = k.density();
  double p3 = p2[3];
  p2 *= (1 - 2 * p3) / (1 - p3);
  p2[3] = 2 * p3;
  auto kd = reweight(k, p2);
  EXPECT_LT((kd.values().row(3) - 0.5 * k.values().row(3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(adaptive, reweight_support_mismatch) {
  auto k = link_kernel(8, 3);
  RVector q = k.density();
  q[0] = 0.0;
  q /= q.sum();
  EXPECT_THROW(reweight(k, q), DomainError);
  EXPECT_THROW(reweight(k, RVector::Constant(4, 0.25)), DomainError);  // wrong length
  // zero row with zero density is fine: 0/0 -> 0
  RMatrix t = k.values();
  t.row(0).setZero();
  KernelTable kz(k.ensemble(), t);
  auto r = reweight(kz, q);
  EXPECT_EQ(r.values().row(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(adaptive, q_optimal_examples) {
  auto k = link_kernel(25, 4);
  RMatrix t = k.values();
  t.row(7).setZero();
  KernelTable kz(k.ensemble(), t);
  RVector q = q_optimal(kz);
  EXPECT_EQ(q[7], 0.0);
  EXPECT_NEAR(q.sum(), 1.0, 1e-12);
  EXPECT_GE(q.minCoeff(), 0.0);
  // rows with equal max|K| give q = p
  RVector w(3);
  w << 0.2, 0.3, 0.5;
  std::vector<EulerAngles> m(3);
  RMatrix c(3, 2);
  c << 1, -2, 2, 0.5, -2, 2;
  KernelTable kc(Ensemble::subsample(1, m, w), c);
  EXPECT_LT((q_optimal(kc) - w).cwiseAbs().maxCoeff(), 1e-15);
  KernelTable zero(Ensemble::subsample(1, m, w), RMatrix::Zero(3, 2));
  EXPECT_THROW(q_optimal(zero), DomainError);
  EXPECT_THROW(q_optimal(kernel_cs(P("Z"), Ensemble::global_su2(1))), DomainError);
}

TEST(adaptive, q_optimal_beats_random_densities) {
  auto k = link_kernel(25, 5);
  double vopt = var_max_bound(reweight(k, q_optimal(k)));
  EXPECT_LE(vopt, var_max_bound(k) + 1e-12);
  Rng rng(6);
  for (int t = 0; t < 100; ++t) EXPECT_LE(vopt, var_max_bound(reweight(k, random_simplex(25, rng))) + 1e-12);
}

TEST(adaptive, q_optimal_is_simplex_argmin) {
  // surrogate sum_V q max_b (p K / q)^2 on 3-member ensembles, 1000 random points
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    RMatrix t(3, 4);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.normal();
    std::vector<EulerAngles> m(3);
    KernelTable k(Ensemble::subsample(2, m, random_simplex(3, rng)), t);
    RVector s = k.values().cwiseAbs().rowwise().maxCoeff();
    auto surrogate = [&](const RVector& q) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += std::pow(k.density()[i] * s[i], 2) / q[i];
      return v;
    };
    double best = surrogate(q_optimal(k));
    EXPECT_NEAR(best, var_max_bound(reweight(k, q_optimal(k))), 1e-12);
    for (int t = 0; t < 1000; ++t) EXPECT_LE(best, surrogate(random_simplex(3, rng)) + 1e-12);
  }
}

TEST(adaptive, q_multi_examples) {
  auto a = link_kernel(25, 8);
  EXPECT_LT((q_multi({a}) - q_optimal(a)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((q_multi({a, a}) - q_optimal(a)).cwiseAbs().maxCoeff(), 1e-15);
  KernelSystem sys(a.ensemble());
  auto b = kernel_least_squares(P("ZI") + P("IZ"), sys);
  auto c = kernel_least_squares(P("XX") + P("YY") + P("ZZ"), sys);
  RVector q = q_multi({a, b, c});
  EXPECT_NEAR(q.sum(), 1.0, 1e-12);
  // max over observables of Var_max does not exceed its value under p
  double under_p = std::max({var_max_bound(a), var_max_bound(b), var_max_bound(c)});
  double under_q = std::max({var_max_bound(reweight(a, q)), var_max_bound(reweight(b, q)),
                             var_max_bound(reweight(c, q))});
  EXPECT_LE(under_q, under_p + 1e-12);
  Rng rng(9);
  auto other = kernel_least_squares(link_term(), subsample_su2(2, 20, rng));
  EXPECT_THROW(q_multi({a, other}), DomainError);
  EXPECT_THROW(q_multi({}), DomainError);
}

TEST(adaptive, q_maxmixed_examples) {
  RVector w(3);
  w << 0.2, 0.3, 0.5;
  std::vector<EulerAngles> m(3);
  RMatrix c(3, 2);
  c << 0, 4, -1, 0, 0, 2;  // one non-zero b per member
  KernelTable k(Ensemble::subsample(1, m, w), c);
  RVector expect(3);
  expect << 0.8, 0.3, 1.0;
  expect /= expect.sum();
  EXPECT_LT((q_maxmixed(k) - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((q_maxmixed(k) - q_optimal(k)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(adaptive, q_maxmixed_beats_random_densities) {
  auto k = link_kernel(25, 10);
  double vopt = var_mm(reweight(k, q_maxmixed(k)));
  Rng rng(11);
  for (int t = 0; t < 100; ++t) EXPECT_LE(vopt, var_mm(reweight(k, random_simplex(25, rng))) + 1e-12);
}

TEST(adaptive, tiny_densities_are_pruned) {
  RVector w = RVector::Constant(3, 1.0 / 3);
  std::vector<EulerAngles> m(3);
  RMatrix c(3, 2);
  c << 1, 1, 1e-17, 0, 1, -1;
  KernelTable k(Ensemble::subsample(1, m, w), c);
  RVector q = q_optimal(k);
  EXPECT_EQ(q[1], 0.0);
  EXPECT_NEAR(q[0], 0.5, 1e-15);
  auto r = reweight(k, q);
  EXPECT_EQ(r.values().row(1).cwiseAbs().maxCoeff(), 0.0);
}
