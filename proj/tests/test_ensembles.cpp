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
#include "rmkit/ensembles.hpp"

using namespace rmkit;

namespace {

Operator P(const char* w) { return PauliString::parse(w).dense(); }

Operator outcome_projector(const Operator& v, Bitstring b) {
  CVector c = v.adjoint().col(b);
  return c * c.adjoint();
}

}  // namespace

TEST(ensembles, cl2_bases_are_uniform) {
  Rng rng(1);
  auto ens = Ensemble::global_cl2(2);
  int counts[3] = {0, 0, 0};
  const int n = 30000;
  for (int i = 0; i < n; ++i) counts[static_cast<int>(sample(ens, rng).basis)]++;
  for (int c : counts) EXPECT_NEAR(c / double(n), 1.0 / 3, 5 * std::sqrt(2.0 / 9 / n));
}

TEST(ensembles, cl2_rotation_measures_the_named_basis) {
  // R^dagger Z R = sigma for each basis
  const char* names[] = {"X", "Y", "Z"};
  for (int b = 0; b < 3; ++b) {
    Operator r = basis_rotation(Basis(b));
    EXPECT_LT((r.adjoint() * P("Z") * r - P(names[b])).norm(), 1e-14);
  }
  SampledUnitary z;
  z.kind = EnsembleKind::GlobalCl2;
  z.n = 3;
  z.basis = Basis::Z;
  EXPECT_LT((z.realize() - Operator::Identity(8, 8)).norm(), 1e-15);
}

TEST(ensembles, degenerate_weights_pick_index_zero) {
  RVector w = RVector::Zero(4);
  w[0] = 1.0;
  std::vector<EulerAngles> m(4);
  auto ens = Ensemble::subsample(1, m, w);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(sample(ens, rng).index, 0u);
}

TEST(ensembles, haar_cos2_theta_moment) {
  // E[cos^2 theta] under density sin(theta)/2 is 1/3
  Rng rng(2026);
  auto ens = Ensemble::global_su2(1);
  double s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto v = sample(ens, rng);
    s += std::cos(v.angles.theta) * std::cos(v.angles.theta);
    EXPECT_GE(v.angles.theta, 0.0);
    EXPECT_LE(v.angles.theta, M_PI);
    EXPECT_LT(v.angles.phi, 2 * M_PI);
    EXPECT_LT(v.angles.psi, 4 * M_PI);
  }
  EXPECT_NEAR(s / n, 1.0 / 3, 0.01);
}

TEST(ensembles, realize_examples) {
  SampledUnitary v;
  v.kind = EnsembleKind::GlobalSU2;
  v.n = 2;
  EXPECT_LT((v.realize() - Operator::Identity(4, 4)).norm(), 1e-15);
  v.n = 1;
  v.angles = {M_PI, 0, 0};
  Operator u = v.realize();
  Operator expect(2, 2);  // exp(i s2 pi/2) = i s2
  expect << 0, 1, -1, 0;
  EXPECT_LT((u - expect).norm(), 1e-15);
  EXPECT_LT((u * P("Z") * u.adjoint() + P("Z")).norm(), 1e-15);
}

TEST(ensembles, euler_form_matches_matrix_exponentials) {
  // e^{i s3 a/2} etc. via the generic exponential series of i*s*a/2
  auto expi = [](const Operator& s, double a) {
    Operator x = cplx(0, a / 2) * s, term = Operator::Identity(2, 2), sum = term;
    for (int k = 1; k < 40; ++k) {
      term = term * x / double(k);
      sum += term;
    }
    return sum;
  };
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    auto a = haar_angles(rng);
    Operator ref = expi(P("Z"), a.phi) * expi(P("Y"), a.theta) * expi(P("Z"), a.psi);
    EXPECT_LT((Operator(su2_matrix(a)) - ref).norm(), 1e-12);
  }
}

TEST(ensembles, realize_is_tensor_power_and_unitary) {
  Rng rng(7);
  auto ens = Ensemble::global_su2(3);
  for (int t = 0; t < 5; ++t) {
    auto v = sample(ens, rng);
    Operator u = v.realize();
    EXPECT_TRUE(is_unitary(u, 1e-10));
    EXPECT_LT((u - tensor_power(Operator(su2_matrix(v.angles)), 3)).norm(), 1e-12);
  }
  auto lc = Ensemble::local_clifford(3);
  for (std::size_t i = 0; i < lc.size(); i += 5) EXPECT_TRUE(is_unitary(lc.member(i).realize(), 1e-10));
}

TEST(ensembles, outcome_projectors_drop_the_outer_angle) {
  // With V = e3(phi) e2(theta) e3(psi), the left factor is diagonal and cancels
  // in V^dagger |b><b| V.
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    auto a = haar_angles(rng);
    auto b = a;
    b.phi = 2 * M_PI * rng.uniform();
    Operator va = tensor_power(Operator(su2_matrix(a)), 2);
    Operator vb = tensor_power(Operator(su2_matrix(b)), 2);
    for (Bitstring x = 0; x < 4; ++x)
      EXPECT_LT((outcome_projector(va, x) - outcome_projector(vb, x)).norm(), 1e-12);
  }
}

TEST(ensembles, haar_moment_of_z_string) {
  // E_V <b| V Z^{x n} V^dagger |b> over Haar for n=2, b=00: E[(cos theta)^2] = 1/3.
  // Monte-Carlo oracle with 3 sigma.
  Rng rng(10);
  auto ens = Ensemble::global_su2(2);
  Operator zz = P("ZZ");
  const int n = 40000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    Operator u = sample(ens, rng).realize();
    double x = (u * zz * u.adjoint())(0, 0).real();
    s += x;
    s2 += x * x;
  }
  double mean = s / n, sd = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 1.0 / 3, 3 * sd);
}

TEST(ensembles, json_roundtrip) {
  Rng rng(11);
  auto e = subsample_su2(2, 5, rng);
  auto j = e.to_json();
  EXPECT_EQ(j["kind"], "DiscreteSubsample");
  EXPECT_EQ(j["members"].size(), 5u);
  auto back = Ensemble::from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.angles()[i].theta, e.angles()[i].theta);
    EXPECT_EQ(back.angles()[i].psi, e.angles()[i].psi);
    EXPECT_EQ(back.weight(i), e.weight(i));
  }
  auto c = Ensemble::from_json(Ensemble::global_cl2(3).to_json());
  EXPECT_EQ(c.kind(), EnsembleKind::GlobalCl2);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(Ensemble::global_cl2(3).to_json()["members"][1]["basis"], "Y");
}

TEST(ensembles, subsample_examples) {
  Rng rng(12);
  auto e = subsample_su2(2, 25, rng);
  EXPECT_EQ(e.size(), 25u);
  EXPECT_NEAR(e.weight(3), 1.0 / 25, 1e-15);
  auto one = subsample_su2(1, 1, rng);
  EXPECT_EQ(one.weight(0), 1.0);
  EXPECT_THROW(subsample_su2(1, 0, rng), DomainError);
}

TEST(ensembles, subsample_retries_until_representable) {
  Operator h = P("ZZ") / 3.0 + (P("XX") + P("YY")) / 12.0;
  Rng rng(13);
  // each member contributes one rank-one m m^T to the two-body part, and a
  // generic symmetric 3x3 target needs six of them
  auto e = subsample_su2(2, 6, rng, {h});
  RidgeSolver s(stacked_outcome_matrix(e));
  RVector y = stack_real(h);
  EXPECT_LT(s.residual(s.solve(y), y), 1e-8);
  // a single unitary cannot represent an off-diagonal operator in general
  Rng rng2(14);
  try {
    subsample_su2(2, 1, rng2, {P("XY") + P("YX")}, 5);
    FAIL() << "expected a representability error";
  } catch (const RepresentabilityError& err) {
    EXPECT_GT(err.residual(), 1e-8);
  }
}

TEST(ensembles, weights_validated) {
  std::vector<EulerAngles> m(2);
  RVector w(2);
  w << 0.5, 0.6;
  EXPECT_THROW(Ensemble::subsample(1, m, w), DomainError);
}
