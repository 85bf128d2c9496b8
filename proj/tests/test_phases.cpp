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

#include <bit>
#include <numeric>

#include "gtest/gtest.h"
#include "rmkit/phases.hpp"

using namespace rmkit;

namespace {

bool commute(const PauliString& a, const PauliString& b) {
  return std::popcount((a.xmask() & b.zmask()) ^ (a.zmask() & b.xmask())) % 2 == 0;
}

// Index of a Pauli string proportional to `a`, or -1.
int pauli_match(const Operator& a) {
  int n = qubits_of(a.rows());
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << (2 * n)); ++k) {
    cplx c = pauli_trace(pauli_from_index(n, k), a) / double(a.rows());
    if (std::abs(std::abs(c) - 1.0) < 1e-10) return static_cast<int>(k);
  }
  return -1;
}

}  // namespace

TEST(phases, lattice_geometry) {
  EdgeLattice lat(2);
  EXPECT_EQ(lat.qubits(), 8);
  EXPECT_EQ(lat.patch_count(), 4);
  EXPECT_EQ(lat.patch(1), (std::array<int, 3>{1, 3, 5}));
  EXPECT_THROW(lat.patch(4), DomainError);
  EXPECT_THROW(EdgeLattice(3), DomainError);
  // each edge lies on two stars and two plaquettes; all stabilizers commute
  std::vector<int> in_star(8, 0), in_plaq(8, 0);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c) {
      for (int q : lat.star(i, c)) in_star[q]++;
      for (int q : lat.plaquette(i, c)) in_plaq[q]++;
    }
  EXPECT_EQ(in_star, std::vector<int>(8, 2));
  EXPECT_EQ(in_plaq, std::vector<int>(8, 2));
  auto st = lat.stabilizers();
  for (const auto& a : st)
    for (const auto& b : st) EXPECT_TRUE(commute(a, b));
  // tiling pairs are disjoint and share a vertex
  for (int layer = 0; layer < 2; ++layer) {
    std::vector<int> used(8, 0);
    for (auto [a, b] : lat.tiling(layer)) {
      used[a]++;
      used[b]++;
      bool adjacent = false;
      for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c) {
          auto s = lat.star(i, c);
          adjacent |= std::count(s.begin(), s.end(), a) && std::count(s.begin(), s.end(), b);
        }
      EXPECT_TRUE(adjacent) << a << "," << b;
    }
    EXPECT_EQ(used, std::vector<int>(8, 1));
  }
}

TEST(phases, representative_states) {
  EdgeLattice lat(2);
  auto tg = toric_ground(lat);
  for (const auto& s : lat.stabilizers()) EXPECT_NEAR(expectation(tg, s.dense()), 1.0, 1e-10);
  auto prod = product_state(lat);
  for (int q = 0; q < 8; ++q) EXPECT_NEAR(entanglement_entropy(prod, {q}), 0.0, 1e-12);
  EXPECT_NEAR(entanglement_entropy(prod, {0, 1, 2, 3}), 0.0, 1e-12);
  // edges 0 and 2 meet at a vertex
  EXPECT_GT(entanglement_entropy(tg, {0, 2}), 0.5);
}

TEST(phases, clifford_group) {
  const auto& g = clifford2_group();
  EXPECT_EQ(g.size(), 11520u);
  Rng rng(1);
  for (int t = 0; t < 40; ++t) {
    const auto& u = g[rng.below(g.size())];
    ASSERT_TRUE(is_unitary(u, 1e-12));
    for (int k = 1; k < 16; ++k) {
      Operator p = pauli_from_index(2, k).dense();
      EXPECT_GE(pauli_match(u * p * u.adjoint()), 1);
    }
  }
}

TEST(phases, lowdepth_circuits) {
  EdgeLattice lat(2);
  Rng rng(2);
  EXPECT_LT((random_lowdepth_circuit(lat, 0, rng) - Operator::Identity(256, 256)).norm(), 1e-15);
  EXPECT_THROW(random_lowdepth_circuit(lat, -1, rng), DomainError);
  auto tg = toric_ground(lat);
  for (int d : {1, 2, 3}) {
    Operator u = random_lowdepth_circuit(lat, d, rng);
    EXPECT_TRUE(is_unitary(u, 1e-10));
    StateVector psi(u * tg.amplitudes());
    auto st = lat.stabilizers();
    for (std::size_t i = 0; i < st.size(); ++i) {
      Operator a = st[i].dense();
      EXPECT_NEAR(expectation(psi, u * a * u.adjoint()), 1.0, 1e-10);
      Operator ab = a * st[(i + 3) % st.size()].dense();
      EXPECT_NEAR(expectation(psi, u * ab * u.adjoint()), 1.0, 1e-10);
    }
  }
}

TEST(phases, shadow_rdms_match_exact) {
  EdgeLattice lat(2);
  Rng rng(3);
  auto prod = product_state(lat);
  Operator exact = partial_trace(prod.projector(), {0, 2, 4});
  // E |rho_hat - rho|_F^2 = (5^3 - 1) / N for a pure product patch
  double n_frob = 0.0;
  int count = 0;
  for (int rep = 0; rep < 5; ++rep) {
    auto r = patch_rdms(prod, lat, 10000, rng);
    ASSERT_EQ(r.size(), 4u);
    for (const auto& p : r) {
      EXPECT_NEAR(p.raw.trace().real(), 1.0, 1e-12);
      EXPECT_NEAR(p.physical.matrix().trace().real(), 1.0, 1e-9);
      double td = trace_distance(p.raw, exact);
      EXPECT_LE(td, 1.25 * 0.5 * std::sqrt(8.0 * 124.0 / 10000.0));
      EXPECT_LE(trace_distance(p.physical.matrix(), exact), td + 1e-12);
      n_frob += 10000.0 * (p.raw - exact).squaredNorm();
      ++count;
    }
  }
  EXPECT_NEAR(n_frob / count, 124.0, 12.0);
  // more shots, closer estimate
  auto far = patch_rdms(prod, lat, 500, rng), near = patch_rdms(prod, lat, 50000, rng);
  double d_far = 0.0, d_near = 0.0;
  for (int a = 0; a < 4; ++a) {
    d_far += trace_distance(far[a].raw, exact);
    d_near += trace_distance(near[a].raw, exact);
  }
  EXPECT_LT(d_near, d_far);
  EXPECT_LT(d_near / 4, 0.1);
}

TEST(phases, shadow_rdms_of_entangled_state) {
  EdgeLattice lat(2);
  Rng rng(4);
  Operator u = random_lowdepth_circuit(lat, 2, rng);
  StateVector psi(u * toric_ground(lat).amplitudes());
  // E |rho_hat - rho|_F^2 = (125 - tr rho^2) / N
  double got = 0.0, want = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    auto r = patch_rdms(psi, lat, 20000, rng);
    for (int a = 0; a < 4; ++a) {
      auto s = lat.patch(a);
      Operator exact = partial_trace(psi.projector(), {s[0], s[1], s[2]});
      EXPECT_LT(trace_distance(r[a].raw, exact), 1.25 * 0.5 * std::sqrt(8.0 * 125.0 / 20000.0));
      got += 20000.0 * (r[a].raw - exact).squaredNorm();
      want += 125.0 - (exact * exact).trace().real();
    }
  }
  EXPECT_NEAR(got / want, 1.0, 0.1);
}

TEST(phases, features_maximally_mixed) {
  EXPECT_EQ(feature_count(), 38u);
  Rng rng(5);
  const std::size_t n = 4000;
  auto o = patch_features(DensityMatrix::maximally_mixed(3), n, rng);
  const auto& sets = visible_basis(3).sets();
  auto mm = DensityMatrix::maximally_mixed(3);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (sets[k].rmask == 0b111) {
      EXPECT_NEAR(o[k], 1.0 / std::sqrt(8.0), 1e-12);
      continue;
    }
    auto kt = kernel_cs(build_B(sets[k]), Ensemble::global_su2(3));
    double se = std::sqrt(var_under_state(kt, mm) / n);
    EXPECT_NEAR(o[k], 0.0, 5 * se) << sets[k].label();
  }
}

TEST(phases, features_match_trace_oracle) {
  Rng rng(6);
  const std::size_t n = 4000;
  for (int t = 0; t < 2; ++t) {
    auto rho = random_density(3, rng);
    auto o = patch_features(rho, n, rng);
    RVector ex = exact_features(rho.matrix());
    const auto& sets = visible_basis(3).sets();
    for (std::size_t k = 0; k < sets.size(); ++k) {
      Operator b = build_B(sets[k]);
      EXPECT_LE(std::abs(ex[k]), spectral_norm(b) + 1e-12);
      double se = std::sqrt(var_under_state(kernel_cs(b, Ensemble::global_su2(3)), rho) / n);
      EXPECT_NEAR(o[k], ex[k], 5 * se + 1e-12) << sets[k].label();
    }
  }
}

TEST(phases, features_thread_independent) {
  auto rho = DensityMatrix(StateVector::basis(3, 5));
  Rng a(7), b(7);
  RVector x = patch_features(rho, 500, a, 1), y = patch_features(rho, 500, b, 3);
  EXPECT_EQ(x, y);
}

TEST(phases, kernel_properties) {
  Rng rng(8);
  std::vector<StateFeatures> f(5);
  for (auto& s : f)
    for (int p = 0; p < 4; ++p) s.push_back(RVector::NullaryExpr(38, [&] { return 0.2 * rng.normal(); }));
  f[3] = f[1];
  auto k = build_kernel(f);
  EXPECT_TRUE(k.renormalized);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(k.k(i, i), 1.0);
  EXPECT_EQ(k.k, k.k.transpose());
  EXPECT_NEAR(k.k(1, 3), 1.0, 1e-15);
  auto flat = build_kernel(f, 0.0, false);
  EXPECT_EQ(flat.k, RMatrix::Ones(5, 5));
  Eigen::SelfAdjointEigenSolver<RMatrix> es(k.k);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
  // default lambda: 1/lambda = 3 sum |o|^2 / (100 P)
  double acc = 0.0;
  for (const auto& s : f)
    for (const auto& o : s) acc += o.squaredNorm();
  EXPECT_NEAR(k.lambda, 400.0 / (3.0 * acc), 1e-12);
  f.push_back({RVector::Zero(37)});
  EXPECT_THROW(build_kernel(f), DomainError);
}

TEST(phases, pca_blocks_and_equivariance) {
  Rng rng(9);
  StateFeatures a, b;
  for (int p = 0; p < 4; ++p) {
    a.push_back(RVector::NullaryExpr(38, [&] { return 0.3 * rng.normal(); }));
    b.push_back(RVector::NullaryExpr(38, [&] { return 0.3 * rng.normal(); }));
  }
  std::vector<StateFeatures> f = {a, a, b, a, b, b};
  RVector x = kernel_pca_1d(build_kernel(f));
  EXPECT_GE(x[0], 0.0);
  EXPECT_LT(std::abs(x[0] - x[1]) + std::abs(x[0] - x[3]), 1e-8);
  EXPECT_LT(std::abs(x[2] - x[4]) + std::abs(x[2] - x[5]), 1e-8);
  EXPECT_GT(std::abs(x[0] - x[2]), 0.1);
  EXPECT_GT(separation_margin(x, {0, 0, 1, 0, 1, 1}), 0.1);

  std::vector<StateFeatures> g(6);
  for (auto& s : g)
    for (int p = 0; p < 4; ++p) s.push_back(RVector::NullaryExpr(38, [&] { return 0.3 * rng.normal(); }));
  std::vector<int> perm = {4, 2, 0, 5, 1, 3};
  std::vector<StateFeatures> gp;
  for (int i : perm) gp.push_back(g[i]);
  RVector y = kernel_pca_1d(build_kernel(g)), yp = kernel_pca_1d(build_kernel(gp));
  double sign = (yp[0] * y[perm[0]] >= 0) ? 1.0 : -1.0;
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(yp[i], sign * y[perm[i]], 1e-9);
}

TEST(phases, pipeline_separates_product_from_toric) {
  PhaseOptions o;
  o.states_per_phase = 4;
  o.depth = 0;
  o.shadow_shots = 3000;
  o.su2_shots = 300;
  auto r = classify_phases(o, 11);
  EXPECT_EQ(r.coordinates.size(), 8);
  EXPECT_TRUE(r.separable());
  o.threads = 3;
  auto r3 = classify_phases(o, 11);
  EXPECT_EQ(r.coordinates, r3.coordinates);
}
