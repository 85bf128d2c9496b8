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

#ifndef RMKIT_CHANNELS_HPP_
#define RMKIT_CHANNELS_HPP_

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "rmkit/qcore.hpp"
#include "rmkit/ensembles.hpp"
#include "rmkit/visible.hpp"

namespace rmkit {

namespace detail {

inline double factorial(int m) {
  static const auto table = [] {
    std::array<double, 64> t{};
    t[0] = 1.0;
    for (int i = 1; i < 64; ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  if (m < 0 || m >= 64) throw DomainError("factorial argument out of range");
  return table[m];
}

}  // namespace detail

// Global SU(2) channel coefficient between two fixed-identity sets.
inline double su2_coeff(const FixedIdSet& s, const FixedIdSet& t) {
  using detail::factorial;
  if (s.n != t.n) throw DomainError("sets on different site counts");
  if (s.rmask != t.rmask) return 0.0;
  int a[3] = {s.nx, s.ny, s.nz}, b[3] = {t.nx, t.ny, t.nz};
  double c = 2.0, denom = 1.0;
  int two_k = 0;
  for (int i = 0; i < 3; ++i) {
    int m = a[i] + b[i];
    if (m % 2) return 0.0;
    denom *= factorial(a[i]) * factorial(b[i]);
    c *= factorial(m) / factorial(m / 2);
    two_k += m;
  }
  int k = two_k / 2;
  c /= std::sqrt(denom);
  c *= factorial(k) * factorial(k + 1) / factorial(2 * k + 2);
  return c;
}

// Block-diagonal form of the SU(2) channel on the visible coordinates. Blocks
// are keyed by (identity mask, parity of n_X, n_Y, n_Z).
class Su2Channel {
 public:
  struct Block {
    std::vector<std::size_t> idx;
    RMatrix c, inv;
    double min_sv = 0.0;
  };

  explicit Su2Channel(int n) : basis_(visible_basis(n)) {
    const auto& sets = basis_.sets();
    std::map<std::tuple<Bitstring, int, int, int>, std::size_t> key;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      auto k = std::make_tuple(sets[i].rmask, sets[i].nx & 1, sets[i].ny & 1, sets[i].nz & 1);
      auto it = key.find(k);
      if (it == key.end()) {
        it = key.emplace(k, blocks_.size()).first;
        blocks_.emplace_back();
      }
      blocks_[it->second].idx.push_back(i);
    }
    for (auto& blk : blocks_) {
      auto m = static_cast<Eigen::Index>(blk.idx.size());
      blk.c.resize(m, m);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) blk.c(i, j) = su2_coeff(sets[blk.idx[i]], sets[blk.idx[j]]);
      Eigen::JacobiSVD<RMatrix> svd(blk.c, Eigen::ComputeFullU | Eigen::ComputeFullV);
      RVector s = svd.singularValues();
      blk.min_sv = s.minCoeff();
      RVector sinv = s;
      for (Eigen::Index i = 0; i < s.size(); ++i) sinv[i] = s[i] > 1e-10 ? 1.0 / s[i] : 0.0;
      blk.inv = svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
    }
  }

  const VisibleBasis& basis() const { return basis_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  CVector apply_coords(const CVector& a) const { return mul(a, false); }
  CVector inverse_coords(const CVector& a) const {
    for (const auto& blk : blocks_)
      if (blk.min_sv <= 1e-10) throw NumericalError("SU(2) channel block is singular");
    return mul(a, true);
  }

 private:
  CVector mul(const CVector& a, bool inverse) const {
    CVector out = CVector::Zero(a.size());
    for (const auto& blk : blocks_) {
      const RMatrix& m = inverse ? blk.inv : blk.c;
      for (std::size_t i = 0; i < blk.idx.size(); ++i) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < blk.idx.size(); ++j)
          acc += m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * a[blk.idx[j]];
        out[blk.idx[i]] = acc;
      }
    }
    return out;
  }

  const VisibleBasis& basis_;
  std::vector<Block> blocks_;
};

inline const Su2Channel& su2_channel(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Su2Channel>> cache;
  check_qubits(n);
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Su2Channel>(n);
  return *slot;
}

inline Operator apply_msu2(const Operator& a) {
  const auto& ch = su2_channel(qubits_of(a.rows()));
  return ch.basis().assemble(ch.apply_coords(ch.basis().coordinates(a)));
}

inline void require_visible(const Operator& a, const Operator& projected, const char* what) {
  double tol = 1e-8 * std::max(1.0, a.norm());
  double r = (a - projected).norm();
  if (r > tol)
    throw DomainError(std::string(what) + ": operator has an invisible component of norm " +
                      std::to_string(r));
}

inline Operator inverse_msu2(const Operator& a) {
  const auto& ch = su2_channel(qubits_of(a.rows()));
  CVector c = ch.basis().coordinates(a);
  require_visible(a, ch.basis().assemble(c), "inverse_msu2");
  return ch.basis().assemble(ch.inverse_coords(c));
}

// ---------------------------------------------------------------------------
// Global Cl(2): three families Pauli_{1,sigma}, strings over {I, sigma}.

inline PauliString cl2_family_member(int n, Basis sigma, Bitstring m) {
  switch (sigma) {
    case Basis::X: return PauliString(n, m, 0);
    case Basis::Y: return PauliString(n, m, m);
    case Basis::Z: break;
  }
  return PauliString(n, 0, m);
}

namespace detail {

// t[sigma][m] = tr(P_{sigma,m} A)
inline std::array<std::vector<cplx>, 3> cl2_traces(const Operator& a) {
  int n = qubits_of(a.rows());
  std::size_t d = dim_of(n);
  std::array<std::vector<cplx>, 3> t;
  for (int s = 0; s < 3; ++s) {
    t[s].resize(d);
    for (Bitstring m = 0; m < d; ++m) t[s][m] = pauli_trace(cl2_family_member(n, Basis(s), m), a);
  }
  return t;
}

// Orthogonal projection onto span of the three families.
inline Operator cl2_project(const Operator& a, const std::array<std::vector<cplx>, 3>& t) {
  int n = qubits_of(a.rows());
  std::size_t d = dim_of(n);
  Operator out = Operator::Zero(d, d);
  out.diagonal().setConstant(t[2][0] / double(d));
  for (int s = 0; s < 3; ++s)
    for (Bitstring m = 1; m < d; ++m) add_pauli(out, cl2_family_member(n, Basis(s), m), t[s][m] / double(d));
  return out;
}

}  // namespace detail

inline Operator apply_mcl2(const Operator& a) {
  int n = qubits_of(a.rows());
  std::size_t d = dim_of(n);
  auto t = detail::cl2_traces(a);
  Operator out = Operator::Zero(d, d);
  for (int s = 0; s < 3; ++s)
    for (Bitstring m = 0; m < d; ++m)
      add_pauli(out, cl2_family_member(n, Basis(s), m), t[s][m] / (3.0 * double(d)));
  return out;
}

inline Operator inverse_mcl2(const Operator& a) {
  int n = qubits_of(a.rows());
  std::size_t d = dim_of(n);
  auto t = detail::cl2_traces(a);
  require_visible(a, detail::cl2_project(a, t), "inverse_mcl2");
  Operator out = Operator::Zero(d, d);
  out.diagonal().setConstant(t[2][0] / double(d));
  for (int s = 0; s < 3; ++s)
    for (Bitstring m = 1; m < d; ++m)
      add_pauli(out, cl2_family_member(n, Basis(s), m), 3.0 * t[s][m] / double(d));
  return out;
}

inline Operator shadow_map_cl2(const Operator& o) {
  int n = qubits_of(o.rows());
  std::size_t d = dim_of(n);
  auto t = detail::cl2_traces(o);
  Operator out = Operator::Zero(d, d);
  double scale = 1.0 / (3.0 * double(d) * double(d));
  for (int s = 0; s < 3; ++s)
    for (Bitstring m = 0; m < d; ++m) {
      cplx g = 0.0;
      for (Bitstring m1 = 0; m1 < d; ++m1) g += t[s][m1] * t[s][m1 ^ m];
      if (g != 0.0) add_pauli(out, cl2_family_member(n, Basis(s), m), g * scale);
    }
  return out;
}

// Squared shadow norm: largest eigenvalue of Lambda(M^-1(O)).
inline double shadow_norm_cl2(const Operator& o) {
  Operator l = shadow_map_cl2(inverse_mcl2(o));
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (l + l.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace rmkit

#endif  // RMKIT_CHANNELS_HPP_
