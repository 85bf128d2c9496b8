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

#ifndef RMKIT_VISIBLE_HPP_
#define RMKIT_VISIBLE_HPP_

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rmkit/qcore.hpp"

namespace rmkit {

// Pauli strings with identities exactly on R and the given X/Y/Z counts
// elsewhere. Members are ordered lexicographically with X < Y < Z.
struct FixedIdSet {
  int n = 1;
  Bitstring rmask = 0;  // site_bit(n, i) set for identity sites
  int nx = 0, ny = 0, nz = 0;

  int free_sites() const { return n - std::popcount(rmask); }

  std::size_t size() const {
    double f = 1.0;
    int m = free_sites();
    for (int i = 2; i <= m; ++i) f *= i;
    for (int c : {nx, ny, nz})
      for (int i = 2; i <= c; ++i) f /= i;
    return static_cast<std::size_t>(std::llround(f));
  }

  std::vector<PauliString> members() const {
    std::vector<int> sites;
    for (int i = 0; i < n; ++i)
      if (!(rmask & site_bit(n, i))) sites.push_back(i);
    std::string word = std::string(nx, 'X') + std::string(ny, 'Y') + std::string(nz, 'Z');
    std::vector<PauliString> out;
    do {
      PauliString p(n);
      for (std::size_t k = 0; k < sites.size(); ++k)
        p.set(sites[k], word[k] == 'X' ? Pauli::X : word[k] == 'Y' ? Pauli::Y : Pauli::Z);
      out.push_back(p);
    } while (std::next_permutation(word.begin(), word.end()));
    return out;
  }

  // e.g. "_XY" for R = {0}, one X, one Y: identity sites as '_', then counts
  std::string label() const {
    std::string s(n, '*');
    for (int i = 0; i < n; ++i)
      if (rmask & site_bit(n, i)) s[i] = '_';
    return s + ":" + std::to_string(nx) + std::to_string(ny) + std::to_string(nz);
  }

  bool operator==(const FixedIdSet&) const = default;
};

// Ordered by identity mask, then (n_X, n_Y, n_Z) ascending.
inline std::vector<FixedIdSet> enumerate_sets(int n) {
  check_qubits(n);
  std::vector<FixedIdSet> out;
  for (Bitstring r = 0; r < dim_of(n); ++r) {
    int m = n - std::popcount(r);
    for (int x = 0; x <= m; ++x)
      for (int y = 0; x + y <= m; ++y) out.push_back({n, r, x, y, m - x - y});
  }
  return out;
}

inline std::uint64_t visible_dimension(int n) {
  std::uint64_t d = dim_of(n);
  return d * (std::uint64_t(n) * n + 7 * n + 8) / 8;
}

inline Operator build_B(const FixedIdSet& s) {
  std::size_t d = dim_of(s.n);
  Operator b = Operator::Zero(d, d);
  auto mem = s.members();
  double scale = 1.0 / std::sqrt(double(d) * double(mem.size()));
  for (const auto& p : mem) add_pauli(b, p, scale);
  return b;
}

// k is 1-based: (P_1 + ... + P_k - k P_{k+1}) / sqrt(2^n k (k+1))
inline Operator build_Bperp(const FixedIdSet& s, std::size_t k) {
  auto mem = s.members();
  if (mem.size() < 2) throw DomainError("set " + s.label() + " has a single member; no B-perp");
  if (k < 1 || k >= mem.size()) throw DomainError("B-perp index out of range");
  std::size_t d = dim_of(s.n);
  Operator b = Operator::Zero(d, d);
  double scale = 1.0 / std::sqrt(double(d) * double(k) * double(k + 1));
  for (std::size_t j = 0; j < k; ++j) add_pauli(b, mem[j], scale);
  add_pauli(b, mem[k], -double(k) * scale);
  return b;
}

// Sets and their member lists for one site count, built once per process.
class VisibleBasis {
 public:
  explicit VisibleBasis(int n) : n_(n), sets_(enumerate_sets(n)) {
    for (const auto& s : sets_) members_.push_back(s.members());
  }
  int qubits() const { return n_; }
  const std::vector<FixedIdSet>& sets() const { return sets_; }
  const std::vector<PauliString>& members(std::size_t i) const { return members_[i]; }
  std::size_t size() const { return sets_.size(); }

  // coordinates c_S = tr(B_S A)
  CVector coordinates(const Operator& a) const {
    check_dim(a);
    double d = double(dim_of(n_));
    CVector c(static_cast<Eigen::Index>(sets_.size()));
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      cplx acc = 0.0;
      for (const auto& p : members_[i]) acc += pauli_trace(p, a);
      c[i] = acc / std::sqrt(d * double(members_[i].size()));
    }
    return c;
  }

  // sum_S c_S B_S
  Operator assemble(const CVector& c) const {
    std::size_t d = dim_of(n_);
    Operator a = Operator::Zero(d, d);
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      if (c[i] == 0.0) continue;
      cplx scale = c[i] / std::sqrt(double(d) * double(members_[i].size()));
      for (const auto& p : members_[i]) add_pauli(a, p, scale);
    }
    return a;
  }

  Operator project(const Operator& a) const { return assemble(coordinates(a)); }

 private:
  void check_dim(const Operator& a) const {
    if (a.rows() != static_cast<Eigen::Index>(dim_of(n_)) || a.cols() != a.rows())
      throw DomainError("operator dimension does not match the visible basis");
  }
  int n_;
  std::vector<FixedIdSet> sets_;
  std::vector<std::vector<PauliString>> members_;
};

inline const VisibleBasis& visible_basis(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<VisibleBasis>> cache;
  check_qubits(n);
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<VisibleBasis>(n);
  return *slot;
}

inline Operator project_visible(const Operator& o) {
  return visible_basis(qubits_of(o.rows())).project(o);
}

// Frobenius norm of the invisible component.
inline double invisible_norm(const Operator& o) { return (o - project_visible(o)).norm(); }

}  // namespace rmkit

#endif  // RMKIT_VISIBLE_HPP_
