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

#ifndef RMKIT_QCORE_HPP_
#define RMKIT_QCORE_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rmkit {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
// Dense operator on 2^n dimensions. Site i of an n-site system is bit (n-1-i)
// of the basis index, so tensor(A0, A1) puts A0 on site 0.
using Operator = CMatrix;
using Bitstring = std::uint32_t;

constexpr int kMaxQubits = 14;

// Bad arguments and contract violations.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
// Solvers that fail to converge, degenerate probabilities, singular blocks.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_qubits(int n) {
  if (n < 1 || n > kMaxQubits)
    throw DomainError("qubit count " + std::to_string(n) + " outside [1, " +
                      std::to_string(kMaxQubits) + "]");
}

inline std::size_t dim_of(int n) { return std::size_t{1} << n; }

inline int qubits_of(Eigen::Index dim) {
  if (dim < 2 || (dim & (dim - 1)) != 0)
    throw DomainError("dimension " + std::to_string(dim) + " is not 2^n");
  int n = std::countr_zero(static_cast<std::uint64_t>(dim));
  check_qubits(n);
  return n;
}

inline Bitstring site_bit(int n, int site) { return Bitstring{1} << (n - 1 - site); }

inline std::string bits_to_string(Bitstring b, int n) {
  std::string s(n, '0');
  for (int i = 0; i < n; ++i)
    if (b & site_bit(n, i)) s[i] = '1';
  return s;
}

inline Bitstring bits_from_string(std::string_view s) {
  Bitstring b = 0;
  int n = static_cast<int>(s.size());
  check_qubits(n);
  for (int i = 0; i < n; ++i) {
    if (s[i] == '1')
      b |= site_bit(n, i);
    else if (s[i] != '0')
      throw DomainError("bitstring has non-binary character");
  }
  return b;
}

// ---------------------------------------------------------------------------
// RNG

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 with platform-independent float draws. stream(seed, i) gives the
// i-th child stream, so a shot's randomness depends only on (seed, index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), eng_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
  }
  Rng split(std::uint64_t index) const { return stream(seed_, index); }

  std::uint64_t next() { return eng_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw DomainError("below(0)");
    // rejection sampling keeps the draw exactly uniform
    std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do r = eng_();
    while (r >= lim);
    return r % n;
  }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do u1 = uniform();
    while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Index drawn from a discrete distribution. Weights must sum to 1 within tol.
inline std::size_t sample_index(const RVector& probs, Rng& rng, double tol = 1e-8) {
  double total = probs.sum();
  if (!(std::abs(total - 1.0) <= tol))
    throw NumericalError("probabilities sum to " + std::to_string(total));
  double u = rng.uniform() * total;
  double acc = 0.0;
  Eigen::Index last = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return static_cast<std::size_t>(i);
  }
  if (last < 0) throw NumericalError("all probabilities are zero");
  return static_cast<std::size_t>(last);
}

// ---------------------------------------------------------------------------
// Pauli strings

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(int n) : n_(n) { check_qubits(n); }
  PauliString(int n, std::uint32_t xmask, std::uint32_t zmask) : n_(n), x_(xmask), z_(zmask) {
    check_qubits(n);
    std::uint32_t full = static_cast<std::uint32_t>(dim_of(n) - 1);
    if ((x_ | z_) & ~full) throw DomainError("Pauli mask exceeds site count");
  }

  // Accepts I/1/_ for identity.
  static PauliString parse(std::string_view word) {
    PauliString p(static_cast<int>(word.size()));
    for (int i = 0; i < p.n_; ++i) {
      switch (word[i]) {
        case 'I': case '1': case '_': break;
        case 'X': p.set(i, Pauli::X); break;
        case 'Y': p.set(i, Pauli::Y); break;
        case 'Z': p.set(i, Pauli::Z); break;
        default: throw DomainError(std::string("bad Pauli symbol '") + word[i] + "'");
      }
    }
    return p;
  }

  int size() const { return n_; }
  std::uint32_t xmask() const { return x_; }
  std::uint32_t zmask() const { return z_; }
  int weight() const { return std::popcount(x_ | z_); }
  bool is_identity() const { return (x_ | z_) == 0; }

  Pauli at(int site) const {
    std::uint32_t b = site_bit(n_, site);
    bool x = x_ & b, z = z_ & b;
    return x ? (z ? Pauli::Y : Pauli::X) : (z ? Pauli::Z : Pauli::I);
  }
  void set(int site, Pauli p) {
    std::uint32_t b = site_bit(n_, site);
    x_ &= ~b;
    z_ &= ~b;
    if (p == Pauli::X || p == Pauli::Y) x_ |= b;
    if (p == Pauli::Z || p == Pauli::Y) z_ |= b;
  }

  std::string str() const {
    std::string s(n_, 'I');
    for (int i = 0; i < n_; ++i) s[i] = pauli_char(at(i));
    return s;
  }

  // Product up to a global phase.
  PauliString operator*(const PauliString& o) const {
    if (o.n_ != n_) throw DomainError("Pauli size mismatch");
    return PauliString(n_, x_ ^ o.x_, z_ ^ o.z_);
  }
  bool operator==(const PauliString& o) const = default;

  // P|x> = phase(x) |x ^ xmask>
  cplx phase_on(Bitstring x) const {
    static const cplx ipow[4] = {1.0, cplx(0, 1), -1.0, cplx(0, -1)};
    int k = std::popcount(x_ & z_) + 2 * std::popcount(x & z_);
    return ipow[k & 3];
  }

  Operator dense() const {
    std::size_t d = dim_of(n_);
    Operator m = Operator::Zero(d, d);
    for (Bitstring x = 0; x < d; ++x) m(x ^ x_, x) = phase_on(x);
    return m;
  }

 private:
  int n_ = 0;
  std::uint32_t x_ = 0, z_ = 0;
};

// tr(P A) in O(2^n).
inline cplx pauli_trace(const PauliString& p, const Operator& a) {
  cplx acc = 0.0;
  std::size_t d = dim_of(p.size());
  for (Bitstring x = 0; x < d; ++x) acc += a(x, x ^ p.xmask()) * p.phase_on(x);
  return acc;
}

// A += c P
inline void add_pauli(Operator& a, const PauliString& p, cplx c) {
  std::size_t d = dim_of(p.size());
  for (Bitstring x = 0; x < d; ++x) a(x ^ p.xmask(), x) += c * p.phase_on(x);
}

inline PauliString pauli_from_index(int n, std::uint64_t idx) {
  // two bits per site, site 0 most significant
  PauliString p(n);
  for (int i = n - 1; i >= 0; --i, idx >>= 2) p.set(i, static_cast<Pauli>(idx & 3));
  return p;
}

// ---------------------------------------------------------------------------
// States

class StateVector {
 public:
  explicit StateVector(CVector amps) : amps_(std::move(amps)) {
    n_ = qubits_of(amps_.size());
    if (std::abs(amps_.squaredNorm() - 1.0) > 1e-10)
      throw DomainError("state vector is not normalized");
  }
  static StateVector basis(int n, Bitstring b) {
    check_qubits(n);
    CVector v = CVector::Zero(dim_of(n));
    v[b] = 1.0;
    return StateVector(std::move(v));
  }
  static StateVector normalized(CVector v) {
    double nrm = v.norm();
    if (!(nrm > 1e-300)) throw NumericalError("cannot normalize a zero vector");
    return StateVector(v / nrm);
  }
  int qubits() const { return n_; }
  const CVector& amplitudes() const { return amps_; }
  Operator projector() const { return amps_ * amps_.adjoint(); }

 private:
  CVector amps_;
  int n_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(Operator rho, double tol = 1e-10) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols()) throw DomainError("density matrix is not square");
    n_ = qubits_of(rho_.rows());
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw DomainError("density matrix is not Hermitian");
    if (std::abs(rho_.trace() - 1.0) > tol) throw DomainError("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Operator> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) throw DomainError("density matrix is not PSD");
  }
  DensityMatrix(const StateVector& psi) : rho_(psi.projector()), n_(psi.qubits()) {}

  static DensityMatrix maximally_mixed(int n) {
    check_qubits(n);
    std::size_t d = dim_of(n);
    return DensityMatrix(Operator::Identity(d, d) / double(d));
  }
  // Clip negative eigenvalues and renormalize.
  static DensityMatrix psd_projection(const Operator& a) {
    Operator h = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    RVector w = es.eigenvalues().cwiseMax(0.0);
    double s = w.sum();
    if (!(s > 0.0)) throw NumericalError("PSD projection is zero");
    w /= s;
    Operator r = es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    return DensityMatrix(0.5 * (r + r.adjoint()), 1e-9);
  }

  int qubits() const { return n_; }
  const Operator& matrix() const { return rho_; }

 private:
  Operator rho_;
  int n_;
};

// ---------------------------------------------------------------------------
// Linear algebra

inline Operator tensor(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Operator tensor_power(const Operator& u, int n) {
  Operator out = u;
  for (int i = 1; i < n; ++i) out = tensor(out, u);
  return out;
}

// Hilbert-Schmidt <A, B> = tr(A^dagger B)
inline cplx hs_inner(const Operator& a, const Operator& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline bool is_unitary(const Operator& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  return (u * u.adjoint() - Operator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

inline RVector born_probabilities(const DensityMatrix& rho, const Operator& v) {
  if (v.rows() != rho.matrix().rows()) throw DomainError("unitary/state dimension mismatch");
  if (!is_unitary(v)) throw DomainError("measurement rotation is not unitary");
  Operator r = v * rho.matrix() * v.adjoint();
  return r.diagonal().real().cwiseMax(0.0);
}

inline Bitstring born_sample(const DensityMatrix& rho, const Operator& v, Rng& rng) {
  return static_cast<Bitstring>(sample_index(born_probabilities(rho, v), rng));
}

// Apply a 2x2 gate to one site of a state vector, in place.
inline void apply_1q(CVector& psi, int n, int site, const Eigen::Matrix2cd& g) {
  Bitstring bit = site_bit(n, site);
  std::size_t d = dim_of(n);
  for (Bitstring x = 0; x < d; ++x) {
    if (x & bit) continue;
    cplx a0 = psi[x], a1 = psi[x | bit];
    psi[x] = g(0, 0) * a0 + g(0, 1) * a1;
    psi[x | bit] = g(1, 0) * a0 + g(1, 1) * a1;
  }
}

// Apply a 4x4 gate to sites (s0, s1); s0 is the high bit of the gate index.
inline void apply_2q(CVector& psi, int n, int s0, int s1, const Eigen::Matrix4cd& g) {
  if (s0 == s1) throw DomainError("two-qubit gate on a single site");
  Bitstring b0 = site_bit(n, s0), b1 = site_bit(n, s1);
  std::size_t d = dim_of(n);
  for (Bitstring x = 0; x < d; ++x) {
    if (x & (b0 | b1)) continue;
    Bitstring idx[4] = {x, x | b1, x | b0, x | b0 | b1};
    cplx a[4];
    for (int k = 0; k < 4; ++k) a[k] = psi[idx[k]];
    for (int r = 0; r < 4; ++r) {
      cplx acc = 0.0;
      for (int c = 0; c < 4; ++c) acc += g(r, c) * a[c];
      psi[idx[r]] = acc;
    }
  }
}

struct SingularPair {
  double sigma = 0.0;
  CVector u, v;  // A v = sigma u
};

// Top singular pair by power iteration on A^dagger A. Stops once the
// eigen-residual of A^dagger A is within rel_tol of the Rayleigh quotient.
inline SingularPair top_singular_pair(const Operator& a, double rel_tol = 1e-9,
                                      int max_iter = 200000) {
  SingularPair out;
  Eigen::Index nc = a.cols();
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    out.v = CVector::Zero(nc);
    if (nc) out.v[0] = 1.0;
    out.u = CVector::Zero(a.rows());
    if (a.rows()) out.u[0] = 1.0;
    return out;
  }
  Operator b = a.adjoint() * a;
  Rng rng(0x7071ULL);
  CVector v(nc);
  for (Eigen::Index i = 0; i < nc; ++i) v[i] = cplx(rng.normal(), rng.normal());
  v.normalize();
  double mu = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CVector w = b * v;
    mu = v.dot(w).real();
    double res = (w - mu * v).norm();
    double wn = w.norm();
    if (wn == 0.0) break;  // start vector in the null space; retry below
    if (res <= rel_tol * mu) {
      out.sigma = std::sqrt(std::max(mu, 0.0));
      out.v = v;
      out.u = a * v / out.sigma;
      return out;
    }
    v = w / wn;
  }
  throw NumericalError("power iteration did not converge");
}

inline double spectral_norm(const Operator& a) { return top_singular_pair(a).sigma; }

// Partial trace keeping `keep` (any order; result uses ascending site order).
inline Operator partial_trace(const Operator& rho, std::vector<int> keep) {
  int n = qubits_of(rho.rows());
  if (keep.empty()) throw DomainError("partial trace with empty keep set");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (int s : keep)
    if (s < 0 || s >= n) throw DomainError("keep site out of range");
  int k = static_cast<int>(keep.size());
  std::vector<int> rest;
  for (int s = 0; s < n; ++s)
    if (!std::binary_search(keep.begin(), keep.end(), s)) rest.push_back(s);
  auto scatter = [&](const std::vector<int>& sites, std::uint32_t local) {
    Bitstring x = 0;
    int m = static_cast<int>(sites.size());
    for (int i = 0; i < m; ++i)
      if (local & (1u << (m - 1 - i))) x |= site_bit(n, sites[i]);
    return x;
  };
  std::size_t dk = dim_of(k), dr = std::size_t{1} << rest.size();
  std::vector<Bitstring> kx(dk), rx(dr);
  for (std::uint32_t i = 0; i < dk; ++i) kx[i] = scatter(keep, i);
  for (std::uint32_t i = 0; i < dr; ++i) rx[i] = scatter(rest, i);
  Operator out = Operator::Zero(dk, dk);
  for (std::size_t i = 0; i < dk; ++i)
    for (std::size_t j = 0; j < dk; ++j) {
      cplx acc = 0.0;
      for (std::size_t r = 0; r < dr; ++r) acc += rho(kx[i] | rx[r], kx[j] | rx[r]);
      out(i, j) = acc;
    }
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  return DensityMatrix(partial_trace(rho.matrix(), keep), 1e-9);
}

// Embed a k-site operator acting on `sites` (in that order) into n sites.
inline Operator embed(const Operator& local, const std::vector<int>& sites, int n) {
  int k = qubits_of(local.rows());
  if (static_cast<int>(sites.size()) != k) throw DomainError("embed: site count mismatch");
  std::size_t d = dim_of(n);
  Bitstring mask = 0;
  for (int s : sites) mask |= site_bit(n, s);
  auto gather = [&](Bitstring x) {
    std::uint32_t l = 0;
    for (int i = 0; i < k; ++i)
      if (x & site_bit(n, sites[i])) l |= 1u << (k - 1 - i);
    return l;
  };
  Operator out = Operator::Zero(d, d);
  for (Bitstring x = 0; x < d; ++x) {
    std::uint32_t lx = gather(x);
    Bitstring rest = x & ~mask;
    for (Bitstring y = 0; y < d; ++y) {
      if ((y & ~mask) != rest) continue;
      out(x, y) = local(lx, gather(y));
    }
  }
  return out;
}

// Haar-random unitary via QR of a complex Ginibre matrix.
inline Operator random_unitary(Eigen::Index d, Rng& rng) {
  Operator g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      g(i, j) = cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
  Eigen::HouseholderQR<Operator> qr(g);
  Operator q = qr.householderQ();
  Operator r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    cplx ph = r(j, j) / std::abs(r(j, j));
    q.col(j) *= ph;
  }
  return q;
}

inline Operator random_hermitian(Eigen::Index d, Rng& rng) {
  Operator g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
  return 0.5 * (g + g.adjoint());
}

// Random mixed state from a Ginibre ensemble with the given rank (0: full).
inline DensityMatrix random_density(int n, Rng& rng, int rank = 0) {
  check_qubits(n);
  Eigen::Index d = static_cast<Eigen::Index>(dim_of(n));
  Eigen::Index r = rank > 0 ? rank : d;
  Operator g(d, r);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < r; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
  Operator rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

inline StateVector random_state(int n, Rng& rng) {
  check_qubits(n);
  CVector v(dim_of(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(rng.normal(), rng.normal());
  return StateVector::normalized(v);
}

inline Operator pauli_matrix(Pauli p) { return PauliString(1, p == Pauli::X || p == Pauli::Y, p == Pauli::Z || p == Pauli::Y).dense(); }

}  // namespace rmkit

#endif  // RMKIT_QCORE_HPP_
