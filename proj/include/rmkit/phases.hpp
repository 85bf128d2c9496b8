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

// Toric-code vs trivial phase classification from global SU(2) data on
// 3-qubit patches, via an exponentiated-inner-product kernel and 1-D kernel PCA.

#ifndef RMKIT_PHASES_HPP_
#define RMKIT_PHASES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmkit/estimator.hpp"
#include "rmkit/parallel.hpp"
#include "rmkit/visible.hpp"

namespace rmkit {

// Qubits on the edges of an L x L torus. Row r in [0, 2L) holds L edges:
// even rows are horizontal edges h(i, c) from vertex (i, c) to (i, c+1),
// odd rows vertical edges v(i, c) from (i, c) to (i+1, c). Edge (r, c) is
// qubit r L + c, so qubits x, x+L, x+2L run down one column.
class EdgeLattice {
 public:
  explicit EdgeLattice(int l) : l_(l) {
    if (l < 2) throw DomainError("edge lattice needs L >= 2");
    if (2 * l * l > 12) throw DomainError("edge lattice: 2L^2 qubits exceed the dense limit of 12");
  }

  int size() const { return l_; }
  int qubits() const { return 2 * l_ * l_; }
  int horizontal(int i, int c) const { return 2 * wrap(i) * l_ + wrap(c); }
  int vertical(int i, int c) const { return (2 * wrap(i) + 1) * l_ + wrap(c); }

  int patch_count() const { return 2 * l_ * l_ - 2 * l_; }
  std::array<int, 3> patch(int alpha) const {
    if (alpha < 0 || alpha >= patch_count()) throw DomainError("patch index out of range");
    return {alpha, alpha + l_, alpha + 2 * l_};
  }

  // X on the four edges meeting at vertex (i, c).
  std::array<int, 4> star(int i, int c) const {
    return {horizontal(i, c), horizontal(i, c - 1), vertical(i, c), vertical(i - 1, c)};
  }
  // Z on the boundary of the face with top-left vertex (i, c).
  std::array<int, 4> plaquette(int i, int c) const {
    return {horizontal(i, c), horizontal(i + 1, c), vertical(i, c), vertical(i, c + 1)};
  }

  PauliString star_operator(int i, int c) const { return on_sites(star(i, c), Pauli::X); }
  PauliString plaquette_operator(int i, int c) const { return on_sites(plaquette(i, c), Pauli::Z); }

  std::vector<PauliString> stabilizers() const {
    std::vector<PauliString> out;
    for (int i = 0; i < l_; ++i)
      for (int c = 0; c < l_; ++c) out.push_back(star_operator(i, c));
    for (int i = 0; i < l_; ++i)
      for (int c = 0; c < l_; ++c) out.push_back(plaquette_operator(i, c));
    return out;
  }

  // Disjoint edge-adjacent pairs along each column cycle h(0,c) v(0,c) h(1,c) ...;
  // even layers pair rows (0,1), (2,3), ..., odd layers (1,2), ..., (2L-1, 0).
  std::vector<std::array<int, 2>> tiling(int layer) const {
    std::vector<std::array<int, 2>> out;
    int rows = 2 * l_;
    for (int c = 0; c < l_; ++c)
      for (int r = layer % 2; r < rows; r += 2) out.push_back({r * l_ + c, ((r + 1) % rows) * l_ + c});
    return out;
  }

 private:
  int wrap(int x) const { return ((x % l_) + l_) % l_; }
  PauliString on_sites(const std::array<int, 4>& sites, Pauli p) const {
    PauliString s(qubits(), 0, 0);
    for (int q : sites) s.set(q, p);
    return s;
  }

  int l_;
};

inline double expectation(const StateVector& psi, const Operator& a) {
  return std::real(psi.amplitudes().dot(a * psi.amplitudes()));
}

inline StateVector product_state(const EdgeLattice& lat) { return StateVector::basis(lat.qubits(), 0); }

// prod_v (1 + A_v)/2 applied to |0...0>, normalized.
inline StateVector toric_ground(const EdgeLattice& lat) {
  int n = lat.qubits();
  CVector psi = StateVector::basis(n, 0).amplitudes();
  for (int i = 0; i < lat.size(); ++i)
    for (int c = 0; c < lat.size(); ++c) {
      PauliString a = lat.star_operator(i, c);
      CVector next = psi;
      // X-type string: |x> -> |x ^ xmask>
      for (Bitstring x = 0; x < psi.size(); ++x) next[x ^ a.xmask()] += psi[x];
      psi = 0.5 * next;
    }
  double norm = psi.norm();
  if (!(norm > 1e-12)) throw NumericalError("toric_ground: projected state vanished");
  return StateVector(psi / norm);
}

// Von Neumann entropy (bits) of the reduced state on `region`.
inline double entanglement_entropy(const StateVector& psi, const std::vector<int>& region) {
  Operator r = partial_trace(psi.projector(), region);
  Eigen::SelfAdjointEigenSolver<Operator> es(r, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (double w : es.eigenvalues())
    if (w > 1e-14) s -= w * std::log2(w);
  return s;
}

// ---------------------------------------------------------------------------
// Two-qubit Clifford group

namespace detail {

inline std::string phase_free_key(const Eigen::Matrix4cd& u) {
  cplx ph = 1.0;
  for (int i = 0; i < 16; ++i)
    if (std::abs(u.data()[i]) > 0.3) {
      ph = std::conj(u.data()[i]) / std::abs(u.data()[i]);
      break;
    }
  std::string key;
  char buf[24];
  for (int i = 0; i < 16; ++i) {
    cplx z = u.data()[i] * ph;
    std::snprintf(buf, sizeof buf, "%ld,%ld;", std::lround(z.real() * 1e6), std::lround(z.imag() * 1e6));
    key += buf;
  }
  return key;
}

}  // namespace detail

// All 11520 elements of the two-qubit Clifford group modulo phase, by
// breadth-first closure under H, S on each qubit and CNOT.
inline const std::vector<Eigen::Matrix4cd>& clifford2_group() {
  static const std::vector<Eigen::Matrix4cd> group = [] {
    Eigen::Matrix2cd h, s, id = Eigen::Matrix2cd::Identity();
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    s << 1, 0, 0, cplx(0, 1);
    auto kron = [](const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
      Eigen::Matrix4cd k;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
      return k;
    };
    Eigen::Matrix4cd cx = Eigen::Matrix4cd::Zero();
    cx(0, 0) = cx(1, 1) = cx(2, 3) = cx(3, 2) = 1;
    std::vector<Eigen::Matrix4cd> gens = {kron(h, id), kron(id, h), kron(s, id), kron(id, s), cx};
    std::vector<Eigen::Matrix4cd> out = {Eigen::Matrix4cd::Identity()};
    std::set<std::string> seen = {detail::phase_free_key(out[0])};
    for (std::size_t i = 0; i < out.size(); ++i)
      for (const auto& g : gens) {
        Eigen::Matrix4cd u = g * out[i];
        if (seen.insert(detail::phase_free_key(u)).second) out.push_back(u);
      }
    return out;
  }();
  return group;
}

inline const Eigen::Matrix4cd& random_clifford2(Rng& rng) {
  const auto& g = clifford2_group();
  return g[rng.below(g.size())];
}

// Depth-d brickwork of uniformly random two-qubit Cliffords on the tilings,
// realized as a dense unitary.
inline Operator random_lowdepth_circuit(const EdgeLattice& lat, int depth, Rng& rng) {
  if (depth < 0) throw DomainError("circuit depth must be >= 0");
  int n = lat.qubits();
  std::size_t d = dim_of(n);
  Operator u = Operator::Identity(d, d);
  for (int layer = 0; layer < depth; ++layer)
    for (const auto& pr : lat.tiling(layer)) {
      const Eigen::Matrix4cd& g = random_clifford2(rng);
      for (std::size_t col = 0; col < d; ++col) {
        CVector c = u.col(col);
        apply_2q(c, n, pr[0], pr[1], g);
        u.col(col) = c;
      }
    }
  return u;
}

// ---------------------------------------------------------------------------
// Patch RDMs from random-Pauli shadows

struct PatchRdm {
  Operator raw;               // Hermitized shadow average, trace 1
  DensityMatrix physical;     // PSD projection, used for Born sampling
};

inline double trace_distance(const Operator& a, const Operator& b) {
  Operator h = 0.5 * ((a - b) + (a - b).adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> es(h, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// Per-site snapshot 3 U^dag |b><b| U - 1 for basis sigma and outcome bit b.
inline const std::array<std::array<Eigen::Matrix2cd, 2>, 3>& pauli_snapshots() {
  static const auto table = [] {
    std::array<std::array<Eigen::Matrix2cd, 2>, 3> t;
    for (int s = 0; s < 3; ++s) {
      Eigen::Matrix2cd u = basis_rotation(static_cast<Basis>(s));
      for (int b = 0; b < 2; ++b) {
        Eigen::Vector2cd e = Eigen::Vector2cd::Zero();
        e[b] = 1.0;
        Eigen::Vector2cd w = u.adjoint() * e;
        t[s][b] = 3.0 * w * w.adjoint() - Eigen::Matrix2cd::Identity();
      }
    }
    return t;
  }();
  return table;
}

inline std::vector<PatchRdm> patch_rdms(const StateVector& psi, const EdgeLattice& lat, std::size_t shots,
                                        Rng& rng, int threads = 1) {
  if (shots == 0) throw DomainError("patch_rdms needs at least one shot");
  int n = lat.qubits();
  if (psi.qubits() != n) throw DomainError("state and lattice sizes differ");
  auto recs = run_campaign(psi, Ensemble::local_clifford(n), shots, rng, 0, threads);
  const auto& snap = pauli_snapshots();
  std::vector<PatchRdm> out;
  for (int a = 0; a < lat.patch_count(); ++a) {
    auto sites = lat.patch(a);
    Operator acc = Operator::Zero(8, 8);
    for (const auto& r : recs) {
      std::array<const Eigen::Matrix2cd*, 3> m;
      for (int k = 0; k < 3; ++k) {
        int bit = (r.b & site_bit(n, sites[k])) ? 1 : 0;
        m[k] = &snap[static_cast<int>(r.v.word[sites[k]])][bit];
      }
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          acc(i, j) += (*m[0])(i >> 2, j >> 2) * (*m[1])((i >> 1) & 1, (j >> 1) & 1) * (*m[2])(i & 1, j & 1);
    }
    acc /= double(shots);
    acc = 0.5 * (acc + acc.adjoint());
    acc /= acc.trace().real();
    out.push_back({acc, DensityMatrix::psd_projection(acc)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global SU(2) features on a 3-qubit patch

inline constexpr int kPatchQubits = 3;

// M^-1(B_S) for every fixed-identity set on 3 qubits, in enumeration order.
inline const std::vector<Operator>& patch_feature_operators() {
  static const std::vector<Operator> ops = [] {
    std::vector<Operator> v;
    for (const auto& s : visible_basis(kPatchQubits).sets()) v.push_back(inverse_msu2(build_B(s)));
    return v;
  }();
  return ops;
}

inline std::size_t feature_count() { return patch_feature_operators().size(); }

// o_S = mean over N Haar shots of K_CS^{B_S}(V, b), with b drawn from the PSD
// projection of the patch RDM. Shot s uses its own stream.
inline RVector patch_features(const DensityMatrix& rdm, std::size_t shots, Rng& rng, int threads = 1) {
  if (rdm.qubits() != kPatchQubits) throw DomainError("patch_features expects a 3-qubit RDM");
  if (shots == 0) throw DomainError("patch_features needs at least one shot");
  const auto& ops = patch_feature_operators();
  auto f = static_cast<Eigen::Index>(ops.size());
  std::uint64_t base = rng.next();
  RMatrix per(static_cast<Eigen::Index>(shots), f);
  parallel_for(shots, threads, [&](std::size_t s) {
    Rng r = Rng::stream(base, s);
    SampledUnitary v;
    v.kind = EnsembleKind::GlobalSU2;
    v.n = kPatchQubits;
    v.angles = haar_angles(r);
    Operator u = v.realize();
    RVector p = (u * rdm.matrix() * u.adjoint()).diagonal().real().cwiseMax(0.0);
    p /= p.sum();
    auto b = static_cast<Eigen::Index>(sample_index(p, r));
    CVector w = u.row(b).adjoint();
    for (Eigen::Index k = 0; k < f; ++k) per(static_cast<Eigen::Index>(s), k) = std::real(w.dot(ops[k] * w));
  });
  // fixed-order reduction keeps the result independent of the thread count
  RVector o = RVector::Zero(f);
  for (Eigen::Index s = 0; s < per.rows(); ++s) o += (per.row(s).transpose() - o) / double(s + 1);
  return o;
}

inline RVector exact_features(const Operator& rdm) {
  const auto& sets = visible_basis(kPatchQubits).sets();
  RVector o(static_cast<Eigen::Index>(sets.size()));
  for (std::size_t k = 0; k < sets.size(); ++k)
    o[static_cast<Eigen::Index>(k)] = std::real(hs_inner(build_B(sets[k]), rdm));
  return o;
}

// ---------------------------------------------------------------------------
// Kernel and 1-D kernel PCA

// features[s][alpha] is the feature vector of patch alpha in state s.
using StateFeatures = std::vector<RVector>;

struct PhaseKernel {
  RMatrix k;
  double lambda = 0.0;
  bool renormalized = false;
};

// 1/lambda = 3/(R P) sum_{s, alpha} |o_alpha^(s)|^2 over raw features, with
// P patches and a fixed reference count R (not the number of states S), so
// lambda grows as 1/S: fewer states get a sharper kernel.
inline constexpr double kPhaseReferenceStates = 100.0;

inline double default_phase_lambda(const std::vector<StateFeatures>& f,
                                   double reference_states = kPhaseReferenceStates) {
  double acc = 0.0;
  std::size_t patches = f.empty() ? 0 : f.front().size();
  for (const auto& s : f)
    for (const auto& o : s) acc += o.squaredNorm();
  if (patches == 0 || !(acc > 0.0)) throw DomainError("default_phase_lambda: all features are zero");
  return reference_states * double(patches) / (3.0 * acc);
}

inline PhaseKernel build_kernel(const std::vector<StateFeatures>& f, std::optional<double> lambda = {},
                                bool renormalize = true) {
  if (f.empty()) throw DomainError("build_kernel: no states");
  std::size_t patches = f.front().size();
  if (patches == 0) throw DomainError("build_kernel: no patches");
  for (const auto& s : f) {
    if (s.size() != patches) throw DomainError("build_kernel: patch counts differ");
    for (const auto& o : s)
      if (o.size() != f.front().front().size()) throw DomainError("build_kernel: feature dimensions differ");
  }
  PhaseKernel out;
  out.lambda = lambda ? *lambda : default_phase_lambda(f);
  auto n = static_cast<Eigen::Index>(f.size());
  out.k.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) {
      double acc = 0.0;
      for (std::size_t p = 0; p < patches; ++p) acc += std::exp(out.lambda * f[a][p].dot(f[b][p]));
      out.k(a, b) = out.k(b, a) = acc / double(patches);
    }
  if (renormalize) {
    RVector d = out.k.diagonal().cwiseSqrt();
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) out.k(a, b) = a == b ? 1.0 : out.k(a, b) / (d[a] * d[b]);
    out.renormalized = true;
  }
  return out;
}

// Top principal coordinate of the double-centred kernel, sign fixed so the
// first state sits at >= 0.
inline RVector kernel_pca_1d(const PhaseKernel& pk) {
  Eigen::Index n = pk.k.rows();
  if (n == 0 || pk.k.cols() != n) throw DomainError("kernel_pca_1d: kernel must be square and non-empty");
  RMatrix h = RMatrix::Identity(n, n) - RMatrix::Constant(n, n, 1.0 / double(n));
  RMatrix c = h * pk.k * h;
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(c);
  double top = es.eigenvalues()[n - 1];
  if (top < -1e-8) throw NumericalError("kernel_pca_1d: centred kernel is not PSD");
  RVector x = es.eigenvectors().col(n - 1) * std::sqrt(std::max(top, 0.0));
  // tie-break on the first state with a non-negligible coordinate
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(x[i]) > 1e-12) {
      if (x[i] < 0) x = -x;
      break;
    }
  return x;
}

// Signed gap between the two classes on a 1-D embedding: positive iff a
// threshold separates them.
inline double separation_margin(const RVector& x, const std::vector<int>& labels) {
  double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    int c = labels.at(static_cast<std::size_t>(i));
    if (c != 0 && c != 1) throw DomainError("labels must be 0 or 1");
    lo[c] = std::min(lo[c], x[i]);
    hi[c] = std::max(hi[c], x[i]);
  }
  if (!std::isfinite(lo[0]) || !std::isfinite(lo[1])) throw DomainError("both classes need members");
  return std::max(lo[1] - hi[0], lo[0] - hi[1]);
}

// ---------------------------------------------------------------------------
// End-to-end pipeline

struct PhaseOptions {
  int L = 2;
  int states_per_phase = 10;
  int depth = 1;
  std::size_t shadow_shots = 10000;
  std::size_t su2_shots = 1000;
  std::optional<double> lambda;
  int threads = 1;
};

enum class PhaseLabel { Trivial = 0, Toric = 1 };
inline const char* phase_name(PhaseLabel p) { return p == PhaseLabel::Trivial ? "trivial" : "toric"; }

struct PhaseResult {
  std::vector<PhaseLabel> labels;
  std::vector<StateFeatures> features;
  PhaseKernel kernel;
  RVector coordinates;
  double margin = 0.0;
  int depth = 0;

  bool separable() const { return margin > 0.0; }
  std::vector<int> label_ints() const {
    std::vector<int> v;
    for (auto l : labels) v.push_back(static_cast<int>(l));
    return v;
  }
};

// State s (trivial first, then toric) draws its circuit, shadows and SU(2)
// shots from stream s of `seed`.
inline PhaseResult classify_phases(const PhaseOptions& opt, std::uint64_t seed) {
  if (opt.states_per_phase < 1) throw DomainError("need at least one state per phase");
  EdgeLattice lat(opt.L);
  StateVector reps[2] = {product_state(lat), toric_ground(lat)};
  auto total = static_cast<std::size_t>(2 * opt.states_per_phase);
  PhaseResult res;
  res.depth = opt.depth;
  res.features.resize(total);
  for (std::size_t s = 0; s < total; ++s)
    res.labels.push_back(s < total / 2 ? PhaseLabel::Trivial : PhaseLabel::Toric);
  parallel_for(total, opt.threads, [&](std::size_t s) {
    Rng rng = Rng::stream(seed, s);
    Operator u = random_lowdepth_circuit(lat, opt.depth, rng);
    StateVector psi(u * reps[static_cast<int>(res.labels[s])].amplitudes());
    auto rdms = patch_rdms(psi, lat, opt.shadow_shots, rng);
    for (const auto& r : rdms) res.features[s].push_back(patch_features(r.physical, opt.su2_shots, rng));
  });
  res.kernel = build_kernel(res.features, opt.lambda);
  res.coordinates = kernel_pca_1d(res.kernel);
  res.margin = separation_margin(res.coordinates, res.label_ints());
  return res;
}

}  // namespace rmkit

#endif  // RMKIT_PHASES_HPP_
