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

#ifndef RMKIT_ENSEMBLES_HPP_
#define RMKIT_ENSEMBLES_HPP_

#include <json.hpp>

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "rmkit/lstsq.hpp"
#include "rmkit/qcore.hpp"

namespace rmkit {

enum class EnsembleKind { GlobalSU2, GlobalCl2, LocalClifford, DiscreteSubsample };

inline const char* kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::GlobalSU2: return "GlobalSU2";
    case EnsembleKind::GlobalCl2: return "GlobalCl2";
    case EnsembleKind::LocalClifford: return "LocalClifford";
    case EnsembleKind::DiscreteSubsample: return "DiscreteSubsample";
  }
  return "?";
}

inline EnsembleKind kind_from_name(const std::string& s) {
  for (auto k : {EnsembleKind::GlobalSU2, EnsembleKind::GlobalCl2, EnsembleKind::LocalClifford,
                 EnsembleKind::DiscreteSubsample})
    if (s == kind_name(k)) return k;
  throw DomainError("unknown ensemble kind '" + s + "'");
}

// Measurement basis for Cl(2) and local Clifford settings.
enum class Basis : std::uint8_t { X = 0, Y = 1, Z = 2 };

inline char basis_char(Basis b) { return "XYZ"[static_cast<int>(b)]; }
inline Basis basis_from_char(char c) {
  switch (c) {
    case 'X': return Basis::X;
    case 'Y': return Basis::Y;
    case 'Z': return Basis::Z;
  }
  throw DomainError(std::string("bad basis symbol '") + c + "'");
}

struct EulerAngles {
  double theta = 0.0, phi = 0.0, psi = 0.0;
};

// V = exp(i s3 phi/2) exp(i s2 theta/2) exp(i s3 psi/2)
inline Eigen::Matrix2cd su2_matrix(const EulerAngles& a) {
  auto e3 = [](double t) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = std::polar(1.0, t / 2);
    m(1, 1) = std::polar(1.0, -t / 2);
    return m;
  };
  Eigen::Matrix2cd e2;
  double c = std::cos(a.theta / 2), s = std::sin(a.theta / 2);
  e2 << c, s, -s, c;
  return e3(a.phi) * e2 * e3(a.psi);
}

// Rotation R with R^dagger Z R = sigma, so a Z readout after R measures sigma.
inline Eigen::Matrix2cd basis_rotation(Basis b) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd h;
  h << r, r, r, -r;
  switch (b) {
    case Basis::X: return h;
    case Basis::Y: {
      Eigen::Matrix2cd sdg = Eigen::Matrix2cd::Zero();
      sdg(0, 0) = 1.0;
      sdg(1, 1) = cplx(0, -1);
      return h * sdg;
    }
    case Basis::Z: break;
  }
  return Eigen::Matrix2cd::Identity();
}

struct SampledUnitary {
  EnsembleKind kind = EnsembleKind::GlobalSU2;
  int n = 1;
  EulerAngles angles;       // GlobalSU2, DiscreteSubsample
  Basis basis = Basis::Z;   // GlobalCl2
  std::vector<Basis> word;  // LocalClifford, site order
  std::size_t index = 0;    // member index for discrete kinds

  // Per-site 2x2 rotations whose tensor product is the realized unitary.
  std::vector<Eigen::Matrix2cd> site_rotations() const {
    std::vector<Eigen::Matrix2cd> out(n);
    switch (kind) {
      case EnsembleKind::GlobalSU2:
      case EnsembleKind::DiscreteSubsample:
        std::fill(out.begin(), out.end(), su2_matrix(angles));
        break;
      case EnsembleKind::GlobalCl2:
        std::fill(out.begin(), out.end(), basis_rotation(basis));
        break;
      case EnsembleKind::LocalClifford:
        for (int i = 0; i < n; ++i) out[i] = basis_rotation(word.at(i));
        break;
    }
    return out;
  }

  Operator realize() const {
    auto rots = site_rotations();
    Operator u = rots[0];
    for (int i = 1; i < n; ++i) u = tensor(u, Operator(rots[i]));
    return u;
  }

  // Semicolon-joined parameters, round-trip exact.
  std::string params() const {
    auto num = [](double x) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      return std::string(buf);
    };
    switch (kind) {
      case EnsembleKind::GlobalSU2:
        return num(angles.theta) + ";" + num(angles.phi) + ";" + num(angles.psi);
      case EnsembleKind::DiscreteSubsample:
        return std::to_string(index) + ";" + num(angles.theta) + ";" + num(angles.phi) + ";" +
               num(angles.psi);
      case EnsembleKind::GlobalCl2:
        return std::string(1, basis_char(basis));
      case EnsembleKind::LocalClifford: {
        std::string s;
        for (Basis b : word) s += basis_char(b);
        return s;
      }
    }
    return {};
  }
};

inline Operator realize(const SampledUnitary& v) { return v.realize(); }

inline std::uint64_t ipow3(int n) {
  std::uint64_t r = 1;
  while (n-- > 0) r *= 3;
  return r;
}

class Ensemble {
 public:
  static Ensemble global_su2(int n) { return Ensemble(EnsembleKind::GlobalSU2, n); }
  static Ensemble global_cl2(int n) {
    Ensemble e(EnsembleKind::GlobalCl2, n);
    e.weights_ = RVector::Constant(3, 1.0 / 3.0);
    return e;
  }
  static Ensemble local_clifford(int n) {
    Ensemble e(EnsembleKind::LocalClifford, n);
    if (n > 12) throw DomainError("local Clifford ensemble limited to 12 sites");
    std::uint64_t m = ipow3(n);
    e.weights_ = RVector::Constant(static_cast<Eigen::Index>(m), 1.0 / double(m));
    return e;
  }
  static Ensemble subsample(int n, std::vector<EulerAngles> members, RVector weights = {}) {
    Ensemble e(EnsembleKind::DiscreteSubsample, n);
    if (members.empty()) throw DomainError("empty subsample");
    e.angles_ = std::move(members);
    auto m = static_cast<Eigen::Index>(e.angles_.size());
    e.weights_ = weights.size() ? weights : RVector::Constant(m, 1.0 / double(m));
    e.check_weights();
    return e;
  }

  EnsembleKind kind() const { return kind_; }
  int qubits() const { return n_; }
  bool is_discrete() const { return kind_ != EnsembleKind::GlobalSU2; }
  std::size_t size() const {
    if (!is_discrete()) throw DomainError("continuous ensemble has no member list");
    return static_cast<std::size_t>(weights_.size());
  }
  const RVector& weights() const {
    if (!is_discrete()) throw DomainError("continuous ensemble has no weight vector");
    return weights_;
  }
  double weight(std::size_t i) const { return weights().coeff(static_cast<Eigen::Index>(i)); }
  const std::vector<EulerAngles>& angles() const { return angles_; }

  // Same members under a different density.
  Ensemble with_weights(RVector w) const {
    if (!is_discrete()) throw DomainError("cannot reweight a continuous ensemble");
    if (w.size() != weights_.size()) throw DomainError("density size mismatch");
    Ensemble e = *this;
    e.weights_ = std::move(w);
    e.check_weights();
    return e;
  }

  // Same ensemble on a different site count (global kinds only).
  Ensemble on_qubits(int n) const {
    if (kind_ == EnsembleKind::LocalClifford) return local_clifford(n);
    Ensemble e = *this;
    check_qubits(n);
    e.n_ = n;
    return e;
  }

  SampledUnitary member(std::size_t i) const {
    SampledUnitary v;
    v.kind = kind_;
    v.n = n_;
    v.index = i;
    switch (kind_) {
      case EnsembleKind::GlobalSU2: throw DomainError("continuous ensemble has no members");
      case EnsembleKind::GlobalCl2: v.basis = static_cast<Basis>(i % 3); break;
      case EnsembleKind::LocalClifford: {
        v.word.resize(n_);
        std::size_t r = i;
        for (int s = n_ - 1; s >= 0; --s, r /= 3) v.word[s] = static_cast<Basis>(r % 3);
        break;
      }
      case EnsembleKind::DiscreteSubsample: v.angles = angles_.at(i); break;
    }
    return v;
  }

  std::vector<SampledUnitary> members() const {
    std::vector<SampledUnitary> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(member(i));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind_);
    j["n"] = n_;
    j["members"] = nlohmann::json::array();
    j["weights"] = nlohmann::json::array();
    if (kind_ == EnsembleKind::DiscreteSubsample)
      for (auto& a : angles_) j["members"].push_back({{"theta", a.theta}, {"phi", a.phi}, {"psi", a.psi}});
    if (kind_ == EnsembleKind::GlobalCl2)
      for (char c : std::string("XYZ")) j["members"].push_back({{"basis", std::string(1, c)}});
    if (kind_ != EnsembleKind::LocalClifford && is_discrete())
      for (Eigen::Index i = 0; i < weights_.size(); ++i) j["weights"].push_back(weights_[i]);
    return j;
  }

  static Ensemble from_json(const nlohmann::json& j) {
    EnsembleKind k = kind_from_name(j.at("kind").get<std::string>());
    int n = j.at("n").get<int>();
    switch (k) {
      case EnsembleKind::GlobalSU2: return global_su2(n);
      case EnsembleKind::LocalClifford: return local_clifford(n);
      case EnsembleKind::GlobalCl2: {
        Ensemble e = global_cl2(n);
        if (j.contains("weights") && !j["weights"].empty()) {
          RVector w(3);
          for (int i = 0; i < 3; ++i) w[i] = j["weights"].at(i).get<double>();
          e = e.with_weights(w);
        }
        return e;
      }
      case EnsembleKind::DiscreteSubsample: {
        std::vector<EulerAngles> m;
        for (auto& x : j.at("members"))
          m.push_back({x.at("theta").get<double>(), x.at("phi").get<double>(), x.at("psi").get<double>()});
        RVector w;
        if (j.contains("weights") && !j["weights"].empty()) {
          w.resize(static_cast<Eigen::Index>(j["weights"].size()));
          for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = j["weights"].at(i).get<double>();
        }
        return subsample(n, std::move(m), w);
      }
    }
    throw DomainError("bad ensemble document");
  }

 private:
  Ensemble(EnsembleKind k, int n) : kind_(k), n_(n) { check_qubits(n); }

  void check_weights() const {
    if ((weights_.array() < 0.0).any()) throw DomainError("negative ensemble weight");
    if (std::abs(weights_.sum() - 1.0) > 1e-12) throw DomainError("ensemble weights do not sum to 1");
  }

  EnsembleKind kind_;
  int n_;
  RVector weights_;
  std::vector<EulerAngles> angles_;
};

// Haar draw: cos(theta) uniform on [-1, 1], phi and psi uniform.
inline EulerAngles haar_angles(Rng& rng) {
  EulerAngles a;
  a.theta = std::acos(1.0 - 2.0 * rng.uniform());
  a.phi = 2.0 * M_PI * rng.uniform();
  a.psi = 4.0 * M_PI * rng.uniform();
  return a;
}

inline SampledUnitary sample(const Ensemble& ens, Rng& rng) {
  if (ens.kind() == EnsembleKind::GlobalSU2) {
    SampledUnitary v;
    v.kind = EnsembleKind::GlobalSU2;
    v.n = ens.qubits();
    v.angles = haar_angles(rng);
    return v;
  }
  if (ens.kind() == EnsembleKind::LocalClifford) {
    // uniform over words; sample per site to avoid a 3^n table walk
    bool uniform = true;
    const RVector& w = ens.weights();
    for (Eigen::Index i = 1; i < w.size() && uniform; ++i) uniform = (w[i] == w[0]);
    if (uniform) {
      std::size_t idx = 0;
      for (int s = 0; s < ens.qubits(); ++s) idx = idx * 3 + rng.below(3);
      return ens.member(idx);
    }
  }
  return ens.member(sample_index(ens.weights(), rng, 1e-12));
}

// Column (V, b) of the stacked system: p(V) * vec(V^dagger |b><b| V) as a real
// vector, so that A * K = stack_real(reconstruction).
inline RMatrix stacked_outcome_matrix(const Ensemble& ens) {
  int n = ens.qubits();
  std::size_t d = dim_of(n);
  std::size_t m = ens.size();
  RMatrix a(2 * d * d, m * d);
  for (std::size_t i = 0; i < m; ++i) {
    Operator vdag = ens.member(i).realize().adjoint();
    for (std::size_t b = 0; b < d; ++b) {
      CVector col = vdag.col(b);
      a.col(i * d + b) = ens.weight(i) * stack_real(col * col.adjoint());
    }
  }
  return a;
}

// Thrown when an operator is outside the span of the outcome projectors.
struct RepresentabilityError : NumericalError {
  RepresentabilityError(const std::string& what, double residual)
      : NumericalError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Haar subsample of `count` global rotations, redrawn until every target is
// exactly representable by the stacked outcome system.
inline Ensemble subsample_su2(int n, std::size_t count, Rng& rng,
                              const std::vector<Operator>& targets = {}, int max_attempts = 100,
                              double tol = 1e-8) {
  if (count < 1) throw DomainError("subsample needs at least one unitary");
  double worst = 0.0;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<EulerAngles> m(count);
    for (auto& a : m) a = haar_angles(rng);
    Ensemble e = Ensemble::subsample(n, std::move(m));
    if (targets.empty()) return e;
    RidgeSolver solver(stacked_outcome_matrix(e));
    worst = 0.0;
    for (const auto& t : targets) {
      if (t.rows() != static_cast<Eigen::Index>(dim_of(n)))
        throw DomainError("target dimension does not match the ensemble");
      RVector y = stack_real(t);
      worst = std::max(worst, solver.residual(solver.solve(y), y));
    }
    if (worst < tol) return e;
  }
  throw RepresentabilityError("subsample could not represent the targets", worst);
}

}  // namespace rmkit

#endif  // RMKIT_ENSEMBLES_HPP_
