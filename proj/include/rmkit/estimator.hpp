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

#ifndef RMKIT_ESTIMATOR_HPP_
#define RMKIT_ESTIMATOR_HPP_

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rmkit/channels.hpp"
#include "rmkit/ensembles.hpp"
#include "rmkit/lstsq.hpp"
#include "rmkit/parallel.hpp"
#include "rmkit/qcore.hpp"

namespace rmkit {

// ---------------------------------------------------------------------------
// SU(2) quadrature: Gauss-Legendre in cos(theta) times a uniform psi grid. The
// phi angle drops out of every outcome projector, so it is not integrated.
// Exact for integrands of degree <= `degree` in the entries of V and of V*.

struct QuadNode {
  EulerAngles angles;
  double weight;
};

inline std::vector<QuadNode> su2_quadrature(int degree) {
  if (degree < 0) throw DomainError("quadrature degree must be >= 0");
  int nt = degree / 2 + 2;
  int np = 2 * degree + 2;
  // Golub-Welsch
  RMatrix j = RMatrix::Zero(nt, nt);
  for (int k = 1; k < nt; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(j);
  std::vector<QuadNode> out;
  for (int a = 0; a < nt; ++a) {
    double x = es.eigenvalues()[a];
    double w = es.eigenvectors()(0, a) * es.eigenvectors()(0, a);  // sums to 1
    for (int b = 0; b < np; ++b)
      out.push_back({{std::acos(std::clamp(x, -1.0, 1.0)), 0.0, 4.0 * M_PI * b / np}, w / np});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernel tables

// K(V, b) over an ensemble. Discrete ensembles are tabulated (members x 2^n);
// GlobalSU2 kernels are closures K(V, b) = <b| V A V^dagger |b>.
class KernelTable {
 public:
  KernelTable(Ensemble ens, RMatrix values, double residual = 0.0)
      : ens_(std::move(ens)), values_(std::move(values)), residual_(residual) {
    if (!ens_.is_discrete()) throw DomainError("tabulated kernel needs a discrete ensemble");
    if (values_.rows() != static_cast<Eigen::Index>(ens_.size()) ||
        values_.cols() != static_cast<Eigen::Index>(dim_of(ens_.qubits())))
      throw DomainError("kernel table shape does not match the ensemble");
    if (!values_.allFinite()) throw NumericalError("kernel table has non-finite entries");
  }

  static KernelTable analytic_su2(Operator a) {
    int n = qubits_of(a.rows());
    KernelTable k(Ensemble::global_su2(n));
    k.op_ = std::move(a);
    return k;
  }

  bool analytic() const { return !ens_.is_discrete(); }
  const Ensemble& ensemble() const { return ens_; }
  int qubits() const { return ens_.qubits(); }
  double residual() const { return residual_; }
  const RMatrix& values() const {
    if (analytic()) throw DomainError("analytic kernel has no table");
    return values_;
  }
  const RVector& density() const { return ens_.weights(); }
  const Operator& analytic_operator() const { return op_; }

  // <b| V A V^dagger |b> for every b of one rotation.
  RVector analytic_row(const SampledUnitary& v) const {
    Operator u = v.realize();
    return (u * op_ * u.adjoint()).diagonal().real();
  }

  double value(const SampledUnitary& v, Bitstring b) const {
    if (!analytic()) return values_(static_cast<Eigen::Index>(v.index), b);
    CVector col = v.realize().adjoint().col(b);
    return col.dot(op_ * col).real();
  }

 private:
  explicit KernelTable(Ensemble ens) : ens_(std::move(ens)) {}
  Ensemble ens_;
  RMatrix values_;
  Operator op_;
  double residual_ = 0.0;
};

inline void require_hermitian(const Operator& o, const char* what) {
  if (o.rows() != o.cols() || (o - o.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw DomainError(std::string(what) + ": kernels are real; operator must be Hermitian");
}

// Classical-shadow kernel <b| V M^-1(O) V^dagger |b>.
inline KernelTable kernel_cs(const Operator& o, const Ensemble& ens) {
  require_hermitian(o, "kernel_cs");
  if (o.rows() != static_cast<Eigen::Index>(dim_of(ens.qubits())))
    throw DomainError("kernel_cs: operator and ensemble sizes differ");
  switch (ens.kind()) {
    case EnsembleKind::GlobalSU2: return KernelTable::analytic_su2(inverse_msu2(o));
    case EnsembleKind::GlobalCl2: {
      Operator a = inverse_mcl2(o);
      RMatrix t(static_cast<Eigen::Index>(ens.size()), a.rows());
      for (std::size_t i = 0; i < ens.size(); ++i) {
        Operator u = ens.member(i).realize();
        t.row(static_cast<Eigen::Index>(i)) = (u * a * u.adjoint()).diagonal().real().transpose();
      }
      return KernelTable(ens, t);
    }
    default: break;
  }
  throw DomainError("kernel_cs needs a GlobalSU2 or GlobalCl2 ensemble");
}

inline RMatrix unflatten_kernel(const RVector& k, const Ensemble& ens) {
  auto d = static_cast<Eigen::Index>(dim_of(ens.qubits()));
  RMatrix t(static_cast<Eigen::Index>(ens.size()), d);
  for (Eigen::Index i = 0; i < t.rows(); ++i) t.row(i) = k.segment(i * d, d).transpose();
  return t;
}

inline RVector flatten_kernel(const RMatrix& t) {
  RVector k(t.size());
  for (Eigen::Index i = 0; i < t.rows(); ++i) k.segment(i * t.cols(), t.cols()) = t.row(i).transpose();
  return k;
}

// Stacked outcome system of a discrete ensemble with its SVD, reusable across
// operators and ridge parameters.
class KernelSystem {
 public:
  explicit KernelSystem(Ensemble ens)
      : ens_(std::move(ens)), solver_(stacked_outcome_matrix(ens_)) {}
  const Ensemble& ensemble() const { return ens_; }
  const RidgeSolver& solver() const { return solver_; }

  KernelTable solve(const Operator& o, double lambda = 0.0) const {
    require_hermitian(o, "kernel solve");
    if (o.rows() != static_cast<Eigen::Index>(dim_of(ens_.qubits())))
      throw DomainError("operator and ensemble sizes differ");
    RVector y = stack_real(o);
    RVector k = solver_.solve(y, lambda);
    return KernelTable(ens_, unflatten_kernel(k, ens_), solver_.residual(k, y));
  }

 private:
  Ensemble ens_;
  RidgeSolver solver_;
};

// Minimum-norm K with sum_V p(V) sum_b K(V,b) V^dagger|b><b|V = O.
inline KernelTable kernel_least_squares(const Operator& o, const KernelSystem& sys,
                                        double tol = 1e-6) {
  KernelTable k = sys.solve(o, 0.0);
  if (k.residual() > tol) throw RepresentabilityError("operator is not representable", k.residual());
  return k;
}

inline KernelTable kernel_least_squares(const Operator& o, const Ensemble& ens, double tol = 1e-6) {
  if (!ens.is_discrete()) throw DomainError("least-squares kernels need a discrete ensemble");
  return kernel_least_squares(o, KernelSystem(ens), tol);
}

inline Operator reconstruct(const KernelTable& k) {
  int n = k.qubits();
  std::size_t d = dim_of(n);
  Operator out = Operator::Zero(d, d);
  auto accumulate = [&](const SampledUnitary& v, double w, const RVector& row) {
    Operator vdag = v.realize().adjoint();
    for (std::size_t b = 0; b < d; ++b) {
      if (row[b] == 0.0) continue;
      CVector c = vdag.col(b);
      out.noalias() += (w * row[b]) * (c * c.adjoint());
    }
  };
  if (k.analytic()) {
    for (const auto& q : su2_quadrature(2 * n)) {
      SampledUnitary v;
      v.kind = EnsembleKind::GlobalSU2;
      v.n = n;
      v.angles = q.angles;
      accumulate(v, q.weight, k.analytic_row(v));
    }
  } else {
    const auto& ens = k.ensemble();
    for (std::size_t i = 0; i < ens.size(); ++i) {
      double w = ens.weight(i);
      if (w == 0.0) continue;
      accumulate(ens.member(i), w, k.values().row(static_cast<Eigen::Index>(i)).transpose());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outcome distributions

inline RVector outcome_probabilities(const DensityMatrix& rho, const SampledUnitary& v) {
  Operator u = v.realize();
  return (u * rho.matrix() * u.adjoint()).diagonal().real().cwiseMax(0.0);
}

inline RVector outcome_probabilities(const StateVector& psi, const SampledUnitary& v) {
  CVector a = psi.amplitudes();
  auto rots = v.site_rotations();
  for (int s = 0; s < v.n; ++s) apply_1q(a, v.n, s, rots[s]);
  return a.cwiseAbs2();
}

template <class State>
int state_qubits(const State& s) {
  return s.qubits();
}

// ---------------------------------------------------------------------------
// Measurement records

struct MeasurementRecord {
  SampledUnitary v;
  Bitstring b = 0;
  std::uint64_t shot_index = 0;
  std::uint64_t campaign_id = 0;
};

// N shots. Shot s draws (V, b) from its own stream, so records do not depend
// on the thread count.
template <class State>
std::vector<MeasurementRecord> run_campaign(const State& rho, const Ensemble& ens, std::size_t shots,
                                            Rng& rng, std::uint64_t campaign_id = 0,
                                            int threads = 1) {
  if (state_qubits(rho) != ens.qubits()) throw DomainError("state and ensemble sizes differ");
  std::uint64_t base = rng.next();
  std::vector<MeasurementRecord> out(shots);
  // discrete kinds: one Born table per member, built on first use
  std::vector<RVector> table;
  bool tabulate = ens.is_discrete() && ens.size() <= 4096;
  if (tabulate) {
    table.resize(ens.size());
    parallel_for(ens.size(), threads, [&](std::size_t i) {
      if (ens.weight(i) > 0.0) table[i] = outcome_probabilities(rho, ens.member(i));
    });
  }
  parallel_for(shots, threads, [&](std::size_t s) {
    Rng r = Rng::stream(base, s);
    MeasurementRecord& rec = out[s];
    rec.v = sample(ens, r);
    rec.b = static_cast<Bitstring>(
        sample_index(tabulate ? table[rec.v.index] : outcome_probabilities(rho, rec.v), r));
    rec.shot_index = s;
    rec.campaign_id = campaign_id;
  });
  return out;
}

inline std::string records_csv_header() { return "campaign_id,shot_index,ensemble_kind,v_params,b"; }

inline void write_records_csv(std::ostream& os, const std::vector<MeasurementRecord>& recs) {
  os << records_csv_header() << '\n';
  for (const auto& r : recs)
    os << r.campaign_id << ',' << r.shot_index << ',' << kind_name(r.v.kind) << ',' << r.v.params()
       << ',' << bits_to_string(r.b, r.v.n) << '\n';
}

inline std::vector<MeasurementRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != records_csv_header())
    throw DomainError("record CSV header mismatch");
  std::vector<MeasurementRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw DomainError("record CSV row has " + std::to_string(f.size()) + " fields");
    MeasurementRecord r;
    r.campaign_id = std::stoull(f[0]);
    r.shot_index = std::stoull(f[1]);
    r.v.kind = kind_from_name(f[2]);
    r.v.n = static_cast<int>(f[4].size());
    r.b = bits_from_string(f[4]);
    std::vector<std::string> p;
    std::stringstream ps(f[3]);
    while (std::getline(ps, cell, ';')) p.push_back(cell);
    auto need = [&](std::size_t k) {
      if (p.size() != k) throw DomainError("bad v_params '" + f[3] + "'");
    };
    switch (r.v.kind) {
      case EnsembleKind::GlobalSU2:
        need(3);
        r.v.angles = {std::stod(p[0]), std::stod(p[1]), std::stod(p[2])};
        break;
      case EnsembleKind::DiscreteSubsample:
        need(4);
        r.v.index = std::stoull(p[0]);
        r.v.angles = {std::stod(p[1]), std::stod(p[2]), std::stod(p[3])};
        break;
      case EnsembleKind::GlobalCl2:
        need(1);
        if (p[0].size() != 1) throw DomainError("bad Cl(2) basis");
        r.v.basis = basis_from_char(p[0][0]);
        r.v.index = static_cast<std::size_t>(r.v.basis);
        break;
      case EnsembleKind::LocalClifford: {
        need(1);
        if (static_cast<int>(p[0].size()) != r.v.n) throw DomainError("Clifford word length mismatch");
        std::size_t idx = 0;
        for (char c : p[0]) {
          r.v.word.push_back(basis_from_char(c));
          idx = idx * 3 + static_cast<std::size_t>(r.v.word.back());
        }
        r.v.index = idx;
        break;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimation

struct EstimateMethod {
  enum Kind { Mean, MedianOfMeans } kind = Mean;
  std::size_t batches = 0;
  static EstimateMethod mean() { return {Mean, 0}; }
  static EstimateMethod median_of_means(std::size_t b) { return {MedianOfMeans, b}; }
};

inline std::size_t default_mom_batches(std::size_t m, double delta) {
  return static_cast<std::size_t>(std::ceil(2.0 * std::log(2.0 * double(m) / delta)));
}

inline double estimate(const std::vector<MeasurementRecord>& recs, const KernelTable& k,
                       EstimateMethod method = EstimateMethod::mean()) {
  if (recs.empty()) throw DomainError("no records to estimate from");
  std::vector<double> x(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) x[i] = k.value(recs[i].v, recs[i].b);
  // running means keep constant kernels exact
  auto mean = [&](std::size_t lo, std::size_t hi) {
    double m = 0.0;
    for (std::size_t i = lo; i < hi; ++i) m += (x[i] - m) / double(i - lo + 1);
    return m;
  };
  if (method.kind == EstimateMethod::Mean || method.batches <= 1) return mean(0, x.size());
  std::size_t nb = std::min(method.batches, x.size());
  std::vector<double> means(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    means[j] = mean(x.size() * j / nb, x.size() * (j + 1) / nb);
  }
  std::sort(means.begin(), means.end());
  return nb % 2 ? means[nb / 2] : 0.5 * (means[nb / 2 - 1] + means[nb / 2]);
}

// Dense grid used for max-type functionals of analytic kernels, which are not
// polynomial and so have no exact rule.
inline const std::vector<QuadNode>& su2_dense_grid() {
  static const std::vector<QuadNode> g = su2_quadrature(62);
  return g;
}

inline SampledUnitary su2_at(int n, const EulerAngles& a) {
  SampledUnitary v;
  v.kind = EnsembleKind::GlobalSU2;
  v.n = n;
  v.angles = a;
  return v;
}

// sum_V p(V) max_b K(V,b)^2
inline double var_max_bound(const KernelTable& k) {
  if (k.analytic()) {
    double s = 0.0;
    for (const auto& q : su2_dense_grid())
      s += q.weight * k.analytic_row(su2_at(k.qubits(), q.angles)).array().square().maxCoeff();
    return s;
  }
  const RMatrix& t = k.values();
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) s += k.density()[i] * t.row(i).array().square().maxCoeff();
  return s;
}

// Exact E[K^2] - E[K]^2 under P_rho(V, b) = p(V) <b|V rho V^dagger|b>.
inline double var_under_state(const KernelTable& k, const DensityMatrix& rho) {
  if (rho.qubits() != k.qubits()) throw DomainError("state and kernel sizes differ");
  double m1 = 0.0, m2 = 0.0;
  auto add = [&](const SampledUnitary& v, double w, const RVector& row) {
    RVector pr = outcome_probabilities(rho, v);
    m1 += w * pr.dot(row);
    m2 += w * pr.dot(row.cwiseProduct(row));
  };
  if (k.analytic()) {
    for (const auto& q : su2_quadrature(3 * k.qubits())) {
      auto v = su2_at(k.qubits(), q.angles);
      add(v, q.weight, k.analytic_row(v));
    }
  } else {
    const auto& ens = k.ensemble();
    for (std::size_t i = 0; i < ens.size(); ++i)
      if (ens.weight(i) > 0.0)
        add(ens.member(i), ens.weight(i), k.values().row(static_cast<Eigen::Index>(i)).transpose());
  }
  return std::max(0.0, m2 - m1 * m1);
}

inline double max_abs_kernel(const KernelTable& k) {
  if (!k.analytic()) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < k.values().rows(); ++i)
      if (k.density()[i] > 0.0) m = std::max(m, k.values().row(i).cwiseAbs().maxCoeff());
    return m;
  }
  // coarse scan (dense grid plus the poles), then pattern search around the
  // best few points
  int n = k.qubits();
  auto f = [&](double th, double ps) {
    return k.analytic_row(su2_at(n, {th, 0.0, ps})).cwiseAbs().maxCoeff();
  };
  std::vector<std::pair<double, EulerAngles>> cand;
  for (const auto& q : su2_dense_grid()) cand.push_back({f(q.angles.theta, q.angles.psi), q.angles});
  for (double th : {0.0, M_PI}) cand.push_back({f(th, 0.0), {th, 0.0, 0.0}});
  std::size_t keep = std::min<std::size_t>(4, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = cand.front().first;
  for (std::size_t c = 0; c < keep; ++c) {
    double th = cand[c].second.theta, ps = cand[c].second.psi, v = cand[c].first;
    for (double h = 0.1; h > 1e-9;) {
      bool moved = false;
      for (auto [dt, dp] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
        double t2 = std::clamp(th + dt, 0.0, M_PI), p2 = ps + dp, v2 = f(t2, p2);
        if (v2 > v) {
          th = t2;
          ps = p2;
          v = v2;
          moved = true;
        }
      }
      if (!moved) h *= 0.5;
    }
    best = std::max(best, v);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Shot budgets

enum class QVariant { TheoremFaithful, MaxKernel };

inline const char* qvariant_name(QVariant v) {
  return v == QVariant::TheoremFaithful ? "max|K|+||O~||" : "max|K|";
}

inline double q_value(const KernelTable& k, QVariant variant) {
  double q = max_abs_kernel(k);
  if (variant == QVariant::TheoremFaithful) q += spectral_norm(reconstruct(k));
  return q;
}

struct ObservableBound {
  double var_max = 0.0;
  double q = 0.0;
  double bias = 0.0;  // ||O - O~||, eats into epsilon
};

struct Budget {
  std::size_t M = 1;
  double epsilon = 0.1, delta = 0.1;
  std::vector<ObservableBound> observables;
  QVariant variant = QVariant::TheoremFaithful;
};

inline double log_m_over_2delta(std::size_t m, double delta) {
  double l = std::log(double(m) / (2.0 * delta));
  if (!(l > 0.0)) throw DomainError("ln(M / 2 delta) must be positive");
  return l;
}

// ceil(2 ln(M / 2 delta) max_i (Var_i + s_i Q_i / 3) / s_i^2), s_i = eps - bias_i
inline std::uint64_t theorem1_shots(const Budget& b) {
  if (!(b.epsilon > 0.0 && b.epsilon <= 1.0 && b.delta > 0.0 && b.delta <= 1.0))
    throw DomainError("epsilon and delta must lie in (0, 1]");
  if (b.observables.empty()) throw DomainError("budget has no observables");
  double l = log_m_over_2delta(b.M, b.delta);
  double worst = 0.0;
  for (const auto& o : b.observables) {
    double s = b.epsilon - o.bias;
    if (!(s > 0.0)) throw DomainError("bias exceeds epsilon");
    worst = std::max(worst, (o.var_max + s * o.q / 3.0) / (s * s));
  }
  return static_cast<std::uint64_t>(std::ceil(2.0 * l * worst));
}

}  // namespace rmkit

#endif  // RMKIT_ESTIMATOR_HPP_
