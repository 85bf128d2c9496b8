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

#ifndef RMKIT_BIASVAR_HPP_
#define RMKIT_BIASVAR_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rmkit/estimator.hpp"

namespace rmkit {

// Operator norm of a Hermitian matrix together with a unit vector attaining
// it. For Hermitian E the top singular pair is (u, sign * u).
struct HermitianNormPair {
  double norm = 0.0;
  double sign = 1.0;
  CVector u;
};

inline HermitianNormPair hermitian_norm_pair(const Operator& e) {
  Eigen::SelfAdjointEigenSolver<Operator> es(e);
  const RVector& w = es.eigenvalues();
  Eigen::Index lo = 0, hi = w.size() - 1;
  Eigen::Index k = std::abs(w[lo]) > std::abs(w[hi]) ? lo : hi;
  return {std::abs(w[k]), w[k] < 0 ? -1.0 : 1.0, es.eigenvectors().col(k)};
}

inline double hermitian_norm(const Operator& e) {
  Operator h = 0.5 * (e + e.adjoint());
  return hermitian_norm_pair(h).norm;
}

inline double kernel_bias(const KernelTable& k, const Operator& o) { return hermitian_norm(o - reconstruct(k)); }

// Var[K] under the maximally mixed state, P(V, b) = p(V) / 2^n.
inline double var_maxmixed(const KernelTable& k) {
  if (k.analytic()) return var_under_state(k, DensityMatrix::maximally_mixed(k.qubits()));
  const RMatrix& t = k.values();
  double d = double(t.cols()), m1 = 0.0, m2 = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    double p = k.density()[i] / d;
    m1 += p * t.row(i).sum();
    m2 += p * t.row(i).squaredNorm();
  }
  return std::max(0.0, m2 - m1 * m1);
}

// alpha ||O - O~|| + sqrt((2 / N) Var_{1/2^n}[K] ln(M / 2 delta))
inline double cost(const KernelTable& k, const Operator& o, std::size_t shots, std::size_t m, double delta,
                   double alpha) {
  if (shots == 0) throw DomainError("cost needs N >= 1");
  double l = log_m_over_2delta(m, delta);
  return alpha * kernel_bias(k, o) + std::sqrt(2.0 / double(shots) * var_maxmixed(k) * l);
}

struct BiasScanResult {
  double param = 0.0;  // lambda or alpha
  KernelTable kernel;
  double bias = 0.0;
  double var_bound = 0.0;
  double error_bound = 0.0;
};

inline double error_bound(double bias, double var_bound, std::size_t shots, std::size_t m, double delta) {
  return bias + std::sqrt(2.0 * var_bound * log_m_over_2delta(m, delta) / double(shots));
}

inline BiasScanResult assess(double param, KernelTable k, const Operator& o, std::size_t shots, std::size_t m,
                             double delta) {
  double b = kernel_bias(k, o), v = var_max_bound(k);
  return {param, std::move(k), b, v, error_bound(b, v, shots, m, delta)};
}

// ---------------------------------------------------------------------------
// Ridge biasing: (A^T A + lambda) K = A^T O over the stacked outcome system.

inline KernelTable ridge_bias(const Operator& o, const KernelSystem& sys, double lambda) {
  return sys.solve(o, lambda);
}

inline KernelTable ridge_bias(const Operator& o, const Ensemble& ens, double lambda) {
  if (!ens.is_discrete()) throw DomainError("ridge biasing needs a discrete ensemble");
  return ridge_bias(o, KernelSystem(ens), lambda);
}

// 0 followed by `count` log-spaced points over s_max^2 * [lo, hi].
inline std::vector<double> default_lambda_grid(const KernelSystem& sys, std::size_t count = 25,
                                               double lo = 1e-6, double hi = 1e2) {
  double s2 = std::pow(sys.solver().singular_values()[0], 2);
  std::vector<double> g{0.0};
  for (std::size_t i = 0; i < count; ++i) {
    double t = count > 1 ? double(i) / double(count - 1) : 0.0;
    g.push_back(s2 * lo * std::pow(hi / lo, t));
  }
  return g;
}

inline std::vector<BiasScanResult> ridge_scan(const Operator& o, const KernelSystem& sys,
                                              const std::vector<double>& lambdas, std::size_t shots,
                                              std::size_t m, double delta, int threads = 1) {
  if (lambdas.empty()) throw DomainError("empty lambda grid");
  std::vector<std::optional<BiasScanResult>> tmp(lambdas.size());
  parallel_for(lambdas.size(), threads,
               [&](std::size_t i) { tmp[i] = assess(lambdas[i], sys.solve(o, lambdas[i]), o, shots, m, delta); });
  std::vector<BiasScanResult> out;
  for (auto& r : tmp) out.push_back(std::move(*r));
  return out;
}

inline const BiasScanResult& best_of(const std::vector<BiasScanResult>& rs) {
  if (rs.empty()) throw DomainError("no scan results");
  return *std::min_element(rs.begin(), rs.end(),
                           [](const auto& a, const auto& b) { return a.error_bound < b.error_bound; });
}

// lambda_or_alpha, bias, var_bound, error_bound, shots_at(eps, delta)
inline void write_scan_csv(std::ostream& os, const std::vector<BiasScanResult>& rs, std::size_t m, double epsilon,
                           double delta) {
  os << "lambda_or_alpha,bias,var_bound,error_bound,shots_at\n";
  char buf[256];
  for (const auto& r : rs) {
    std::string shots = "inf";
    if (r.bias < epsilon) {
      Budget b;
      b.M = m;
      b.epsilon = epsilon;
      b.delta = delta;
      b.variant = QVariant::MaxKernel;
      b.observables = {{r.var_bound, max_abs_kernel(r.kernel), r.bias}};
      shots = std::to_string(theorem1_shots(b));
    }
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,", r.param, r.bias, r.var_bound, r.error_bound);
    os << buf << shots << '\n';
  }
}

// ---------------------------------------------------------------------------
// Alpha scan: per-alpha subgradient descent on the convex cost.

struct OptimizerError : NumericalError {
  OptimizerError(const std::string& what, KernelTable best, double best_cost)
      : NumericalError(what), best_(std::move(best)), cost_(best_cost) {}
  const KernelTable& best() const { return best_; }
  double best_cost() const { return cost_; }

 private:
  KernelTable best_;
  double cost_;
};

struct DescentOptions {
  int max_iter = 20000;
  double rel_tol = 1e-8;
  int window = 10;
};

class CostProblem {
 public:
  CostProblem(const Operator& o, const KernelSystem& sys, std::size_t shots, std::size_t m, double delta,
              double alpha)
      : o_(o), sys_(sys), alpha_(alpha), d_(o.rows()) {
    if (shots == 0) throw DomainError("cost needs N >= 1");
    scale_ = 2.0 / double(shots) * log_m_over_2delta(m, delta);
    const auto& ens = sys.ensemble();
    w_.resize(static_cast<Eigen::Index>(ens.size()) * d_);
    for (std::size_t i = 0; i < ens.size(); ++i)
      w_.segment(static_cast<Eigen::Index>(i) * d_, d_).setConstant(ens.weight(i) / double(d_));
  }

  double variance(const RVector& k) const {
    double m1 = w_.dot(k);
    return std::max(0.0, w_.dot(k.cwiseProduct(k)) - m1 * m1);
  }

  Operator residual_op(const RVector& k) const {
    Operator e = o_ - unstack_real(sys_.solver().matrix() * k, d_);
    return 0.5 * (e + e.adjoint());
  }

  double value(const RVector& k) const {
    return alpha_ * hermitian_norm_pair(residual_op(k)).norm + std::sqrt(scale_ * variance(k));
  }

  // Subgradients of the two terms.
  RVector grad_bias(const RVector& k) const {
    auto hp = hermitian_norm_pair(residual_op(k));
    if (hp.norm == 0.0) return RVector::Zero(k.size());
    Operator uu = hp.u * hp.u.adjoint();
    return -alpha_ * hp.sign * (sys_.solver().matrix().transpose() * stack_real(uu));
  }
  RVector grad_var(const RVector& k) const {
    double v = variance(k);
    if (v <= 0.0) return RVector::Zero(k.size());
    RVector gv = 2.0 * w_.cwiseProduct(k) - 2.0 * w_.dot(k) * w_;
    return scale_ * gv / (2.0 * std::sqrt(scale_ * v));
  }

  // Smoothed cost: log-sum-exp over +-eigenvalues for the norm and
  // sqrt(scale Var + mu^2) for the variance term. Returns the value and fills g.
  double smoothed(const RVector& k, double mu, RVector& g) const {
    Eigen::SelfAdjointEigenSolver<Operator> es(residual_op(k));
    const RVector& ev = es.eigenvalues();
    double top = ev.cwiseAbs().maxCoeff(), z = 0.0;
    RVector wp(ev.size()), wm(ev.size());
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
      wp[j] = std::exp((ev[j] - top) / mu);
      wm[j] = std::exp((-ev[j] - top) / mu);
      z += wp[j] + wm[j];
    }
    double smax = top + mu * std::log(z);
    Operator ge = Operator::Zero(ev.size(), ev.size());
    for (Eigen::Index j = 0; j < ev.size(); ++j)
      ge += ((wp[j] - wm[j]) / z) * es.eigenvectors().col(j) * es.eigenvectors().col(j).adjoint();
    double m1 = w_.dot(k), v = std::max(0.0, w_.dot(k.cwiseProduct(k)) - m1 * m1);
    double sv = std::sqrt(scale_ * v + mu * mu);
    g = -alpha_ * (sys_.solver().matrix().transpose() * stack_real(ge)) +
        scale_ * (w_.cwiseProduct(k) - m1 * w_) / sv;
    return alpha_ * smax + sv;
  }

 private:
  const Operator& o_;
  const KernelSystem& sys_;
  double alpha_, scale_ = 0.0;
  Eigen::Index d_;
  RVector w_;
};

struct DescentResult {
  RVector k;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Each step line-searches along the full subgradient and along each term's
// subgradient alone, keeping the best; at zero bias the combined subgradient
// is often not a descent direction but the variance gradient is.
inline DescentResult minimize_cost(const CostProblem& prob, RVector k, const DescentOptions& opt = {}) {
  DescentResult r{std::move(k), 0.0, 0, false};
  r.cost = prob.value(r.k);
  std::vector<double> hist{r.cost};
  double t0 = 1.0;
  for (; r.iterations < opt.max_iter; ++r.iterations) {
    RVector gb = prob.grad_bias(r.k), gv = prob.grad_var(r.k);
    RVector best_k;
    double best_f = r.cost, best_t = 0.0;
    for (const RVector& g : {RVector(gb + gv), gv, gb}) {
      double gn = g.norm();
      if (gn == 0.0) continue;
      for (double t = std::min(1e6, 2.0 * t0); t > 1e-14; t *= 0.5) {
        RVector kt = r.k - (t / gn) * g;
        double ft = prob.value(kt);
        if (ft < best_f) {
          best_f = ft;
          best_k = std::move(kt);
          best_t = t;
          break;
        }
      }
    }
    if (best_t == 0.0) {  // no direction decreases the cost
      r.converged = true;
      return r;
    }
    r.k = std::move(best_k);
    r.cost = best_f;
    t0 = best_t;
    hist.push_back(r.cost);
    if (hist.size() > std::size_t(opt.window)) {
      double prev = hist[hist.size() - 1 - std::size_t(opt.window)];
      if (prev - r.cost <= opt.rel_tol * std::max(std::abs(r.cost), 1e-300)) {
        r.converged = true;
        return r;
      }
    }
  }
  return r;
}

// L-BFGS on the smoothed cost with mu decreasing by 10x per stage.
inline RVector minimize_smoothed(const CostProblem& prob, RVector k, double mu0, double mu1, int iters = 300) {
  const int mem = 8;
  for (double mu = mu0; mu >= mu1 * 0.999; mu *= 0.1) {
    std::vector<RVector> ss, ys;
    RVector g;
    double f = prob.smoothed(k, mu, g);
    for (int it = 0; it < iters && g.norm() > 1e-12; ++it) {
      // two-loop recursion
      RVector q = g;
      std::vector<double> a(ss.size());
      for (int i = int(ss.size()) - 1; i >= 0; --i) {
        a[i] = ss[i].dot(q) / ys[i].dot(ss[i]);
        q -= a[i] * ys[i];
      }
      if (!ss.empty()) q *= ss.back().dot(ys.back()) / ys.back().squaredNorm();
      for (std::size_t i = 0; i < ss.size(); ++i) q += ss[i] * (a[i] - ys[i].dot(q) / ys[i].dot(ss[i]));
      RVector dir = -q;
      if (dir.dot(g) >= 0.0) {
        dir = -g;
        ss.clear();
        ys.clear();
      }
      double t = ss.empty() ? std::min(1.0, mu / std::max(g.norm(), 1e-300)) : 1.0;
      RVector kn, gn;
      double fn = f;
      bool ok = false;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        kn = k + t * dir;
        fn = prob.smoothed(kn, mu, gn);
        if (fn <= f + 1e-4 * t * g.dot(dir)) {
          ok = true;
          break;
        }
      }
      if (!ok) break;
      RVector sv = kn - k, yv = gn - g;
      if (sv.dot(yv) > 1e-16 * sv.norm() * yv.norm()) {
        ss.push_back(sv);
        ys.push_back(yv);
        if (int(ss.size()) > mem) {
          ss.erase(ss.begin());
          ys.erase(ys.begin());
        }
      }
      bool small = f - fn <= 1e-12 * std::max(std::abs(f), 1e-300);
      k = std::move(kn);
      g = std::move(gn);
      f = fn;
      if (small) break;
    }
  }
  return k;
}

// For each alpha: smoothed L-BFGS from the least-squares kernel and from the
// cheapest ridge kernel, then subgradient polishing of the exact cost. The
// lowest exact cost among the starts and their refinements wins, so an
// optimal start is returned unchanged.
inline std::vector<BiasScanResult> alpha_scan_all(const Operator& o, const KernelSystem& sys,
                                                  const std::vector<double>& alphas, std::size_t shots,
                                                  std::size_t m, double delta, const DescentOptions& opt = {},
                                                  int threads = 1) {
  if (alphas.empty()) throw DomainError("empty alpha list");
  const Ensemble& ens = sys.ensemble();
  RVector k0 = flatten_kernel(sys.solve(o, 0.0).values());
  std::vector<RVector> path;
  for (double l : default_lambda_grid(sys, 40, 1e-8, 1e3)) path.push_back(flatten_kernel(sys.solve(o, l).values()));
  double onorm = std::max(hermitian_norm(o), 1e-12);
  std::vector<std::optional<BiasScanResult>> tmp(alphas.size());
  std::vector<std::optional<DescentResult>> fails(alphas.size());
  parallel_for(alphas.size(), threads, [&](std::size_t i) {
    CostProblem prob(o, sys, shots, m, delta, alphas[i]);
    std::size_t rb = 0;
    for (std::size_t j = 1; j < path.size(); ++j)
      if (prob.value(path[j]) < prob.value(path[rb])) rb = j;
    std::vector<RVector> starts{k0};
    if (rb != 0) starts.push_back(path[rb]);
    DescentResult best{k0, prob.value(k0), 0, true};
    for (const RVector& s : starts) {
      if (prob.value(s) < best.cost) best = {s, prob.value(s), 0, true};
      RVector ks = minimize_smoothed(prob, s, 1e-2 * onorm, 1e-8 * onorm);
      DescentResult d = minimize_cost(prob, ks, opt);
      if (!d.converged) {
        fails[i] = std::move(d);
        return;
      }
      if (d.cost < best.cost) best = std::move(d);
    }
    tmp[i] = assess(alphas[i], KernelTable(ens, unflatten_kernel(best.k, ens)), o, shots, m, delta);
  });
  for (std::size_t i = 0; i < alphas.size(); ++i)
    if (fails[i])
      throw OptimizerError("alpha " + std::to_string(alphas[i]) + ": cost descent hit the iteration cap",
                           KernelTable(ens, unflatten_kernel(fails[i]->k, ens)), fails[i]->cost);
  std::vector<BiasScanResult> out;
  for (auto& r : tmp) out.push_back(std::move(*r));
  return out;
}

inline BiasScanResult alpha_scan(const Operator& o, const KernelSystem& sys, const std::vector<double>& alphas,
                                 std::size_t shots, std::size_t m, double delta, const DescentOptions& opt = {},
                                 int threads = 1) {
  return best_of(alpha_scan_all(o, sys, alphas, shots, m, delta, opt, threads));
}

// ---------------------------------------------------------------------------
// Local parameterization. Under a global product rotation V = U^{x n}, an
// operator acting on sites L only needs J(V, P) over the 2^|L| strings P of
// identities and Zs on L:  O = sum_V p(V) sum_P J(V, P) V^dagger P V.

// f(b, P): number of sites where P has Z and b has a 1.
inline int zstring_parity(Bitstring b, Bitstring zmask) { return std::popcount(b & zmask) & 1; }

// Sites (ascending) on which `o` acts nontrivially: o commutes with X_s and Z_s
// exactly when it is the identity there.
inline std::vector<int> operator_support(const Operator& o, double tol = 1e-12) {
  int n = qubits_of(o.rows());
  std::vector<int> out;
  Eigen::Index d = o.rows();
  for (int s = 0; s < n; ++s) {
    Bitstring m = site_bit(n, s);
    double dev = 0.0;
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i) {
        cplx a = o(i, j);
        cplx xb = o(i ^ m, j ^ m);
        double sz = ((i & m) != 0) != ((j & m) != 0) ? -1.0 : 1.0;
        dev = std::max({dev, std::abs(a - xb), std::abs(a - sz * a)});
      }
    if (dev > tol) out.push_back(s);
  }
  return out;
}

struct LocalParam {
  int n = 0;
  std::vector<int> support;  // ascending
  Ensemble ensemble = Ensemble::global_su2(1);  // on n qubits
  RMatrix values;            // members x 2^|support|, column = Z-mask over the support
  double residual = 0.0;

  // K(V, b) = sum_P J(V, P) (-1)^f(b, P); depends on b only through the support.
  KernelTable to_kernel() const {
    int l = static_cast<int>(support.size());
    std::size_t d = dim_of(n), dl = dim_of(l);
    RMatrix k = RMatrix::Zero(values.rows(), static_cast<Eigen::Index>(d));
    for (Bitstring b = 0; b < d; ++b) {
      Bitstring bl = restrict_bits(b);
      for (Bitstring p = 0; p < dl; ++p)
        k.col(b) += (zstring_parity(bl, p) ? -1.0 : 1.0) * values.col(p);
    }
    return KernelTable(ensemble, k, residual);
  }

  Bitstring restrict_bits(Bitstring b) const {
    int l = static_cast<int>(support.size());
    Bitstring out = 0;
    for (int j = 0; j < l; ++j)
      if (b & site_bit(n, support[j])) out |= site_bit(l, j);
    return out;
  }

  // J = (1/2^n) sum_b K(V, b) (-1)^f(b, P) for P local to the support.
  static LocalParam from_kernel(const KernelTable& k, std::vector<int> support) {
    std::sort(support.begin(), support.end());
    LocalParam lp;
    lp.n = k.qubits();
    lp.support = std::move(support);
    lp.ensemble = k.ensemble();
    lp.residual = k.residual();
    int l = static_cast<int>(lp.support.size());
    std::size_t d = dim_of(lp.n), dl = dim_of(l);
    lp.values = RMatrix::Zero(k.values().rows(), static_cast<Eigen::Index>(dl));
    for (Bitstring b = 0; b < d; ++b) {
      Bitstring bl = lp.restrict_bits(b);
      for (Bitstring p = 0; p < dl; ++p)
        lp.values.col(p) += (zstring_parity(bl, p) ? -1.0 : 1.0) / double(d) * k.values().col(b);
    }
    return lp;
  }

  // sum_V p(V) sum_P J(V, P) V^dagger P V, as an operator on the support.
  Operator reconstruct_local() const {
    int l = static_cast<int>(support.size());
    std::size_t dl = dim_of(l);
    Ensemble el = ensemble.on_qubits(l);
    Operator out = Operator::Zero(dl, dl);
    for (std::size_t i = 0; i < el.size(); ++i) {
      if (el.weight(i) == 0.0) continue;
      Operator u = el.member(i).realize();
      RVector diag = RVector::Zero(dl);
      for (Bitstring b = 0; b < dl; ++b)
        for (Bitstring p = 0; p < dl; ++p)
          diag[b] += (zstring_parity(b, p) ? -1.0 : 1.0) * values(static_cast<Eigen::Index>(i), p);
      out += el.weight(i) * u.adjoint() * diag.cast<cplx>().asDiagonal() * u;
    }
    return out;
  }

  Operator reconstruct_full() const { return embed(reconstruct_local(), support, n); }
};

inline constexpr int kMaxLocalSupport = 12;

// Solve on the support only: minimum-norm kernel for the local operator, then
// the Walsh transform to J.
inline LocalParam local_solve(const Operator& o_local, std::vector<int> support, int n, const Ensemble& ens,
                              double tol = 1e-6) {
  if (!ens.is_discrete() || ens.kind() == EnsembleKind::LocalClifford)
    throw DomainError("local_solve needs a discrete global ensemble");
  std::vector<int> order(support.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return support[a] < support[b]; });
  if (support.empty()) throw DomainError("local_solve: empty support");
  if (static_cast<int>(support.size()) > kMaxLocalSupport)
    throw DomainError("local_solve: support of " + std::to_string(support.size()) + " sites exceeds " +
                      std::to_string(kMaxLocalSupport));
  int l = static_cast<int>(support.size());
  if (o_local.rows() != static_cast<Eigen::Index>(dim_of(l)))
    throw DomainError("local_solve: operator size does not match the support");
  // reorder the local operator to ascending site order
  Operator ol = o_local;
  if (!std::is_sorted(support.begin(), support.end())) {
    std::vector<int> pos(l);  // pos[j] = index in the given order of the j-th smallest site
    for (int j = 0; j < l; ++j) pos[j] = order[j];
    std::size_t dl = dim_of(l);
    auto perm = [&](Bitstring x) {
      Bitstring y = 0;
      for (int j = 0; j < l; ++j)
        if (x & site_bit(l, pos[j])) y |= site_bit(l, j);
      return y;
    };
    for (Bitstring i = 0; i < dl; ++i)
      for (Bitstring j = 0; j < dl; ++j) ol(perm(i), perm(j)) = o_local(i, j);
    std::sort(support.begin(), support.end());
  }
  for (int s : support)
    if (s < 0 || s >= n) throw DomainError("local_solve: site out of range");
  if (std::adjacent_find(support.begin(), support.end()) != support.end())
    throw DomainError("local_solve: repeated site");
  KernelTable kl = kernel_least_squares(ol, ens.on_qubits(l), tol);
  LocalParam lp;
  lp.n = n;
  lp.support = std::move(support);
  lp.ensemble = ens.on_qubits(n);
  lp.residual = kl.residual();
  std::size_t dl = dim_of(l);
  lp.values = RMatrix::Zero(kl.values().rows(), static_cast<Eigen::Index>(dl));
  for (Bitstring b = 0; b < dl; ++b)
    for (Bitstring p = 0; p < dl; ++p)
      lp.values.col(p) += (zstring_parity(b, p) ? -1.0 : 1.0) / double(dl) * kl.values().col(b);
  return lp;
}

inline LocalParam local_solve(const Operator& o, const Ensemble& ens, double tol = 1e-6) {
  int n = qubits_of(o.rows());
  auto sup = operator_support(o);
  if (sup.empty()) sup = {0};
  if (static_cast<int>(sup.size()) > kMaxLocalSupport)
    throw DomainError("local_solve: support of " + std::to_string(sup.size()) + " sites exceeds " +
                      std::to_string(kMaxLocalSupport));
  std::vector<int> rest;
  for (int s = 0; s < n; ++s)
    if (!std::binary_search(sup.begin(), sup.end(), s)) rest.push_back(s);
  // o = o_L (x) 1, so o_L = tr_rest(o) / 2^|rest|
  Operator ol = partial_trace(o, sup) / double(dim_of(static_cast<int>(rest.size())));
  return local_solve(ol, sup, n, ens, tol);
}

}  // namespace rmkit

#endif  // RMKIT_BIASVAR_HPP_
