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

// Truncated U(1) gauge theory on a stack of triangular layers: qubits sit on
// vertex-columns j in each mode layer s; triangle terms act within a layer and
// link terms couple the same column in neighbouring layers (periodic in s).

#ifndef RMKIT_LGT_HPP_
#define RMKIT_LGT_HPP_

#include <array>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rmkit/adaptive.hpp"
#include "rmkit/biasvar.hpp"
#include "rmkit/estimator.hpp"
#include "rmkit/visible.hpp"

namespace rmkit {

class TriLattice {
 public:
  TriLattice(int triangles, int s_max) : t_(triangles), s_(s_max) {
    if (t_ < 2 || t_ % 2) throw DomainError("triangle count must be even and >= 2");
    if (s_ < 2) throw DomainError("mode count s_max must be >= 2");
  }
  int triangles() const { return t_; }
  int modes() const { return s_; }
  int columns() const { return 3 * t_ / 2; }
  int qubits() const { return columns() * s_; }
  int qubit(int column, int mode) const { return mode * columns() + column; }

  // Strip pairing: triangle t touches columns t and t-1 (a periodic zig-zag of
  // T columns) and one of T/2 apex columns; every column is shared by exactly
  // two triangles.
  std::array<int, 3> triangle_columns(int t) const {
    return {t, (t + t_ - 1) % t_, t_ + t % (t_ / 2)};
  }

 private:
  int t_, s_;
};

enum class TermKind { Triangle, Link };

struct HamTerm {
  TermKind kind;
  std::vector<int> sites;
  Operator op;  // on `sites`, in the order given
  double g = 1.0, alpha = 1.0;
};

inline Operator triangle_operator(double g) {
  auto p = [](const char* w) { return PauliString::parse(w).dense(); };
  return -1.0 / (24.0 * g * g) * (p("XXX") - p("YYX") - p("YXY") - p("XYY"));
}

inline Operator link_operator(double g, double alpha) {
  auto p = [](const char* w) { return PauliString::parse(w).dense(); };
  return g * g / 3.0 * p("ZZ") + alpha / (12.0 * g * g) * (p("XX") + p("YY"));
}

inline std::vector<HamTerm> build_terms(const TriLattice& lat, double g, double alpha) {
  if (!(g > 0.0)) throw DomainError("coupling g must be positive");
  std::vector<HamTerm> out;
  Operator tri = triangle_operator(g), link = link_operator(g, alpha);
  for (int s = 0; s < lat.modes(); ++s) {
    for (int t = 0; t < lat.triangles(); ++t) {
      auto c = lat.triangle_columns(t);
      out.push_back({TermKind::Triangle, {lat.qubit(c[0], s), lat.qubit(c[1], s), lat.qubit(c[2], s)}, tri, g, alpha});
    }
    // for s_max = 2 both (0,1) and (1,0) appear, as the mode sum indexes them
    for (int j = 0; j < lat.columns(); ++j)
      out.push_back({TermKind::Link, {lat.qubit(j, s), lat.qubit(j, (s + 1) % lat.modes())}, link, g, alpha});
  }
  return out;
}

inline Operator hamiltonian(const TriLattice& lat, const std::vector<HamTerm>& terms) {
  check_qubits(lat.qubits());
  std::size_t d = dim_of(lat.qubits());
  Operator h = Operator::Zero(d, d);
  for (const auto& t : terms) h += embed(t.op, t.sites, lat.qubits());
  return h;
}

struct VisibilityEntry {
  TermKind kind;
  double invisible_norm = 0.0;
  std::vector<std::pair<FixedIdSet, double>> components;  // non-zero B_S coefficients
};

inline std::vector<VisibilityEntry> check_visibility(const std::vector<HamTerm>& terms, double tol = 1e-12) {
  std::vector<VisibilityEntry> out;
  for (const auto& t : terms) {
    VisibilityEntry e{t.kind, invisible_norm(t.op), {}};
    int n = static_cast<int>(t.sites.size());
    const auto& vb = visible_basis(n);
    CVector c = vb.coordinates(t.op);
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (std::abs(c[i]) > tol) e.components.push_back({vb.sets()[i], c[i].real()});
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shot budgets for the energy density

enum class Strategy { PlainCS, BiasOnly, AdaptOnly, BiasAdapt };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::PlainCS: return "plain-CS";
    case Strategy::BiasOnly: return "bias-only";
    case Strategy::AdaptOnly: return "adapt-only";
    case Strategy::BiasAdapt: return "bias+adapt";
  }
  return "?";
}

struct BudgetRow {
  Strategy strategy;
  int triangles = 0, n_qubits = 0;
  std::size_t m_terms = 0;
  double epsilon = 0.1, delta = 0.1;
  double lambda_rel = 0.0;  // chosen ridge parameter / s_max^2 of each term system
  double var_bound_link = 0.0, var_bound_triangle = 0.0;
  double q_link = 0.0, q_triangle = 0.0;
  double bias_link = 0.0, bias_triangle = 0.0;
  QVariant q_variant = QVariant::MaxKernel;
  std::uint64_t n_shots = 0;
  bool link_dominates = false;
};

struct LgtOptions {
  double g = 1.0, alpha = 1.0;
  double epsilon = 0.1, delta = 0.1;
  std::size_t lambda_points = 25;  // plus lambda = 0
  double lambda_lo = 1e-6, lambda_hi = 1e2;
  int threads = 1;
};

namespace detail {

struct TermBudget {
  double var = 0.0, q = 0.0, bias = 0.0;
};

inline TermBudget term_budget(const KernelTable& k, const Operator& o) {
  return {var_max_bound(k), max_abs_kernel(k), kernel_bias(k, o)};
}

// (Var + s Q / 3) / s^2 with s = eps - bias; infinite when the bias eats eps
inline double budget_rate(const TermBudget& t, double eps) {
  double s = eps - t.bias;
  if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
  return (t.var + s * t.q / 3.0) / (s * s);
}

}  // namespace detail

// Kernels depend only on the local term operator (all triangles share one, all
// links share one), so budgets for any lattice size follow from two local
// solves; M only enters through ln(M / 2 delta).
class EnergyBudget {
 public:
  EnergyBudget(const Ensemble& ens, LgtOptions opt)
      : opt_(opt),
        tri_op_(triangle_operator(opt.g)),
        link_op_(link_operator(opt.g, opt.alpha)),
        tri_sys_(ens.on_qubits(3)),
        link_sys_(ens.on_qubits(2)) {
    if (!ens.is_discrete() || ens.kind() == EnsembleKind::LocalClifford)
      throw DomainError("energy budgets need a discrete global ensemble");
    // representability failures propagate
    kernel_least_squares(tri_op_, tri_sys_);
    kernel_least_squares(link_op_, link_sys_);
    rel_grid_.push_back(0.0);
    for (std::size_t i = 0; i < opt.lambda_points; ++i) {
      double t = opt.lambda_points > 1 ? double(i) / double(opt.lambda_points - 1) : 0.0;
      rel_grid_.push_back(opt.lambda_lo * std::pow(opt.lambda_hi / opt.lambda_lo, t));
    }
  }

  const std::vector<double>& lambda_grid() const { return rel_grid_; }

  std::pair<KernelTable, KernelTable> kernels(double rel_lambda) const {
    auto s2 = [](const KernelSystem& s) { return std::pow(s.solver().singular_values()[0], 2); };
    return {tri_sys_.solve(tri_op_, rel_lambda * s2(tri_sys_)), link_sys_.solve(link_op_, rel_lambda * s2(link_sys_))};
  }

  BudgetRow row(Strategy st, const TriLattice& lat) const {
    std::size_t m = static_cast<std::size_t>(5 * lat.triangles() * lat.modes() / 2);
    double l = log_m_over_2delta(m, opt_.delta);
    bool bias = st == Strategy::BiasOnly || st == Strategy::BiasAdapt;
    bool adapt = st == Strategy::AdaptOnly || st == Strategy::BiasAdapt;
    BudgetRow best;
    double best_rate = std::numeric_limits<double>::infinity();
    for (double rl : bias ? rel_grid_ : std::vector<double>{0.0}) {
      auto [kt, kl] = kernels(rl);
      if (adapt) {
        RVector q = q_multi({kt, kl});
        kt = reweight(kt, q);
        kl = reweight(kl, q);
      }
      auto bt = detail::term_budget(kt, tri_op_), bl = detail::term_budget(kl, link_op_);
      double rt = detail::budget_rate(bt, opt_.epsilon), rlk = detail::budget_rate(bl, opt_.epsilon);
      double rate = std::max(rt, rlk);
      if (rate < best_rate) {
        best_rate = rate;
        best.lambda_rel = rl;
        best.var_bound_link = bl.var;
        best.var_bound_triangle = bt.var;
        best.q_link = bl.q;
        best.q_triangle = bt.q;
        best.bias_link = bl.bias;
        best.bias_triangle = bt.bias;
        best.link_dominates = rlk >= rt;
      }
    }
    if (!std::isfinite(best_rate)) throw NumericalError("no ridge parameter keeps the bias below epsilon");
    best.strategy = st;
    best.triangles = lat.triangles();
    best.n_qubits = lat.qubits();
    best.m_terms = m;
    best.epsilon = opt_.epsilon;
    best.delta = opt_.delta;
    best.n_shots = static_cast<std::uint64_t>(std::ceil(2.0 * l * best_rate));
    return best;
  }

  std::vector<BudgetRow> compare(const std::vector<TriLattice>& lats) const {
    const Strategy all[] = {Strategy::PlainCS, Strategy::BiasOnly, Strategy::AdaptOnly, Strategy::BiasAdapt};
    std::vector<std::optional<BudgetRow>> tmp(4 * lats.size());
    parallel_for(tmp.size(), opt_.threads, [&](std::size_t i) { tmp[i] = row(all[i % 4], lats[i / 4]); });
    std::vector<BudgetRow> out;
    for (auto& r : tmp) out.push_back(*r);
    return out;
  }

 private:
  LgtOptions opt_;
  Operator tri_op_, link_op_;
  KernelSystem tri_sys_, link_sys_;
  std::vector<double> rel_grid_;
};

inline std::vector<BudgetRow> energy_budget_comparison(const std::vector<TriLattice>& lats, const Ensemble& ens,
                                                       const LgtOptions& opt = {}) {
  return EnergyBudget(ens, opt).compare(lats);
}

inline void write_budget_csv(std::ostream& os, const std::vector<BudgetRow>& rows) {
  os << "strategy,n_qubits,M_terms,epsilon,delta,var_bound_link,Q_variant,N_shots\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%.10g,%.10g,%.10g,%s,%llu\n", strategy_name(r.strategy), r.n_qubits,
                  r.m_terms, r.epsilon, r.delta, r.var_bound_link, qvariant_name(r.q_variant),
                  static_cast<unsigned long long>(r.n_shots));
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Energy estimation from one campaign

// Sum of the per-term local kernels as one table on the whole lattice.
inline KernelTable total_kernel(const TriLattice& lat, const std::vector<HamTerm>& terms, const Ensemble& ens,
                                double tol = 1e-6) {
  int n = lat.qubits();
  check_qubits(n);
  Ensemble full = ens.on_qubits(n);
  RMatrix k = RMatrix::Zero(static_cast<Eigen::Index>(full.size()), static_cast<Eigen::Index>(dim_of(n)));
  double res = 0.0;
  // identical local operators share a local solve
  std::vector<std::pair<const Operator*, LocalParam>> cache;
  for (const auto& t : terms) {
    const LocalParam* lp = nullptr;
    for (const auto& c : cache)
      if (c.first->rows() == t.op.rows() && (*c.first - t.op).norm() == 0.0) lp = &c.second;
    if (!lp) {
      std::vector<int> local(t.sites.size());
      for (std::size_t i = 0; i < local.size(); ++i) local[i] = static_cast<int>(i);
      cache.push_back({&t.op, local_solve(t.op, local, static_cast<int>(t.sites.size()), ens, tol)});
      lp = &cache.back().second;
    }
    LocalParam placed = *lp;
    placed.n = n;
    placed.ensemble = full;
    // J is indexed in the term's own site order; remap to ascending global sites
    std::vector<int> order(t.sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return t.sites[a] < t.sites[b]; });
    int l = static_cast<int>(t.sites.size());
    RMatrix j(lp->values.rows(), lp->values.cols());
    for (Bitstring p = 0; p < dim_of(l); ++p) {
      Bitstring q = 0;  // mask over sorted sites
      for (int r = 0; r < l; ++r)
        if (p & site_bit(l, order[r])) q |= site_bit(l, r);
      j.col(q) = lp->values.col(p);
    }
    placed.values = j;
    placed.support.clear();
    for (int r = 0; r < l; ++r) placed.support.push_back(t.sites[order[r]]);
    k += placed.to_kernel().values();
    res += lp->residual;
  }
  return KernelTable(full, k, res);
}

}  // namespace rmkit

#endif  // RMKIT_LGT_HPP_
