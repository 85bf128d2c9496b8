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

// Config-driven experiment runner. Every subcommand reads a flat JSON object,
// rejects keys it does not know, and writes CSV/JSON artifacts that carry a
// metadata header (seed, config hash, module versions). Outputs depend only
// on the seed and the config, never on the thread count.

#ifndef RMKIT_TOOLS_CLI_HPP_
#define RMKIT_TOOLS_CLI_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rmkit/adaptive.hpp"
#include "rmkit/biasvar.hpp"
#include "rmkit/channels.hpp"
#include "rmkit/lgt.hpp"
#include "rmkit/phases.hpp"

namespace rmkit::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kExitOk = 0, kExitConfig = 2, kExitNumerical = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A self-check ran but its verdict was negative.
struct CheckFailed : NumericalError {
  using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Config

class Config {
 public:
  Config() = default;
  explicit Config(json j) : j_(std::move(j)) {
    if (!j_.is_object()) throw ConfigError("config must be a JSON object");
  }

  static Config load(const std::string& path) {
    if (path.empty()) return Config(json::object());
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
      return Config(json::parse(in));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }

  void allow_only(const std::set<std::string>& keys) const {
    std::string bad;
    for (const auto& [k, v] : j_.items())
      if (!keys.count(k)) bad += (bad.empty() ? "" : ", ") + k;
    if (!bad.empty()) throw ConfigError("unknown config keys: " + bad);
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }

  template <class T>
  T get(const std::string& k, T fallback) const {
    if (!j_.contains(k)) return fallback;
    try {
      return j_.at(k).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + k + "' has the wrong type");
    }
  }

  const json& data() const { return j_; }

  // FNV-1a over the canonical (key-sorted) dump.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : j_.dump()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  json j_ = json::object();
};

template <class T>
T positive(const Config& c, const std::string& k, T fallback) {
  T v = c.get<T>(k, fallback);
  if (!(v > T(0))) throw ConfigError("config key '" + k + "' must be positive");
  return v;
}

inline int bounded_int(const Config& c, const std::string& k, int fallback, int lo, int hi) {
  int v = c.get<int>(k, fallback);
  if (v < lo || v > hi)
    throw ConfigError("config key '" + k + "' = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  return v;
}

inline double unit_interval(const Config& c, const std::string& k, double fallback) {
  double v = c.get<double>(k, fallback);
  if (!(v > 0.0 && v <= 1.0)) throw ConfigError("config key '" + k + "' must lie in (0, 1]");
  return v;
}

// ---------------------------------------------------------------------------
// Run context and artifacts

struct Context {
  std::string subcommand;
  Config config;
  std::uint64_t seed = 1;
  std::filesystem::path out = ".";
  int threads = 1;
  json params = json::object();  // resolved settings, echoed into metadata

  json meta() const {
    json m;
    m["tool"] = "rmkit";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["seed"] = seed;
    m["config_hash"] = config.hash();
    json mods = json::object();
    for (const char* n :
         {"qcore", "ensembles", "visible", "channels", "estimator", "biasvar", "adaptive", "lgt", "phases", "cli"})
      mods[n] = kVersion;
    m["modules"] = mods;
    m["params"] = params;
    return m;
  }

  std::filesystem::path file(const std::string& name) const { return out / name; }

  void write_json(const std::string& name, json body) const {
    body["meta"] = meta();
    std::ofstream f(file(name));
    if (!f) throw ConfigError("cannot write " + file(name).string());
    f << body.dump(2) << '\n';
  }

  void write_csv(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    std::ofstream f(file(name));
    if (!f) throw ConfigError("cannot write " + file(name).string());
    json m = meta();
    f << "# rmkit " << kVersion << " " << subcommand << "\n";
    f << "# seed=" << seed << " config_hash=" << m["config_hash"].get<std::string>() << "\n";
    f << "# modules=" << m["modules"].dump() << "\n";
    f << "# params=" << params.dump() << "\n";
    body(f);
  }
};

// Independent streams per purpose so adding draws in one place does not
// shift another.
enum Stream : std::uint64_t { kEnsembleStream = 0, kStateStream = 1, kShotStream = 2, kCheckStream = 3 };
inline Rng stream(const Context& ctx, Stream s) { return Rng::stream(ctx.seed, s); }

// ---------------------------------------------------------------------------
// Shared config vocabulary

inline constexpr int kMaxDenseQubits = 12;
inline constexpr int kMaxSystemQubits = 6;  // stacked kernel systems and SU(2) channels

// "link" | "triangle" | [[coeff, "WORD"], ...], embedded on the first sites of n.
inline Operator parse_observable(const Config& c, int n) {
  if (!c.has("observable")) {
    if (n < 2) throw ConfigError("default observable 'link' needs n >= 2");
    return embed(link_operator(1.0, 1.0), {0, 1}, n);
  }
  const json& j = c.raw("observable");
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "link") {
      if (n < 2) throw ConfigError("observable 'link' needs n >= 2");
      return embed(link_operator(1.0, 1.0), {0, 1}, n);
    }
    if (s == "triangle") {
      if (n < 3) throw ConfigError("observable 'triangle' needs n >= 3");
      return embed(triangle_operator(1.0), {0, 1, 2}, n);
    }
    throw ConfigError("unknown observable preset '" + s + "'");
  }
  if (!j.is_array() || j.empty()) throw ConfigError("observable must be a preset name or a list of [coeff, word]");
  std::size_t d = dim_of(n);
  Operator o = Operator::Zero(d, d);
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_string())
      throw ConfigError("observable terms must be [coeff, word]");
    std::string w = t[1].get<std::string>();
    if (static_cast<int>(w.size()) != n) throw ConfigError("observable word '" + w + "' does not have n sites");
    try {
      add_pauli(o, PauliString::parse(w), t[0].get<double>());
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  return o;
}

inline DensityMatrix parse_state(const Config& c, int n, Rng rng) {
  std::string s = c.get<std::string>("state", "random");
  if (s == "zero") return DensityMatrix(StateVector::basis(n, 0));
  if (s == "maxmixed") return DensityMatrix::maximally_mixed(n);
  if (s == "random") return random_density(n, rng);
  if (s == "plus") {
    Operator p = tensor_power(Operator::Constant(2, 2, 0.5), n);
    return DensityMatrix(p);
  }
  throw ConfigError("unknown state '" + s + "' (zero, plus, maxmixed, random)");
}

// Ensemble by name; a subsample is drawn so that every target is representable.
inline Ensemble parse_ensemble(const Config& c, int n, const std::vector<Operator>& targets, Rng rng) {
  std::string e = c.get<std::string>("ensemble", "subsample");
  if (e == "su2") return Ensemble::global_su2(n);
  if (e == "cl2") return Ensemble::global_cl2(n);
  if (e == "subsample") {
    auto members = static_cast<std::size_t>(positive<int>(c, "members", 25));
    return subsample_su2(n, members, rng, targets);
  }
  throw ConfigError("unknown ensemble '" + e + "' (su2, cl2, subsample)");
}

// {"count": 25, "lo": 1e-6, "hi": 1e2} relative to s_max^2, or an explicit
// list of absolute values.
inline std::vector<double> parse_lambda_grid(const Config& c, const KernelSystem& sys) {
  if (!c.has("lambda_grid")) return default_lambda_grid(sys);
  const json& j = c.raw("lambda_grid");
  try {
    if (j.is_array()) {
      auto v = j.get<std::vector<double>>();
      for (double x : v)
        if (!(x >= 0.0)) throw ConfigError("lambda_grid values must be >= 0");
      if (v.empty()) throw ConfigError("lambda_grid is empty");
      return v;
    }
    if (j.is_object()) {
      for (const auto& [k, v] : j.items())
        if (k != "count" && k != "lo" && k != "hi") throw ConfigError("unknown lambda_grid key: " + k);
      auto count = j.value("count", 25);
      double lo = j.value("lo", 1e-6), hi = j.value("hi", 1e2);
      if (count < 1 || !(lo > 0.0) || !(hi > lo)) throw ConfigError("lambda_grid needs count >= 1 and 0 < lo < hi");
      return default_lambda_grid(sys, static_cast<std::size_t>(count), lo, hi);
    }
  } catch (const json::exception&) {
    throw ConfigError("lambda_grid has the wrong type");
  }
  throw ConfigError("lambda_grid must be a list or {count, lo, hi}");
}

// ---------------------------------------------------------------------------
// Self-checks shared with the acceptance binary

// Chunked Monte-Carlo: chunk c uses stream c and chunks are reduced in order,
// so the result is independent of the thread count.
inline constexpr std::size_t kMcChunks = 64;

struct ChannelCheck {
  double max_z = 0.0;           // SU(2) channel vs Haar Monte-Carlo, entry-wise
  double max_cl2_error = 0.0;   // Cl(2) channel vs explicit three-basis average
  double z_eigenvalue_error = 0.0;
};

inline ChannelCheck channel_check(int n, std::size_t samples, int trials, std::uint64_t seed, int threads = 1) {
  if (n < 1 || n > 3) throw ConfigError("channel-check supports n in [1, 3]");
  ChannelCheck out;
  Eigen::Index d = static_cast<Eigen::Index>(dim_of(n));
  for (int t = 0; t < trials; ++t) {
    Rng trng = Rng::stream(seed, 1000 + t);
    Operator a = random_hermitian(d, trng);
    Operator exact = apply_msu2(a);
    std::uint64_t base = trng.next();
    std::vector<Operator> s1(kMcChunks, Operator::Zero(d, d)), s2(kMcChunks, Operator::Zero(d, d));
    parallel_for(kMcChunks, threads, [&](std::size_t c) {
      Rng r = Rng::stream(base, c);
      std::size_t lo = samples * c / kMcChunks, hi = samples * (c + 1) / kMcChunks;
      for (std::size_t i = lo; i < hi; ++i) {
        Operator u = su2_at(n, haar_angles(r)).realize();
        CVector diag = (u * a * u.adjoint()).diagonal();
        Operator x = u.adjoint() * diag.asDiagonal() * u;
        s1[c] += x;
        s2[c] += Operator(x.real().cwiseAbs2().cast<cplx>() + cplx(0, 1) * x.imag().cwiseAbs2().cast<cplx>());
      }
    });
    Operator m1 = Operator::Zero(d, d), m2 = Operator::Zero(d, d);
    for (std::size_t c = 0; c < kMcChunks; ++c) {
      m1 += s1[c];
      m2 += s2[c];
    }
    double ns = double(samples);
    m1 /= ns;
    m2 /= ns;
    for (Eigen::Index i = 0; i < d * d; ++i) {
      double mr = m1.data()[i].real(), mi = m1.data()[i].imag();
      double vr = std::max(m2.data()[i].real() - mr * mr, 0.0), vi = std::max(m2.data()[i].imag() - mi * mi, 0.0);
      double er = exact.data()[i].real(), ei = exact.data()[i].imag();
      double zr = std::abs(mr - er) / std::max(std::sqrt(vr / ns), 1e-14);
      double zi = std::abs(mi - ei) / std::max(std::sqrt(vi / ns), 1e-14);
      out.max_z = std::max({out.max_z, zr, zi});
    }
    // Cl(2): average of the three basis measurement channels
    Operator cl = Operator::Zero(d, d);
    for (int b = 0; b < 3; ++b) {
      Operator u = Ensemble::global_cl2(n).member(b).realize();
      CVector diag = (u * a * u.adjoint()).diagonal();
      cl += u.adjoint() * diag.asDiagonal() * u / 3.0;
    }
    out.max_cl2_error = std::max(out.max_cl2_error, (cl - apply_mcl2(a)).cwiseAbs().maxCoeff());
  }
  Operator z = PauliString::parse("Z").dense();
  out.z_eigenvalue_error = (apply_msu2(z) - z / 3.0).cwiseAbs().maxCoeff();
  return out;
}

struct BasisAudit {
  struct Row {
    int n = 0;
    std::size_t sets = 0;
    std::uint64_t formula = 0;
    double gram_error = 0.0;
    double max_invisible = -1.0;  // -1: not sampled
  };
  std::vector<Row> rows;
  bool ok() const {
    for (const auto& r : rows)
      if (r.sets != r.formula || r.gram_error > 1e-10 || r.max_invisible > 1e-10) return false;
    return true;
  }
};

inline std::uint64_t dimension_formula(int n) {
  return (std::uint64_t{1} << n) * std::uint64_t(n * n + 7 * n + 8) / 8;
}

// Largest |<b| V B_perp V^dag |b>| over `samples` random (V, b) per B_perp.
inline double max_invisible_response(int n, int samples, Rng& rng) {
  std::vector<Operator> bp;
  for (const auto& s : enumerate_sets(n))
    for (std::size_t k = 1; k < s.size(); ++k) bp.push_back(build_Bperp(s, k));
  double worst = 0.0;
  for (int t = 0; t < samples; ++t) {
    Operator u = su2_at(n, haar_angles(rng)).realize();
    auto b = static_cast<Eigen::Index>(rng.below(dim_of(n)));
    CVector w = u.row(b).adjoint();
    for (const auto& x : bp) worst = std::max(worst, std::abs(w.dot(x * w)));
  }
  return worst;
}

inline BasisAudit basis_audit(int n_max, int samples, int invis_max_n, std::uint64_t seed) {
  BasisAudit a;
  Rng rng = Rng::stream(seed, kCheckStream);
  for (int n = 1; n <= n_max; ++n) {
    BasisAudit::Row r;
    r.n = n;
    auto sets = enumerate_sets(n);
    r.sets = sets.size();
    r.formula = dimension_formula(n);
    std::vector<Operator> bs;
    for (const auto& s : sets) bs.push_back(build_B(s));
    for (std::size_t i = 0; i < bs.size(); ++i)
      for (std::size_t j = i; j < bs.size(); ++j)
        r.gram_error = std::max(r.gram_error, std::abs(hs_inner(bs[i], bs[j]) - (i == j ? 1.0 : 0.0)));
    if (n <= invis_max_n) r.max_invisible = max_invisible_response(n, samples, rng);
    a.rows.push_back(r);
  }
  return a;
}

// Interior-minimum test on an error curve ordered by parameter.
struct BowlShape {
  std::size_t argmin = 0;
  double first = 0.0, last = 0.0, best = 0.0;
  double margin = 0.0;  // 1 - best / min(first, last)
  bool interior = false;
};

inline BowlShape bowl_shape(const std::vector<double>& err) {
  if (err.size() < 3) throw DomainError("bowl needs at least three points");
  BowlShape b;
  b.argmin = static_cast<std::size_t>(std::min_element(err.begin(), err.end()) - err.begin());
  b.first = err.front();
  b.last = err.back();
  b.best = err[b.argmin];
  b.margin = 1.0 - b.best / std::min(b.first, b.last);
  b.interior = b.argmin > 0 && b.argmin + 1 < err.size() && b.best < b.first && b.best < b.last;
  return b;
}

inline bool strategy_order_ok(const std::vector<BudgetRow>& rows) {
  if (rows.size() % 4) return false;
  for (std::size_t i = 0; i < rows.size(); i += 4) {
    auto plain = rows[i].n_shots, bias = rows[i + 1].n_shots, adapt = rows[i + 2].n_shots, both = rows[i + 3].n_shots;
    if (!(both <= bias && bias <= plain && both <= adapt && adapt <= plain)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_channel_check(Context& ctx) {
  const Config& c = ctx.config;
  c.allow_only({"n", "samples", "trials", "threads"});
  int n = bounded_int(c, "n", 2, 1, 3);
  auto samples = static_cast<std::size_t>(positive<int>(c, "samples", 100000));
  int trials = positive<int>(c, "trials", 3);
  ctx.params = {{"n", n}, {"samples", samples}, {"trials", trials}};
  auto r = channel_check(n, samples, trials, ctx.seed, ctx.threads);
  bool pass = r.max_z <= 5.0 && r.max_cl2_error < 1e-12 && r.z_eigenvalue_error < 1e-12;
  ctx.write_json("channel_check.json", {{"max_z_su2", r.max_z},
                                        {"max_error_cl2", r.max_cl2_error},
                                        {"z_eigenvalue_error", r.z_eigenvalue_error},
                                        {"pass", pass}});
  if (!pass) throw CheckFailed("channel-check: Monte-Carlo or closed-form mismatch");
  return kExitOk;
}

inline int cmd_basis_audit(Context& ctx) {
  const Config& c = ctx.config;
  c.allow_only({"n_max", "samples", "invisible_n_max", "threads"});
  int n_max = bounded_int(c, "n_max", 4, 1, kMaxSystemQubits);
  int samples = positive<int>(c, "samples", 200);
  int inv = bounded_int(c, "invisible_n_max", 3, 0, kMaxSystemQubits);
  ctx.params = {{"n_max", n_max}, {"samples", samples}, {"invisible_n_max", inv}};
  auto a = basis_audit(n_max, samples, inv, ctx.seed);
  json rows = json::array();
  for (const auto& r : a.rows)
    rows.push_back({{"n", r.n},
                    {"sets", r.sets},
                    {"formula", r.formula},
                    {"gram_error", r.gram_error},
                    {"max_invisible_response", r.max_invisible}});
  ctx.write_json("basis_audit.json", {{"rows", rows}, {"pass", a.ok()}});
  if (!a.ok()) throw CheckFailed("basis-audit: visible-space invariant violated");
  return kExitOk;
}

inline int cmd_estimate(Context& ctx) {
  const Config& c = ctx.config;
  c.allow_only({"ensemble", "n", "members", "observable", "state", "shots", "epsilon", "delta", "method", "records",
                "threads"});
  int n = bounded_int(c, "n", 2, 1, kMaxSystemQubits);
  Operator o = parse_observable(c, n);
  DensityMatrix rho = parse_state(c, n, stream(ctx, kStateStream));
  Ensemble ens = parse_ensemble(c, n, {o}, stream(ctx, kEnsembleStream));
  double eps = unit_interval(c, "epsilon", 0.1), delta = unit_interval(c, "delta", 0.1);
  KernelTable k = ens.kind() == EnsembleKind::DiscreteSubsample ? kernel_least_squares(o, ens) : kernel_cs(o, ens);
  Budget b;
  b.epsilon = eps;
  b.delta = delta;
  b.variant = QVariant::MaxKernel;
  b.observables = {{var_max_bound(k), max_abs_kernel(k), 0.0}};
  std::uint64_t n_thm = theorem1_shots(b);
  auto shots = static_cast<std::size_t>(c.get<std::int64_t>("shots", static_cast<std::int64_t>(n_thm)));
  if (shots == 0) throw ConfigError("config key 'shots' must be positive");
  std::string method = c.get<std::string>("method", "mean");
  EstimateMethod em;
  if (method == "mean")
    em = EstimateMethod::mean();
  else if (method == "median_of_means")
    em = EstimateMethod::median_of_means(default_mom_batches(1, delta));
  else
    throw ConfigError("unknown method '" + method + "' (mean, median_of_means)");
  ctx.params = {{"n", n},          {"ensemble", kind_name(ens.kind())}, {"shots", shots},
                {"epsilon", eps},  {"delta", delta},                     {"method", method},
                {"state", c.get<std::string>("state", "random")}};
  Rng rng = stream(ctx, kShotStream);
  auto recs = run_campaign(rho, k.ensemble(), shots, rng, 0, ctx.threads);
  double est = estimate(recs, k, em);
  double exact = std::real(hs_inner(o, rho.matrix()));
  double se = std::sqrt(var_under_state(k, rho) / double(shots));
  ctx.write_json("estimate.json", {{"estimate", est},
                                   {"exact", exact},
                                   {"predicted_std_error", se},
                                   {"theorem1_shots", n_thm},
                                   {"var_max_bound", b.observables[0].var_max},
                                   {"max_abs_kernel", b.observables[0].q},
                                   {"kernel_residual", k.residual()}});
  if (c.get<bool>("records", false))
    ctx.write_csv("records.csv", [&](std::ostream& os) { write_records_csv(os, recs); });
  return kExitOk;
}

inline int cmd_bias_scan(Context& ctx) {
  const Config& c = ctx.config;
  c.allow_only({"n", "members", "observable", "shots", "M", "epsilon", "delta", "lambda_grid", "mode", "alphas",
                "threads"});
  int n = bounded_int(c, "n", 2, 1, 4);
  Operator o = parse_observable(c, n);
  auto members = static_cast<std::size_t>(positive<int>(c, "members", 25));
  Rng erng = stream(ctx, kEnsembleStream);
  Ensemble ens = subsample_su2(n, members, erng, {o});
  KernelSystem sys(ens);
  auto shots = static_cast<std::size_t>(positive<int>(c, "shots", 8));
  auto m = static_cast<std::size_t>(positive<int>(c, "M", 1));
  double eps = unit_interval(c, "epsilon", 0.1), delta = unit_interval(c, "delta", 0.1);
  std::string mode = c.get<std::string>("mode", "ridge");
  std::vector<BiasScanResult> rs;
  if (mode == "ridge") {
    rs = ridge_scan(o, sys, parse_lambda_grid(c, sys), shots, m, delta, ctx.threads);
  } else if (mode == "alpha") {
    auto alphas = c.get<std::vector<double>>("alphas", {0.0, 0.01, 0.03, 0.1, 0.3, 0.6, 1.0, 2.0, 5.0, 20.0, 100.0});
    if (alphas.empty()) throw ConfigError("alphas is empty");
    rs = alpha_scan_all(o, sys, alphas, shots, m, delta, {}, ctx.threads);
  } else {
    throw ConfigError("unknown mode '" + mode + "' (ridge, alpha)");
  }
  ctx.params = {{"n", n}, {"members", members}, {"shots", shots}, {"M", m}, {"epsilon", eps}, {"delta", delta},
                {"mode", mode}};
  ctx.write_csv("bias_scan.csv", [&](std::ostream& os) { write_scan_csv(os, rs, m, eps, delta); });
  std::vector<double> err;
  for (const auto& r : rs) err.push_back(r.error_bound);
  json summary = {{"best_param", best_of(rs).param}, {"best_error_bound", best_of(rs).error_bound}};
  if (rs.size() >= 3) {
    auto bowl = bowl_shape(err);
    summary["first_error_bound"] = bowl.first;
    summary["last_error_bound"] = bowl.last;
    summary["interior_minimum"] = bowl.interior;
    summary["margin"] = bowl.margin;
  }
  ctx.write_json("bias_scan.json", summary);
  return kExitOk;
}

inline int cmd_lgt_energy(Context& ctx) {
  const Config& c = ctx.config;
  c.allow_only({"triangles", "s_max", "g", "alpha", "members", "epsilon", "delta", "lambda_grid", "threads"});
  auto tris = c.get<std::vector<int>>("triangles", {2});
  int s_max = positive<int>(c, "s_max", 2);
  if (tris.empty()) throw ConfigError("triangles is empty");
  std::vector<TriLattice> lats;
  for (int t : tris) {
    try {
      lats.emplace_back(t, s_max);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  LgtOptions opt;
  opt.g = positive<double>(c, "g", 1.0);
  opt.alpha = positive<double>(c, "alpha", 1.0);
  opt.epsilon = unit_interval(c, "epsilon", 0.1);
  opt.delta = unit_interval(c, "delta", 0.1);
  opt.threads = ctx.threads;
  if (c.has("lambda_grid")) {
    const json& j = c.raw("lambda_grid");
    if (!j.is_object()) throw ConfigError("lgt-energy lambda_grid must be {count, lo, hi}");
    for (const auto& [k, v] : j.items())
      if (k != "count" && k != "lo" && k != "hi") throw ConfigError("unknown lambda_grid key: " + k);
    opt.lambda_points = static_cast<std::size_t>(j.value("count", 25));
    opt.lambda_lo = j.value("lo", 1e-6);
    opt.lambda_hi = j.value("hi", 1e2);
  }
  auto members = static_cast<std::size_t>(positive<int>(c, "members", 25));
  Rng erng = stream(ctx, kEnsembleStream);
  Ensemble ens = subsample_su2(3, members, erng,
                               {triangle_operator(opt.g), embed(link_operator(opt.g, opt.alpha), {0, 1}, 3)});
  auto rows = energy_budget_comparison(lats, ens, opt);
  bool order = strategy_order_ok(rows);
  bool link = std::all_of(rows.begin(), rows.end(), [](const BudgetRow& r) { return r.link_dominates; });
  ctx.params = {{"triangles", tris},  {"s_max", s_max},         {"g", opt.g},          {"alpha", opt.alpha},
                {"members", members}, {"epsilon", opt.epsilon}, {"delta", opt.delta}};
  ctx.write_csv("lgt_energy.csv", [&](std::ostream& os) { write_budget_csv(os, rows); });
  json detail = json::array();
  for (const auto& r : rows)
    detail.push_back({{"strategy", strategy_name(r.strategy)},
                      {"triangles", r.triangles},
                      {"n_qubits", r.n_qubits},
                      {"M_terms", r.m_terms},
                      {"lambda_rel", r.lambda_rel},
                      {"var_bound_link", r.var_bound_link},
                      {"var_bound_triangle", r.var_bound_triangle},
                      {"q_link", r.q_link},
                      {"q_triangle", r.q_triangle},
                      {"bias_link", r.bias_link},
                      {"bias_triangle", r.bias_triangle},
                      {"N_shots", r.n_shots},
                      {"link_dominates", r.link_dominates}});
  ctx.write_json("lgt_energy.json", {{"rows", detail}, {"ordering_ok", order}, {"link_dominates", link}});
  return kExitOk;
}

inline int cmd_phase_classify(Context& ctx) {
  const Config& c = ctx.config;
  c.allow_only({"L", "counts", "depth", "n_rp", "n_su2", "lambda", "threads"});
  PhaseOptions opt;
  opt.L = bounded_int(c, "L", 2, 2, 2);
  opt.states_per_phase = positive<int>(c, "counts", 10);
  opt.shadow_shots = static_cast<std::size_t>(positive<int>(c, "n_rp", 10000));
  opt.su2_shots = static_cast<std::size_t>(positive<int>(c, "n_su2", 1000));
  if (c.has("lambda")) opt.lambda = positive<double>(c, "lambda", 1.0);
  opt.threads = ctx.threads;
  std::vector<int> depths;
  if (c.has("depth") && c.raw("depth").is_array())
    depths = c.get<std::vector<int>>("depth", {});
  else
    depths = {c.get<int>("depth", 1)};
  if (depths.empty()) throw ConfigError("depth list is empty");
  for (int d : depths)
    if (d < 0 || d > 8) throw ConfigError("depth must lie in [0, 8]");
  ctx.params = {{"L", opt.L},
                {"counts", opt.states_per_phase},
                {"depth", depths},
                {"n_rp", opt.shadow_shots},
                {"n_su2", opt.su2_shots}};
  json states = json::array(), per_depth = json::array();
  for (std::size_t i = 0; i < depths.size(); ++i) {
    opt.depth = depths[i];
    // one stream family per depth so adding depths leaves earlier ones intact
    auto res = classify_phases(opt, Rng::stream(ctx.seed, 100 + static_cast<std::uint64_t>(depths[i])).next());
    for (Eigen::Index s = 0; s < res.coordinates.size(); ++s)
      states.push_back({{"phase_label", phase_name(res.labels[static_cast<std::size_t>(s)])},
                        {"depth", depths[i]},
                        {"coordinate", res.coordinates[s]}});
    per_depth.push_back({{"depth", depths[i]},
                         {"lambda", res.kernel.lambda},
                         {"margin", res.margin},
                         {"separable", res.separable()}});
    ctx.write_csv("kernel_d" + std::to_string(depths[i]) + ".csv", [&](std::ostream& os) {
      Eigen::Index m = res.kernel.k.rows();
      for (Eigen::Index a = 0; a < m; ++a) {
        char buf[40];
        for (Eigen::Index b = 0; b < m; ++b) {
          std::snprintf(buf, sizeof buf, "%.17g", res.kernel.k(a, b));
          os << (b ? "," : "") << buf;
        }
        os << '\n';
      }
    });
  }
  ctx.write_json("phase_classify.json", {{"states", states}, {"depths", per_depth}});
  return kExitOk;
}

inline const std::map<std::string, int (*)(Context&)>& commands() {
  static const std::map<std::string, int (*)(Context&)> m = {
      {"channel-check", cmd_channel_check}, {"basis-audit", cmd_basis_audit}, {"estimate", cmd_estimate},
      {"bias-scan", cmd_bias_scan},         {"lgt-energy", cmd_lgt_energy},   {"phase-classify", cmd_phase_classify}};
  return m;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(std::vector<std::string> args, std::ostream& err = std::cerr) {
  CLI::App app{"rmkit: randomized measurements under restricted control"};
  std::string sub, config_path, out = ".";
  std::uint64_t seed = 1;
  int threads = 0;
  std::vector<std::string> names;
  for (const auto& [k, v] : commands()) names.push_back(k);
  app.add_option("subcommand", sub, "one of: channel-check, basis-audit, estimate, bias-scan, lgt-energy, "
                                    "phase-classify")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "flat JSON config");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads (overrides the config key)")->check(CLI::NonNegativeNumber);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    err << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "rmkit: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    Context ctx;
    ctx.subcommand = sub;
    ctx.config = Config::load(config_path);
    ctx.seed = seed;
    ctx.out = out;
    ctx.threads = threads > 0 ? threads : bounded_int(ctx.config, "threads", 1, 1, 256);
    std::filesystem::create_directories(ctx.out);
    return commands().at(sub)(ctx);
  } catch (const ConfigError& e) {
    err << "rmkit: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "rmkit: invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "rmkit: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "rmkit: " << e.what() << '\n';
    return kExitConfig;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args));
}

}  // namespace rmkit::cli

#endif  // RMKIT_TOOLS_CLI_HPP_
