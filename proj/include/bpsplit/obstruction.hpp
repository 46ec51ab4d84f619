#pragma once

// Exterior/polynomial E_2 comparison and the enumeration of potential obstructions to lifting θ_k.
//
// Odd classes of Ext_{E(2)}^{s,t}(C̄_k, Σ^{qm}C̄_m) are compared with the u = 1 line
// Ext_P^{1,(s-1,t)}(A_k, B_m), where A_k = Ext_{E(2)}(F_p, C̄_k) and B_m = Ext_{E(2)}(F_p, Σ^{qm}C̄_m).

#include <map>
#include <optional>
#include <set>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpsplit/ext.hpp"
#include "bpsplit/parallel.hpp"
#include "bpsplit/poly.hpp"

namespace bpsplit {

struct PropisoRow {
  int64_t t;
  size_t odd_exterior;  // Σ_s dim Ext_E^{s,t}, t - s odd
  size_t u1_line;       // Σ_r dim Ext_P^{1,(r,t)}
};

struct PropisoReport {
  int64_t k, m;
  int s_max;
  std::vector<PropisoRow> rows;           // nonzero t only
  std::vector<int64_t> mismatched_t;      // per-t falsifiers
  std::vector<Bidegree> mismatched_cells; // (s,t) with odd dim != u1 dim at (s-1,t)
  std::map<Bidegree, size_t> odd_cells;   // exterior odd classes by (s,t)
  std::map<Bidegree, size_t> u1_cells;    // u = 1 classes by (r+1, t)
  bool certified = true;                  // P-resolution judged complete

  bool ok() const { return mismatched_t.empty() && certified; }
  bool cells_ok() const { return mismatched_cells.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["m"] = m;
    j["s_max"] = s_max;
    j["certified"] = certified;
    j["ok"] = ok();
    j["cells_ok"] = cells_ok();
    nlohmann::json rs = nlohmann::json::array();
    for (auto& r : rows) rs.push_back({{"t", r.t}, {"odd_exterior", r.odd_exterior}, {"u1_line", r.u1_line}});
    j["rows"] = rs;
    j["mismatched_t"] = mismatched_t;
    return j;
  }
};

// Cached per-k data shared across comparisons: exterior resolution of C̄_k and P-resolution of A_k.
class ComparisonSource {
 public:
  ComparisonSource(const PrimeContext& ctx, int64_t k, int s_max, int poly_s_max = -1)
      : ctx_(ctx), k_(k), s_max_(s_max) {
    C_ = std::make_shared<const QModule>(weight_restricted_C(ctx, k));
    R_ = std::make_unique<FreeResolution>(resolve_exterior(C_, s_max + 1));
    A_ = std::make_shared<const ExtFpModule>(C_);
    P_ = std::make_unique<PolyResolution>(resolve_poly(A_, 2, poly_s_max < 0 ? s_max + 4 : poly_s_max));
  }
  const PrimeContext& ctx() const { return ctx_; }
  int64_t k() const { return k_; }
  int s_max() const { return s_max_; }
  const QModule& module() const { return *C_; }
  const FreeResolution& exterior() const { return *R_; }
  const PolyResolution& polynomial() const { return *P_; }

 private:
  PrimeContext ctx_;
  int64_t k_;
  int s_max_;
  std::shared_ptr<const QModule> C_;
  std::unique_ptr<FreeResolution> R_;
  std::shared_ptr<const ExtFpModule> A_;
  std::unique_ptr<PolyResolution> P_;
};

namespace detail {

// t-window of Ext^{s,*}(M, N) for s <= s_max, from generator degrees of the resolution.
inline std::pair<int64_t, int64_t> hom_window(const FreeResolution& R, const QModule& N, int s_max) {
  int64_t lo = INT64_MAX / 4, hi = INT64_MIN / 4;
  for (int s = 0; s <= s_max; ++s)
    for (int64_t d : R.generator_degrees[s]) {
      lo = std::min(lo, *N.min_degree() - d);
      hi = std::max(hi, *N.max_degree() - d);
    }
  return {lo, hi};
}

}  // namespace detail

// Ext_{E(2)}(C̄_k, target) for a finite target, all t, s <= s_max.
inline BigradedDims exterior_ext(const ComparisonSource& src, std::shared_ptr<const QModule> target) {
  auto [lo, hi] = detail::hom_window(src.exterior(), *target, src.s_max());
  if (lo > hi) lo = hi = 0;
  return ext_general(src.exterior(), std::move(target), src.s_max(), lo, hi);
}

namespace detail {

inline std::shared_ptr<const QModule> cbar_block(const PrimeContext& ctx, int64_t m) {
  return std::make_shared<const QModule>(shift_degrees(weight_restricted_C(ctx, m), ctx.q() * m));
}

inline PropisoReport propiso_from(const ComparisonSource& src, int64_t m, std::shared_ptr<const QModule> N,
                                  const BigradedDims& ext_e) {
  const int s_max = src.s_max();
  PropisoReport rep{src.k(), m, s_max, {}, {}, {}, {}, {}, true};
  for (auto& [c, n] : ext_e.dims)
    if (((c.second - c.first) % 2 + 2) % 2 == 1) rep.odd_cells[c] = n;

  auto B = std::make_shared<const ExtFpModule>(N);
  const PolyResolution& P = src.polynomial();
  int r_lo = -std::max(0, P.last_generator_s());
  PolyExt ext_p = ext_over_P2(P, B, 1, r_lo, s_max - 1);
  rep.certified = ext_p.certified;
  for (auto& [key, n] : ext_p.dims)
    if (std::get<0>(key) == 1) rep.u1_cells[{std::get<1>(key) + 1, std::get<2>(key)}] = n;

  std::map<int64_t, std::pair<size_t, size_t>> per_t;
  for (auto& [c, n] : rep.odd_cells) per_t[c.second].first += n;
  for (auto& [c, n] : rep.u1_cells) per_t[c.second].second += n;
  for (auto& [t, v] : per_t) {
    rep.rows.push_back({t, v.first, v.second});
    if (v.first != v.second) rep.mismatched_t.push_back(t);
  }
  std::set<Bidegree> cells;
  for (auto& [c, n] : rep.odd_cells) cells.insert(c);
  for (auto& [c, n] : rep.u1_cells) cells.insert(c);
  for (auto& c : cells) {
    size_t a = rep.odd_cells.count(c) ? rep.odd_cells.at(c) : 0;
    size_t b = rep.u1_cells.count(c) ? rep.u1_cells.at(c) : 0;
    if (a != b) rep.mismatched_cells.push_back(c);
  }
  return rep;
}

}  // namespace detail

inline PropisoReport propiso_check(const ComparisonSource& src, int64_t m) {
  auto N = detail::cbar_block(src.ctx(), m);
  return detail::propiso_from(src, m, N, exterior_ext(src, N));
}

inline PropisoReport propiso_check(const PrimeContext& ctx, int64_t k, int64_t m, int s_max) {
  ComparisonSource src(ctx, k, s_max);
  return propiso_check(src, m);
}

struct ObstructionClass {
  int64_t m;  // weight block of the target
  int s;
  int64_t t;  // internal degree relative to the source Σ^{qk}B_1(k)
  size_t dim;
  bool in_cbar_summand;
  bool matched;
};

struct ObstructionReport {
  int64_t k;
  int64_t m_max;
  int s_max;
  std::vector<ObstructionClass> classes;
  bool certified = true;

  size_t total() const {
    size_t n = 0;
    for (auto& c : classes) n += c.dim;
    return n;
  }
  bool all_matched() const {
    for (auto& c : classes)
      if (!c.matched || !c.in_cbar_summand) return false;
    return certified;
  }
  std::string verdict() const {
    return all_matched() ? "theta_" + std::to_string(k) + " survives at E_2-comparison level"
                         : "theta_" + std::to_string(k) + ": unmatched potential obstructions in range";
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["m_max"] = m_max;
    j["s_max"] = s_max;
    j["certified"] = certified;
    j["total"] = total();
    j["verdict"] = verdict();
    nlohmann::json cs = nlohmann::json::array();
    for (auto& c : classes)
      cs.push_back({{"m", c.m}, {"s", c.s}, {"t", c.t}, {"dim", c.dim}, {"in_cbar_summand", c.in_cbar_summand},
                    {"matched", c.matched}});
    j["classes"] = cs;
    return j;
  }
};

// Classes of Ext_{E(2)}^{s,t}(Σ^{qk}B_1(k), Σ^{qm}B_1(m)) with s >= 2 and t - s odd, for m <= m_max.
// Ext^{s,t}(Σ^{qk}X, Y) = Ext^{s,t+qk}(X, Y), so t is reported relative to the suspended source.
inline ObstructionReport obstruction_report(const ComparisonSource& src, int64_t m_max, unsigned jobs = 1) {
  const PrimeContext& ctx = src.ctx();
  const int64_t qk = ctx.q() * src.k();
  ObstructionReport rep{src.k(), m_max, src.s_max(), {}, true};
  auto B = std::make_shared<const QModule>(brown_gitler(ctx, 1, src.k()));
  // Below the first length-3 monomial B_1(k) is C̄_k and the two Ext computations coincide.
  const bool same_source = B->total_dim() == src.module().total_dim();
  std::optional<FreeResolution> RB;
  if (!same_source) RB = resolve_exterior(B, src.s_max() + 1);
  struct Block {
    std::vector<ObstructionClass> classes;
    bool certified = true;
  };
  auto blocks = parallel_map(static_cast<size_t>(m_max + 1), jobs, [&](size_t mi) {
    const int64_t m = static_cast<int64_t>(mi);
    Block out;
    auto Cm = detail::cbar_block(ctx, m);
    BigradedDims cbar = exterior_ext(src, Cm);
    BigradedDims whole = cbar;
    if (!same_source) {
      auto Bm = std::make_shared<const QModule>(shift_degrees(brown_gitler(ctx, 1, m), ctx.q() * m));
      auto [lo, hi] = detail::hom_window(*RB, *Bm, src.s_max());
      whole = ext_general(*RB, Bm, src.s_max(), std::min(lo, hi), hi);
    }
    std::vector<std::pair<Bidegree, size_t>> odd;
    for (auto& [c, n] : whole.dims)
      if (c.first >= 2 && ((c.second - c.first) % 2 + 2) % 2 == 1) odd.push_back({c, n});
    if (odd.empty()) return out;
    PropisoReport pi = detail::propiso_from(src, m, Cm, cbar);
    out.certified = pi.certified;
    for (auto& [c, n] : odd) {
      size_t u1 = pi.u1_cells.count(c) ? pi.u1_cells.at(c) : 0;
      out.classes.push_back({m, c.first, c.second - qk, n, cbar.at(c.first, c.second) == n, u1 == n});
    }
    return out;
  });
  for (auto& b : blocks) {
    rep.certified = rep.certified && b.certified;
    for (auto& c : b.classes) rep.classes.push_back(c);
  }
  return rep;
}

inline ObstructionReport obstruction_report(const PrimeContext& ctx, int64_t k, int64_t m_max, int s_max,
                                            unsigned jobs = 1) {
  ComparisonSource src(ctx, k, s_max);
  return obstruction_report(src, m_max, jobs);
}

}  // namespace bpsplit
