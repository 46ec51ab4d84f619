#pragma once

// Brown-Gitler modules B_i(k), weight blocks M_i(j), the maps theta_k, the splitting of
// A//E(n)_* into suspended Brown-Gitler blocks, free-part splittings, and the W-families.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bpsplit/fp_linalg.hpp"
#include "bpsplit/monomials.hpp"
#include "bpsplit/qmodule.hpp"

namespace bpsplit {

// Q_0..Q_n, capped at the three operators carried by QModule.
inline QMask mask_up_to(int n) {
  QMask m = 0;
  for (int i = 0; i <= std::min(n, kNumQ - 1); ++i) m |= static_cast<QMask>(1u << i);
  return m;
}

// Sum of the degree drops of the operators in mask.
inline int64_t total_drop(const PrimeContext& ctx, QMask mask) {
  int64_t s = 0;
  for (int i : mask_indices(mask)) s += ctx.q_drop(i);
  return s;
}

// A//E(n)_* through max_degree, with the full E(2)-action.
inline QModule bp_homology(const PrimeContext& ctx, int n, int64_t max_degree) {
  AlgebraSpec spec(n);
  return module_from_monomials(ctx, spec, enumerate_by_degree(ctx, spec, max_degree), kFullMask, max_degree);
}

// B_i(k): monomials of A//E(i)_* of weight <= k, over Q_0..Q_{i+1}.
inline QModule brown_gitler(const PrimeContext& ctx, int i, int64_t k) {
  AlgebraSpec spec(i);
  return module_from_monomials(ctx, spec, enumerate_by_max_weight(ctx, spec, k), mask_up_to(i + 1));
}

// M_i(j): monomials of A//E(i)_* of weight exactly j, over Q_0..Q_i.
inline QModule weight_block(const PrimeContext& ctx, int i, int64_t j) {
  AlgebraSpec spec(i);
  return module_from_monomials(ctx, spec, enumerate_by_weight(ctx, spec, j), i < 0 ? QMask{0} : mask_up_to(i));
}

// theta_k on a monomial x of weight <= k: xi_1^{k - wt(x)} times x with every index raised by one.
inline Monomial theta_monomial(const PrimeContext& ctx, int64_t k, const Monomial& x) {
  int64_t pad = k - weight(ctx, x);
  if (pad < 0) throw ConsistencyError("theta: weight of " + to_string(x) + " exceeds k");
  Monomial y;
  for (size_t a = 0; a < x.xi.size(); ++a) y.set_xi(static_cast<int>(a) + 2, x.xi[a]);
  y.set_xi(1, static_cast<uint32_t>(pad));
  y.tau = x.tau << 1;
  // Padding exponent k - wt(x) is forced: it is the only one giving degree qk + |x| and weight pk.
  if (degree(ctx, y) != ctx.q() * k + degree(ctx, x) || weight(ctx, y) != static_cast<int64_t>(ctx.p()) * k)
    throw ConsistencyError("theta padding exponent inconsistent for " + to_string(x));
  return y;
}

struct ThetaResult {
  QModuleMap map;
  CheckReport checks;
};

// theta_k : Sigma^{qk} B_i(k) -> M_{i+1}(pk), with bijectivity, weight and Q-commutation checks.
inline ThetaResult theta(const PrimeContext& ctx, int i, int64_t k) {
  auto src = std::make_shared<const QModule>(suspend(brown_gitler(ctx, i, k), ctx.q() * k));
  auto tgt = std::make_shared<const QModule>(weight_block(ctx, i + 1, static_cast<int64_t>(ctx.p()) * k));
  QModuleMap f(src, tgt, 0);
  CheckReport rep;
  for (int64_t d : src->degrees()) {
    FpMatrix m(ctx.p(), tgt->dim(d), src->dim(d));
    for (size_t c = 0; c < src->dim(d); ++c) {
      Monomial y = theta_monomial(ctx, k, *src->labels(d)[c].monomial);
      auto e = find_monomial(*tgt, y);
      if (!e || e->degree != d) {
        rep.fail("image " + to_string(y) + " missing from the weight block at degree " + std::to_string(d));
        continue;
      }
      for (size_t r = 0; r < e->v.size(); ++r)
        if (e->v[r]) m.set(r, c, 1);
    }
    f.set_matrix(d, std::move(m));
  }
  if (!is_isomorphism(f)) rep.fail("theta_" + std::to_string(k) + " is not bijective");
  auto comm = verify_map(f);
  for (auto& s : comm.failures) rep.fail(s);
  return {std::move(f), std::move(rep)};
}

struct DegreeDims {
  int64_t t;
  size_t lhs;
  size_t rhs;
};

struct SplittingReport {
  int n;
  int64_t max_degree;
  std::vector<DegreeDims> per_degree;  // lhs = dim A//E(n)_t, rhs = dim of the block sum at t
  CheckReport checks;
  std::optional<int64_t> first_failing_degree;
};

// A//E(n)_* ≅ ⊕_k Sigma^{qk} B_{n-1}(k) through max_degree, via the blockwise theta_k.
// `target` replaces the computed H_*BP<n> (used to feed in a deliberately corrupted module).
inline SplittingReport assemble_bp_splitting(const PrimeContext& ctx, int n, int64_t max_degree,
                                             std::shared_ptr<const QModule> target = nullptr) {
  if (n < 1 || n > 2) throw ConfigError("assemble_bp_splitting: n must be 1 or 2");
  auto H = target ? std::move(target) : std::make_shared<const QModule>(bp_homology(ctx, n, max_degree));
  std::vector<QModule> blocks;
  std::vector<int64_t> ks;
  for (int64_t k = 0; ctx.q() * k <= max_degree; ++k) {
    blocks.push_back(truncate(suspend(brown_gitler(ctx, n - 1, k), ctx.q() * k), max_degree));
    ks.push_back(k);
  }
  // Both sides restricted to the operators the blocks carry.
  QMask mask = blocks.front().mask();
  auto src = std::make_shared<const QModule>(direct_sum(blocks));
  auto tgt = std::make_shared<const QModule>(restrict_mask(*H, mask));
  QModuleMap f(src, tgt, 0);
  SplittingReport rep{n, max_degree, {}, {}, std::nullopt};
  for (int64_t d = 0; d <= max_degree; ++d) {
    if (src->dim(d) == 0 && tgt->dim(d) == 0) continue;
    rep.per_degree.push_back({d, tgt->dim(d), src->dim(d)});
    if (src->dim(d) != tgt->dim(d) && !rep.first_failing_degree) {
      rep.first_failing_degree = d;
      rep.checks.fail("dimension mismatch at degree " + std::to_string(d));
    }
    FpMatrix m(ctx.p(), tgt->dim(d), src->dim(d));
    size_t c = 0;
    for (size_t b = 0; b < blocks.size(); ++b)
      for (const auto& l : blocks[b].labels(d)) {
        auto e = find_monomial(*tgt, theta_monomial(ctx, ks[b], *l.monomial));
        if (!e || e->degree != d) {
          rep.checks.fail("theta image of " + l.text + " not found");
          if (!rep.first_failing_degree) rep.first_failing_degree = d;
        } else {
          for (size_t r = 0; r < e->v.size(); ++r)
            if (e->v[r]) m.set(r, c, 1);
        }
        ++c;
      }
    f.set_matrix(d, std::move(m));
  }
  if (!is_isomorphism(f)) rep.checks.fail("assembled map is not bijective");
  for (auto& s : verify_map(f).failures) rep.checks.fail(s);
  return rep;
}

struct SplitPair {
  std::shared_ptr<const QModule> whole;
  std::shared_ptr<const QModule> free_part;
  std::shared_ptr<const QModule> reduced_part;
  QModuleMap inclusion;
  QModuleMap projection;
  QModuleMap retraction;
  std::vector<Element> free_generators;
  int64_t certified_max_degree;
};

namespace detail {

// Sign s with Q^{complement(I)} Q^I = s Q^{all} inside the exterior algebra on `mask`.
inline int complement_sign(QMask mask, unsigned I) {
  unsigned C = mask & ~I;
  int inv = 0;
  for (int a = 0; a < kNumQ; ++a)
    if (C & (1u << a))
      for (int b = 0; b < a; ++b)
        if (I & (1u << b)) ++inv;
  return inv % 2 ? -1 : 1;
}

}  // namespace detail

// Minimal generators of the Q-closed spans: each degree modulo the Q-images from above.
inline std::vector<Element> minimal_generators(const QModule& M, const DegreeSpans& spans) {
  std::vector<Element> gens;
  for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
    int64_t d = it->first;
    Subspace dec(M.p(), M.dim(d));
    for (int i : mask_indices(M.mask())) {
      auto sit = spans.find(d + M.drop(i));
      if (sit == spans.end()) continue;
      for (const auto& v : sit->second.basis()) dec.insert(M.apply(i, d + M.drop(i), v));
    }
    Subquotient sq(it->second, dec);
    for (const auto& r : sq.representatives()) gens.push_back({d, r});
  }
  std::reverse(gens.begin(), gens.end());
  return gens;
}

// Splits the submodule generated by `generators` off `whole_ext` as a free summand, then truncates.
// whole_ext must be exact well above max_degree: generators of the free part are taken through
// max_degree + T (T = sum of drops) and their closure is exact through max_degree.
inline SplitPair split_off_free(std::shared_ptr<const QModule> whole_ext, const std::vector<Element>& generators,
                                int64_t max_degree) {
  const QModule& W = *whole_ext;
  const uint32_t p = W.p();
  const QMask mask = W.mask();
  const int64_t T = total_drop(W.ctx(), mask);
  const int64_t cut = max_degree + T;
  if (W.top() && *W.top() < max_degree + 3 * T)
    throw CertificationError("split_off_free: ambient module must be exact through max_degree + 3T");

  DegreeSpans closure = q_closure(W, generators);
  std::vector<Element> gens;
  for (auto& g : minimal_generators(W, closure))
    if (g.degree <= cut) gens.push_back(std::move(g));
  DegreeSpans spans = q_closure(W, gens);

  // Freeness: dimension of the closure equals the rank of the free module on gens.
  std::map<int64_t, size_t> expected;
  const unsigned full = mask;
  for (auto& g : gens)
    for (unsigned I = 0; I < 8; ++I)
      if ((I & full) == I) expected[g.degree - subset_drop(W, I)] += 1;
  for (auto& [d, n] : expected) {
    auto it = spans.find(d);
    size_t have = it == spans.end() ? 0 : it->second.dim();
    if (have != n)
      throw SplittingError("retraction system unsolvable: generated submodule is not free at degree " +
                           std::to_string(d));
  }

  // Dual functionals on the socle elements Q^{all} g, grouped by socle degree.
  const int64_t sdrop = subset_drop(W, full);
  std::map<int64_t, std::vector<size_t>> by_socle;
  for (size_t g = 0; g < gens.size(); ++g) by_socle[gens[g].degree - sdrop].push_back(g);
  std::vector<FpVector> phi(gens.size());
  for (auto& [sd, idx] : by_socle) {
    std::vector<FpVector> socle;
    for (size_t g : idx) socle.push_back(monomial_action(W, full, gens[g].degree).apply(gens[g].v));
    FpMatrix li = left_inverse(p, W.dim(sd), socle);
    for (size_t r = 0; r < idx.size(); ++r) phi[idx[r]] = li.row(r);
  }

  auto whole = std::make_shared<const QModule>(truncate(W, max_degree));
  DegreeSpans kept;
  for (auto& [d, S] : spans)
    if (d <= max_degree) kept.emplace(d, S);
  SubmoduleResult sub = submodule_from_spans(whole, kept);
  QuotientResult quo = quotient_by_spans(whole, kept);

  // r(x) = sum over g, I of s_I phi_g(Q^{complement I} x) Q^I g.
  QModuleMap r(whole, sub.module, 0);
  for (int64_t d : whole->degrees()) {
    auto sit = kept.find(d);
    if (sit == kept.end()) continue;
    FpMatrix amb(p, W.dim(d), W.dim(d));
    for (size_t g = 0; g < gens.size(); ++g)
      for (unsigned I = 0; I < 8; ++I) {
        if ((I & full) != I || gens[g].degree - subset_drop(W, I) != d) continue;
        FpVector u = monomial_action(W, I, gens[g].degree).apply(gens[g].v);
        unsigned C = full & ~I;
        FpMatrix qc = monomial_action(W, C, d);
        FpVector row(W.dim(d), 0);
        for (size_t c = 0; c < W.dim(d); ++c) {
          uint32_t acc = 0;
          for (size_t k = 0; k < qc.rows(); ++k) acc = fp::add(acc, fp::mul(phi[g][k], qc.at(k, c), p), p);
          row[c] = acc;
        }
        uint32_t s = detail::complement_sign(mask, I) > 0 ? 1 : p - 1;
        for (size_t a = 0; a < u.size(); ++a)
          if (u[a])
            for (size_t c = 0; c < row.size(); ++c)
              if (row[c]) amb.add_to(a, c, fp::mul(s, fp::mul(u[a], row[c], p), p));
      }
    FpMatrix m(p, sit->second.dim(), W.dim(d));
    for (size_t c = 0; c < W.dim(d); ++c) {
      FpVector col = amb.column(c);
      if (!sit->second.contains(col)) throw ConsistencyError("retraction leaves the free part");
      FpVector co = sit->second.coordinates(col);
      for (size_t k = 0; k < co.size(); ++k) m.set(k, c, co[k]);
    }
    r.set_matrix(d, std::move(m));
  }
  std::vector<Element> kept_gens;
  for (auto& g : gens)
    if (g.degree <= max_degree) kept_gens.push_back(g);
  return {whole,
          sub.module,
          quo.module,
          std::move(sub.inclusion),
          std::move(quo.projection),
          std::move(r),
          std::move(kept_gens),
          max_degree};
}

// Checks on a SplitPair: maps commute, r∘i = id, and dimensions add.
inline CheckReport verify_split(const SplitPair& s) {
  CheckReport rep;
  for (auto* f : {&s.inclusion, &s.projection, &s.retraction})
    for (auto& msg : verify_map(*f).failures) rep.fail(msg);
  QModuleMap ri = s.retraction.after(s.inclusion);
  for (int64_t d : s.free_part->degrees())
    if (!(ri.matrix(d) == FpMatrix::identity(s.whole->p(), s.free_part->dim(d))))
      rep.fail("retraction is not the identity on the free part at degree " + std::to_string(d));
  for (int64_t d : s.whole->degrees())
    if (s.whole->dim(d) != s.free_part->dim(d) + s.reduced_part->dim(d))
      rep.fail("dimensions do not add at degree " + std::to_string(d));
  return rep;
}

inline std::vector<Element> monomials_with_length(const QModule& M, int min_len, int max_len) {
  std::vector<Element> out;
  for (int64_t d : M.degrees())
    for (size_t k = 0; k < M.dim(d); ++k) {
      const auto& l = M.labels(d)[k];
      if (!l.monomial) continue;
      int len = length(*l.monomial);
      if (len >= min_len && len <= max_len) out.push_back(basis_element(M, d, k));
    }
  return out;
}

// H_*BP<2> = C ⊕ V with V generated by the monomials of length >= min_length (3 by default).
inline SplitPair length_splitting(const PrimeContext& ctx, int64_t max_degree, int min_length = 3) {
  const int64_t T = total_drop(ctx, kFullMask);
  auto H = std::make_shared<const QModule>(bp_homology(ctx, 2, max_degree + 3 * T));
  return split_off_free(H, monomials_with_length(*H, min_length, 64), max_degree);
}

// C_k: B_1(k) modulo the submodule generated by its monomials of length >= 3.
inline QModule weight_restricted_C(const PrimeContext& ctx, int64_t k) {
  auto B = std::make_shared<const QModule>(brown_gitler(ctx, 1, k));
  return *quotient(B, monomials_with_length(*B, 3, 64)).module;
}

struct Permutation3 {
  int i, j, h;
};

inline void check_permutation(const Permutation3& ph) {
  int seen = 0;
  for (int x : {ph.i, ph.j, ph.h}) {
    if (x < 0 || x > 2) throw ConfigError("permutation entries must be 0, 1, 2");
    seen |= 1 << x;
  }
  if (seen != 7) throw ConfigError("(i,j,h) must be a permutation of (0,1,2)");
}

struct SiRiResult {
  SplitPair split;  // free_part = S_i, reduced_part = R_i over E(Q_j, Q_h)
  CheckReport checks;
};

// Inside C (as an E(Q_j,Q_h)-module): S_i generated by the length-2 monomials, R_i the quotient.
inline SiRiResult si_ri_splitting(const PrimeContext& ctx, Permutation3 ph, int64_t max_degree) {
  check_permutation(ph);
  const QMask pair = mask_of({ph.j, ph.h});
  const int64_t Tp = total_drop(ctx, pair);
  SplitPair lc = length_splitting(ctx, max_degree + 3 * Tp);
  auto C = std::make_shared<const QModule>(restrict_mask(*lc.reduced_part, pair));
  std::vector<Element> gens;
  for (auto& e : monomials_with_length(*lc.whole, 2, 2)) {
    FpVector v = lc.projection.apply(e.degree, e.v);
    if (!fp::is_zero(v)) gens.push_back({e.degree, std::move(v)});
  }
  SiRiResult res{split_off_free(C, gens, max_degree), {}};
  res.checks = verify_split(res.split);
  const QModule& R = *res.split.reduced_part;
  for (int64_t d : R.degrees()) {
    FpMatrix a = R.action(ph.h, d - R.drop(ph.j)) * R.action(ph.j, d);
    if (!a.is_zero()) res.checks.fail("Q" + std::to_string(ph.j) + "Q" + std::to_string(ph.h) +
                                      " is nonzero on R at degree " + std::to_string(d));
  }
  return res;
}

enum class WFamily { W1, We, Wo };

inline std::string to_string(WFamily w) {
  switch (w) {
    case WFamily::W1: return "W1";
    case WFamily::We: return "We";
    case WFamily::Wo: return "Wo";
  }
  return "?";
}

inline QMask w_mask(WFamily w) { return w == WFamily::W1 ? mask_of({1, 2}) : mask_of({0, 2}); }

inline bool in_w_family(const PrimeContext& ctx, WFamily w, const Monomial& m) {
  const uint32_t p = ctx.p(), p2 = p * p;
  switch (w) {
    case WFamily::W1:
      // E(tau_3, tau_4, ...) ⊗ F_p[xi_1^{p^2}] ⊗ F_p[xi_2^p, xi_3^p, ...]
      for (int b : m.tau_indices())
        if (b < 3) return false;
      if (m.xi_exp(1) % p2) return false;
      for (size_t a = 2; a <= m.xi.size(); ++a)
        if (m.xi_exp(static_cast<int>(a)) % p) return false;
      return true;
    case WFamily::Wo:
      // E(tau_3, tau_5, ...) ⊗ F_p[xi_1^{p^2}] ⊗ F_p[xi_3, xi_5, ...]
      for (int b : m.tau_indices())
        if (b < 3 || b % 2 == 0) return false;
      if (m.xi_exp(1) % p2) return false;
      for (size_t a = 2; a <= m.xi.size(); ++a)
        if (a % 2 == 0 && m.xi_exp(static_cast<int>(a))) return false;
      return true;
    case WFamily::We:
      // E(tau_4, tau_6, ...) ⊗ F_p[xi_2^{p^2}] ⊗ F_p[xi_4, xi_6, ...]
      for (int b : m.tau_indices())
        if (b < 4 || b % 2 == 1) return false;
      if (m.xi_exp(1)) return false;
      if (m.xi_exp(2) % p2) return false;
      for (size_t a = 3; a <= m.xi.size(); ++a)
        if (a % 2 == 1 && m.xi_exp(static_cast<int>(a))) return false;
      return true;
  }
  return false;
}

// Weight p^3 n (W1, Wo) or p^4 n (We) component, over the family's operator pair.
inline QModule w_family(const PrimeContext& ctx, WFamily w, int64_t n) {
  int64_t wt = (w == WFamily::We ? ctx.pow(4) : ctx.pow(3)) * n;
  AlgebraSpec spec(2);
  std::vector<Monomial> ms;
  for (auto& m : enumerate_by_weight(ctx, spec, wt))
    if (in_w_family(ctx, w, m)) ms.push_back(m);
  return module_from_monomials(ctx, spec, ms, w_mask(w));
}

enum class Factorization { E12, E02 };

// Factors of a monomial: W1 ⊗ T2(xi1) ⊗ T1(xi2, ...) or We ⊗ Wo ⊗ T2(xi1, xi2).
inline std::vector<Monomial> factor_monomial(const PrimeContext& ctx, Factorization f, const Monomial& m) {
  const uint32_t p = ctx.p(), p2 = p * p;
  if (f == Factorization::E12) {
    Monomial w, t;
    w.tau = m.tau;
    for (size_t a = 1; a <= m.xi.size(); ++a) {
      uint32_t e = m.xi_exp(static_cast<int>(a)), mod = a == 1 ? p2 : p;
      w.set_xi(static_cast<int>(a), e - e % mod);
      t.set_xi(static_cast<int>(a), e % mod);
    }
    return {w, t};
  }
  Monomial we, wo, t;
  for (int b : m.tau_indices()) (b % 2 == 0 ? we : wo).tau |= uint64_t{1} << b;
  for (size_t a = 1; a <= m.xi.size(); ++a) {
    int ai = static_cast<int>(a);
    uint32_t e = m.xi_exp(ai);
    if (a == 1) {
      wo.set_xi(1, e - e % p2);
      t.set_xi(1, e % p2);
    } else if (a == 2) {
      we.set_xi(2, e - e % p2);
      t.set_xi(2, e % p2);
    } else {
      (a % 2 == 0 ? we : wo).set_xi(ai, e);
    }
  }
  return {we, wo, t};
}

inline bool in_t_part(const PrimeContext& ctx, Factorization f, const Monomial& t) {
  const uint32_t p = ctx.p(), p2 = p * p;
  if (t.tau) return false;
  for (size_t a = 1; a <= t.xi.size(); ++a) {
    uint32_t e = t.xi_exp(static_cast<int>(a));
    uint32_t bound = f == Factorization::E12 ? (a == 1 ? p2 : p) : (a <= 2 ? p2 : 1);
    if (e >= bound) return false;
  }
  return true;
}

struct FactorizationReport {
  Factorization which;
  int64_t max_degree;
  std::vector<std::pair<int64_t, size_t>> per_degree;  // (t, number of monomials)
  CheckReport checks;
};

namespace detail {

// Ordered product of factors with the exterior reordering sign.
inline std::optional<std::pair<Monomial, int>> product(const std::vector<Monomial>& fs) {
  Monomial acc;
  int sign = 1;
  for (auto& f : fs) {
    auto r = multiply(acc, f);
    if (!r) return std::nullopt;
    acc = r->first;
    sign *= r->second;
  }
  return std::make_pair(acc, sign);
}

}  // namespace detail

// Checks that factorization is a degree-preserving, Q-equivariant bijection through max_degree.
inline FactorizationReport verify_tensor_factorization(const PrimeContext& ctx, Factorization which,
                                                       int64_t max_degree) {
  FactorizationReport rep{which, max_degree, {}, {}};
  AlgebraSpec spec(2);
  const uint32_t p = ctx.p();
  auto all = enumerate_by_degree(ctx, spec, max_degree);
  std::vector<WFamily> fams =
      which == Factorization::E12 ? std::vector<WFamily>{WFamily::W1} : std::vector<WFamily>{WFamily::We, WFamily::Wo};
  QMask qmask = which == Factorization::E12 ? mask_of({1, 2}) : mask_of({0, 2});

  // Bijectivity: every tuple of family monomials times a T-monomial hits each monomial once.
  std::vector<std::vector<Monomial>> parts;
  for (auto fam : fams) {
    std::vector<Monomial> ms;
    for (auto& m : all)
      if (in_w_family(ctx, fam, m)) ms.push_back(m);
    parts.push_back(ms);
  }
  std::vector<Monomial> ts;
  for (auto& m : all)
    if (in_t_part(ctx, which, m)) {
      if (degree(ctx, m) % 2) rep.checks.fail("T-part of odd degree: " + to_string(m));
      ts.push_back(m);
    }
  parts.push_back(ts);
  std::map<Monomial, int> hits;
  std::vector<Monomial> cur;
  auto rec = [&](auto&& self, size_t k, int64_t deg) -> void {
    if (k == parts.size()) {
      auto pr = detail::product(cur);
      if (pr) ++hits[pr->first];
      return;
    }
    for (auto& m : parts[k]) {
      int64_t dm = degree(ctx, m);
      if (deg + dm > max_degree) continue;
      cur.push_back(m);
      self(self, k + 1, deg + dm);
      cur.pop_back();
    }
  };
  rec(rec, 0, 0);
  std::map<int64_t, size_t> counts;
  for (auto& m : all) {
    ++counts[degree(ctx, m)];
    auto it = hits.find(m);
    if (it == hits.end() || it->second != 1)
      rep.checks.fail("monomial " + to_string(m) + " is hit " + std::to_string(it == hits.end() ? 0 : it->second) +
                      " times");
  }
  if (hits.size() != all.size()) rep.checks.fail("products leave the enumerated range");
  for (auto& [d, n] : counts) rep.per_degree.emplace_back(d, n);

  // Equivariance: Q(product of factors) equals the product of the Leibniz expansion.
  for (auto& m : all) {
    auto fs = factor_monomial(ctx, which, m);
    auto pr = detail::product(fs);
    if (!pr || pr->first != m) {
      rep.checks.fail("factorization of " + to_string(m) + " does not multiply back");
      continue;
    }
    for (int i : mask_indices(qmask)) {
      MonomialCombination lhs = q_action_on_monomial(ctx, spec, i, m);
      if (pr->second < 0)
        for (auto& t : lhs) t.second = fp::neg(t.second, p);
      MonomialCombination rhs;
      int64_t prefix = 0;
      for (size_t k = 0; k < fs.size(); ++k) {
        for (auto& [r, c] : q_action_on_monomial(ctx, spec, i, fs[k])) {
          std::vector<Monomial> g = fs;
          g[k] = r;
          auto gp = detail::product(g);
          if (!gp) continue;
          int s = gp->second * (prefix % 2 ? -1 : 1);
          rhs.emplace_back(gp->first, s > 0 ? c : fp::neg(c, p));
        }
        prefix += degree(ctx, fs[k]);
      }
      normalize(rhs, p);
      normalize(lhs, p);
      if (lhs != rhs) rep.checks.fail("Q" + std::to_string(i) + " is not equivariant on " + to_string(m));
    }
  }
  return rep;
}

}  // namespace bpsplit
