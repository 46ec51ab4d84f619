#pragma once

// Margolis homology ker Q_i / im Q_i, Kunneth checks, freeness detection, and the
// classification of stably invertible modules over a pair E(Q_j, Q_h).

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bpsplit/browngitler.hpp"
#include "bpsplit/fp_linalg.hpp"
#include "bpsplit/qmodule.hpp"

namespace bpsplit {

struct MargolisHomology {
  int q;
  int64_t lo, hi;                                     // degree range covered
  std::map<int64_t, std::vector<FpVector>> classes;   // representatives, degrees with nonzero homology only

  size_t dim(int64_t d) const {
    auto it = classes.find(d);
    return it == classes.end() ? 0 : it->second.size();
  }
  size_t total_dim() const {
    size_t n = 0;
    for (auto& [d, v] : classes) n += v.size();
    return n;
  }
};

// Homology of Q_i at one degree: ker(Q_i: M_d -> M_{d-drop}) / im(Q_i: M_{d+drop} -> M_d).
inline Subquotient margolis_at(const QModule& M, int i, int64_t d) {
  Subspace ker = kernel_basis(M.action(i, d));
  Subspace im = M.has_degree(d + M.drop(i)) ? image_basis(M.action(i, d + M.drop(i))) : Subspace(M.p(), M.dim(d));
  return Subquotient(ker, im);
}

// Requires degrees d in [lo, hi] with d + drop(i) inside the module's exact range.
inline MargolisHomology margolis_homology(const QModule& M, int i, int64_t lo, int64_t hi) {
  if (!M.defines(i)) throw MalformedInput("Q" + std::to_string(i) + " is not defined on this module");
  if (M.top() && hi + M.drop(i) > *M.top())
    throw CertificationError("Margolis range reaches degree " + std::to_string(hi + M.drop(i)) +
                             " beyond the truncation at " + std::to_string(*M.top()));
  MargolisHomology h{i, lo, hi, {}};
  for (int64_t d : M.degrees()) {
    if (d < lo || d > hi) continue;
    Subquotient sq = margolis_at(M, i, d);
    if (sq.dim() > 0) h.classes[d] = sq.representatives();
  }
  return h;
}

// Over the whole certified support of M.
inline MargolisHomology margolis_homology(const QModule& M, int i) {
  if (!M.min_degree()) return {i, 0, -1, {}};
  int64_t hi = M.top() ? *M.top() - M.drop(i) : *M.max_degree();
  return margolis_homology(M, i, *M.min_degree(), hi);
}

// Closed-form Margolis bases of H_*BP<2>: Q0 -> F_p[xi1, xi2]; Q1 -> F_p[xi1] ⊗ T_1(xi2, ...);
// Q2 -> T_2(xi1, xi2, ...), where T_k truncates each exponent below p^k.
inline bool in_bp2_margolis_basis(const PrimeContext& ctx, int i, const Monomial& m) {
  if (m.tau) return false;
  const uint32_t p = ctx.p();
  for (size_t a = 1; a <= m.xi.size(); ++a) {
    uint32_t e = m.xi_exp(static_cast<int>(a));
    if (e == 0) continue;
    switch (i) {
      case 0:
        if (a > 2) return false;
        break;
      case 1:
        if (a >= 2 && e >= p) return false;
        break;
      case 2:
        if (e >= p * p) return false;
        break;
      default: return false;
    }
  }
  return true;
}

struct MargolisBP2Report {
  int q;
  int64_t max_degree;
  std::vector<DegreeDims> per_degree;  // lhs = computed dim, rhs = closed-form count
  CheckReport checks;
};

// Compares the computed homology with the closed-form monomial basis for t <= max_degree.
inline MargolisBP2Report margolis_bp2(const PrimeContext& ctx, int i, int64_t max_degree) {
  QModule H = bp_homology(ctx, 2, max_degree + ctx.q_drop(i));
  MargolisBP2Report rep{i, max_degree, {}, {}};
  for (int64_t d = 0; d <= max_degree; ++d) {
    if (!H.has_degree(d)) continue;
    Subquotient sq = margolis_at(H, i, d);
    std::vector<FpVector> closed;
    for (size_t k = 0; k < H.dim(d); ++k)
      if (in_bp2_margolis_basis(ctx, i, *H.labels(d)[k].monomial)) closed.push_back(basis_element(H, d, k).v);
    rep.per_degree.push_back({d, sq.dim(), closed.size()});
    if (sq.dim() != closed.size()) {
      rep.checks.fail("dimension mismatch at degree " + std::to_string(d));
      continue;
    }
    // The closed-form monomials must be cycles, independent modulo boundaries.
    Subspace classes(ctx.p(), sq.dim());
    for (auto& v : closed) {
      if (!fp::is_zero(H.apply(i, d, v))) {
        rep.checks.fail("closed-form element is not a cycle at degree " + std::to_string(d));
        break;
      }
      classes.insert(sq.coordinates(v));
    }
    if (classes.dim() != closed.size()) rep.checks.fail("closed-form basis dependent in homology at degree " + std::to_string(d));
  }
  return rep;
}

struct KunnethReport {
  std::vector<DegreeDims> per_degree;  // lhs = dim of homology of the tensor, rhs = convolution
  CheckReport checks;
};

inline KunnethReport kunneth_check(const QModule& M, const QModule& N, int i) {
  QModule T = tensor(M, N);
  auto hm = margolis_homology(M, i), hn = margolis_homology(N, i), ht = margolis_homology(T, i);
  std::map<int64_t, size_t> conv;
  for (auto& [a, va] : hm.classes)
    for (auto& [b, vb] : hn.classes) conv[a + b] += va.size() * vb.size();
  KunnethReport rep;
  std::set<int64_t> degs;
  for (auto& [d, n] : conv) degs.insert(d);
  for (auto& [d, v] : ht.classes) degs.insert(d);
  for (int64_t d : degs) {
    if (d < ht.lo || d > ht.hi) continue;
    rep.per_degree.push_back({d, ht.dim(d), conv[d]});
    if (ht.dim(d) != conv[d]) rep.checks.fail("Kunneth mismatch at degree " + std::to_string(d));
  }
  return rep;
}

// Closed-form Margolis generators of the W-blocks (q = the operator index):
//   W1(n): Q1 -> xi1^{p^2 n}, Q2 -> (xi2^{n0} xi3^{n1} ...)^p
//   Wo(n): Q0 -> xi1^{p^2 n}, Q2 -> xi3^{m0} xi5^{m1} ...
//   We(n): Q0 -> xi2^{p^2 n}, Q2 -> xi4^{m0} xi6^{m1} ...
// with n = n0 + n1 p + ... and m_i = n_{2i} + p n_{2i+1}.
inline Monomial w_margolis_generator(const PrimeContext& ctx, WFamily w, int64_t n, int q) {
  if (n < 0) throw ConfigError("weight index must be >= 0");
  const uint32_t p = ctx.p();
  std::vector<uint32_t> digits;
  for (int64_t r = n; r > 0; r /= p) digits.push_back(static_cast<uint32_t>(r % p));
  Monomial m;
  bool low = (w == WFamily::W1) ? q == 1 : q == 0;
  if (!low && q != 2) throw MalformedInput("operator not in the family's pair");
  if (low) {
    m.set_xi(w == WFamily::We ? 2 : 1, static_cast<uint32_t>(p * p * n));
    return m;
  }
  if (w == WFamily::W1) {
    for (size_t k = 0; k < digits.size(); ++k) m.set_xi(static_cast<int>(k) + 2, digits[k] * p);
    return m;
  }
  int base = w == WFamily::We ? 4 : 3;
  for (size_t k = 0; 2 * k < digits.size(); ++k) {
    uint32_t mk = digits[2 * k] + (2 * k + 1 < digits.size() ? p * digits[2 * k + 1] : 0);
    m.set_xi(base + 2 * static_cast<int>(k), mk);
  }
  return m;
}

struct InvertibleClass {
  int64_t a;
  int64_t b;
  int64_t x_degree;  // Q_j-homology degree
  int64_t y_degree;  // Q_h-homology degree
};

struct NotInvertible {
  std::string reason;
};

// |Q_i| = -(2p^i - 1).
inline int64_t q_degree(const PrimeContext& ctx, int i) { return -ctx.q_drop(i); }

// Solves b(|Q_h| - |Q_j|) = |y| - |x| and a = |x| - b|Q_j| from the two Margolis homologies.
inline std::variant<InvertibleClass, NotInvertible> classify_invertible(const QModule& M, int j, int h) {
  if (!M.defines(j) || !M.defines(h) || j == h) return NotInvertible{"module is not over the requested pair"};
  auto hj = margolis_homology(M, j), hh = margolis_homology(M, h);
  if (hj.total_dim() != 1 || hh.total_dim() != 1)
    return NotInvertible{"Margolis homologies have dimensions " + std::to_string(hj.total_dim()) + " and " +
                         std::to_string(hh.total_dim())};
  int64_t x = hj.classes.begin()->first, y = hh.classes.begin()->first;
  int64_t qj = q_degree(M.ctx(), j), qh = q_degree(M.ctx(), h);
  int64_t den = qh - qj, num = y - x;
  if (num % den != 0)
    return NotInvertible{"b = " + std::to_string(num) + "/" + std::to_string(den) + " is not integral"};
  int64_t b = num / den;
  return InvertibleClass{x - b * qj, b, x, y};
}

// Sigma^a I^{⊗b} over E(Q_j, Q_h): I is the augmentation ideal of the free module on a degree-0
// generator; for b < 0 the inverse is E/socle suspended by |b|(d_j + d_h).
inline QModule construct_model(const PrimeContext& ctx, int j, int h, int64_t a, int64_t b) {
  const QMask pair = mask_of({j, h});
  auto E = std::make_shared<const QModule>(free_module(ctx, pair, {0}, {"g"}));
  QModule unit = trivial_module(ctx, pair, 0);
  QModule factor = unit;
  int64_t comp = 0;
  if (b > 0) {
    factor = *submodule_generated(E, {basis_element(*E, -ctx.q_drop(j), 0), basis_element(*E, -ctx.q_drop(h), 0)})
                  .module;
  } else if (b < 0) {
    int64_t sd = -(ctx.q_drop(j) + ctx.q_drop(h));
    factor = *quotient(E, {basis_element(*E, sd, 0)}).module;
    comp = ctx.q_drop(j) + ctx.q_drop(h);
  }
  QModule acc = unit;
  for (int64_t k = 0; k < (b < 0 ? -b : b); ++k) acc = tensor(acc, factor);
  return shift_degrees(acc, a + (b < 0 ? -b : 0) * comp);
}

// True iff every defined Q has vanishing Margolis homology over the certified support.
inline bool freeness_check(const QModule& M) {
  for (int i : mask_indices(M.mask()))
    if (margolis_homology(M, i).total_dim() != 0) return false;
  return true;
}

inline bool freeness_check(const QModule& M, int64_t lo, int64_t hi) {
  for (int i : mask_indices(M.mask()))
    if (margolis_homology(M, i, lo, hi).total_dim() != 0) return false;
  return true;
}

}  // namespace bpsplit
