#pragma once

// Monomials of the odd-primary dual Steenrod algebra and its quotients A//E(i)_*.
// xi_a has degree 2(p^a - 1), tau_b has degree 2p^b - 1, and both have weight p^a (resp. p^b).

#include <algorithm>
#include <bit>
#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpsplit/errors.hpp"
#include "bpsplit/fp_linalg.hpp"

namespace bpsplit {

class PrimeContext {
 public:
  explicit PrimeContext(uint32_t p) : p_(p) {
    if (p < 3 || p > 1000 || !is_prime(p)) throw ConfigError("p must be an odd prime");
  }

  uint32_t p() const { return p_; }
  int64_t q() const { return 2 * (static_cast<int64_t>(p_) - 1); }

  int64_t pow(int a) const {
    int64_t r = 1;
    for (int k = 0; k < a; ++k) r *= p_;
    return r;
  }
  int64_t xi_degree(int a) const { return 2 * (pow(a) - 1); }
  int64_t tau_degree(int b) const { return 2 * pow(b) - 1; }
  // Q_i lowers internal degree by this amount.
  int64_t q_drop(int i) const { return 2 * pow(i) - 1; }

  bool operator==(const PrimeContext&) const = default;

 private:
  uint32_t p_;
};

// Selects A//E(i)_*; i = -1 is A_* itself.
struct AlgebraSpec {
  int i;
  explicit AlgebraSpec(int i_) : i(i_) {
    if (i < -1) throw ConfigError("algebra index must be >= -1");
  }
  int first_tau() const { return i + 1; }
};

constexpr int kMaxTauIndex = 40;

struct Monomial {
  std::vector<uint32_t> xi;  // xi[a-1] is the exponent of xi_a; no trailing zeros
  uint64_t tau = 0;          // bit b set iff tau_b is a factor

  static Monomial unit() { return {}; }
  static Monomial xi_power(int a, uint32_t e) {
    Monomial m;
    m.set_xi(a, e);
    return m;
  }
  static Monomial tau_gen(int b) {
    Monomial m;
    m.tau = uint64_t{1} << b;
    return m;
  }

  uint32_t xi_exp(int a) const { return a >= 1 && static_cast<size_t>(a) <= xi.size() ? xi[a - 1] : 0; }
  void set_xi(int a, uint32_t e) {
    if (a < 1) throw MalformedInput("xi index must be >= 1");
    if (xi.size() < static_cast<size_t>(a)) xi.resize(a, 0);
    xi[a - 1] = e;
    while (!xi.empty() && xi.back() == 0) xi.pop_back();
  }
  bool has_tau(int b) const { return b >= 0 && b < 64 && ((tau >> b) & 1u); }
  std::vector<int> tau_indices() const {
    std::vector<int> out;
    for (int b = 0; b < 64; ++b)
      if (has_tau(b)) out.push_back(b);
    return out;
  }
  bool is_unit() const { return xi.empty() && tau == 0; }
  Monomial xi_part() const {
    Monomial m = *this;
    m.tau = 0;
    return m;
  }

  auto operator<=>(const Monomial&) const = default;
};

inline int64_t degree(const PrimeContext& ctx, const Monomial& m) {
  int64_t d = 0;
  for (size_t a = 0; a < m.xi.size(); ++a) d += static_cast<int64_t>(m.xi[a]) * ctx.xi_degree(static_cast<int>(a) + 1);
  for (int b : m.tau_indices()) d += ctx.tau_degree(b);
  return d;
}

inline int64_t weight(const PrimeContext& ctx, const Monomial& m) {
  int64_t w = 0;
  for (size_t a = 0; a < m.xi.size(); ++a) w += static_cast<int64_t>(m.xi[a]) * ctx.pow(static_cast<int>(a) + 1);
  for (int b : m.tau_indices()) w += ctx.pow(b);
  return w;
}

inline int length(const Monomial& m) { return std::popcount(m.tau); }

inline bool in_algebra(const AlgebraSpec& spec, const Monomial& m) {
  for (int b : m.tau_indices())
    if (b < spec.first_tau()) return false;
  return true;
}

// Number of tau indices in `a` greater than index b (transpositions needed to sort).
inline int count_above(uint64_t a, int b) {
  return b >= 63 ? 0 : std::popcount(a >> (b + 1));
}

// Product with the sign from reordering the exterior factors; nullopt when a tau repeats.
inline std::optional<std::pair<Monomial, int>> multiply(const Monomial& a, const Monomial& b) {
  if (a.tau & b.tau) return std::nullopt;
  Monomial m;
  m.xi.assign(std::max(a.xi.size(), b.xi.size()), 0);
  for (size_t k = 0; k < a.xi.size(); ++k) m.xi[k] += a.xi[k];
  for (size_t k = 0; k < b.xi.size(); ++k) m.xi[k] += b.xi[k];
  m.tau = a.tau | b.tau;
  int inversions = 0;
  for (int c : b.tau_indices()) inversions += count_above(a.tau, c);
  return std::make_pair(m, inversions % 2 ? -1 : 1);
}

// Text form `xi1^3 xi2 tau2`; the unit is `1`.
inline std::string to_string(const Monomial& m) {
  if (m.is_unit()) return "1";
  std::string s;
  for (size_t a = 0; a < m.xi.size(); ++a) {
    if (m.xi[a] == 0) continue;
    if (!s.empty()) s += ' ';
    s += "xi" + std::to_string(a + 1);
    if (m.xi[a] != 1) s += "^" + std::to_string(m.xi[a]);
  }
  for (int b : m.tau_indices()) {
    if (!s.empty()) s += ' ';
    s += "tau" + std::to_string(b);
  }
  return s;
}

inline Monomial parse_monomial(std::string_view text) {
  auto bad = [&](const std::string& why) { return MalformedInput("bad monomial '" + std::string(text) + "': " + why); };
  auto parse_uint = [&](std::string_view s) {
    uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw bad("expected a number");
    return v;
  };
  Monomial m;
  size_t pos = 0;
  bool any = false;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    size_t end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    pos = end;
    any = true;
    if (tok == "1") continue;
    if (tok.starts_with("xi")) {
      std::string_view rest = tok.substr(2);
      size_t caret = rest.find('^');
      uint32_t a = parse_uint(rest.substr(0, caret));
      uint32_t e = caret == std::string_view::npos ? 1 : parse_uint(rest.substr(caret + 1));
      if (a == 0) throw bad("xi0 is the unit and is not written");
      m.set_xi(static_cast<int>(a), m.xi_exp(static_cast<int>(a)) + e);
    } else if (tok.starts_with("tau")) {
      uint32_t b = parse_uint(tok.substr(3));
      if (b >= 64) throw bad("tau index too large");
      if (m.has_tau(static_cast<int>(b))) throw bad("repeated exterior generator");
      m.tau |= uint64_t{1} << b;
    } else {
      throw bad("unknown token");
    }
  }
  if (!any) throw bad("empty");
  return m;
}

// Canonical order: degree, then weight, then lexicographic on exponents.
struct CanonicalLess {
  const PrimeContext* ctx;
  bool operator()(const Monomial& a, const Monomial& b) const {
    auto da = degree(*ctx, a), db = degree(*ctx, b);
    if (da != db) return da < db;
    auto wa = weight(*ctx, a), wb = weight(*ctx, b);
    if (wa != wb) return wa < wb;
    size_t n = std::max(a.xi.size(), b.xi.size());
    for (size_t k = 0; k < n; ++k) {
      uint32_t x = k < a.xi.size() ? a.xi[k] : 0, y = k < b.xi.size() ? b.xi[k] : 0;
      if (x != y) return x < y;
    }
    for (int t = 0; t < 64; ++t)
      if (a.has_tau(t) != b.has_tau(t)) return !a.has_tau(t);
    return false;
  }
};

inline void sort_canonical(const PrimeContext& ctx, std::vector<Monomial>& ms) {
  std::sort(ms.begin(), ms.end(), CanonicalLess{&ctx});
}

namespace detail {

// All monomials of A//E(i)_* with degree <= max_degree and weight <= max_weight.
inline void enumerate_bounded(const PrimeContext& ctx, const AlgebraSpec& spec, int64_t max_degree, int64_t max_weight,
                              std::vector<Monomial>& out) {
  struct Gen {
    bool is_tau;
    int index;
    int64_t deg, wt;
  };
  std::vector<Gen> gens;
  for (int a = 1; ctx.xi_degree(a) <= max_degree && ctx.pow(a) <= max_weight; ++a)
    gens.push_back({false, a, ctx.xi_degree(a), ctx.pow(a)});
  for (int b = std::max(0, spec.first_tau()); b < kMaxTauIndex && ctx.tau_degree(b) <= max_degree && ctx.pow(b) <= max_weight; ++b)
    gens.push_back({true, b, ctx.tau_degree(b), ctx.pow(b)});

  Monomial cur;
  auto rec = [&](auto&& self, size_t g, int64_t deg, int64_t wt) -> void {
    if (g == gens.size()) {
      out.push_back(cur);
      return;
    }
    const Gen& gen = gens[g];
    if (gen.is_tau) {
      self(self, g + 1, deg, wt);
      if (deg + gen.deg <= max_degree && wt + gen.wt <= max_weight) {
        cur.tau |= uint64_t{1} << gen.index;
        self(self, g + 1, deg + gen.deg, wt + gen.wt);
        cur.tau &= ~(uint64_t{1} << gen.index);
      }
    } else {
      for (uint32_t e = 0; deg + e * gen.deg <= max_degree && wt + e * gen.wt <= max_weight; ++e) {
        cur.set_xi(gen.index, e);
        self(self, g + 1, deg + e * gen.deg, wt + e * gen.wt);
      }
      cur.set_xi(gen.index, 0);
    }
  };
  rec(rec, 0, 0, 0);
}

}  // namespace detail

inline std::vector<Monomial> enumerate_by_degree(const PrimeContext& ctx, const AlgebraSpec& spec, int64_t max_degree) {
  std::vector<Monomial> out;
  if (max_degree < 0) return out;
  detail::enumerate_bounded(ctx, spec, max_degree, INT64_MAX / 4, out);
  sort_canonical(ctx, out);
  return out;
}

inline std::vector<Monomial> enumerate_by_max_weight(const PrimeContext& ctx, const AlgebraSpec& spec, int64_t max_weight) {
  std::vector<Monomial> out;
  if (max_weight < 0) return out;
  detail::enumerate_bounded(ctx, spec, INT64_MAX / 4, max_weight, out);
  sort_canonical(ctx, out);
  return out;
}

inline std::vector<Monomial> enumerate_by_weight(const PrimeContext& ctx, const AlgebraSpec& spec, int64_t exact_weight) {
  std::vector<Monomial> all = enumerate_by_max_weight(ctx, spec, exact_weight), out;
  for (auto& m : all)
    if (weight(ctx, m) == exact_weight) out.push_back(std::move(m));
  return out;
}

// A formal F_p-combination of monomials, kept sorted by monomial with nonzero coefficients.
using MonomialCombination = std::vector<std::pair<Monomial, uint32_t>>;

inline void normalize(MonomialCombination& c, uint32_t p) {
  std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  MonomialCombination out;
  for (auto& [m, x] : c) {
    if (!out.empty() && out.back().first == m)
      out.back().second = fp::add(out.back().second, x, p);
    else
      out.emplace_back(m, x % p);
  }
  std::erase_if(out, [](const auto& t) { return t.second == 0; });
  c = std::move(out);
}

}  // namespace bpsplit
