// Acceptance run: one PASS/FAIL line per criterion. Every comparison is exact (integer dims and
// F_p matrices); each criterion also carries a wall-clock budget.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bpsplit/bpsplit.hpp"

using namespace bpsplit;

namespace {

// Dimension comparisons are integer-exact.
constexpr size_t kDimTolerance = 0;

struct Outcome {
  bool ok = true;
  std::string note;
  std::vector<std::string> failures;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failures.push_back(what);
    }
  }
};

bool dims_equal(size_t a, size_t b) { return (a > b ? a - b : b - a) <= kDimTolerance; }

std::shared_ptr<const QModule> share(QModule m) { return std::make_shared<const QModule>(std::move(m)); }

// Poincaré series of A//E(2)_* = F_p[xi_1, xi_2, ...] ⊗ E(tau_3, tau_4, ...) through degree T.
std::vector<size_t> bp2_poincare(const PrimeContext& ctx, int64_t T) {
  std::vector<size_t> f(T + 1, 0);
  f[0] = 1;
  for (int a = 1; ctx.xi_degree(a) <= T; ++a) {
    const int64_t d = ctx.xi_degree(a);
    for (int64_t t = d; t <= T; ++t) f[t] += f[t - d];
  }
  for (int b = 3; ctx.tau_degree(b) <= T; ++b) {
    const int64_t d = ctx.tau_degree(b);
    for (int64_t t = T; t >= d; --t) f[t] += f[t - d];
  }
  return f;
}

Outcome theta_isomorphism(uint32_t p, int64_t k_max, int64_t T) {
  PrimeContext ctx(p);
  Outcome o;
  for (int64_t k = 0; k <= k_max; ++k) {
    auto r = theta(ctx, 1, k);
    o.require(r.checks.ok, "theta_" + std::to_string(k) + ": " + (r.checks.failures.empty() ? "" : r.checks.failures[0]));
    QModule B = brown_gitler(ctx, 1, k);
    for (int64_t d : B.degrees())
      for (auto& l : B.labels(d)) {
        if (d + ctx.q() * k > T) continue;
        Monomial y = theta_monomial(ctx, k, *l.monomial);
        o.require(weight(ctx, y) == static_cast<int64_t>(p) * k, "weight of theta(" + l.text + ")");
        o.require(degree(ctx, y) == d + ctx.q() * k, "degree of theta(" + l.text + ")");
      }
  }
  auto a = assemble_bp_splitting(ctx, 2, T);
  o.require(a.checks.ok, "assembly: " + (a.checks.failures.empty() ? "" : a.checks.failures[0]));
  auto series = bp2_poincare(ctx, T);
  std::map<int64_t, size_t> blocks;
  for (auto& d : a.per_degree) blocks[d.t] = d.rhs;
  for (int64_t t = 0; t <= T; ++t) {
    size_t b = blocks.count(t) ? blocks[t] : 0;
    o.require(dims_equal(b, series[t]), "dim at t=" + std::to_string(t));
  }
  return o;
}

Outcome criterion1() {
  Outcome a = theta_isomorphism(3, 27, 120), b = theta_isomorphism(5, 10, 100);
  for (auto& f : b.failures) a.failures.push_back("p=5 " + f);
  a.ok = a.ok && b.ok;
  a.note = "p=3 k<=27 t<=120; p=5 k<=10 t<=100";
  return a;
}

Outcome criterion2() {
  Outcome o;
  PrimeContext c3(3);
  for (int i = 0; i <= 2; ++i) {
    auto r = margolis_bp2(c3, i, 120);
    o.require(r.checks.ok, "Q" + std::to_string(i) + ": " + (r.checks.failures.empty() ? "" : r.checks.failures[0]));
    for (auto& d : r.per_degree) o.require(dims_equal(d.lhs, d.rhs), "Q" + std::to_string(i) + " t=" + std::to_string(d.t));
  }
  o.note = "p=3 t<=120, Q0 Q1 Q2";
  return o;
}

// Checked as stated, including the parity of a.
Outcome criterion3() {
  Outcome o;
  PrimeContext c3(3);
  Check c("w");
  auto rows = checks::classify_w(c3, 5, c);
  for (auto& f : c.failures) o.require(false, f);
  std::vector<std::string> odd;
  for (auto& r : rows) {
    const std::string tag = to_string(r.family) + "(" + std::to_string(r.n) + ")";
    if (!r.cls) continue;
    if (r.cls->a % 2 != 0) odd.push_back(tag + " a=" + std::to_string(r.cls->a));
    o.require(r.cls->b < 0, tag + " b >= 0");
  }
  auto w11 = std::find_if(rows.begin(), rows.end(), [](auto& r) { return r.family == WFamily::W1 && r.n == 1; });
  o.require(w11 != rows.end() && w11->cls && w11->cls->a == 31 && w11->cls->b == -1, "W1(1) spot value");
  if (!odd.empty()) {
    std::string s = "a is odd for " + std::to_string(odd.size()) + " of " + std::to_string(rows.size()) + " blocks:";
    for (auto& x : odd) s += " " + x;
    o.require(false, s);
  }
  o.note = "p=3 n<=5, W1 We Wo; Margolis degrees, b<0, model, even a, W1(1)=(31,-1)";
  return o;
}

int64_t block_top(const QModule& C, int s_max) { return checks::block_t_max(C, s_max); }

Outcome criterion4() {
  Outcome o;
  PrimeContext c3(3);
  const int s_max = 6;
  // Blockwise: every C̄_k with qk <= 120; each block is finite, so all t are covered.
  for (int64_t k = 0; k <= 30; ++k) {
    QModule C = weight_restricted_C(c3, k);
    for (auto [j, h] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
      auto r = even_concentration_check(C, j, h, 0, s_max, block_top(C, s_max));
      o.require(r.ok(), "C_" + std::to_string(k) + " over E(Q" + std::to_string(j) + ",Q" + std::to_string(h) + ")");
    }
  }
  // Directly on the truncated C̄ through degree 120, certified cells only.
  auto split = length_splitting(c3, 120);
  size_t certified_cells = 0;
  for (auto [j, h] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
    auto r = even_concentration_check(*split.reduced_part, j, h, 0, s_max, *split.reduced_part->top());
    for (auto& [cell, n] : r.chart.dims)
      if (r.chart.certified(cell.first, cell.second)) ++certified_cells;
    o.require(r.ok(), "truncated C over E(Q" + std::to_string(j) + ",Q" + std::to_string(h) + ")");
  }
  o.note = "p=3 s<=6; blocks k<=30 complete, truncated C certified cells=" + std::to_string(certified_cells);
  return o;
}

Outcome criterion5() {
  Outcome o;
  PrimeContext c3(3);
  const int s_max = 6;
  size_t checked = 0;
  for (int64_t k = 0; k <= 27; ++k) {
    auto C = share(weight_restricted_C(c3, k));
    for (int i = 0; i <= 2; ++i) {
      auto r = v_injectivity(C, i, s_max, block_top(*C, s_max));
      checked += r.checked_classes;
      o.require(r.ok(), "C_" + std::to_string(k) + " v" + std::to_string(i));
    }
  }
  o.note = "p=3 k<=27 s<=6, classes checked=" + std::to_string(checked);
  return o;
}

Outcome criterion6() {
  Outcome o;
  PrimeContext c3(3);
  int worst = 0;
  for (int64_t k = 0; k <= 27; ++k) {
    auto R = resolve_poly(std::make_shared<const ExtFpModule>(share(weight_restricted_C(c3, k))), 3, 10);
    auto d = projective_dimension(R);
    worst = std::max(worst, d.projective_dimension);
    o.require(d.projective_dimension <= 2, "C_" + std::to_string(k) + " length " + std::to_string(d.projective_dimension));
    o.require(d.socle_empty(), "C_" + std::to_string(k) + " socle");
    o.require(d.stabilized, "C_" + std::to_string(k) + " not stabilized");
    o.require(R.minimal, "C_" + std::to_string(k) + " not minimal");
  }
  o.note = "p=3 k<=27, max length " + std::to_string(worst);
  return o;
}

Outcome criterion7() {
  Outcome o;
  PrimeContext c3(3);
  const int s_max = 5;
  size_t odd = 0;
  for (int64_t k = 0; k <= 9; ++k) {
    ComparisonSource src(c3, k, s_max);
    for (int64_t m = 0; m <= 9; ++m) {
      auto r = propiso_check(src, m);
      for (auto& [cell, n] : r.odd_cells) odd += n;
      o.require(r.certified, "k=" + std::to_string(k) + " m=" + std::to_string(m) + " uncertified");
      for (auto& row : r.rows)
        o.require(dims_equal(row.odd_exterior, row.u1_line),
                  "k=" + std::to_string(k) + " m=" + std::to_string(m) + " t=" + std::to_string(row.t));
    }
  }
  size_t obstructions = 0;
  for (int64_t k = 0; k <= 27; ++k) {
    auto rep = obstruction_report(c3, k, 30, s_max);
    obstructions += rep.total();
    o.require(rep.all_matched(), rep.verdict());
  }
  o.note = "propiso k,m<=9 s<=5 (" + std::to_string(odd) + " odd classes); obstructions k<=27 m<=30 (" +
           std::to_string(obstructions) + " classes)";
  return o;
}

Outcome criterion8() {
  Outcome o;
  std::mt19937_64 rng(0xacce'97a0ULL);
  auto pick = [&](int64_t lo, int64_t hi) { return std::uniform_int_distribution<int64_t>(lo, hi)(rng); };
  size_t modules = 0;
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    std::vector<std::pair<std::string, QModule>> ms;
    ms.emplace_back("H", bp_homology(ctx, 2, p == 3 ? 120 : 100));
    for (int64_t k = 0; k <= (p == 3 ? 27 : 10); ++k) {
      ms.emplace_back("B1(" + std::to_string(k) + ")", brown_gitler(ctx, 1, k));
      ms.emplace_back("C(" + std::to_string(k) + ")", weight_restricted_C(ctx, k));
    }
    for (auto w : {WFamily::W1, WFamily::We, WFamily::Wo})
      for (int64_t n = 0; n <= (p == 3 ? 5 : 2); ++n) ms.emplace_back(to_string(w), w_family(ctx, w, n));
    auto split = length_splitting(ctx, p == 3 ? 120 : 100);
    ms.emplace_back("Cbar", *split.reduced_part);
    ms.emplace_back("Vbar", *split.free_part);
    std::vector<QModule> models;
    for (int r = 0; r < 8; ++r) {
      int j = static_cast<int>(pick(0, 1)), h = static_cast<int>(pick(j + 1, 2));
      int64_t a = pick(-10, 10), b = pick(-2, 2);
      models.push_back(construct_model(ctx, j, h, a, b));
      ms.emplace_back("model", models.back());
    }
    for (int r = 0; r < 4; ++r) {
      const QModule& x = models[pick(0, 7)];
      const QModule& y = models[pick(0, 7)];
      if (x.mask() != y.mask()) continue;
      ms.emplace_back("tensor", tensor(x, y));
      for (int i : mask_indices(x.mask()))
        o.require(kunneth_check(x, y, i).checks.ok, "Kunneth p=" + std::to_string(p));
    }
    for (auto& [name, M] : ms) {
      ++modules;
      o.require(verify_structure(M).ok, name + " p=" + std::to_string(p) + " Q-structure");
    }

    // Degree, weight and length are additive on products.
    for (int r = 0; r < 500; ++r) {
      Monomial x, y;
      for (int a = 1; a <= 4; ++a) {
        x.set_xi(a, static_cast<uint32_t>(pick(0, 3)));
        y.set_xi(a, static_cast<uint32_t>(pick(0, 3)));
      }
      x.tau = static_cast<uint64_t>(pick(0, 63));
      y.tau = static_cast<uint64_t>(pick(0, 63));
      auto xy = multiply(x, y);
      if (!xy) {
        o.require((x.tau & y.tau) != 0, "product vanished without a repeated tau");
        continue;
      }
      o.require(degree(ctx, xy->first) == degree(ctx, x) + degree(ctx, y), "degree additivity");
      o.require(weight(ctx, xy->first) == weight(ctx, x) + weight(ctx, y), "weight additivity");
      o.require(length(xy->first) == length(x) + length(y), "length additivity");
    }

    // ext_general(F_p, -) against the Koszul computation.
    for (auto* N : {&ms[1].second, &ms[4].second, &ms[ms.size() - 3].second}) {
      auto Np = share(*N);
      int64_t hi = (N->max_degree() ? *N->max_degree() : 0) + 4 * ctx.q_drop(2);
      auto Fp = share(trivial_module(ctx, N->mask()));
      auto a = ext_general(Fp, Np, 4, N->min_degree() ? *N->min_degree() : 0, hi);
      auto b = ext_koszul(Np, 4, hi);
      for (int s = 0; s <= 4; ++s)
        for (int64_t t = a.t_min; t <= hi; ++t)
          o.require(dims_equal(a.at(s, t), b.at(s, t)), "ext_general vs Koszul p=" + std::to_string(p));
    }

    // Ext(F_p, F_p) against the count of v-monomials, enumerated independently by exponent triples.
    for (QMask mask : {kFullMask, mask_of({0, 1}), mask_of({0, 2}), mask_of({1, 2})}) {
      const int64_t T = 6 * ctx.q_drop(2);
      auto e = ext_koszul(share(trivial_module(ctx, mask)), 6, T);
      std::map<Bidegree, size_t> expect;
      for (int a0 = 0; a0 <= 6; ++a0)
        for (int a1 = 0; a0 + a1 <= 6; ++a1)
          for (int a2 = 0; a0 + a1 + a2 <= 6; ++a2) {
            int a[3] = {a0, a1, a2};
            bool ok = true;
            int64_t t = 0;
            for (int i = 0; i < 3; ++i) {
              if (a[i] && !(mask & (1u << i))) ok = false;
              t += a[i] * ctx.q_drop(i);
            }
            if (ok && t <= T) ++expect[{a0 + a1 + a2, t}];
          }
      for (int s = 0; s <= 6; ++s)
        for (int64_t t = 0; t <= T; ++t) {
          size_t want = expect.count({s, t}) ? expect[{s, t}] : 0;
          o.require(dims_equal(e.at(s, t), want), "Ext(F_p,F_p) p=" + std::to_string(p) + " " + mask_name(mask));
        }
    }
  }
  o.note = std::to_string(modules) + " modules, p=3,5";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "theta isomorphism and assembled dims", 60, criterion1},
      {2, "Margolis homology of H_*BP<2>", 60, criterion2},
      {3, "W-block classification", 60, criterion3},
      {4, "even concentration over the pairs", 300, criterion4},
      {5, "v0 v1 v2 injectivity on Ext(F_p, C_k)", 300, criterion5},
      {6, "P(2)-resolution length <= 2, empty socle", 300, criterion6},
      {7, "E_2 comparison and obstruction matching", 600, criterion7},
      {8, "property suites", 60, criterion8},
  };
  int failed = 0;
  for (auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) o.require(false, "over time budget");
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.1fs/%.0fs", secs, c.budget_s);
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << c.id << "  " << c.name << "  [" << o.note << "; exact; " << timing
              << "]";
    if (!o.ok) {
      std::cout << "  -- " << o.failures.front();
      if (o.failures.size() > 1) std::cout << " (+" << o.failures.size() - 1 << " more)";
    }
    std::cout << std::endl;
    if (!o.ok) ++failed;
  }
  std::cout << (failed ? std::to_string(failed) + " of " + std::to_string(criteria.size()) + " criteria failed"
                       : "all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
