#include <gtest/gtest.h>

#include "bpsplit/ext.hpp"
#include "bpsplit/margolis.hpp"
#include "support.hpp"

using namespace bpsplit;

namespace {
std::shared_ptr<const QModule> share(QModule m) { return std::make_shared<const QModule>(std::move(m)); }

// Brute-force count of (a,b,c) with a+b+c = s and weighted degree t, restricted to mask.
size_t brute_v_count(const PrimeContext& ctx, QMask mask, int s, int64_t t) {
  size_t n = 0;
  for (int a = 0; a <= s; ++a)
    for (int b = 0; a + b <= s; ++b) {
      int c = s - a - b;
      int e[3] = {a, b, c};
      bool ok = true;
      int64_t deg = 0;
      for (int i = 0; i < 3; ++i) {
        if (e[i] && !(mask & (1u << i))) ok = false;
        deg += e[i] * ctx.q_drop(i);
      }
      if (ok && deg == t) ++n;
    }
  return n;
}

void expect_same(const BigradedDims& a, const BigradedDims& b, const std::string& what) {
  for (int s = 0; s <= std::min(a.s_max, b.s_max); ++s)
    for (int64_t t = std::max(a.t_min, b.t_min); t <= std::min(a.t_max, b.t_max); ++t)
      if (a.certified(s, t) && b.certified(s, t)) {
        EXPECT_EQ(a.at(s, t), b.at(s, t)) << what << " at (" << s << "," << t << ")";
      }
}

// A pool of small finite modules over various algebras.
std::vector<std::pair<std::string, QModule>> sample_modules() {
  std::vector<std::pair<std::string, QModule>> out;
  PrimeContext c3(3), c5(5);
  for (int64_t k : {0, 3, 9, 12, 18}) out.emplace_back("B1(" + std::to_string(k) + ")", brown_gitler(c3, 1, k));
  out.emplace_back("B1(10) p5", brown_gitler(c5, 1, 10));
  out.emplace_back("W1(1)", w_family(c3, WFamily::W1, 1));
  out.emplace_back("Wo(1)", w_family(c3, WFamily::Wo, 1));
  out.emplace_back("I(1,2)", construct_model(c3, 1, 2, 0, 1));
  out.emplace_back("J(0,2)^2", construct_model(c3, 0, 2, 4, -2));
  out.emplace_back("I(0,1)^2", construct_model(c5, 0, 1, 2, 2));
  out.emplace_back("free", free_module(c3, kFullMask, {0, 6, 17}));
  out.emplace_back("M1(3)", weight_block(c3, 1, 3));
  return out;
}
}  // namespace

TEST(VMonomials, CountMatchesBruteForce) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    for (QMask mask : {kFullMask, mask_of({1, 2}), mask_of({0, 2})})
      for (int s = 0; s <= 6; ++s)
        for (int64_t t = 0; t <= 6 * ctx.q_drop(2); ++t)
          ASSERT_EQ(v_monomial_count(ctx, mask, s, t), brute_v_count(ctx, mask, s, t));
  }
}

TEST(ExtKoszul, ResidueFieldIsPolynomial) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    for (QMask mask : {kFullMask, mask_of({0, 1}), mask_of({1, 2})}) {
      int64_t t_max = 6 * ctx.q_drop(2);
      auto ext = ext_koszul(trivial_module(ctx, mask), 6, t_max);
      for (int s = 0; s <= 6; ++s)
        for (int64_t t = 0; t <= t_max; ++t) ASSERT_EQ(ext.at(s, t), brute_v_count(ctx, mask, s, t)) << s << "," << t;
    }
  }
  auto e = ext_koszul(trivial_module(PrimeContext(3), kFullMask), 2, 40);
  EXPECT_EQ(e.at(2, 22), 1u);
}

TEST(ExtKoszul, FreeModuleConcentratedInFilterZero) {
  PrimeContext c3(3);
  QModule F = free_module(c3, kFullMask, {0, 9});
  auto e = ext_koszul(F, 5, 150);
  for (auto& [k, v] : e.dims) EXPECT_EQ(k.first, 0);
  EXPECT_EQ(e.at(0, -23), 1u);  // socle Q0Q1Q2 g at 0 - 23
  EXPECT_EQ(e.at(0, -14), 1u);
  EXPECT_EQ(e.total(), 2u);
}

TEST(ExtKoszul, SocleModelHasTwoClassesAtZero) {
  PrimeContext c3(3);
  QModule J = construct_model(c3, 1, 2, 0, -1);
  auto e = ext_koszul(J, 4, 200);
  size_t s0 = 0;
  for (auto& [k, v] : e.dims)
    if (k.first == 0) s0 += v;
  EXPECT_EQ(s0, 2u);
  auto t = ext_translation(J, -1, 4);
  ASSERT_TRUE(t.has_value());
  // Ext^0(J) matches Ext^1(F_p,F_p) = {v1, v2} after the same translation.
  EXPECT_EQ(e.at(0, 5 + *t), 1u);
  EXPECT_EQ(e.at(0, 17 + *t), 1u);
}

TEST(ExtKoszul, DifferentialSquaresToZeroAndVIsChainMap) {
  for (auto& [name, M] : sample_modules()) {
    KoszulComplex K(share(M));
    for (int s = 0; s <= 3; ++s) {
      auto [lo, hi] = K.t_window(s);
      for (int64_t t = lo; t <= hi; ++t) {
        if (K.dim(s, t) == 0) continue;
        FpMatrix d0 = K.differential(s, t), d1 = K.differential(s + 1, t);
        EXPECT_TRUE((d1 * d0).is_zero()) << name << " d^2 at " << s << "," << t;
        for (int i : mask_indices(M.mask())) {
          int64_t di = M.drop(i);
          FpMatrix lhs = K.differential(s + 1, t + di) * K.v_mult(i, s, t);
          FpMatrix rhs = K.v_mult(i, s + 1, t) * d0;
          EXPECT_EQ(lhs.entries(), rhs.entries()) << name << " v" << i << " at " << s << "," << t;
        }
      }
    }
  }
}

TEST(ExtKoszul, CertificationRefusesTruncatedRange) {
  PrimeContext c3(3);
  auto H = share(bp_homology(c3, 2, 60));
  EXPECT_NO_THROW(ext_koszul(H, 2, 60));
  EXPECT_THROW(ext_koszul(H, 2, 61), CertificationError);
  auto e = ext_koszul(H, 3, 60);
  EXPECT_EQ(e.certified_t_max[0], 60);
  EXPECT_TRUE(e.certified(3, 60));
  EXPECT_FALSE(e.certified(1, 61));
}

TEST(ExtGeneral, ResidueFieldSourceMatchesKoszul) {
  for (auto& [name, M] : sample_modules()) {
    auto N = share(M);
    auto Fp = share(trivial_module(M.ctx(), M.mask()));
    int64_t lo = *M.min_degree(), hi = *M.max_degree() + 4 * M.ctx().q_drop(mask_indices(M.mask()).back());
    auto a = ext_general(Fp, N, 4, lo, hi);
    auto b = ext_koszul(N, 4, hi);
    expect_same(a, b, name);
    EXPECT_EQ(a.total(), b.total()) << name;
  }
}

TEST(ExtGeneral, ResidueFieldBothSides) {
  PrimeContext c3(3);
  auto F = share(trivial_module(c3, kFullMask));
  auto e = ext_general(F, F, 3, -60, 60);
  EXPECT_EQ(e.at(0, 0), 1u);
  // Ext(F_p, F_p) with Hom-degree t: classes of filtration s sit at t = +deg v^α.
  EXPECT_EQ(e.at(1, 1), 1u);
  EXPECT_EQ(e.at(1, 5), 1u);
  EXPECT_EQ(e.at(1, 17), 1u);
  EXPECT_EQ(e.at(3, 3), 1u);
}

TEST(ExtGeneral, ResolutionIsExactAndMinimal) {
  PrimeContext c3(3);
  auto M = share(brown_gitler(c3, 1, 12));
  FreeResolution R = resolve_exterior(M, 4);
  for (int s = 0; s < R.length(); ++s) {
    const QModule& F = *R.free[s];
    const QModule& T = s == 0 ? *M : *R.free[s - 1];
    const QModule& F1 = *R.free[s + 1];
    for (int64_t d : F.degrees()) {
      FpMatrix out = detail::free_map_matrix(F, R.generator_degrees[s], R.generator_images[s], T, d);
      FpMatrix in = detail::free_map_matrix(F1, R.generator_degrees[s + 1], R.generator_images[s + 1], F, d);
      EXPECT_TRUE((out * in).is_zero());
      EXPECT_EQ(rank(in), F.dim(d) - rank(out)) << "exactness at s=" << s << " degree " << d;
    }
    // Minimality: images of generators have no component on generators (Q^∅ g) of F_s.
    if (s >= 1)
      for (size_t g = 0; g < R.generator_images[s].size(); ++g) {
        int64_t d = R.generator_degrees[s][g];
        const auto& labels = T.labels(d);
        for (size_t k = 0; k < labels.size(); ++k)
          if (labels[k].text.rfind("Q", 0) != 0) {
            EXPECT_EQ(R.generator_images[s][g].v[k], 0u);
          }
      }
  }
  // Surjectivity onto M.
  for (int64_t d : M->degrees())
    EXPECT_EQ(rank(detail::free_map_matrix(*R.free[0], R.generator_degrees[0], R.generator_images[0], *M, d)), M->dim(d));
}

TEST(ExtGeneral, TruncatedTargetReportsCertifiedSubrange) {
  PrimeContext c3(3);
  auto M = share(brown_gitler(c3, 1, 9));
  auto H = share(bp_homology(c3, 2, 80));
  auto e = ext_general(M, H, 2, -20, 80);
  for (int s = 0; s <= 2; ++s) EXPECT_LT(e.certified_t_max[s], 80);
  EXPECT_GE(e.certified_t_max[0], 80 - 17);
}

TEST(EvenConcentration, ExamplesAndViolations) {
  PrimeContext c3(3);
  QModule F = trivial_module(c3, kFullMask);
  EXPECT_TRUE(even_concentration_check(F, 1, 2, 0, 6, 150).ok());
  std::vector<QModule> ws;
  for (int64_t n = 0; n <= 3; ++n) ws.push_back(w_family(c3, WFamily::W1, n));
  QModule W = direct_sum(ws);
  EXPECT_TRUE(even_concentration_check(W, 1, 2, 1, 5, 400).ok());
  EXPECT_TRUE(even_concentration_check(brown_gitler(c3, 1, 9), 0, 1, 0, 3, 80).ok());
  // An odd suspension of F_p: its whole polynomial tower sits in odd stems.
  auto rep = even_concentration_check(trivial_module(c3, kFullMask, 5), 0, 1, 1, 3, 80);
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations.front(), (Bidegree{1, 6}));
}

TEST(EvenConcentration, CBarBlocksOverEachPair) {
  PrimeContext c3(3);
  for (int64_t k = 0; k <= 12; ++k) {
    QModule C = weight_restricted_C(c3, k);
    for (auto [j, h] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
      auto rep = even_concentration_check(C, j, h, 0, 4, *C.max_degree() + 4 * 17);
      EXPECT_TRUE(rep.ok()) << "k=" << k << " pair " << j << h;
    }
  }
}

TEST(Bockstein, ResidueFieldCollapses) {
  PrimeContext c3(3);
  for (int i = 0; i <= 2; ++i) {
    auto e = bockstein_e1(trivial_module(c3, kFullMask), i, 5, 90);
    EXPECT_TRUE(e.parity_collapse);
    EXPECT_TRUE(e.dims_match);
  }
}

TEST(Bockstein, CBarBlocksCollapseAndDimsAgree) {
  PrimeContext c3(3);
  for (int64_t k : {3, 9, 12}) {
    QModule C = weight_restricted_C(c3, k);
    for (int i = 0; i <= 2; ++i) {
      auto e = bockstein_e1(C, i, 4, *C.max_degree() + 4 * 17);
      EXPECT_TRUE(e.parity_collapse) << k << " " << i;
      EXPECT_TRUE(e.dims_match) << k << " " << i;
    }
  }
}

TEST(Bockstein, OddExtGivesNoParityCollapse) {
  auto e = bockstein_e1(trivial_module(PrimeContext(3), kFullMask, 5), 2, 3, 80);
  EXPECT_FALSE(e.parity_collapse);
  EXPECT_TRUE(e.dims_match);
}

TEST(VInjectivity, ResidueFieldAndFree) {
  PrimeContext c3(3);
  for (int i = 0; i <= 2; ++i) {
    EXPECT_TRUE(v_injectivity(share(trivial_module(c3, kFullMask)), i, 5, 90).ok());
    auto r = v_injectivity(share(free_module(c3, kFullMask, {0})), i, 4, 90);
    EXPECT_FALSE(r.ok());  // socle class is v-torsion
  }
}

TEST(VInjectivity, CBarBlocks) {
  PrimeContext c3(3);
  for (int64_t k = 0; k <= 12; ++k) {
    auto C = share(weight_restricted_C(c3, k));
    for (int i = 0; i <= 2; ++i) {
      auto r = v_injectivity(C, i, 4, *C->max_degree() + 4 * 17);
      EXPECT_TRUE(r.ok()) << "k=" << k << " v" << i;
    }
  }
}

TEST(VInjectivity, DetectsTorsion) {
  // The socle class of a free module is killed by every v_i.
  PrimeContext c3(3);
  auto r = v_injectivity(share(free_module(c3, kFullMask, {40})), 2, 2, 120);
  EXPECT_FALSE(r.failures.empty());
  EXPECT_EQ(r.failures.front().first, 0);
}

TEST(ExtTranslation, InvertibleModelsShiftFiltration) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    for (auto [j, h] : {std::pair{1, 2}, {0, 2}, {0, 1}})
      for (int64_t b : {-2, -1, 1, 2, 3})
        for (int64_t a : {0, 4}) {
          QModule X = construct_model(ctx, j, h, a, b);
          auto c = ext_translation(X, b, 5);
          ASSERT_TRUE(c.has_value()) << "p=" << p << " pair " << j << h << " a=" << a << " b=" << b;
          auto c0 = ext_translation(construct_model(ctx, j, h, 0, b), b, 5);
          EXPECT_EQ(*c - *c0, a);  // suspension moves the translation by a
        }
  }
}

TEST(ExtTranslation, TateClassesBelowFiltrationB) {
  // I^{⊗2} over E(Q1,Q2): one extra class at s = 1, then Ext^{s-2}(F_p,F_p) with no shift.
  PrimeContext c3(3);
  QModule X = construct_model(c3, 1, 2, 0, 2);
  auto e = ext_koszul(X, 4, *X.max_degree() + 4 * 17);
  EXPECT_EQ(e.at(1, -22), 1u);
  EXPECT_EQ(e.at(2, 0), 1u);
  EXPECT_EQ(ext_translation(X, 2, 5), std::optional<int64_t>(0));
}

TEST(ExtTranslation, NonModelHasNone) {
  PrimeContext c3(3);
  QModule X = direct_sum({trivial_module(c3, mask_of({1, 2})), trivial_module(c3, mask_of({1, 2}), 5)});
  EXPECT_FALSE(ext_translation(X, 0, 4).has_value());
}

TEST(BigradedDims, TsvAndJson) {
  auto e = ext_koszul(trivial_module(PrimeContext(3), kFullMask), 1, 20);
  EXPECT_EQ(e.to_tsv(), "s\tt\tdim\ttag\n0\t0\t1\teven\n1\t1\t1\teven\n1\t5\t1\teven\n1\t17\t1\teven\n");
  auto j = e.to_json();
  EXPECT_EQ(j["cells"].size(), 4u);
  EXPECT_EQ(j["certified_t_max"][1], 20);
  EXPECT_EQ(e.to_json().dump(), j.dump());
}
