#include <gtest/gtest.h>

#include "bpsplit/browngitler.hpp"
#include "bpsplit/qmodule.hpp"
#include "support.hpp"

using namespace bpsplit;
using bpsplit::testing::random_vector;
using bpsplit::testing::uniform;

namespace {
Monomial M(const char* s) { return parse_monomial(s); }

MonomialCombination combo(std::initializer_list<std::pair<const char*, uint32_t>> terms, uint32_t p) {
  MonomialCombination c;
  for (auto& [m, x] : terms) c.emplace_back(parse_monomial(m), x);
  normalize(c, p);
  return c;
}

std::shared_ptr<const QModule> share(QModule m) { return std::make_shared<const QModule>(std::move(m)); }

// Small random modules: free modules, monomial modules and their tensor products.
std::vector<QModule> sample_modules(const PrimeContext& ctx) {
  std::vector<QModule> out;
  out.push_back(trivial_module(ctx, kFullMask, 0));
  out.push_back(free_module(ctx, kFullMask, {0, 4}));
  out.push_back(free_module(ctx, mask_of({1, 2}), {0}));
  out.push_back(brown_gitler(ctx, 1, 2 * ctx.p() * ctx.p()));
  out.push_back(brown_gitler(ctx, 0, 3 * ctx.p()));
  out.push_back(tensor(brown_gitler(ctx, 1, ctx.p() * ctx.p()), brown_gitler(ctx, 1, ctx.p() * ctx.p())));
  out.push_back(tensor(restrict_mask(brown_gitler(ctx, 1, ctx.p() * ctx.p()), mask_of({0, 1})),
                       brown_gitler(ctx, 0, ctx.p())));
  return out;
}
}  // namespace

TEST(QAction, GeneratorFormula) {
  PrimeContext c5(5), c3(3);
  EXPECT_EQ(q_action_on_monomial(c5, AlgebraSpec(-1), 1, M("tau2")), combo({{"xi1^5", 1}}, 5));
  EXPECT_TRUE(q_action_on_monomial(c5, AlgebraSpec(-1), 1, M("xi3")).empty());
  EXPECT_EQ(q_action_on_monomial(c3, AlgebraSpec(1), 2, M("xi1 tau2")), combo({{"xi1", 1}}, 3));
  // Q_k(tau_k) is the unit; Q_j(tau_k) = 0 for j > k.
  EXPECT_EQ(q_action_on_monomial(c3, AlgebraSpec(-1), 0, M("tau0")), combo({{"1", 1}}, 3));
  EXPECT_TRUE(q_action_on_monomial(c3, AlgebraSpec(-1), 2, M("tau1")).empty());
}

TEST(QAction, LeibnizSign) {
  PrimeContext c3(3);
  // Q_0(tau2 tau3) = xi2 tau3 - tau2 xi3.
  EXPECT_EQ(q_action_on_monomial(c3, AlgebraSpec(1), 0, M("tau2 tau3")),
            combo({{"xi2 tau3", 1}, {"xi3 tau2", 2}}, 3));
}

TEST(QAction, PreservesWeightDropsLength) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    for (int i = 0; i <= 2; ++i)
      for (auto& m : enumerate_by_degree(ctx, AlgebraSpec(-1), p == 3 ? 120 : 200))
        for (auto& [r, c] : q_action_on_monomial(ctx, AlgebraSpec(-1), i, m)) {
          // Weight is lost only when tau_i itself is consumed (Q_i tau_i = 1).
          int64_t lost = m.has_tau(i) && !r.has_tau(i) ? ctx.pow(i) : 0;
          EXPECT_EQ(weight(ctx, r), weight(ctx, m) - lost);
          EXPECT_EQ(length(r), length(m) - 1);
          EXPECT_EQ(degree(ctx, r), degree(ctx, m) - ctx.q_drop(i));
        }
  }
}

TEST(QAction, WeightPreservedOnBPTwo) {
  PrimeContext ctx(3);
  for (int i = 0; i <= 2; ++i)
    for (auto& m : enumerate_by_degree(ctx, AlgebraSpec(2), 300))
      for (auto& [r, c] : q_action_on_monomial(ctx, AlgebraSpec(2), i, m)) EXPECT_EQ(weight(ctx, r), weight(ctx, m));
}

TEST(ModuleFromMonomials, Examples) {
  PrimeContext c3(3);
  QModule triv = module_from_monomials(c3, AlgebraSpec(1), {Monomial::unit()}, kFullMask);
  EXPECT_EQ(triv.total_dim(), 1u);
  EXPECT_EQ(triv.degrees(), std::vector<int64_t>{0});

  QModule B = module_from_monomials(c3, AlgebraSpec(1),
                                    {M("1"), M("xi1"), M("xi1^2"), M("xi1^3"), M("xi2"), M("tau2")}, kFullMask);
  EXPECT_EQ(B.total_dim(), 6u);
  auto t2 = *find_monomial(B, M("tau2"));
  EXPECT_EQ(B.apply(0, 17, t2.v), find_monomial(B, M("xi2"))->v);
  EXPECT_EQ(B.apply(1, 17, t2.v), find_monomial(B, M("xi1^3"))->v);
  EXPECT_EQ(B.apply(2, 17, t2.v), find_monomial(B, M("1"))->v);
  EXPECT_TRUE(verify_structure(B).ok);

  EXPECT_THROW(module_from_monomials(c3, AlgebraSpec(1), {M("tau2")}, mask_of({0})), ClosureError);
}

TEST(Suspend, Examples) {
  PrimeContext c3(3);
  QModule B = brown_gitler(c3, 1, 9);
  EXPECT_EQ(suspend(B, 0), B);
  QModule t = suspend(trivial_module(c3, kFullMask, 0), 4);
  EXPECT_EQ(t.degrees(), std::vector<int64_t>{4});
  EXPECT_EQ(suspend(suspend(B, c3.q()), -c3.q()), B);
  EXPECT_THROW(suspend(B, 3), MalformedInput);
}

TEST(DirectSum, ZeroIsUnit) {
  PrimeContext c3(3);
  QModule B = brown_gitler(c3, 1, 9);
  QModule s = direct_sum({B, zero_module(c3, kFullMask)});
  EXPECT_EQ(s.degrees(), B.degrees());
  for (int64_t d : B.degrees()) {
    EXPECT_EQ(s.dim(d), B.dim(d));
    for (int i = 0; i <= 2; ++i) EXPECT_EQ(s.action(i, d), B.action(i, d));
  }
}

TEST(Tensor, UnitAndEvenShift) {
  PrimeContext c3(3);
  QModule B = brown_gitler(c3, 1, 9);
  QModule u = tensor(trivial_module(c3, kFullMask, 0), B);
  QModule s = tensor(B, trivial_module(c3, kFullMask, 4));
  QModule b4 = suspend(B, 4);
  for (int64_t d : B.degrees()) {
    ASSERT_EQ(u.dim(d), B.dim(d));
    ASSERT_EQ(s.dim(d + 4), B.dim(d));
    for (int i = 0; i <= 2; ++i) {
      EXPECT_EQ(u.action(i, d), B.action(i, d));
      EXPECT_EQ(s.action(i, d + 4), b4.action(i, d + 4));
    }
  }
}

TEST(Tensor, DimensionsConvolve) {
  PrimeContext c5(5);
  QModule A = restrict_mask(brown_gitler(c5, 1, 30), mask_of({0, 1})), B = brown_gitler(c5, 0, 15);
  QModule T = tensor(A, B);
  for (int64_t d : T.degrees()) {
    size_t n = 0;
    for (int64_t a : A.degrees()) n += A.dim(a) * B.dim(d - a);
    EXPECT_EQ(T.dim(d), n);
  }
}

// Direct expansion of the Leibniz rule on basis tensors.
TEST(Tensor, LeibnizSignByExpansion) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    QModule A = brown_gitler(ctx, 1, p * p), B = free_module(ctx, kFullMask, {3});
    QModule T = tensor(A, B);
    for (int64_t d : T.degrees())
      for (size_t c = 0; c < T.dim(d); ++c) {
        // Recover (x, y) from the label text.
        const std::string& lab = T.labels(d)[c].text;
        auto cut = lab.find(" (x) ");
        std::string xs = lab.substr(0, cut), ys = lab.substr(cut + 5);
        int64_t dx = degree(ctx, parse_monomial(xs));
        int64_t dy = d - dx;
        size_t xi = 0, yi = 0;
        for (size_t k = 0; k < A.dim(dx); ++k)
          if (A.labels(dx)[k].text == xs) xi = k;
        for (size_t k = 0; k < B.dim(dy); ++k)
          if (B.labels(dy)[k].text == ys) yi = k;
        for (int i = 0; i <= 2; ++i) {
          int64_t td = d - ctx.q_drop(i);
          FpVector lhs = T.apply(i, d, basis_element(T, d, c).v);
          FpVector rhs(T.dim(td), 0);
          auto place = [&](int64_t ldeg, size_t li, int64_t rdeg, size_t ri, uint32_t coeff) {
            std::string want = A.labels(ldeg)[li].text + " (x) " + B.labels(rdeg)[ri].text;
            for (size_t k = 0; k < T.dim(td); ++k)
              if (T.labels(td)[k].text == want) rhs[k] = fp::add(rhs[k], coeff, p);
          };
          FpVector qx = A.apply(i, dx, basis_element(A, dx, xi).v);
          for (size_t r = 0; r < qx.size(); ++r)
            if (qx[r]) place(dx - ctx.q_drop(i), r, dy, yi, qx[r]);
          FpVector qy = B.apply(i, dy, basis_element(B, dy, yi).v);
          for (size_t r = 0; r < qy.size(); ++r)
            if (qy[r]) place(dx, xi, dy - ctx.q_drop(i), r, dx % 2 ? fp::neg(qy[r], p) : qy[r]);
          EXPECT_EQ(lhs, rhs) << lab << " Q" << i;
        }
      }
  }
}

TEST(Quotient, Examples) {
  PrimeContext c3(3);
  auto B = share(brown_gitler(c3, 1, 9));
  auto q0 = quotient(B, {});
  EXPECT_EQ(q0.module->total_dim(), B->total_dim());
  EXPECT_TRUE(is_isomorphism(q0.projection));

  std::vector<Element> all;
  for (int64_t d : B->degrees())
    for (size_t k = 0; k < B->dim(d); ++k) all.push_back(basis_element(*B, d, k));
  EXPECT_EQ(quotient(B, all).module->total_dim(), 0u);

  auto E = share(free_module(c3, mask_of({1, 2}), {0}, {"g"}));
  auto J = quotient(E, {basis_element(*E, -22, 0)});
  EXPECT_EQ(J.module->total_dim(), 3u);
  EXPECT_EQ(J.module->degrees(), (std::vector<int64_t>{-17, -5, 0}));
  EXPECT_TRUE(verify_map(J.projection).ok);
  EXPECT_TRUE(verify_structure(*J.module).ok);
}

TEST(Submodule, Examples) {
  PrimeContext c3(3);
  auto B = share(brown_gitler(c3, 1, 9));
  EXPECT_EQ(submodule_generated(B, {}).module->total_dim(), 0u);
  auto u = submodule_generated(B, {*find_monomial(*B, M("1"))});
  EXPECT_EQ(u.module->total_dim(), 1u);
  auto t = submodule_generated(B, {*find_monomial(*B, M("tau2"))});
  EXPECT_EQ(t.module->total_dim(), 4u);
  std::vector<std::string> labels;
  for (int64_t d : t.module->degrees())
    for (auto& l : t.module->labels(d)) labels.push_back(l.text);
  std::sort(labels.begin(), labels.end());
  EXPECT_EQ(labels, (std::vector<std::string>{"1", "tau2", "xi1^3", "xi2"}));
  EXPECT_TRUE(verify_map(t.inclusion).ok);
}

TEST(VerifyMap, Examples) {
  PrimeContext c3(3);
  auto B = share(brown_gitler(c3, 1, 9));
  EXPECT_TRUE(verify_map(QModuleMap::identity(B)).ok);
  EXPECT_TRUE(verify_map(QModuleMap(B, B, 0)).ok);
  // Identity except xi1^3 -> 0: f(Q1 tau2) = 0 but Q1 f(tau2) = xi1^3.
  QModuleMap f = QModuleMap::identity(B);
  FpMatrix m = FpMatrix::identity(3, B->dim(12));
  m.set(0, 0, 0);
  f.set_matrix(12, m);
  auto rep = verify_map(f);
  ASSERT_FALSE(rep.ok);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_NE(rep.failures[0].find("Q1"), std::string::npos);
  EXPECT_THROW(QModuleMap(B, B, -5), MalformedInput);
}

TEST(VerifyMap, WrongDimensionsReported) {
  PrimeContext c3(3);
  auto B = share(brown_gitler(c3, 1, 9));
  QModuleMap f(B, B, 0);
  f.set_matrix(0, FpMatrix(3, 2, 2));
  EXPECT_FALSE(verify_map(f).ok);
}

TEST(Properties, StructureOnConstructedModules) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    for (auto& M : sample_modules(ctx)) EXPECT_TRUE(verify_structure(M).ok);
    EXPECT_TRUE(verify_structure(bp_homology(ctx, 2, p == 3 ? 200 : 300)).ok);
    EXPECT_TRUE(verify_structure(bp_homology(ctx, -1, p == 3 ? 80 : 120)).ok);
  }
}

TEST(Properties, FaultInjectionDetected) {
  PrimeContext c3(3);
  // Q1 on Q0 g in the free module: breaks Q0Q1 + Q1Q0 = 0 on g.
  QModule F = free_module(c3, kFullMask, {0});
  EXPECT_FALSE(verify_structure(F.with_fault(1, -1, 0, 0)).ok);
  // In B_1(9) every composite lands in an empty degree, so no single entry is detectable.
  EXPECT_FALSE(first_detectable_fault(brown_gitler(c3, 1, 9)).has_value());
  // Below tau3 tau4 (degree 214) no composite of two Q's is nonzero on H_*BP<2> at p = 3.
  EXPECT_FALSE(first_detectable_fault(bp_homology(c3, 2, 213)).has_value());
  QModule H = bp_homology(c3, 2, 230);
  auto site = first_detectable_fault(H);
  ASSERT_TRUE(site.has_value());
  EXPECT_FALSE(verify_structure(H.with_fault(site->i, site->degree, site->row, site->col)).ok);
}

TEST(Properties, SubmodulePlusQuotientDims) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    for (auto& Mv : sample_modules(ctx)) {
      auto M = share(Mv);
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<Element> gens;
        auto degs = M->degrees();
        for (int g = 0; g < 2 && !degs.empty(); ++g) {
          int64_t d = degs[uniform(0, degs.size() - 1)];
          gens.push_back({d, random_vector(p, M->dim(d))});
        }
        auto sub = submodule_generated(M, gens);
        auto quo = quotient(M, gens);
        for (int64_t d : M->degrees()) EXPECT_EQ(M->dim(d), sub.module->dim(d) + quo.module->dim(d));
        EXPECT_TRUE(verify_structure(*sub.module).ok);
        EXPECT_TRUE(verify_structure(*quo.module).ok);
        EXPECT_TRUE(verify_map(sub.inclusion).ok);
        EXPECT_TRUE(verify_map(quo.projection).ok);
        QModuleMap zero = quo.projection.after(sub.inclusion);
        for (int64_t d : sub.module->degrees()) EXPECT_TRUE(zero.matrix(d).is_zero());
      }
    }
  }
}

TEST(Properties, FreeModuleRank) {
  PrimeContext c5(5);
  QModule F = free_module(c5, kFullMask, {0, 10, 11});
  EXPECT_EQ(F.total_dim(), 24u);
  QModule G = free_module(c5, mask_of({0, 2}), {0});
  EXPECT_EQ(G.total_dim(), 4u);
  EXPECT_TRUE(verify_structure(F).ok);
}

TEST(Json, RoundTrip) {
  for (uint32_t p : {3u, 5u}) {
    PrimeContext ctx(p);
    for (auto& M : sample_modules(ctx)) EXPECT_EQ(qmodule_from_json(nlohmann::json::parse(to_json(M).dump())), M);
    QModule H = bp_homology(ctx, 2, 60);
    QModule back = qmodule_from_json(to_json(H));
    EXPECT_EQ(back, H);
    EXPECT_EQ(back.top(), H.top());
  }
}

TEST(Json, RejectsBadInput) {
  nlohmann::json j = to_json(trivial_module(PrimeContext(3), kFullMask));
  j["schema"] = "other";
  EXPECT_THROW(qmodule_from_json(j), MalformedInput);
  j = to_json(brown_gitler(PrimeContext(3), 1, 9));
  j["degrees"][1]["actions"]["Q0"]["entries"] = {7};
  EXPECT_THROW(qmodule_from_json(j), MalformedInput);
}
