#include <gtest/gtest.h>

#include <stdexcept>

#include "bpsplit/obstruction.hpp"
#include "bpsplit/parallel.hpp"
#include "support.hpp"

using namespace bpsplit;

TEST(Propiso, BothResidueFields) {
  auto r = propiso_check(PrimeContext(3), 0, 0, 6);
  EXPECT_TRUE(r.odd_cells.empty());
  EXPECT_TRUE(r.u1_cells.empty());
  EXPECT_TRUE(r.ok());
}

TEST(Propiso, TauClassOfB9MatchesRelation) {
  // Ext^0(C̄_9, F_p) has the odd class τ2 ↦ 1 at (0,-17); on the P side it is the dual of the
  // relation v2 g0 + v1 g3 + v0 g4 at (1,17), seen in u = 1 at r = -1.
  auto r = propiso_check(PrimeContext(3), 9, 0, 6);
  EXPECT_EQ(r.odd_cells, (std::map<Bidegree, size_t>{{{0, -17}, 1}}));
  EXPECT_EQ(r.u1_cells, (std::map<Bidegree, size_t>{{{0, -17}, 1}}));
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.cells_ok());
}

TEST(Propiso, AllSmallPairsAgreePerTAndPerCell) {
  PrimeContext c3(3);
  for (int64_t k = 0; k <= 9; ++k) {
    ComparisonSource src(c3, k, 5);
    for (int64_t m = 0; m <= 9; ++m) {
      auto r = propiso_check(src, m);
      EXPECT_TRUE(r.ok()) << "k=" << k << " m=" << m << " " << r.to_json().dump();
      EXPECT_TRUE(r.cells_ok()) << "k=" << k << " m=" << m;
    }
  }
}

TEST(Propiso, AgreesAtLargerWeightWithHigherFiltration) {
  PrimeContext c3(3);
  ComparisonSource src(c3, 27, 4);
  size_t high = 0;
  for (int64_t m : {0, 9, 27}) {
    auto r = propiso_check(src, m);
    EXPECT_TRUE(r.ok()) << m;
    EXPECT_TRUE(r.cells_ok()) << m;
    for (auto& [c, n] : r.odd_cells)
      if (c.first >= 2) high += n;
  }
  EXPECT_GT(high, 0u);
}

TEST(Propiso, IncompleteResolutionIsNotCertified) {
  // Cutting the P-resolution at the filtration of the last relation leaves no stabilization margin.
  PrimeContext c3(3);
  ComparisonSource src(c3, 9, 3, 1);
  auto r = propiso_check(src, 0);
  EXPECT_FALSE(r.certified);
  EXPECT_FALSE(r.ok());
}

TEST(Obstruction, WeightZeroHasNone) {
  auto o = obstruction_report(PrimeContext(3), 0, 20, 5);
  EXPECT_TRUE(o.classes.empty());
  EXPECT_TRUE(o.all_matched());
  EXPECT_EQ(o.verdict(), "theta_0 survives at E_2-comparison level");
}

TEST(Obstruction, WeightNineAllMatched) {
  auto o = obstruction_report(PrimeContext(3), 9, 18, 5);
  EXPECT_TRUE(o.all_matched());
  for (auto& c : o.classes) EXPECT_GE(c.s, 2);
}

TEST(Obstruction, WeightTwentySevenHasMatchedClasses) {
  PrimeContext c3(3);
  auto o = obstruction_report(c3, 27, 12, 4, 2);
  EXPECT_GT(o.total(), 0u);
  EXPECT_TRUE(o.all_matched());
  for (auto& c : o.classes) {
    EXPECT_GE(c.s, 2);
    EXPECT_EQ(((c.t - c.s) % 2 + 2) % 2, 1);
    EXPECT_TRUE(c.in_cbar_summand);
  }
  // Deterministic regardless of worker count.
  EXPECT_EQ(obstruction_report(c3, 27, 12, 4, 1).to_json().dump(), o.to_json().dump());
}

TEST(Obstruction, FiltrationBelowTwoExcluded) {
  // k = 9 has an odd class at s = 0 against F_p that must not be reported.
  auto o = obstruction_report(PrimeContext(3), 9, 0, 5);
  EXPECT_TRUE(o.classes.empty());
}

TEST(ParallelMap, PreservesOrderAndPropagatesErrors) {
  auto sq = parallel_map(100, 4, [](size_t i) { return i * i; });
  for (size_t i = 0; i < 100; ++i) EXPECT_EQ(sq[i], i * i);
  EXPECT_TRUE(parallel_map(0, 3, [](size_t i) { return i; }).empty());
  EXPECT_THROW(parallel_map(10, 3,
                            [](size_t i) -> int {
                              if (i == 7) throw std::runtime_error("boom");
                              return 0;
                            }),
               std::runtime_error);
}
