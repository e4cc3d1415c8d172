#include <gtest/gtest.h>

#include <cmath>

#include "lob/analytics.hpp"
#include "lob/coupling.hpp"
#include "lob/dist_config.hpp"

using namespace lob;

namespace {

const MatchRule kOrdinary = MatchRule::ordinary();

}  // namespace

TEST(ExtraOrder, ExtraBidStaysOneOrder) {
  const CouplingReport r = check_extra_order({}, {Side::bid, 0.9, 0}, ArrivalStream{1, 10000, ArrivalSpec{}}, kOrdinary);
  EXPECT_EQ(r.arrivals, 10000u);
  EXPECT_EQ(r.violations, 0u) << (r.first ? r.first->observed : "");
  EXPECT_EQ(r.max_difference, 1u);
}

TEST(ExtraOrder, ExtraAskStaysOneOrder) {
  const CouplingReport r = check_extra_order({}, {Side::ask, 0.1, 0}, ArrivalStream{2, 10000, ArrivalSpec{}}, kOrdinary);
  EXPECT_TRUE(r.passed());
}

TEST(ExtraOrder, NoArrivalsLeavesTheExtraOrder) {
  BookState base;
  base.insert(Side::ask, 0.95);
  BookState plus = base;
  plus.insert(Side::bid, 0.9);
  const BookDiff d = BookDiff::between(base, plus);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.entries().begin()->first, (BookDiff::Key{Side::bid, 0.9}));
  EXPECT_EQ(d.entries().begin()->second, 1);
  const CouplingReport r = check_extra_order(base, {Side::bid, 0.9, 0}, ArrivalStream{1, 0, ArrivalSpec{}}, kOrdinary);
  EXPECT_EQ(r.arrivals, 0u);
  EXPECT_TRUE(r.passed());
}

TEST(ExtraOrder, CrossingExtraOrderIsRejected) {
  BookState base;
  base.insert(Side::ask, 0.5);
  EXPECT_THROW(check_extra_order(base, {Side::bid, 0.6, 0}, ArrivalStream{1, 10, ArrivalSpec{}}, kOrdinary),
               std::invalid_argument);
}

TEST(ExtraOrder, HoldsForBinnedRulesAndOtherLaws) {
  const MatchRule binned = MatchRule::ordinary_binned(BinPartition::equal_width(20));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    EXPECT_TRUE(check_extra_order({}, {Side::bid, 0.83, 0}, ArrivalStream{seed, 20000, named_arrival_spec("mixed")},
                                  binned)
                    .passed());
  }
}

TEST(BoundedPerturbation, NoEditsMeansIdenticalBooks) {
  const CouplingReport r = check_bounded_perturbation({}, {}, ArrivalStream{3, 10000, ArrivalSpec{}}, kOrdinary, 0);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.max_difference, 0u);
}

TEST(BoundedPerturbation, SingleAddedBid) {
  const std::vector<Edit> edits = {{0, Side::bid, true, 0.9}};
  const CouplingReport r = check_bounded_perturbation({}, edits, ArrivalStream{3, 10000, ArrivalSpec{}}, kOrdinary, 1);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.max_difference, 1u);
}

TEST(BoundedPerturbation, ThreeEdits) {
  const std::vector<Edit> edits = {
      {0, Side::bid, true, 0.15}, {0, Side::bid, true, 0.12}, {100, Side::ask, false, std::nullopt}};
  const CouplingReport r = check_bounded_perturbation({}, edits, ArrivalStream{4, 10000, ArrivalSpec{}}, kOrdinary, 3);
  EXPECT_TRUE(r.passed());
  EXPECT_LE(r.max_difference, 3u);
  EXPECT_THROW(check_bounded_perturbation({}, edits, ArrivalStream{4, 10, ArrivalSpec{}}, kOrdinary, 2),
               std::invalid_argument);
}

TEST(Refinement, OrdinaryCoarseBookHasFewerOrders) {
  const CouplingReport r = check_refinement(BinPartition::equal_width(100), BinPartition::equal_width(10),
                                            RefinementKind::ordinary, ArrivalStream{5, 100000, ArrivalSpec{}});
  EXPECT_EQ(r.violations, 0u) << (r.first ? r.first->observed : "");
}

TEST(Refinement, StrictCoarseBookHasMoreOrders) {
  const CouplingReport r = check_refinement(BinPartition::equal_width(100), BinPartition::equal_width(10),
                                            RefinementKind::strict, ArrivalStream{5, 100000, ArrivalSpec{}});
  EXPECT_EQ(r.violations, 0u) << (r.first ? r.first->observed : "");
}

TEST(Refinement, IdenticalPartitionsAgree) {
  const BinPartition p = BinPartition::equal_width(10);
  for (RefinementKind k : {RefinementKind::ordinary, RefinementKind::strict}) {
    EXPECT_TRUE(check_refinement(p, p, k, ArrivalStream{6, 20000, ArrivalSpec{}}).passed());
  }
}

TEST(Refinement, UnevenPartitionsAndInitialBook) {
  const BinPartition coarse({0.0, 1.0}, {0.3, 0.55});
  const BinPartition fine({0.0, 1.0}, {0.1, 0.3, 0.42, 0.55, 0.8});
  BookState init;
  init.insert(Side::bid, 0.2);
  init.insert(Side::ask, 0.9);
  for (RefinementKind k : {RefinementKind::ordinary, RefinementKind::strict}) {
    EXPECT_TRUE(check_refinement(fine, coarse, k, ArrivalStream{7, 50000, ArrivalSpec{}}, init).passed());
  }
}

TEST(Refinement, RejectsNonRefinement) {
  EXPECT_THROW(check_refinement(BinPartition::equal_width(10), BinPartition::equal_width(3), RefinementKind::ordinary,
                                ArrivalStream{1, 10, ArrivalSpec{}}),
               std::invalid_argument);
}

TEST(Sandwich, OrderedAndNearThreshold) {
  const double kappa = kappa_uniform_exact().kappa_b;
  const SandwichEstimate s100 = estimate_sandwich(100, ArrivalSpec{}, 1'000'000, 3);
  EXPECT_GE(s100.strict.kappa_b, s100.fine.kappa_b);
  EXPECT_GE(s100.fine.kappa_b, s100.coarse.kappa_b);
  EXPECT_NEAR(s100.strict.kappa_b, kappa, 0.03);
  EXPECT_NEAR(s100.fine.kappa_b, kappa, 0.03);
  const SandwichEstimate s10 = estimate_sandwich(10, ArrivalSpec{}, 1'000'000, 3);
  EXPECT_LT(std::abs(s100.strict.kappa_b - s100.fine.kappa_b), std::abs(s10.strict.kappa_b - s10.fine.kappa_b));
}

TEST(Sandwich, RejectsSmallOrOddN) {
  EXPECT_THROW(estimate_sandwich(2, ArrivalSpec{}, 100, 1), std::domain_error);
  EXPECT_THROW(estimate_sandwich(7, ArrivalSpec{}, 100, 1), std::domain_error);
}

TEST(Perturbation, IdenticalLawsCoupleCompletely) {
  const PerturbedStreams p = perturb_arrivals(ArrivalSpec{}, ArrivalSpec{}, 20000, 1);
  EXPECT_EQ(p.only_a, 0u);
  EXPECT_EQ(p.only_b, 0u);
  EXPECT_DOUBLE_EQ(p.diff_rate, 0.0);
  ASSERT_EQ(p.a.size(), p.b.size());
  for (std::size_t i = 0; i < p.a.size(); ++i) EXPECT_EQ(p.a[i].order.price, p.b[i].order.price);
}

TEST(Perturbation, ZeroEvents) {
  const PerturbedStreams p = perturb_arrivals(ArrivalSpec{}, named_arrival_spec("mixed"), 0, 1);
  EXPECT_TRUE(p.a.empty());
  EXPECT_TRUE(p.b.empty());
}

TEST(Perturbation, UncoupledRateMatchesTotalVariation) {
  const PerturbationOutcome o = perturbation_experiment(ArrivalSpec{}, named_arrival_spec("mixed"), 400000, 2);
  const PerturbedStreams& p = o.streams;
  EXPECT_NEAR(p.predicted_rate, 0.025, 1e-9);
  const double count = static_cast<double>(p.only_a + p.only_b);
  EXPECT_NEAR(p.uncoupled_rate, p.predicted_rate, 5.0 * std::sqrt(count) / p.elapsed);
  EXPECT_TRUE(o.pathwise.passed());
  EXPECT_LE(std::abs(o.kappa_a.kappa_b - o.kappa_b.kappa_b), p.diff_rate + 0.02);
}
