#include <gtest/gtest.h>

#include <cmath>

#include "lob/lyapunov.hpp"

using namespace lob;

namespace {

const Rational kZero{0};

Rational q(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

}  // namespace

TEST(Regions, CodesRoundTrip) {
  for (Region r : kAllRegions) EXPECT_EQ(region_from_code(code(r)), r);
  EXPECT_FALSE(region_from_code("+-+").has_value());
}

TEST(Regions, FromBins) {
  EXPECT_EQ(region_of_bins(0, 4), Region::zzz);
  EXPECT_EQ(region_of_bins(3, 4), Region::ppp);
  EXPECT_EQ(region_of_bins(0, 1), Region::mmm);
  EXPECT_EQ(region_of_bins(2, 3), Region::ppm);
  EXPECT_EQ(region_of_bins(1, 2), Region::pmm);
  EXPECT_EQ(region_of_bins(1, 4), Region::p00);
  EXPECT_EQ(region_of_bins(2, 4), Region::pp0);
  EXPECT_EQ(region_of_bins(0, 2), Region::zmm);
  EXPECT_EQ(region_of_bins(0, 3), Region::z0m);
  EXPECT_EQ(region_of_bins(1, 3), Region::p0m);
}

TEST(Regions, Compatibility) {
  EXPECT_TRUE(compatible(Region::ppp, Region::pp0));
  EXPECT_TRUE(compatible(Region::pp0, Region::p00));
  EXPECT_FALSE(compatible(Region::p0m, Region::pp0));
  EXPECT_TRUE(compatible(Region::ppm, Region::p0m));
}

TEST(DriftDot, PrintedValues) {
  EXPECT_EQ(drift_dot(Region::ppp, Region::ppp, kZero), q(-2, 5));
  EXPECT_EQ(drift_dot(Region::ppm, Region::ppm, kZero), q(-4, 5));
  EXPECT_EQ(drift_dot(Region::ppm, Region::ppm, q(1, 10)), q(-4, 5));
  EXPECT_EQ(drift_dot(Region::ppp, Region::pp0, kZero), q(-1, 15));
  EXPECT_THROW(drift_dot(Region::p0m, Region::pp0, kZero), std::domain_error);
  EXPECT_THROW(drift_dot(Region::zzz, Region::ppp, kZero), std::domain_error);
}

TEST(Certificate, PassesAtZero) {
  const DriftCertificate c = certify_drift(kZero);
  EXPECT_TRUE(c.passed);
  EXPECT_TRUE(c.failures.empty());
  EXPECT_GT(c.eps_sup, kZero);
  EXPECT_EQ(c.eps_sup, q(1, 30));
  EXPECT_EQ(c.worst_at_zero, q(-1, 25));
  for (const PairValue& p : c.pairs) EXPECT_LT(p.at_zero, kZero);
}

TEST(Certificate, ReportsBreakingEps) {
  EXPECT_TRUE(certify_drift(q(1, 100)).passed);
  const DriftCertificate c = certify_drift(q(1, 20));
  EXPECT_FALSE(c.passed);
  EXPECT_EQ(c.eps_sup, q(1, 30));
  EXPECT_FALSE(c.failures.empty());
  EXPECT_THROW(certify_drift(q(1, 5)), std::domain_error);
  EXPECT_THROW(certify_drift(q(-1, 10)), std::domain_error);
}

TEST(Certificate, TamperedNormalFails) {
  NormalTable normals = printed_normals();
  normals[Region::ppp] = {q(-1), q(-1), q(-1)};
  const DriftCertificate c = certify_drift(kZero, printed_drift_table(), normals);
  EXPECT_FALSE(c.passed);
  ASSERT_FALSE(c.failures.empty());
  EXPECT_EQ(c.failures.front().drift, Region::ppp);
  EXPECT_EQ(c.failures.front().normal, Region::ppp);
  EXPECT_EQ(c.failures.front().at_zero, q(2, 5));
}

TEST(Certificate, LargerThirdCoordinateKeepsSign) {
  NormalTable normals = printed_normals();
  normals[Region::ppp] = {q(1), q(1), q(2)};
  EXPECT_EQ(drift_dot(Region::ppp, Region::ppp, kZero, printed_drift_table(), normals), q(-6, 5));
}

TEST(Enumeration, OneArrivalDrifts) {
  const DriftTable t = enumerate_drift_table();
  const Rational e = q(1, 50);
  auto at = [&](Region r) {
    const AffineVec& v = t.at(r);
    return RationalVec{v[0].at(e), v[1].at(e), v[2].at(e)};
  };
  EXPECT_EQ(at(Region::ppp), (RationalVec{q(1, 5) - e, q(1, 5), q(-3, 5)}));
  EXPECT_EQ(at(Region::ppm), (RationalVec{q(1, 5) - e, q(-2, 5), q(1, 5) + e}));
  EXPECT_EQ(at(Region::mmm), (RationalVec{q(3, 5), q(-1, 5), q(-1, 5) + e}));
  EXPECT_EQ(at(Region::p00), (RationalVec{q(-1, 5) - e, kZero, kZero}));
  EXPECT_EQ(at(Region::z0m), (RationalVec{kZero, kZero, q(1, 5) + e}));
  EXPECT_EQ(t.size(), 9u);
}

TEST(Enumeration, MirrorSymmetry) {
  const DriftTable t = enumerate_drift_table();
  const std::pair<Region, Region> mirror[] = {{Region::ppp, Region::mmm}, {Region::ppm, Region::pmm},
                                             {Region::pp0, Region::zmm}, {Region::p00, Region::z0m},
                                             {Region::p0m, Region::p0m}};
  for (auto [r, m] : mirror) {
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(t.at(r)[i].c0, -t.at(m)[2 - i].c0) << code(r);
      EXPECT_EQ(t.at(r)[i].c1, -t.at(m)[2 - i].c1) << code(r);
    }
  }
}

TEST(Lyapunov, Values) {
  EXPECT_EQ(lyapunov_value({0, 0, 0}), kZero);
  const Rational v = lyapunov_value({1, 1, -1});
  EXPECT_LE(v, q(-1));
  EXPECT_GE(lyapunov_value_max({1, 1, -1}), q(3));
}

TEST(Lyapunov, LevelFixtureShape) {
  const LevelSetFixture f = printed_level_set();
  EXPECT_EQ(f.vertices.size(), 15u);
  EXPECT_EQ(f.faces.size(), 10u);
  for (const auto& face : f.faces) {
    for (std::size_t v : face) {
      EXPECT_GE(v, 1u);
      EXPECT_LE(v, 15u);
    }
  }
  const LevelReport r = verify_level_fixture();
  EXPECT_EQ(r.vertices.size(), 15u);
  EXPECT_EQ(r.faces.size(), 10u);
}

TEST(FiveBin, EmpiricalDriftMatchesEnumeration) {
  const double eps = 0.01;
  const FiveBinReport rep = simulate_5bin(eps, 400000, 3);
  const DriftTable t = enumerate_drift_table();
  const Rational e = q(1, 100);
  for (Region r : kDriftRegions) {
    const RegionStats& s = rep.regions.at(r);
    ASSERT_GT(s.visits, 5000u) << code(r);
    for (std::size_t i = 0; i < 3; ++i) {
      const double want = boost::rational_cast<double>(t.at(r)[i].at(e));
      EXPECT_NEAR(s.mean_dx[i], want, 5.0 * s.se_dx[i] + 1e-12) << code(r) << ' ' << i;
    }
  }
}

TEST(FiveBin, Deterministic) {
  const FiveBinReport a = simulate_5bin(0.01, 20000, 9);
  const FiveBinReport b = simulate_5bin(0.01, 20000, 9);
  EXPECT_EQ(a.max_norm, b.max_norm);
  EXPECT_EQ(a.return_times, b.return_times);
}

TEST(GeometricBound, UniformMiddleRegion) {
  const GeometricBoundReport g = check_geometric_bound(0.4, 0.6, ArrivalSpec{}, 400000, 1);
  EXPECT_NEAR(g.rho_b, 0.5, 1e-12);
  EXPECT_NEAR(g.rho_a, 0.5, 1e-12);
  EXPECT_TRUE(g.passed);
  ASSERT_GT(g.tail_b.size(), 5u);
  EXPECT_LE(g.tail_b[5], g.bound_b[5]);
}

TEST(GeometricBound, Preconditions) {
  EXPECT_NO_THROW(check_geometric_bound(0.35, 0.65, ArrivalSpec{}, 1000, 1));
  EXPECT_THROW(check_geometric_bound(0.2, 0.8, ArrivalSpec{}, 1000, 1), std::domain_error);
  EXPECT_THROW(check_geometric_bound(0.6, 0.4, ArrivalSpec{}, 1000, 1), std::domain_error);
}

TEST(GeometricBound, NarrowRegionIsNearlyEmpty) {
  const GeometricBoundReport g = check_geometric_bound(0.495, 0.505, ArrivalSpec{}, 100000, 2);
  EXPECT_LT(g.rho_b, 0.03);
  EXPECT_LT(g.tail_b[1], 0.05);
  EXPECT_TRUE(g.passed);
}

TEST(RunningMax, EmptyRun) {
  const RunMaxEvidence e = running_max_evidence(ArrivalSpec{}, 0, 1, 100, 21, 78);
  EXPECT_TRUE(e.series.empty());
  EXPECT_EQ(e.last_jump, 0u);
}

TEST(RunningMax, ReplayExtendsShortRun) {
  const RunMaxEvidence e = running_max_evidence(ArrivalSpec{}, 20000, 4, 100, 21, 78);
  EXPECT_FALSE(e.series.empty());
  EXPECT_GE(e.max_2n, e.max_n);
  EXPECT_LE(e.last_jump, 20000u);
  EXPECT_GE(e.last_jump_fraction, 0.0);
  EXPECT_LE(e.last_jump_fraction, 1.0);
  EXPECT_THROW(running_max_evidence(ArrivalSpec{}, 10, 1, 100, 80, 20), std::invalid_argument);
}
