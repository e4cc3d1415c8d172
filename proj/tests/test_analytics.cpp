#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "lob/analytics.hpp"
#include "lob/dist_config.hpp"
#include "lob/errors.hpp"

using namespace lob;

TEST(LambertW, SolvesDefiningEquation) {
  const double w = lambert_w_of_inv_e();
  EXPECT_NEAR(w, 0.278465, 1e-6);
  EXPECT_LE(std::abs(w * std::exp(w) - std::exp(-1.0)), 1e-14);
}

TEST(ClosedForm, Thresholds) {
  const KappaPair k = kappa_uniform_exact();
  EXPECT_GE(k.kappa_b, 0.2177);
  EXPECT_LE(k.kappa_b, 0.2179);
  EXPECT_DOUBLE_EQ(k.kappa_a, 1.0 - k.kappa_b);
}

TEST(ClosedForm, DensityEndpoints) {
  const double k = kappa_uniform_exact().kappa_b;
  EXPECT_NEAR(varpi_uniform_exact(k), 1.0 / k, 1e-12);
  EXPECT_NEAR(varpi_uniform_exact(0.5), 2.0 * (1.0 - k), 1e-15);
  EXPECT_NEAR(varpi_uniform_exact(1.0 - k), 0.0, 1e-12);
  EXPECT_THROW(varpi_uniform_exact(0.1), std::domain_error);
  EXPECT_THROW(varpi_uniform_exact(0.9), std::domain_error);
}

TEST(Integrate, ExactThresholdHitsBoundaryConditions) {
  const double k = kappa_uniform_exact().kappa_b;
  const VarpiPath p = integrate_varpi(ArrivalSpec{}, k, 1000);
  EXPECT_NEAR(p.u_end, 0.0, 1e-6);
  EXPECT_NEAR(p.v_end, 1.0, 1e-4);
  EXPECT_DOUBLE_EQ(p.x.front(), k);
  EXPECT_NEAR(p.x.back(), 1.0 - k, 1e-15);
}

TEST(Integrate, SignFlipsAcrossThreshold) {
  const double hi = integrate_varpi(ArrivalSpec{}, 0.30, 200).u_end;
  const double lo = integrate_varpi(ArrivalSpec{}, 0.15, 200).u_end;
  EXPECT_NE(hi < 0.0, lo < 0.0);
}

TEST(Integrate, RejectsLevelsOutsideHalfInterval) {
  EXPECT_THROW(integrate_varpi(ArrivalSpec{}, 0.6, 100), std::domain_error);
  EXPECT_THROW(integrate_varpi(ArrivalSpec{}, 0.0, 100), std::domain_error);
}

TEST(Shooting, MatchesClosedForm) {
  const auto t0 = std::chrono::steady_clock::now();
  const VarpiSolution s = shoot_kappa(ArrivalSpec{});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const KappaPair k = kappa_uniform_exact();
  EXPECT_NEAR(s.kappa_b, k.kappa_b, 1e-6);
  EXPECT_NEAR(s.kappa_a, k.kappa_a, 1e-6);
  EXPECT_NEAR(s.v_end, 1.0, 1e-4);
  double sup = 0.0;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    sup = std::max(sup, std::abs(s.varpi_b[i] - varpi_uniform_exact(s.grid[i])));
  }
  EXPECT_LE(sup, 1e-4);
  EXPECT_GE(s.grid.size(), 1001u);
  EXPECT_NEAR(s.mass_b, 1.0, 1e-4);
  EXPECT_NEAR(s.mass_a, 1.0, 1e-4);
  EXPECT_LT(secs, 1.0);
}

TEST(Shooting, ReflectionSymmetricLaw) {
  const ArrivalSpec spec{0.5, PriceDist::piecewise_linear({0.0, 1.0}, {1.2, 0.8}),
                         PriceDist::piecewise_linear({0.0, 1.0}, {0.8, 1.2})};
  ShootOptions o;
  o.lower_level = 0.05;
  const VarpiSolution s = shoot_kappa(spec, o);
  EXPECT_NEAR(s.kappa_a, 1.0 - s.kappa_b, 1e-8);
  EXPECT_NEAR(s.v_end, 1.0, 1e-4);
}

TEST(Shooting, MixedLawNeedsLowerLevel) {
  const ArrivalSpec spec = named_arrival_spec("mixed");
  EXPECT_FALSE(finiteness_certificate(spec).has_value());
  EXPECT_THROW(shoot_kappa(spec), numeric_error);
  ShootOptions o;
  o.lower_level = 0.1;
  const VarpiSolution s = shoot_kappa(spec, o);
  EXPECT_NEAR(spec.bid.cdf(s.kappa_b), 1.0 - spec.ask.cdf(s.kappa_a), 1e-12);
  EXPECT_NEAR(s.mass_b, 1.0, 1e-4);
  EXPECT_LT(s.fb_kappa, kappa_uniform_exact().kappa_b);
}

TEST(Shooting, NoThresholdForTriangularLaw) {
  ShootOptions o;
  o.lower_level = 0.01;
  EXPECT_THROW(shoot_kappa(named_arrival_spec("triangular"), o), numeric_error);
}

TEST(ThreeBin, Values) {
  using R = boost::rational<std::int64_t>;
  EXPECT_EQ(lower_bound_3bin(R(2, 5), R(3, 5)), R(1, 10));
  EXPECT_EQ(lower_bound_3bin(R(1, 3), R(2, 3)), R(1, 9));
  EXPECT_EQ(lower_bound_3bin(R(1, 4), R(3, 4)), R(1, 10));
  EXPECT_NEAR(lower_bound_3bin(0.4, 0.6), 0.1, 1e-15);
  EXPECT_NEAR(lower_bound_3bin(1.0 / 3.0, 2.0 / 3.0), 1.0 / 9.0, 1e-15);
  EXPECT_LE(lower_bound_3bin(0.25, 0.75), kappa_uniform_exact().kappa_b);
  EXPECT_THROW(lower_bound_3bin(0.6, 0.4), std::domain_error);
  EXPECT_THROW(lower_bound_3bin(R(1, 2), R(1, 2)), std::domain_error);
}

TEST(ThreeBin, CertificateForUniform) {
  const auto c = finiteness_certificate(ArrivalSpec{});
  ASSERT_TRUE(c.has_value());
  EXPECT_NEAR(c->bound, 1.0 / 9.0, 1e-6);
  EXPECT_LE(c->bound, kappa_uniform_exact().kappa_b);
}

TEST(BinnedPi, ContinuumLimit) {
  const ArrivalSpec spec;
  const VarpiSolution s = shoot_kappa(spec);
  const BinPartition bins = BinPartition::equal_width(100);
  const std::size_t kb = bins.bin_of(s.kappa_b), ka = bins.bin_of(s.kappa_a);
  EXPECT_EQ(kb, 21u);
  EXPECT_EQ(ka, 78u);
  const BinnedPi pi = solve_binned_pi(spec, bins, kb, ka, s.fb_kappa);
  EXPECT_TRUE(pi.feasible);
  EXPECT_LT(pi.residual, 1e-12);
  double sb = 0.0, sa = 0.0;
  for (double v : pi.pi_b) sb += v;
  for (double v : pi.pi_a) sa += v;
  EXPECT_NEAR(sb, 1.0, 1e-12);
  EXPECT_NEAR(sa, 1.0, 1e-12);
  for (std::size_t k = kb + 2; k + 2 < ka; ++k) {
    EXPECT_NEAR(pi.pi_b[k] / 0.01, varpi_uniform_exact(bins.upper(k)), 0.05) << k;
  }
  EXPECT_LE(pi.pi_b[ka] / 0.01, 2.0 * 0.01);
  const BinnedVarpi ref = bin_varpi(s, spec, bins);
  EXPECT_LT(total_variation(pi.pi_b, ref.b), 0.05);
}

TEST(BinnedPi, BinIntegralsOfVarpi) {
  const VarpiSolution s = shoot_kappa(ArrivalSpec{});
  const BinnedVarpi m = bin_varpi(s, ArrivalSpec{}, BinPartition::equal_width(100));
  double total = 0.0;
  for (double v : m.b) total += v;
  EXPECT_NEAR(total, 1.0, 1e-4);
  EXPECT_NEAR(m.b[50], varpi_uniform_exact(0.505) * 0.01, 1e-5);
  EXPECT_DOUBLE_EQ(m.b[10], 0.0);
}

TEST(TotalVariation, HalfL1) {
  EXPECT_DOUBLE_EQ(total_variation({0.5, 0.5}, {1.0, 0.0}), 0.5);
  EXPECT_THROW(total_variation({1.0}, {0.5, 0.5}), std::invalid_argument);
}
