#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <boost/rational.hpp>

#include "json.hpp"
#include "lob/dist.hpp"
#include "lob/trace_io.hpp"

namespace lob {

/// Unique w > 0 with w e^w = 1/e.
double lambert_w_of_inv_e();

struct KappaPair {
  double kappa_b = 0.0;
  double kappa_a = 0.0;
};

/// Thresholds for uniform bids and asks: kappa_b = w/(w+1), kappa_a = 1 - kappa_b.
KappaPair kappa_uniform_exact();

/// (1-k)(1/x + log((1-x)/x)) on [k, 1-k]; std::domain_error elsewhere.
double varpi_uniform_exact(double x);

/// Solution of u' = -f_a v/(1-F_b), v' = f_b u/F_a from kappa_b (u=1, v=0)
/// to kappa_a = Q_a(1 - F_b(kappa_b)), where u = F_a varpi_b and
/// v = (1-F_b) varpi_a is the accumulated bid mass.
struct VarpiPath {
  double kappa_b = 0.0;
  double kappa_a = 0.0;
  std::vector<double> x;
  std::vector<double> u;
  std::vector<double> v;
  double u_end = 0.0;
  double v_end = 0.0;
};

/// Observes the path on grid_n + 1 equispaced points plus density
/// breakpoints. Throws std::domain_error when F_b(kappa_b) is not in (0, 1/2)
/// and numeric_error at a singular coefficient.
VarpiPath integrate_varpi(const ArrivalSpec& spec, double kappa_b, std::size_t grid_n);

struct ShootOptions {
  double tol = 1e-10;
  std::size_t grid_n = 1000;
  std::size_t scan_points = 64;
  /// Lower end of the scanned F_b levels. Without it a 3-bin finiteness
  /// certificate must exist.
  std::optional<double> lower_level;
};

struct VarpiSolution {
  double kappa_b = 0.0;
  double kappa_a = 0.0;
  double fb_kappa = 0.0;
  double lower_level = 0.0;
  std::vector<double> grid;
  std::vector<double> varpi_b;
  std::vector<double> varpi_a;
  double mass_b = 0.0;
  double mass_a = 0.0;
  double u_end = 0.0;
  double v_end = 0.0;
  std::size_t bisections = 0;
};

VarpiSolution shoot_kappa(const ArrivalSpec& spec, const ShootOptions& options = {});

/// (2X(1-X) - (1-Y)) / ((1-X) + (Y-X)); needs 0 < X < Y < 1.
double lower_bound_3bin(double x_level, double y_level);
/// Same in exact arithmetic.
boost::rational<std::int64_t> lower_bound_3bin(boost::rational<std::int64_t> x_level,
                                               boost::rational<std::int64_t> y_level);

struct FinitenessCertificate {
  double x_level = 0.0;
  double y_level = 0.0;
  double bound = 0.0;
};

/// Best positive 3-bin bound over prices x < y with F_b(x) = 1 - F_a(y) and
/// F_b(y) = 1 - F_a(x); empty when none is found.
std::optional<FinitenessCertificate> finiteness_certificate(const ArrivalSpec& spec);

struct BinnedPi {
  std::size_t k_b = 0;
  std::size_t k_a = 0;
  std::vector<double> pi_b;
  std::vector<double> pi_a;
  double fb_kappa = 0.0;
  double residual = 0.0;
  bool feasible = false;  ///< every mass is nonnegative
};

struct BinnedPiOptions {
  /// Move F_b(kappa_b) within bin k_b so that pi_b(k_a) = 0.
  bool calibrate = true;
};

/// Balance equations of the binned book between bins k_b and k_a with
/// normalized masses, solved directly.
BinnedPi solve_binned_pi(const ArrivalSpec& spec, const BinPartition& bins, std::size_t k_b, std::size_t k_a,
                         double fb_kappa, const BinnedPiOptions& options = {});

struct BinnedVarpi {
  std::vector<double> b;  ///< integral of varpi_b f_b over each bin
  std::vector<double> a;  ///< integral of varpi_a f_a over each bin
};

/// Bin integrals of the linear interpolant of varpi * f on the solution grid.
BinnedVarpi bin_varpi(const VarpiSolution& sol, const ArrivalSpec& spec, const BinPartition& bins);

/// Half the l1 distance; the vectors must have equal length.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// x,varpi_b,varpi_a,density_b,density_a
void write_varpi_csv(std::ostream& out, const VarpiSolution& sol, const ArrivalSpec& spec, const OutputTag& tag);
nlohmann::json varpi_summary(const VarpiSolution& sol);

}  // namespace lob
