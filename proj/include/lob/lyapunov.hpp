#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "lob/dist.hpp"
#include "lob/sim.hpp"

namespace lob {

using Rational = boost::rational<std::int64_t>;

/// c0 + c1 * eps
struct Affine {
  Rational c0{0};
  Rational c1{0};

  Rational at(Rational eps) const { return c0 + c1 * eps; }
  Affine operator+(const Affine& o) const { return {c0 + o.c0, c1 + o.c1}; }
  Affine operator*(Rational k) const { return {c0 * k, c1 * k}; }
  bool operator==(const Affine&) const = default;
};

using AffineVec = std::array<Affine, 3>;
using RationalVec = std::array<Rational, 3>;
using IntVec = std::array<std::int64_t, 3>;

/// Sign pattern of the three middle bins given the bins of the best bid and
/// best ask. Codes use '+', '-' and '0'.
enum class Region : std::uint8_t { ppp, ppm, pmm, mmm, pp0, p0m, zmm, p00, z0m, zzz };

inline constexpr std::array<Region, 10> kAllRegions = {Region::ppp, Region::ppm, Region::pmm, Region::mmm,
                                                       Region::pp0, Region::p0m, Region::zmm, Region::p00,
                                                       Region::z0m, Region::zzz};
inline constexpr std::array<Region, 9> kDriftRegions = {Region::ppp, Region::ppm, Region::pmm,
                                                        Region::mmm, Region::pp0, Region::p0m,
                                                        Region::zmm, Region::p00, Region::z0m};
/// Regions whose normals enter the Lyapunov function.
inline constexpr std::array<Region, 7> kLyapunovRegions = {Region::ppm, Region::pmm, Region::pp0, Region::p00,
                                                           Region::p0m, Region::zmm, Region::z0m};

std::string_view code(Region r) noexcept;
std::optional<Region> region_from_code(std::string_view code) noexcept;

/// Region from the 0-based bins (0..4) of the best bid and best ask. A middle
/// bin is '+' when at or below the best-bid bin, '-' when at or above the
/// best-ask bin, '0' otherwise.
Region region_of_bins(std::size_t bid_bin, std::size_t ask_bin);

/// Whether `drift` agrees with `normal` at every nonzero place of `normal`.
bool compatible(Region drift, Region normal) noexcept;

using DriftTable = std::map<Region, AffineVec>;
using NormalTable = std::map<Region, RationalVec>;

/// Drift vectors as printed, rate one per side.
DriftTable printed_drift_table();
/// Outer normals as printed (nine regions, 000 excluded).
NormalTable printed_normals();

/// Exact one-arrival drift of the 5-bin book in every region, obtained by
/// applying each (side, bin) arrival to a book with reservoirs in the outer
/// bins and weighting by the bin widths.
DriftTable enumerate_drift_table();

Affine drift_dot_affine(const AffineVec& drift, const RationalVec& normal);
/// <Delta_drift, v_normal> at eps. Throws std::domain_error for incompatible
/// pairs or the region 000.
Rational drift_dot(Region drift, Region normal, Rational eps, const DriftTable& drifts = printed_drift_table(),
                   const NormalTable& normals = printed_normals());

struct PairValue {
  Region drift = Region::zzz;
  Region normal = Region::zzz;
  Affine product;
  Rational at_zero{0};
  Rational at_max{0};
};

struct DriftCertificate {
  bool passed = false;
  Rational eps_max{0};
  /// Supremum of eps in [0, 1/5] keeping every product negative (0 when a
  /// product is already nonnegative at eps = 0).
  Rational eps_sup{0};
  Rational worst_at_zero{0};  ///< largest product at eps = 0
  std::vector<PairValue> pairs;
  std::vector<PairValue> failures;
};

/// Every compatible (drift, normal) pair checked at eps = 0 and eps = eps_max.
/// Throws std::domain_error unless 0 <= eps_max < 1/5.
DriftCertificate certify_drift(Rational eps_max, const DriftTable& drifts = printed_drift_table(),
                               const NormalTable& normals = printed_normals());

/// Text table: drift, normal, product at 0, product at eps_max.
void write_certificate(std::ostream& out, const DriftCertificate& cert);

/// min over the seven listed normals of <x, v_F>.
Rational lyapunov_value(const IntVec& x, const NormalTable& normals = printed_normals());
/// Same with max in place of min.
Rational lyapunov_value_max(const IntVec& x, const NormalTable& normals = printed_normals());

struct LevelSetFixture {
  std::vector<RationalVec> vertices;
  std::vector<std::vector<std::size_t>> faces;  ///< 1-based vertex indices
};

LevelSetFixture printed_level_set();

struct VertexReport {
  std::size_t vertex = 0;  ///< 1-based
  std::vector<std::pair<Region, Rational>> values;
  std::vector<Region> at_one;
  Rational lyapunov{0};
};

struct FaceReport {
  std::size_t face = 0;  ///< 1-based
  std::vector<Region> supporting;  ///< normals equal to one at every vertex
};

struct LevelReport {
  std::vector<VertexReport> vertices;
  std::vector<FaceReport> faces;
  std::vector<std::string> discrepancies;
};

LevelReport verify_level_fixture();
/// vertex,normal,value
void write_level_report_csv(std::ostream& out, const LevelReport& report);

enum class LyapunovForm : std::uint8_t { min, max };

struct RegionStats {
  std::uint64_t visits = 0;
  std::array<double, 3> mean_dx{};  ///< per unit time (two arrivals)
  std::array<double, 3> se_dx{};
  std::uint64_t tail_visits = 0;  ///< visits with L > K
  double mean_dl = 0.0;           ///< per unit time, over tail visits
  double se_dl = 0.0;
};

struct FiveBinReport {
  double eps = 0.0;
  std::uint64_t events = 0;
  double k_level = 0.0;
  LyapunovForm form = LyapunovForm::min;
  std::map<Region, RegionStats> regions;
  double max_l = 0.0;
  std::uint64_t max_norm = 0;
  std::vector<std::uint64_t> return_times;  ///< excursion lengths outside the l1 ball of radius K
  bool left_region_list = false;
};

/// Ordinary binned book on bins of widths 1/5+eps, 1/5-eps, 1/5, 1/5-eps,
/// 1/5+eps with reservoirs at 0 and 1 and uniform arrivals.
FiveBinReport simulate_5bin(double eps, std::uint64_t n_events, std::uint64_t seed, double k_level = 20.0,
                            LyapunovForm form = LyapunovForm::min);

struct GeometricBoundReport {
  double rho_b = 0.0;
  double rho_a = 0.0;
  std::uint64_t samples = 0;
  std::vector<double> tail_b;  ///< P(#bids in (x,y) >= m), m = 0, 1, ...
  std::vector<double> tail_a;
  std::vector<double> bound_b;  ///< rho^m plus 3 sigma binomial slack
  std::vector<double> bound_a;
  bool passed = false;
};

/// Ordinary book with a bid reservoir at x and an ask reservoir at y. Throws
/// std::domain_error when either rate inequality fails.
GeometricBoundReport check_geometric_bound(double x, double y, const ArrivalSpec& spec, std::uint64_t n_events,
                                           std::uint64_t seed, std::size_t max_m = 30);

struct RunMaxEvidence {
  std::vector<MidSample> series;
  std::uint64_t events = 0;
  std::uint64_t last_jump = 0;
  double last_jump_fraction = 0.0;
  std::int64_t max_n = 0;
  std::int64_t max_2n = 0;
  double growth = 0.0;  ///< max_2n / max_n
};

/// Bids above bin k_b plus asks below bin k_a (0-based, equal-width bins),
/// over n arrivals and again over 2n with the same seed. The book is ordinary
/// binned on those bins unless `binned` is false.
RunMaxEvidence running_max_evidence(const ArrivalSpec& spec, std::uint64_t n_events, std::uint64_t seed,
                                    std::size_t n_bins, std::size_t k_b, std::size_t k_a, bool binned = true);

}  // namespace lob
