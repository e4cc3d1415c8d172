#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace lob {

struct Support {
  double lo = 0.0;
  double hi = 1.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Absolutely continuous price law given as a (density, CDF, quantile) triple
/// on a closed interval. Immutable after construction; cheap to copy.
class PriceDist {
 public:
  using Fn = std::function<double(double)>;

  PriceDist(std::string kind, Support support, Fn density, Fn cdf, Fn quantile,
            std::vector<double> breakpoints = {});

  /// Uniform on [lo, hi].
  static PriceDist uniform(double lo = 0.0, double hi = 1.0);

  /// Density linear between knots; values are rescaled to integrate to one.
  static PriceDist piecewise_linear(std::vector<double> knots, std::vector<double> values);

  /// CDF table, linearly interpolated. Both columns must be strictly
  /// increasing, with first probability 0 and last probability 1.
  static PriceDist cdf_table(std::vector<double> prices, std::vector<double> probs);

  double density(double x) const;
  double cdf(double x) const;

  /// Throws std::domain_error unless 0 <= u <= 1.
  double quantile(double u) const;

  const Support& support() const noexcept { return support_; }
  const std::string& kind() const noexcept { return kind_; }

  /// Interior points where the density may fail to be smooth.
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

  /// Probability of [a, b].
  double mass(double a, double b) const { return cdf(b) - cdf(a); }

 private:
  std::string kind_;
  Support support_;
  Fn density_;
  Fn cdf_;
  Fn quantile_;
  std::vector<double> breakpoints_;
};

/// Law of an arriving order: side probability and one price law per side.
struct ArrivalSpec {
  double p_bid = 0.5;
  PriceDist bid = PriceDist::uniform();
  PriceDist ask = PriceDist::uniform();

  /// Throws std::invalid_argument unless 0 < p_bid < 1.
  void validate() const;
};

/// Ordered bin boundaries partitioning a support into convex bins. Bin k is
/// [lo_k, hi_k) except the last, which is closed.
class BinPartition {
 public:
  /// `interior` are the boundaries strictly inside (lo, hi), strictly increasing.
  BinPartition(Support support, std::vector<double> interior);

  /// N bins of equal width on the support.
  static BinPartition equal_width(std::size_t n, Support support = {});

  std::size_t size() const noexcept { return interior_.size() + 1; }
  const Support& support() const noexcept { return support_; }
  const std::vector<double>& interior() const noexcept { return interior_; }

  double lower(std::size_t k) const;
  double upper(std::size_t k) const;

  /// Index of the bin holding x; prices outside the support clamp to the
  /// first or last bin.
  std::size_t bin_of(double x) const noexcept;

  bool operator==(const BinPartition&) const = default;

 private:
  Support support_;
  std::vector<double> interior_;
};

/// Absolute tolerance used to identify two boundaries.
inline constexpr double kBoundaryTolerance = 1e-12;

/// Law of F_by(X) for X distributed as `dist`. `by` must have a strictly
/// positive density on its support, and `dist` must live inside that support.
PriceDist pushforward_by_cdf(const PriceDist& dist, const PriceDist& by);

/// Reparametrize prices by x -> F_b(x) so that bids become uniform on [0,1].
ArrivalSpec transform_to_uniform_bid(const ArrivalSpec& spec);

/// Partition of [0,1] whose bins have width, bid mass and ask mass at most
/// 1/N: boundaries at i/N, Q_b(i/N) and Q_a(i/N).
BinPartition make_partition(std::size_t n, const ArrivalSpec& spec);

/// True iff every boundary of `coarse` is a boundary of `fine`.
bool refines(const BinPartition& fine, const BinPartition& coarse);

/// Probability each bin receives under `dist`.
std::vector<double> bin_masses(const BinPartition& bins, const PriceDist& dist);

}  // namespace lob
