#include "lob/dist.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace lob {

namespace {

void check_unit(double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::domain_error("quantile level must lie in [0,1], got " + std::to_string(u));
  }
}

void require_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      throw std::invalid_argument(std::string(what) + " must be strictly increasing");
    }
  }
}

// Index i of the segment [v[i], v[i+1]] holding x, clamped to valid segments.
std::size_t segment_of(const std::vector<double>& v, double x) {
  auto it = std::upper_bound(v.begin(), v.end(), x);
  std::size_t i = it == v.begin() ? 0 : static_cast<std::size_t>(it - v.begin()) - 1;
  return std::min(i, v.size() - 2);
}

struct PiecewiseLinear {
  std::vector<double> x;
  std::vector<double> f;
  std::vector<double> cum;

  double density(double t) const {
    if (t < x.front() || t > x.back()) return 0.0;
    std::size_t i = segment_of(x, t);
    double h = x[i + 1] - x[i];
    double s = (t - x[i]) / h;
    return f[i] + s * (f[i + 1] - f[i]);
  }

  double cdf(double t) const {
    if (t <= x.front()) return 0.0;
    if (t >= x.back()) return 1.0;
    std::size_t i = segment_of(x, t);
    double h = x[i + 1] - x[i];
    double d = t - x[i];
    return std::min(1.0, cum[i] + f[i] * d + 0.5 * (f[i + 1] - f[i]) / h * d * d);
  }

  double quantile(double u) const {
    if (u <= 0.0) return x.front();
    if (u >= 1.0) return x.back();
    std::size_t i = segment_of(cum, u);
    double h = x[i + 1] - x[i];
    double a = 0.5 * (f[i + 1] - f[i]) / h;
    double b = f[i];
    double r = u - cum[i];
    double disc = std::max(0.0, b * b + 4.0 * a * r);
    double denom = b + std::sqrt(disc);
    double d = denom > 0.0 ? 2.0 * r / denom : 0.0;
    return x[i] + std::clamp(d, 0.0, h);
  }
};

struct CdfTable {
  std::vector<double> x;
  std::vector<double> p;

  double density(double t) const {
    if (t < x.front() || t > x.back()) return 0.0;
    std::size_t i = segment_of(x, t);
    return (p[i + 1] - p[i]) / (x[i + 1] - x[i]);
  }

  double cdf(double t) const {
    if (t <= x.front()) return 0.0;
    if (t >= x.back()) return 1.0;
    std::size_t i = segment_of(x, t);
    return p[i] + (p[i + 1] - p[i]) * (t - x[i]) / (x[i + 1] - x[i]);
  }

  double quantile(double u) const {
    if (u <= 0.0) return x.front();
    if (u >= 1.0) return x.back();
    std::size_t i = segment_of(p, u);
    return x[i] + (x[i + 1] - x[i]) * (u - p[i]) / (p[i + 1] - p[i]);
  }
};

}  // namespace

PriceDist::PriceDist(std::string kind, Support support, Fn density, Fn cdf, Fn quantile,
                     std::vector<double> breakpoints)
    : kind_(std::move(kind)),
      support_(support),
      density_(std::move(density)),
      cdf_(std::move(cdf)),
      quantile_(std::move(quantile)),
      breakpoints_(std::move(breakpoints)) {
  if (!(support_.hi > support_.lo)) {
    throw std::invalid_argument("price support must be a nondegenerate interval");
  }
}

PriceDist PriceDist::uniform(double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("uniform: need lo < hi");
  double w = hi - lo;
  return PriceDist(
      "uniform", {lo, hi},
      [lo, hi, w](double x) { return (x < lo || x > hi) ? 0.0 : 1.0 / w; },
      [lo, hi, w](double x) { return x <= lo ? 0.0 : (x >= hi ? 1.0 : (x - lo) / w); },
      [lo, hi, w](double u) { return u >= 1.0 ? hi : lo + u * w; });
}

PriceDist PriceDist::piecewise_linear(std::vector<double> knots, std::vector<double> values) {
  if (knots.size() < 2 || knots.size() != values.size()) {
    throw std::invalid_argument("piecewise_linear: need >= 2 knots and one value per knot");
  }
  require_increasing(knots, "piecewise_linear knots");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw std::invalid_argument("piecewise_linear: density values must be finite and nonnegative");
    }
    if (i + 1 < values.size()) total += 0.5 * (values[i] + values[i + 1]) * (knots[i + 1] - knots[i]);
  }
  if (!(total > 0.0)) throw std::invalid_argument("piecewise_linear: density integrates to zero");

  auto impl = std::make_shared<PiecewiseLinear>();
  impl->x = std::move(knots);
  impl->f = std::move(values);
  for (double& v : impl->f) v /= total;
  impl->cum.assign(impl->x.size(), 0.0);
  for (std::size_t i = 1; i < impl->x.size(); ++i) {
    impl->cum[i] = impl->cum[i - 1] + 0.5 * (impl->f[i - 1] + impl->f[i]) * (impl->x[i] - impl->x[i - 1]);
  }
  impl->cum.back() = 1.0;
  std::vector<double> bp(impl->x.begin() + 1, impl->x.end() - 1);
  Support s{impl->x.front(), impl->x.back()};
  return PriceDist(
      "piecewise_linear", s, [impl](double x) { return impl->density(x); },
      [impl](double x) { return impl->cdf(x); }, [impl](double u) { return impl->quantile(u); },
      std::move(bp));
}

PriceDist PriceDist::cdf_table(std::vector<double> prices, std::vector<double> probs) {
  if (prices.size() < 2 || prices.size() != probs.size()) {
    throw std::invalid_argument("cdf_table: need >= 2 rows of (price, probability)");
  }
  require_increasing(prices, "cdf_table prices");
  require_increasing(probs, "cdf_table probabilities");
  if (std::abs(probs.front()) > 1e-12 || std::abs(probs.back() - 1.0) > 1e-12) {
    throw std::invalid_argument("cdf_table: probabilities must run from 0 to 1");
  }
  auto impl = std::make_shared<CdfTable>();
  impl->x = std::move(prices);
  impl->p = std::move(probs);
  impl->p.front() = 0.0;
  impl->p.back() = 1.0;
  std::vector<double> bp(impl->x.begin() + 1, impl->x.end() - 1);
  Support s{impl->x.front(), impl->x.back()};
  return PriceDist(
      "cdf_table", s, [impl](double x) { return impl->density(x); },
      [impl](double x) { return impl->cdf(x); }, [impl](double u) { return impl->quantile(u); },
      std::move(bp));
}

double PriceDist::density(double x) const { return density_(x); }

double PriceDist::cdf(double x) const { return cdf_(x); }

double PriceDist::quantile(double u) const {
  check_unit(u);
  return quantile_(u);
}

void ArrivalSpec::validate() const {
  if (!(p_bid > 0.0 && p_bid < 1.0)) {
    throw std::invalid_argument("bid probability must lie strictly between 0 and 1");
  }
}

BinPartition::BinPartition(Support support, std::vector<double> interior)
    : support_(support), interior_(std::move(interior)) {
  require_increasing(interior_, "bin boundaries");
  if (!interior_.empty() && (interior_.front() <= support_.lo || interior_.back() >= support_.hi)) {
    throw std::invalid_argument("bin boundaries must lie strictly inside the support");
  }
}

BinPartition BinPartition::equal_width(std::size_t n, Support support) {
  if (n == 0) throw std::domain_error("need at least one bin");
  std::vector<double> b;
  b.reserve(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    b.push_back(support.lo + support.width() * static_cast<double>(i) / static_cast<double>(n));
  }
  return BinPartition(support, std::move(b));
}

double BinPartition::lower(std::size_t k) const {
  if (k >= size()) throw std::out_of_range("bin index");
  return k == 0 ? support_.lo : interior_[k - 1];
}

double BinPartition::upper(std::size_t k) const {
  if (k >= size()) throw std::out_of_range("bin index");
  return k + 1 == size() ? support_.hi : interior_[k];
}

std::size_t BinPartition::bin_of(double x) const noexcept {
  return static_cast<std::size_t>(std::upper_bound(interior_.begin(), interior_.end(), x) -
                                  interior_.begin());
}

PriceDist pushforward_by_cdf(const PriceDist& dist, const PriceDist& by) {
  const Support& sb = by.support();
  const Support& sd = dist.support();
  if (sd.lo < sb.lo - kBoundaryTolerance || sd.hi > sb.hi + kBoundaryTolerance) {
    throw std::invalid_argument("pushforward: distribution extends outside the support of the map");
  }
  constexpr int kProbe = 1000;
  for (int i = 0; i < kProbe; ++i) {
    double x = sb.lo + sb.width() * (i + 0.5) / kProbe;
    if (!(by.density(x) > 0.0)) {
      throw std::invalid_argument("pushforward: CDF is not invertible (zero density near " +
                                  std::to_string(x) + ")");
    }
  }
  std::vector<double> bp;
  for (double x : dist.breakpoints()) bp.push_back(by.cdf(x));
  for (double x : by.breakpoints()) bp.push_back(by.cdf(x));
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  bp.erase(std::remove_if(bp.begin(), bp.end(), [](double u) { return u <= 0.0 || u >= 1.0; }), bp.end());

  return PriceDist(
      "pushforward", {0.0, 1.0},
      [dist, by](double u) {
        if (u < 0.0 || u > 1.0) return 0.0;
        double x = by.quantile(u);
        return dist.density(x) / by.density(x);
      },
      [dist, by](double u) {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return dist.cdf(by.quantile(u));
      },
      [dist, by](double v) { return by.cdf(dist.quantile(v)); }, std::move(bp));
}

ArrivalSpec transform_to_uniform_bid(const ArrivalSpec& spec) {
  spec.validate();
  ArrivalSpec out{spec.p_bid, PriceDist::uniform(0.0, 1.0), pushforward_by_cdf(spec.ask, spec.bid)};
  return out;
}

BinPartition make_partition(std::size_t n, const ArrivalSpec& spec) {
  if (n < 2) throw std::domain_error("make_partition: need N >= 2");
  for (const PriceDist* d : {&spec.bid, &spec.ask}) {
    if (d->support().lo < -kBoundaryTolerance || d->support().hi > 1.0 + kBoundaryTolerance) {
      throw std::domain_error("make_partition: supports must lie in [0,1]; apply the coordinate transform first");
    }
  }
  std::vector<double> cand;
  cand.reserve(3 * n);
  for (std::size_t i = 1; i < n; ++i) {
    double u = static_cast<double>(i) / static_cast<double>(n);
    cand.push_back(u);
    cand.push_back(spec.bid.quantile(u));
    cand.push_back(spec.ask.quantile(u));
  }
  std::sort(cand.begin(), cand.end());
  std::vector<double> merged;
  for (double c : cand) {
    if (c <= kBoundaryTolerance || c >= 1.0 - kBoundaryTolerance) continue;
    if (!merged.empty() && c - merged.back() <= kBoundaryTolerance) continue;
    merged.push_back(c);
  }
  return BinPartition({0.0, 1.0}, std::move(merged));
}

bool refines(const BinPartition& fine, const BinPartition& coarse) {
  if (std::abs(fine.support().lo - coarse.support().lo) > kBoundaryTolerance ||
      std::abs(fine.support().hi - coarse.support().hi) > kBoundaryTolerance) {
    return false;
  }
  const auto& f = fine.interior();
  for (double c : coarse.interior()) {
    auto it = std::lower_bound(f.begin(), f.end(), c - kBoundaryTolerance);
    if (it == f.end() || std::abs(*it - c) > kBoundaryTolerance) return false;
  }
  return true;
}

std::vector<double> bin_masses(const BinPartition& bins, const PriceDist& dist) {
  std::vector<double> m(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) m[k] = dist.mass(bins.lower(k), bins.upper(k));
  return m;
}

}  // namespace lob
