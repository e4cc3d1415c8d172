#include "lob/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lob/book.hpp"
#include "lob/errors.hpp"

namespace lob {

namespace {

constexpr std::array<std::string_view, 10> kCodes = {"+++", "++-", "+--", "---", "++0",
                                                     "+0-", "0--", "+00", "00-", "000"};

Rational r(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

const Rational kZero{0};
const Rational kOne{1};

std::string str(const Rational& q) {
  std::ostringstream os;
  os << q.numerator();
  if (q.denominator() != 1) os << '/' << q.denominator();
  return os.str();
}

std::string str(const Affine& a) {
  if (a.c1 == kZero) return str(a.c0);
  std::ostringstream os;
  os << str(a.c0) << (a.c1 < kZero ? " - " : " + ") << str(boost::abs(a.c1)) << "*eps";
  return os.str();
}

// Bins of the best bid and best ask that realize each region.
std::pair<std::size_t, std::size_t> bins_of(Region reg) {
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t a = b + 1; a < 5; ++a) {
      if (region_of_bins(b, a) == reg) return {b, a};
    }
  }
  throw invariant_error("region without bins");
}

// Widths of the five bins as affine functions of eps.
std::array<Affine, 5> bin_widths() {
  return {Affine{r(1, 5), r(1)}, Affine{r(1, 5), r(-1)}, Affine{r(1, 5), r(0)}, Affine{r(1, 5), r(-1)},
          Affine{r(1, 5), r(1)}};
}

BinPartition five_bins(double eps) {
  return BinPartition(Support{0.0, 1.0}, {0.2 + eps, 0.4, 0.6, 0.8 - eps});
}

IntVec middle_counts(const std::array<std::int64_t, 5>& bids, const std::array<std::int64_t, 5>& asks) {
  return {bids[1] - asks[1], bids[2] - asks[2], bids[3] - asks[3]};
}

}  // namespace

std::string_view code(Region r) noexcept { return kCodes[static_cast<std::size_t>(r)]; }

std::optional<Region> region_from_code(std::string_view c) noexcept {
  for (Region reg : kAllRegions) {
    if (code(reg) == c) return reg;
  }
  return std::nullopt;
}

Region region_of_bins(std::size_t bid_bin, std::size_t ask_bin) {
  if (!(bid_bin < ask_bin) || ask_bin > 4) throw std::invalid_argument("region_of_bins: need bid bin < ask bin <= 4");
  std::string c(3, '0');
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t bin = i + 1;
    if (bin <= bid_bin) {
      c[i] = '+';
    } else if (bin >= ask_bin) {
      c[i] = '-';
    }
  }
  return *region_from_code(c);
}

bool compatible(Region drift, Region normal) noexcept {
  const std::string_view d = code(drift);
  const std::string_view n = code(normal);
  for (std::size_t i = 0; i < 3; ++i) {
    if (n[i] != '0' && n[i] != d[i]) return false;
  }
  return true;
}

DriftTable printed_drift_table() {
  auto v = [](Affine x, Affine y, Affine z) { return AffineVec{x, y, z}; };
  const Affine zero{};
  return {
      {Region::ppp, v({r(1, 5), r(-1)}, {r(1, 5), r(0)}, {r(-4, 5), r(1)})},
      {Region::mmm, v({r(4, 5), r(-1)}, {r(-1, 5), r(0)}, {r(-1, 5), r(1)})},
      {Region::ppm, v({r(1, 5), r(-1)}, {r(-3, 5), r(0)}, {r(2, 5), r(-1)})},
      {Region::pmm, v({r(-2, 5), r(1)}, {r(3, 5), r(0)}, {r(-1, 5), r(1)})},
      {Region::pp0, v({r(1, 5), r(-1)}, {r(-3, 5), r(0)}, zero)},
      {Region::zmm, v(zero, {r(3, 5), r(0)}, {r(-1, 5), r(1)})},
      {Region::p0m, v({r(-2, 5), r(1)}, zero, {r(2, 5), r(-1)})},
      {Region::p00, v({r(-2, 5), r(1)}, zero, zero)},
      {Region::z0m, v(zero, zero, {r(2, 5), r(-1)})},
  };
}

NormalTable printed_normals() {
  const RationalVec v_pp0{r(4, 3), r(1), r(2, 3)};
  const RationalVec v_zmm{r(-2), r(-3), r(-4)};
  return {
      {Region::ppp, {r(1), r(1), r(1)}},    {Region::ppm, {r(1), r(1), r(-1)}},
      {Region::pmm, {r(1), r(-1), r(-1)}},  {Region::mmm, {r(-1), r(-1), r(-1)}},
      {Region::pp0, v_pp0},                 {Region::p00, v_pp0},
      {Region::p0m, {r(1), r(-4, 5), r(-9, 5)}}, {Region::zmm, v_zmm},
      {Region::z0m, v_zmm},
  };
}

DriftTable enumerate_drift_table() {
  // Any eps in (0, 1/5) gives the same bin-level transitions; the weights
  // carry eps symbolically.
  const BinPartition bins = five_bins(0.05);
  const MatchRule rule = MatchRule::ordinary_binned(bins);
  const auto widths = bin_widths();
  auto inside = [&](std::size_t k, double frac) { return bins.lower(k) + frac * (bins.upper(k) - bins.lower(k)); };

  DriftTable table;
  for (Region reg : kDriftRegions) {
    const auto [b, a] = bins_of(reg);
    BookState start = BookState::with_reservoirs(0.0, 1.0);
    if (b > 0) start.insert(Side::bid, inside(b, 1.0 / 3.0));
    if (a < 4) start.insert(Side::ask, inside(a, 1.0 / 3.0));

    AffineVec drift{};
    for (Side side : {Side::bid, Side::ask}) {
      for (std::size_t k = 0; k < 5; ++k) {
        BookState book = start;
        const ArrivalEffect eff = apply_arrival(book, rule, Order{side, inside(k, 2.0 / 3.0), 0});
        std::array<std::int64_t, 5> delta{};
        const int sign_of = [](Side s) { return s == Side::bid ? 1 : -1; }(side);
        if (eff.outcome == Outcome::joined) {
          delta[k] += sign_of;
        } else if (!eff.counterparty_reservoir) {
          delta[bins.bin_of(*eff.counterparty_price)] += sign_of;
        }
        for (std::size_t i = 0; i < 3; ++i) drift[i] = drift[i] + widths[k] * Rational(delta[i + 1]);
      }
    }
    table[reg] = drift;
  }
  return table;
}

Affine drift_dot_affine(const AffineVec& drift, const RationalVec& normal) {
  Affine s{};
  for (std::size_t i = 0; i < 3; ++i) s = s + drift[i] * normal[i];
  return s;
}

Rational drift_dot(Region drift, Region normal, Rational eps, const DriftTable& drifts,
                   const NormalTable& normals) {
  if (drift == Region::zzz || normal == Region::zzz) throw std::domain_error("drift_dot: region 000 has no drift");
  if (!compatible(drift, normal)) {
    throw std::domain_error("drift_dot: region " + std::string(code(drift)) + " does not agree with " +
                            std::string(code(normal)));
  }
  return drift_dot_affine(drifts.at(drift), normals.at(normal)).at(eps);
}

DriftCertificate certify_drift(Rational eps_max, const DriftTable& drifts, const NormalTable& normals) {
  if (eps_max < kZero || eps_max >= r(1, 5)) throw std::domain_error("certify_drift: need 0 <= eps_max < 1/5");
  DriftCertificate cert;
  cert.eps_max = eps_max;
  cert.eps_sup = r(1, 5);
  bool first = true;
  for (const auto& [normal, v] : normals) {
    for (Region drift : kDriftRegions) {
      if (!compatible(drift, normal)) continue;
      PairValue pv{drift, normal, drift_dot_affine(drifts.at(drift), v), 0, 0};
      pv.at_zero = pv.product.at(0);
      pv.at_max = pv.product.at(eps_max);
      if (first || pv.at_zero > cert.worst_at_zero) cert.worst_at_zero = pv.at_zero;
      first = false;
      if (pv.at_zero >= kZero) {
        cert.eps_sup = 0;
      } else if (pv.product.c1 > kZero) {
        cert.eps_sup = std::min(cert.eps_sup, -pv.product.c0 / pv.product.c1);
      }
      if (pv.at_zero >= kZero || pv.at_max >= kZero) cert.failures.push_back(pv);
      cert.pairs.push_back(pv);
    }
  }
  cert.passed = cert.failures.empty();
  return cert;
}

void write_certificate(std::ostream& out, const DriftCertificate& cert) {
  out << "drift  normal  product               at_0      at_" << str(cert.eps_max) << '\n';
  for (const PairValue& p : cert.pairs) {
    out << std::left << std::setw(7) << code(p.drift) << std::setw(8) << code(p.normal) << std::setw(22)
        << str(p.product) << std::setw(10) << str(p.at_zero) << str(p.at_max) << '\n';
  }
  out << "status " << (cert.passed ? "PASS" : "FAILED") << " eps_sup " << str(cert.eps_sup) << " worst_at_0 "
      << str(cert.worst_at_zero) << '\n';
  for (const PairValue& p : cert.failures) {
    out << "FAILED pair (" << code(p.drift) << ", " << code(p.normal) << ") at_0 " << str(p.at_zero) << " at_max "
        << str(p.at_max) << '\n';
  }
}

namespace {

Rational dot(const IntVec& x, const RationalVec& v) {
  Rational s{0};
  for (std::size_t i = 0; i < 3; ++i) s += v[i] * x[i];
  return s;
}

Rational dot(const RationalVec& x, const RationalVec& v) {
  Rational s{0};
  for (std::size_t i = 0; i < 3; ++i) s += v[i] * x[i];
  return s;
}

}  // namespace

Rational lyapunov_value(const IntVec& x, const NormalTable& normals) {
  Rational best = dot(x, normals.at(kLyapunovRegions[0]));
  for (Region reg : kLyapunovRegions) best = std::min(best, dot(x, normals.at(reg)));
  return best;
}

Rational lyapunov_value_max(const IntVec& x, const NormalTable& normals) {
  Rational best = dot(x, normals.at(kLyapunovRegions[0]));
  for (Region reg : kLyapunovRegions) best = std::max(best, dot(x, normals.at(reg)));
  return best;
}

LevelSetFixture printed_level_set() {
  LevelSetFixture f;
  f.vertices = {
      {r(0), r(0), r(0)},           {r(0), r(1), r(0)},          {r(0), r(0), r(1)},
      {r(1, 2), r(0), r(1, 2)},     {r(45, 58), r(2, 29), r(-9, 58)}, {r(6, 7), r(-1, 7), r(0)},
      {r(29, 34), r(-2, 17), r(-1, 34)}, {r(3, 4), r(0), r(0)},  {r(11, 50), r(6, 25), r(-27, 50)},
      {r(0), r(3, 7), r(-4, 7)},    {r(11, 26), r(-6, 13), r(-3, 26)}, {r(2, 5), r(-3, 5), r(0)},
      {r(0), r(-1, 3), r(0)},       {r(-1, 2), r(0), r(0)},      {r(0), r(0), r(-1, 4)},
  };
  f.faces = {{4, 3, 2},    {5, 2, 10, 9},   {7, 6, 12, 11},      {1, 3, 4, 8},         {1, 8, 6, 12, 14},
             {1, 3, 2, 10, 15}, {1, 15, 14}, {7, 5, 9, 11}, {2, 4, 8, 6, 7, 5}, {9, 10, 15, 14, 12, 11}};
  return f;
}

LevelReport verify_level_fixture() {
  const LevelSetFixture fix = printed_level_set();
  const NormalTable normals = printed_normals();
  LevelReport rep;
  for (std::size_t i = 0; i < fix.vertices.size(); ++i) {
    VertexReport vr;
    vr.vertex = i + 1;
    const RationalVec& x = fix.vertices[i];
    bool first = true;
    for (const auto& [reg, v] : normals) {
      const Rational val = dot(x, v);
      vr.values.emplace_back(reg, val);
      if (val == kOne) vr.at_one.push_back(reg);
      if (std::find(kLyapunovRegions.begin(), kLyapunovRegions.end(), reg) != kLyapunovRegions.end()) {
        if (first || val < vr.lyapunov) vr.lyapunov = val;
        first = false;
      }
    }
    if (vr.at_one.empty()) {
      rep.discrepancies.push_back("vertex " + std::to_string(vr.vertex) + " lies on no level-one plane");
    }
    if (vr.lyapunov != kOne) {
      rep.discrepancies.push_back("vertex " + std::to_string(vr.vertex) + " has L = " + str(vr.lyapunov));
    }
    rep.vertices.push_back(std::move(vr));
  }
  for (std::size_t f = 0; f < fix.faces.size(); ++f) {
    FaceReport fr;
    fr.face = f + 1;
    for (const auto& [reg, v] : normals) {
      bool all = true;
      for (std::size_t idx : fix.faces[f]) all = all && dot(fix.vertices[idx - 1], v) == kOne;
      if (all) fr.supporting.push_back(reg);
    }
    if (fr.supporting.empty()) {
      rep.discrepancies.push_back("face " + std::to_string(fr.face) + " has no supporting normal");
    }
    rep.faces.push_back(std::move(fr));
  }
  return rep;
}

void write_level_report_csv(std::ostream& out, const LevelReport& report) {
  out << "vertex,normal,value\n";
  for (const VertexReport& v : report.vertices) {
    for (const auto& [reg, val] : v.values) out << v.vertex << ',' << code(reg) << ',' << str(val) << '\n';
  }
}

namespace {

struct Moments {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;
  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double se() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  }
};

double to_double(const Rational& q) {
  return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

}  // namespace

FiveBinReport simulate_5bin(double eps, std::uint64_t n_events, std::uint64_t seed, double k_level,
                            LyapunovForm form) {
  if (!(eps > 0.0 && eps < 0.2)) throw std::domain_error("simulate_5bin: need 0 < eps < 1/5");
  const BinPartition bins = five_bins(eps);
  const MatchRule rule = MatchRule::ordinary_binned(bins);
  const NormalTable normals = printed_normals();
  auto lyap = [&](const IntVec& x) {
    return to_double(form == LyapunovForm::min ? lyapunov_value(x, normals) : lyapunov_value_max(x, normals));
  };

  FiveBinReport rep;
  rep.eps = eps;
  rep.k_level = k_level;
  rep.form = form;
  BookState book = BookState::with_reservoirs(0.0, 1.0);
  std::array<std::int64_t, 5> bid_bins{}, ask_bins{};
  std::map<Region, std::array<Moments, 3>> dx;
  std::map<Region, Moments> dl;

  IntVec x = middle_counts(bid_bins, ask_bins);
  double l = lyap(x);
  const auto radius = static_cast<std::uint64_t>(k_level);
  auto norm1 = [](const IntVec& v) {
    return static_cast<std::uint64_t>(std::abs(v[0]) + std::abs(v[1]) + std::abs(v[2]));
  };
  constexpr std::uint64_t kInside = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t excursion_start = kInside;

  ArrivalGenerator gen({seed, n_events, ArrivalSpec{}, TimeMode::event_count});
  while (!gen.done()) {
    const Order o = gen.next().order;
    const Region reg = region_of_bins(bins.bin_of(book.best_bid()), bins.bin_of(book.best_ask()));
    const ArrivalEffect eff = apply_arrival(book, rule, o);
    if (eff.outcome == Outcome::joined) {
      (o.side == Side::bid ? bid_bins : ask_bins)[bins.bin_of(o.price)] += 1;
    } else if (!eff.counterparty_reservoir) {
      (o.side == Side::bid ? ask_bins : bid_bins)[bins.bin_of(*eff.counterparty_price)] -= 1;
    }
    const IntVec nx = middle_counts(bid_bins, ask_bins);
    const double nl = lyap(nx);
    for (std::size_t i = 0; i < 3; ++i) {
      dx[reg][i].add(2.0 * static_cast<double>(nx[i] - x[i]));
      if ((bid_bins[i + 1] != 0) && (ask_bins[i + 1] != 0)) rep.left_region_list = true;
    }
    if (l > k_level) dl[reg].add(2.0 * (nl - l));

    const bool outside = norm1(nx) > radius;
    if (outside && excursion_start == kInside) excursion_start = rep.events;
    if (!outside && excursion_start != kInside) {
      rep.return_times.push_back(rep.events + 1 - excursion_start);
      excursion_start = kInside;
    }
    ++rep.events;
    x = nx;
    l = nl;
    rep.max_l = std::max(rep.max_l, l);
    rep.max_norm = std::max(rep.max_norm, norm1(x));
  }
  for (const auto& [reg, m] : dx) {
    RegionStats& s = rep.regions[reg];
    s.visits = m[0].n;
    for (std::size_t i = 0; i < 3; ++i) {
      s.mean_dx[i] = m[i].mean();
      s.se_dx[i] = m[i].se();
    }
  }
  for (const auto& [reg, m] : dl) {
    RegionStats& s = rep.regions[reg];
    s.tail_visits = m.n;
    s.mean_dl = m.mean();
    s.se_dl = m.se();
  }
  return rep;
}

GeometricBoundReport check_geometric_bound(double x, double y, const ArrivalSpec& spec, std::uint64_t n_events,
                                           std::uint64_t seed, std::size_t max_m) {
  const double fbx = spec.bid.cdf(x), fby = spec.bid.cdf(y);
  const double fax = spec.ask.cdf(x), fay = spec.ask.cdf(y);
  if (!(x < y)) throw std::domain_error("check_geometric_bound: need x < y");
  if (!(fby < fbx + fax)) throw std::domain_error("check_geometric_bound: F_b(y) < F_b(x) + F_a(x) fails");
  if (!(fay < fax + (1.0 - fby))) {
    throw std::domain_error("check_geometric_bound: F_a(y) < F_a(x) + (1 - F_b(y)) fails");
  }
  GeometricBoundReport rep;
  rep.rho_b = (fby - fbx) / fax;
  rep.rho_a = (fay - fax) / (1.0 - fby);

  const MatchRule rule = MatchRule::ordinary();
  BookState book = BookState::with_reservoirs(x, y);
  std::vector<std::uint64_t> hist_b(max_m + 1, 0), hist_a(max_m + 1, 0);
  std::int64_t nb = 0, na = 0;
  auto in_mid = [&](double p) { return p > x && p < y; };
  const std::uint64_t burn = n_events / 2;

  ArrivalGenerator gen({seed, n_events, spec, TimeMode::event_count});
  while (!gen.done()) {
    const std::uint64_t i = gen.position();
    const Order o = gen.next().order;
    const ArrivalEffect eff = apply_arrival(book, rule, o);
    if (eff.outcome == Outcome::joined) {
      if (in_mid(o.price)) (o.side == Side::bid ? nb : na) += 1;
    } else if (!eff.counterparty_reservoir && in_mid(*eff.counterparty_price)) {
      (o.side == Side::bid ? na : nb) -= 1;
    }
    if (i < burn) continue;
    ++rep.samples;
    ++hist_b[std::min<std::size_t>(static_cast<std::size_t>(nb), max_m)];
    ++hist_a[std::min<std::size_t>(static_cast<std::size_t>(na), max_m)];
  }

  auto tails = [&](const std::vector<std::uint64_t>& hist, double rho, std::vector<double>& tail,
                   std::vector<double>& bound) {
    const double n = static_cast<double>(std::max<std::uint64_t>(rep.samples, 1));
    std::uint64_t above = rep.samples;
    bool ok = true;
    for (std::size_t m = 0; m <= max_m; ++m) {
      tail.push_back(static_cast<double>(above) / n);
      const double p = std::pow(rho, static_cast<double>(m));
      bound.push_back(p + 3.0 * std::sqrt(p * (1.0 - p) / n));
      if (m > 0 && tail.back() > bound.back()) ok = false;
      above -= hist[m];
    }
    return ok;
  };
  const bool ok_b = tails(hist_b, rep.rho_b, rep.tail_b, rep.bound_b);
  const bool ok_a = tails(hist_a, rep.rho_a, rep.tail_a, rep.bound_a);
  rep.passed = rep.samples > 0 && ok_b && ok_a;
  return rep;
}

RunMaxEvidence running_max_evidence(const ArrivalSpec& spec, std::uint64_t n_events, std::uint64_t seed,
                                    std::size_t n_bins, std::size_t k_b, std::size_t k_a, bool binned) {
  if (!(k_b < k_a) || k_a >= n_bins) throw std::invalid_argument("running_max_evidence: need k_b < k_a < bins");
  RecorderOptions opt;
  opt.bins = BinPartition::equal_width(n_bins);
  opt.mid_bid_bin = k_b;
  opt.mid_ask_bin = k_a;
  opt.mid_every = std::max<std::uint64_t>(1, n_events / 1000);
  opt.top_depth = 0;
  const MatchRule rule = binned ? MatchRule::ordinary_binned(*opt.bins) : MatchRule::ordinary();

  RunMaxEvidence ev;
  ev.events = n_events;
  if (n_events == 0) return ev;
  Trace t1 = run(rule, BookState{}, {seed, n_events, spec, TimeMode::event_count}, 0, opt);
  Trace t2 = run(rule, BookState{}, {seed, 2 * n_events, spec, TimeMode::event_count}, 0, opt);
  ev.series = std::move(t1.mid_series);
  ev.last_jump = t1.mid_last_jump;
  ev.last_jump_fraction = static_cast<double>(t1.mid_last_jump) / static_cast<double>(n_events);
  ev.max_n = t1.mid_max;
  ev.max_2n = t2.mid_max;
  ev.growth = ev.max_n > 0 ? static_cast<double>(ev.max_2n) / static_cast<double>(ev.max_n)
                           : std::numeric_limits<double>::infinity();
  return ev;
}

}  // namespace lob
