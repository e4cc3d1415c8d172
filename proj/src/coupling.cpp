#include "lob/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lob/errors.hpp"

namespace lob {

BookDiff BookDiff::between(const BookState& left, const BookState& right) {
  BookDiff d;
  for (double p : left.bids()) d.left_changed(Side::bid, p, +1);
  for (double p : left.asks()) d.left_changed(Side::ask, p, +1);
  for (double p : right.bids()) d.right_changed(Side::bid, p, +1);
  for (double p : right.asks()) d.right_changed(Side::ask, p, +1);
  return d;
}

void BookDiff::effect(const Order& o, const ArrivalEffect& e, int sign) {
  if (e.outcome == Outcome::joined) {
    bump({o.side, o.price}, sign);
  } else if (!e.counterparty_reservoir) {
    bump({opposite(o.side), *e.counterparty_price}, -sign);
  }
}

void BookDiff::bump(const Key& k, int delta) {
  auto [it, inserted] = entries_.try_emplace(k, 0);
  size_ -= static_cast<std::size_t>(std::abs(it->second));
  it->second += delta;
  size_ += static_cast<std::size_t>(std::abs(it->second));
  if (it->second == 0) entries_.erase(it);
}

std::string BookDiff::describe() const {
  if (entries_.empty()) return "{}";
  std::ostringstream os;
  os << std::setprecision(17) << '{';
  bool first = true;
  for (const auto& [k, c] : entries_) {
    if (!first) os << ' ';
    first = false;
    os << (c > 0 ? "+" : "") << c << ' ' << to_string(k.first) << '@' << k.second;
  }
  os << '}';
  return os.str();
}

namespace {

void record(CouplingReport& r, std::uint64_t arrival, std::string expected, std::string observed) {
  ++r.violations;
  if (!r.first) r.first = Violation{arrival, std::move(expected), std::move(observed)};
}

void apply_edit(BookState& book, BookDiff& diff, const Edit& e, const MatchRule& rule) {
  if (e.add) {
    if (!e.price) throw std::invalid_argument("an added order needs a price");
    book.insert(e.side, *e.price);
    try {
      book.check_invariants(rule);
    } catch (const invariant_error&) {
      throw std::invalid_argument("edit would cross the book");
    }
    diff.right_changed(e.side, *e.price, +1);
    return;
  }
  std::optional<double> target = e.price;
  if (!target) {
    const auto& orders = e.side == Side::bid ? book.bids() : book.asks();
    if (orders.empty()) return;
    target = e.side == Side::bid ? *orders.rbegin() : *orders.begin();
  }
  book.erase(e.side, *target);
  diff.right_changed(e.side, *target, -1);
}

}  // namespace

CouplingReport check_extra_order(const BookState& base, const Order& extra, const ArrivalStream& stream,
                                 const MatchRule& rule) {
  BookState left = base;
  BookState right = base;
  right.insert(extra.side, extra.price);
  try {
    right.check_invariants(rule);
  } catch (const invariant_error&) {
    throw std::invalid_argument("extra order cannot rest in the book");
  }
  CouplingReport r;
  r.check = std::string("extra_") + to_string(extra.side);
  r.seed = stream.seed;
  BookDiff diff = BookDiff::between(left, right);
  const BookDiff::Key original{extra.side, extra.price};
  bool left_original = false;
  r.max_difference = diff.size();

  ArrivalGenerator gen(stream);
  while (!gen.done()) {
    const Order o = gen.next().order;
    diff.left_effect(o, apply_arrival(left, rule, o));
    diff.right_effect(o, apply_arrival(right, rule, o));
    ++r.arrivals;
    r.max_difference = std::max(r.max_difference, diff.size());
    if (diff.size() != 1) {
      record(r, r.arrivals, "one order", diff.describe());
      continue;
    }
    const auto& [key, count] = *diff.entries().begin();
    const bool added = key.first == extra.side && count == 1;
    const bool missing = key.first == opposite(extra.side) && count == -1;
    if (!added && !missing) {
      record(r, r.arrivals, "extra order or missing opposite order", diff.describe());
      continue;
    }
    if (key == original) {
      if (left_original) record(r, r.arrivals, "no return to the original extra order", diff.describe());
    } else {
      left_original = true;
    }
  }
  r.final_difference = diff.describe();
  return r;
}

CouplingReport check_bounded_perturbation(const BookState& base, std::span<const Edit> edits,
                                          const ArrivalStream& stream, const MatchRule& rule, std::size_t m) {
  if (edits.size() > m) throw std::invalid_argument("more edits than the perturbation bound");
  std::vector<Edit> sorted(edits.begin(), edits.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Edit& a, const Edit& b) { return a.before_arrival < b.before_arrival; });

  BookState left = base;
  BookState right = base;
  BookDiff diff;
  CouplingReport r;
  r.check = "bounded_perturbation";
  r.seed = stream.seed;
  auto next_edit = sorted.begin();
  auto apply_due = [&](std::uint64_t i) {
    for (; next_edit != sorted.end() && next_edit->before_arrival <= i; ++next_edit) {
      apply_edit(right, diff, *next_edit, rule);
    }
  };

  ArrivalGenerator gen(stream);
  while (!gen.done()) {
    apply_due(gen.position());
    const Order o = gen.next().order;
    diff.left_effect(o, apply_arrival(left, rule, o));
    diff.right_effect(o, apply_arrival(right, rule, o));
    ++r.arrivals;
    r.max_difference = std::max(r.max_difference, diff.size());
    if (diff.size() > m) record(r, r.arrivals, "at most " + std::to_string(m) + " orders", diff.describe());
  }
  apply_due(stream.n_events);
  r.max_difference = std::max(r.max_difference, diff.size());
  r.final_difference = diff.describe();
  return r;
}

namespace {

// Range add with global min and max over a fixed coordinate set.
class RangeAddTree {
 public:
  explicit RangeAddTree(std::size_t n) : n_(std::max<std::size_t>(n, 1)), lo_(4 * n_), hi_(4 * n_), lazy_(4 * n_) {}

  void add(std::size_t l, std::size_t r, int v) {
    if (l <= r) add(1, 0, n_ - 1, l, r, v);
  }
  long min() const { return lo_[1]; }
  long max() const { return hi_[1]; }

 private:
  void add(std::size_t node, std::size_t nl, std::size_t nr, std::size_t l, std::size_t r, int v) {
    if (r < nl || nr < l) return;
    if (l <= nl && nr <= r) {
      lo_[node] += v;
      hi_[node] += v;
      lazy_[node] += v;
      return;
    }
    const std::size_t mid = (nl + nr) / 2;
    add(2 * node, nl, mid, l, r, v);
    add(2 * node + 1, mid + 1, nr, l, r, v);
    lo_[node] = std::min(lo_[2 * node], lo_[2 * node + 1]) + lazy_[node];
    hi_[node] = std::max(hi_[2 * node], hi_[2 * node + 1]) + lazy_[node];
  }

  std::size_t n_;
  std::vector<long> lo_, hi_, lazy_;
};

// Tracks D_b(p) = B(p) - B~(p) and D_a(p) = A(p) - A~(p) at every price that
// can ever rest in either book.
class CountGap {
 public:
  explicit CountGap(std::vector<double> coords) : coords_(std::move(coords)), bids_(coords_.size()),
                                                  asks_(coords_.size()) {}

  void change(Side s, double price, int delta) {
    const auto it = std::lower_bound(coords_.begin(), coords_.end(), price);
    if (it == coords_.end() || *it != price) throw invariant_error("price missing from coordinate set");
    const std::size_t i = static_cast<std::size_t>(it - coords_.begin());
    if (s == Side::bid) {
      bids_.add(i, coords_.size() - 1, delta);
    } else {
      asks_.add(0, i, delta);
    }
  }
  void effect(const Order& o, const ArrivalEffect& e, int sign) {
    if (e.outcome == Outcome::joined) {
      change(o.side, o.price, sign);
    } else if (!e.counterparty_reservoir) {
      change(opposite(o.side), *e.counterparty_price, -sign);
    }
  }
  const RangeAddTree& bids() const { return bids_; }
  const RangeAddTree& asks() const { return asks_; }

 private:
  std::vector<double> coords_;
  RangeAddTree bids_;
  RangeAddTree asks_;
};

}  // namespace

CouplingReport check_refinement(const BinPartition& fine, const BinPartition& coarse, RefinementKind kind,
                                const ArrivalStream& stream, const BookState& initial) {
  if (!refines(fine, coarse)) throw std::invalid_argument("fine partition does not refine the coarse one");
  const bool strict = kind == RefinementKind::strict;
  const MatchRule fine_rule = strict ? MatchRule::strict_binned(fine) : MatchRule::ordinary_binned(fine);
  const MatchRule coarse_rule = strict ? MatchRule::strict_binned(coarse) : MatchRule::ordinary_binned(coarse);

  const std::vector<TimedOrder> arrivals = gen_arrivals(stream);
  std::vector<double> coords;
  coords.reserve(arrivals.size() + initial.bids().size() + initial.asks().size());
  for (const TimedOrder& t : arrivals) coords.push_back(t.order.price);
  coords.insert(coords.end(), initial.bids().begin(), initial.bids().end());
  coords.insert(coords.end(), initial.asks().begin(), initial.asks().end());
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());

  BookState f = initial;
  BookState c = initial;
  CountGap gap(std::move(coords));
  CouplingReport r;
  r.check = strict ? "refinement_strict" : "refinement_ordinary";
  r.seed = stream.seed;
  for (const TimedOrder& t : arrivals) {
    gap.effect(t.order, apply_arrival(f, fine_rule, t.order), +1);
    gap.effect(t.order, apply_arrival(c, coarse_rule, t.order), -1);
    ++r.arrivals;
    const bool ok = strict ? gap.bids().max() <= 0 && gap.asks().max() <= 0
                           : gap.bids().min() >= 0 && gap.asks().min() >= 0;
    if (!ok) {
      std::ostringstream os;
      os << "bid gap [" << gap.bids().min() << ',' << gap.bids().max() << "] ask gap [" << gap.asks().min() << ','
         << gap.asks().max() << ']';
      record(r, r.arrivals, strict ? "coarse counts >= fine counts" : "coarse counts <= fine counts", os.str());
    }
  }
  r.final_difference = BookDiff::between(c, f).describe();
  return r;
}

SandwichEstimate estimate_sandwich(std::size_t n_bins, const ArrivalSpec& spec, std::uint64_t n_events,
                                   std::uint64_t seed, std::uint64_t record_every) {
  if (n_bins < 4) throw std::domain_error("estimate_sandwich: need at least 4 bins");
  if (n_bins % 2 != 0) throw std::domain_error("estimate_sandwich: bin count must be even");
  const BinPartition fine = make_partition(n_bins, spec);
  const BinPartition coarse = make_partition(n_bins / 2, spec);
  const std::vector<TimedOrder> arrivals = gen_arrivals({seed, n_events, spec, TimeMode::event_count});
  RecorderOptions opt;
  opt.top_depth = 0;
  opt.bins = BinPartition::equal_width(1);
  auto estimate = [&](const MatchRule& rule) {
    return estimate_kappa(run_orders(rule, BookState{}, arrivals, record_every, opt), spec);
  };
  return {estimate(MatchRule::strict_binned(fine)), estimate(MatchRule::ordinary_binned(fine)),
          estimate(MatchRule::ordinary_binned(coarse))};
}

namespace {

double safe_density(const PriceDist& d, double x) { return d.support().contains(x) ? d.density(x) : 0.0; }

struct SideLaws {
  double rate_a;
  double rate_b;
  const PriceDist* law_a;
  const PriceDist* law_b;

  double lambda_a(double x) const { return rate_a * safe_density(*law_a, x); }
  double lambda_b(double x) const { return rate_b * safe_density(*law_b, x); }
};

template <class F>
double integrate_piecewise(F f, const SideLaws& s) {
  std::vector<double> cuts{std::min(s.law_a->support().lo, s.law_b->support().lo),
                           std::max(s.law_a->support().hi, s.law_b->support().hi)};
  for (const PriceDist* d : {s.law_a, s.law_b}) {
    cuts.push_back(d->support().lo);
    cuts.push_back(d->support().hi);
    cuts.insert(cuts.end(), d->breakpoints().begin(), d->breakpoints().end());
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-12);
  }
  return total;
}

}  // namespace

PerturbedStreams perturb_arrivals(const ArrivalSpec& spec_a, const ArrivalSpec& spec_b, std::uint64_t n_events,
                                  std::uint64_t seed) {
  spec_a.validate();
  spec_b.validate();
  const SideLaws sides[2] = {
      {2.0 * spec_a.p_bid, 2.0 * spec_b.p_bid, &spec_a.bid, &spec_b.bid},
      {2.0 * (1.0 - spec_a.p_bid), 2.0 * (1.0 - spec_b.p_bid), &spec_a.ask, &spec_b.ask},
  };
  PerturbedStreams out;
  for (const SideLaws& s : sides) {
    out.union_rate += integrate_piecewise([&](double x) { return std::max(s.lambda_a(x), s.lambda_b(x)); }, s);
    out.predicted_rate += integrate_piecewise([&](double x) { return std::abs(s.lambda_a(x) - s.lambda_b(x)); }, s);
  }

  const CounterRng rng(seed);
  double clock = 0.0;
  for (std::uint64_t i = 0; i < n_events; ++i) {
    const CounterRng ev = rng.split(i);
    std::size_t side = 0;
    double x = 0.0;
    double la = 0.0, lb = 0.0;
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt > 1'000'000) throw numeric_error("perturb_arrivals: rejection sampler did not accept");
      const double weight_bid = (sides[0].rate_a + sides[0].rate_b) / 4.0;
      side = ev.uniform(attempt, StreamTag::coupling_side) < weight_bid ? 0 : 1;
      const SideLaws& s = sides[side];
      const bool from_a = ev.uniform(attempt, StreamTag::coupling_choice) * (s.rate_a + s.rate_b) < s.rate_a;
      x = (from_a ? s.law_a : s.law_b)->quantile(ev.uniform(attempt, StreamTag::coupling_price));
      la = s.lambda_a(x);
      lb = s.lambda_b(x);
      if (ev.uniform(attempt, StreamTag::coupling_accept) * (la + lb) < std::max(la, lb)) break;
    }
    clock += -std::log(ev.uniform(0, StreamTag::time)) / out.union_rate;
    const Side s = side == 0 ? Side::bid : Side::ask;
    const double u = ev.uniform(0, StreamTag::side);
    const bool common = u * std::max(la, lb) < std::min(la, lb);
    const bool to_a = common || la > lb;
    const bool to_b = common || lb > la;
    if (to_a) out.a.push_back({Order{s, x, out.a.size()}, clock});
    if (to_b) out.b.push_back({Order{s, x, out.b.size()}, clock});
    if (common) {
      ++out.common;
    } else if (to_a) {
      ++out.only_a;
    } else {
      ++out.only_b;
    }
    ++out.union_events;
  }
  out.elapsed = clock;
  const double uncoupled = static_cast<double>(out.only_a + out.only_b);
  out.diff_rate = out.union_events ? uncoupled / static_cast<double>(out.union_events) : 0.0;
  out.uncoupled_rate = clock > 0.0 ? uncoupled / clock : 0.0;
  return out;
}

PerturbationOutcome perturbation_experiment(const ArrivalSpec& spec_a, const ArrivalSpec& spec_b,
                                            std::uint64_t n_events, std::uint64_t seed) {
  PerturbationOutcome res;
  res.streams = perturb_arrivals(spec_a, spec_b, n_events, seed);
  const PerturbedStreams& st = res.streams;
  const MatchRule rule = MatchRule::ordinary();
  RecorderOptions opt;
  opt.top_depth = 0;
  opt.bins = BinPartition::equal_width(1);
  res.kappa_a = estimate_kappa(run_orders(rule, BookState{}, st.a, 0, opt), spec_a);
  res.kappa_b = estimate_kappa(run_orders(rule, BookState{}, st.b, 0, opt), spec_b);

  // Replay both streams in union order and bound the difference pathwise.
  CouplingReport& r = res.pathwise;
  r.check = "arrival_perturbation";
  r.seed = seed;
  BookState left, right;
  BookDiff diff;
  std::size_t ia = 0, ib = 0;
  std::uint64_t uncoupled = 0;
  while (ia < st.a.size() || ib < st.b.size()) {
    const double ta = ia < st.a.size() ? st.a[ia].time : kNoAsk;
    const double tb = ib < st.b.size() ? st.b[ib].time : kNoAsk;
    const double t = std::min(ta, tb);
    const bool in_a = ta == t;
    const bool in_b = tb == t;
    if (in_a != in_b) ++uncoupled;
    if (in_a) {
      const Order& o = st.a[ia++].order;
      diff.left_effect(o, apply_arrival(left, rule, o));
    }
    if (in_b) {
      const Order& o = st.b[ib++].order;
      diff.right_effect(o, apply_arrival(right, rule, o));
    }
    ++r.arrivals;
    r.max_difference = std::max(r.max_difference, diff.size());
    if (diff.size() > uncoupled) {
      record(r, r.arrivals, "at most " + std::to_string(uncoupled) + " orders", diff.describe());
    }
  }
  return res;
}

void write_reports_csv(std::ostream& out, std::span<const CouplingReport> reports, const OutputTag& tag) {
  write_tag(out, tag);
  out << "check,seed,arrivals,violations,first_violation_index\n";
  for (const CouplingReport& r : reports) {
    out << r.check << ',' << r.seed << ',' << r.arrivals << ',' << r.violations << ',';
    if (r.first) out << r.first->arrival;
    out << '\n';
  }
}

}  // namespace lob
