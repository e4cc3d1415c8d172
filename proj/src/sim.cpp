#include "lob/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "lob/errors.hpp"

namespace lob {

ArrivalGenerator::ArrivalGenerator(ArrivalStream stream) : stream_(std::move(stream)), rng_(stream_.seed) {
  stream_.spec.validate();
}

Order ArrivalGenerator::order_at(std::uint64_t index) const {
  const Side side = rng_.uniform(index, StreamTag::side) < stream_.spec.p_bid ? Side::bid : Side::ask;
  const PriceDist& dist = side == Side::bid ? stream_.spec.bid : stream_.spec.ask;
  return Order{side, dist.quantile(rng_.uniform(index, StreamTag::price)), index};
}

TimedOrder ArrivalGenerator::next() {
  if (done()) throw std::out_of_range("arrival stream exhausted");
  TimedOrder t{order_at(index_), 0.0};
  if (stream_.time_mode == TimeMode::event_count) {
    clock_ = static_cast<double>(index_ + 1) / 2.0;
  } else {
    clock_ += -0.5 * std::log(rng_.uniform(index_, StreamTag::time));
  }
  t.time = clock_;
  ++index_;
  return t;
}

std::vector<TimedOrder> gen_arrivals(const ArrivalStream& stream) {
  ArrivalGenerator gen(stream);
  std::vector<TimedOrder> out;
  out.reserve(stream.n_events);
  while (!gen.done()) out.push_back(gen.next());
  return out;
}

std::vector<double> Trace::top_shape_mean(std::size_t min_bin) const {
  std::vector<double> mean(top_depth, 0.0);
  double weight = 0.0;
  const std::size_t n = bins.size();
  for (std::size_t b = min_bin; b < n; ++b) {
    weight += top_time[b];
    for (std::size_t k = 0; k < top_depth; ++k) mean[k] += top_shape[b * top_depth + k];
  }
  if (weight > 0.0) {
    for (double& m : mean) m /= weight;
  }
  return mean;
}

namespace {

class Recorder {
 public:
  Recorder(const MatchRule& rule, const BookState& book, std::uint64_t n, std::uint64_t record_every,
           const RecorderOptions& opt)
      : n_(n), record_every_(record_every == 0 ? std::max<std::uint64_t>(1, n / 100) : record_every) {
    tr_.bins = opt.bins ? *opt.bins : (rule.partition() ? *rule.partition() : BinPartition::equal_width(100));
    nb_ = tr_.bins.size();
    tr_.burn_in_events = static_cast<std::uint64_t>(std::floor(static_cast<double>(n) * opt.burn_in_fraction));
    tr_.occupation_b.assign(nb_, 0.0);
    tr_.occupation_a.assign(nb_, 0.0);
    tr_.joint.assign(nb_ * nb_, 0.0);
    tr_.top_depth = opt.top_depth;
    tr_.top_shape.assign(nb_ * opt.top_depth, 0.0);
    tr_.top_time.assign(nb_, 0.0);
    tr_.mid_bid_bin = opt.mid_bid_bin;
    tr_.mid_ask_bin = opt.mid_ask_bin;
    track_mid_ = opt.mid_bid_bin && opt.mid_ask_bin;
    mid_every_ = opt.mid_every == 0 ? record_every_ : opt.mid_every;

    bid_bins_.assign(nb_, 0);
    ask_bins_.assign(nb_, 0);
    for (double p : book.bids()) add(Side::bid, p, +1);
    for (double p : book.asks()) add(Side::ask, p, +1);
    tr_.mid_max = mid_;
  }

  void before(std::uint64_t i, double gap, const BookState& book) {
    if (i < tr_.burn_in_events) return;
    tr_.occupation_time += gap;
    const double beta = book.best_bid();
    const double alpha = book.best_ask();
    const bool has_b = std::isfinite(beta);
    const bool has_a = std::isfinite(alpha);
    const std::size_t kb = has_b ? tr_.bins.bin_of(beta) : 0;
    const std::size_t ka = has_a ? tr_.bins.bin_of(alpha) : 0;
    if (has_b) {
      tr_.occupation_b[kb] += gap;
      tr_.top_time[kb] += gap;
      const std::size_t depth = std::min(tr_.top_depth, kb + 1);
      for (std::size_t k = 0; k < depth; ++k) {
        tr_.top_shape[kb * tr_.top_depth + k] += gap * static_cast<double>(bid_bins_[kb - k]);
      }
    }
    if (has_a) tr_.occupation_a[ka] += gap;
    if (has_b && has_a) tr_.joint[kb * nb_ + ka] += gap;
  }

  void after(const Order& o, const ArrivalEffect& eff, const BookState& book, double time) {
    const std::uint64_t done = ++tr_.events;
    if (o.side == Side::bid) {
      ++tr_.bid_arrivals;
    } else {
      ++tr_.ask_arrivals;
    }
    if (eff.outcome == Outcome::joined) {
      add(o.side, o.price, +1);
    } else {
      ++tr_.executions;
      if (!eff.counterparty_reservoir) add(opposite(o.side), *eff.counterparty_price, -1);
    }
    if (track_mid_ && mid_ > tr_.mid_max) {
      tr_.mid_max = mid_;
      tr_.mid_last_jump = done;
    }
    if (track_mid_ && done % mid_every_ == 0) tr_.mid_series.push_back({done, time, mid_, tr_.mid_max});
    if (done % record_every_ == 0) {
      tr_.checkpoints.push_back({done, time, tr_.bid_arrivals, tr_.ask_arrivals, book.bids().size(),
                                 book.asks().size(), book.best_bid(), book.best_ask()});
    }
    tr_.elapsed = time;
  }

  Trace take() { return std::move(tr_); }

 private:
  void add(Side s, double price, int delta) {
    const std::size_t k = tr_.bins.bin_of(price);
    if (s == Side::bid) {
      bid_bins_[k] += delta;
      if (track_mid_ && k > *tr_.mid_bid_bin) mid_ += delta;
    } else {
      ask_bins_[k] += delta;
      if (track_mid_ && k < *tr_.mid_ask_bin) mid_ += delta;
    }
  }

  Trace tr_;
  std::size_t nb_ = 0;
  std::uint64_t n_;
  std::uint64_t record_every_;
  std::uint64_t mid_every_ = 1;
  bool track_mid_ = false;
  std::int64_t mid_ = 0;
  std::vector<std::int64_t> bid_bins_;
  std::vector<std::int64_t> ask_bins_;
};

template <class Next>
Trace run_core(const MatchRule& rule, BookState& book, std::uint64_t n, Next&& next, std::uint64_t record_every,
               const RecorderOptions& options) {
  book.check_invariants(rule);
  Recorder rec(rule, book, n, record_every, options);
  double prev = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const TimedOrder a = next();
    if (a.time < prev) throw invariant_error("arrival times must be nondecreasing");
    rec.before(i, a.time - prev, book);
    const ArrivalEffect eff = apply_arrival(book, rule, a.order);
    rec.after(a.order, eff, book, a.time);
    prev = a.time;
  }
  return rec.take();
}

}  // namespace

Trace run(const MatchRule& rule, BookState initial, const ArrivalStream& stream, std::uint64_t record_every,
          const RecorderOptions& options) {
  ArrivalGenerator gen(stream);
  return run_core(rule, initial, stream.n_events, [&] { return gen.next(); }, record_every, options);
}

Trace run_orders(const MatchRule& rule, BookState initial, std::span<const TimedOrder> orders,
                 std::uint64_t record_every, const RecorderOptions& options, BookState* final_state) {
  std::size_t i = 0;
  Trace t = run_core(rule, initial, orders.size(), [&] { return orders[i++]; }, record_every, options);
  if (final_state) *final_state = std::move(initial);
  return t;
}

namespace {

std::pair<double, double> tail_min_and_spread(std::vector<double> ratios) {
  std::sort(ratios.begin(), ratios.end());
  const std::size_t k = std::min<std::size_t>(5, ratios.size());
  return {ratios.front(), ratios[k - 1] - ratios.front()};
}

}  // namespace

KappaEstimate estimate_kappa(const Trace& trace, const ArrivalSpec& spec) {
  if (trace.checkpoints.size() < 10) {
    throw std::domain_error("estimate_kappa: need at least 10 checkpoints, have " +
                            std::to_string(trace.checkpoints.size()));
  }
  std::vector<double> rb, ra;
  for (std::size_t i = trace.checkpoints.size() / 2; i < trace.checkpoints.size(); ++i) {
    const Checkpoint& c = trace.checkpoints[i];
    if (!(c.time > 0.0)) continue;
    rb.push_back(static_cast<double>(c.bids) / c.time);
    ra.push_back(static_cast<double>(c.asks) / c.time);
  }
  if (rb.empty()) throw std::domain_error("estimate_kappa: no checkpoint with positive time");
  KappaEstimate e;
  auto [mb, sb] = tail_min_and_spread(rb);
  auto [ma, sa] = tail_min_and_spread(ra);
  e.fb_kappa = std::clamp(mb, 0.0, 1.0);
  e.one_minus_fa_kappa = std::clamp(ma, 0.0, 1.0);
  e.spread_b = sb;
  e.spread_a = sa;
  e.kappa_b = spec.bid.quantile(e.fb_kappa);
  e.kappa_a = spec.ask.quantile(1.0 - e.one_minus_fa_kappa);
  return e;
}

EmpiricalPi empirical_pi(const Trace& trace) {
  if (!(trace.occupation_time > 0.0)) throw std::domain_error("empirical_pi: no elapsed time after burn-in");
  EmpiricalPi pi{trace.occupation_b, trace.occupation_a};
  for (double& v : pi.pi_b) v /= trace.occupation_time;
  for (double& v : pi.pi_a) v /= trace.occupation_time;
  return pi;
}

}  // namespace lob
