#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "lob/book.hpp"
#include "lob/dist.hpp"
#include "lob/rng.hpp"

namespace lob {

enum class TimeMode : std::uint8_t {
  event_count,  ///< t_n = n/2 (bids and asks each at unit rate on average)
  poisson,      ///< i.i.d. exponential gaps of mean 1/2
};

struct ArrivalStream {
  std::uint64_t seed = 0;
  std::uint64_t n_events = 0;
  ArrivalSpec spec;
  TimeMode time_mode = TimeMode::event_count;
};

struct TimedOrder {
  Order order;
  double time = 0.0;
};

/// Sequential view of an arrival stream. Side and price of event i depend
/// only on (seed, i), so `order_at` agrees with `next` for every index.
class ArrivalGenerator {
 public:
  explicit ArrivalGenerator(ArrivalStream stream);

  bool done() const noexcept { return index_ >= stream_.n_events; }
  std::uint64_t position() const noexcept { return index_; }
  TimedOrder next();

  Order order_at(std::uint64_t index) const;

 private:
  ArrivalStream stream_;
  CounterRng rng_;
  std::uint64_t index_ = 0;
  double clock_ = 0.0;
};

std::vector<TimedOrder> gen_arrivals(const ArrivalStream& stream);

struct Checkpoint {
  std::uint64_t events = 0;
  double time = 0.0;
  std::uint64_t bid_arrivals = 0;
  std::uint64_t ask_arrivals = 0;
  std::uint64_t bids = 0;  ///< B_T(inf), reservoirs excluded
  std::uint64_t asks = 0;  ///< A_T(-inf), reservoirs excluded
  double beta = kNoBid;
  double alpha = kNoAsk;
};

struct MidSample {
  std::uint64_t events = 0;
  double time = 0.0;
  std::int64_t value = 0;
  std::int64_t running_max = 0;
};

struct RecorderOptions {
  /// Recording bins; defaults to the rule's partition, else 100 equal bins.
  std::optional<BinPartition> bins;
  /// Occupation, joint and top-shape recorders skip this leading fraction.
  double burn_in_fraction = 0.5;
  /// Track #bids in bins above `mid_bid_bin` plus #asks in bins below
  /// `mid_ask_bin` and its running maximum.
  std::optional<std::size_t> mid_bid_bin;
  std::optional<std::size_t> mid_ask_bin;
  /// Stride of the stored mid series; 0 uses the checkpoint stride.
  std::uint64_t mid_every = 0;
  /// Number of bins below the best bid in the top-of-book shape.
  std::size_t top_depth = 10;
};

struct Trace {
  BinPartition bins = BinPartition::equal_width(1);
  std::uint64_t events = 0;
  double elapsed = 0.0;
  std::uint64_t bid_arrivals = 0;
  std::uint64_t ask_arrivals = 0;
  std::uint64_t executions = 0;

  std::vector<Checkpoint> checkpoints;

  /// Time after burn-in, and time the best bid / best ask spent in each bin.
  std::uint64_t burn_in_events = 0;
  double occupation_time = 0.0;
  std::vector<double> occupation_b;
  std::vector<double> occupation_a;

  /// bins x bins, row = bin of the best bid, column = bin of the best ask.
  std::vector<double> joint;

  /// bins x top_depth: time-weighted #bids in bin (b_t - k), row = b_t.
  std::size_t top_depth = 0;
  std::vector<double> top_shape;
  std::vector<double> top_time;  ///< time with the best bid in each bin

  std::optional<std::size_t> mid_bid_bin;
  std::optional<std::size_t> mid_ask_bin;
  std::vector<MidSample> mid_series;
  std::int64_t mid_max = 0;
  std::uint64_t mid_last_jump = 0;  ///< event index of the last running-max increase

  /// Average #bids at offset k below the best-bid bin, over times with the
  /// best bid in a bin >= `min_bin`.
  std::vector<double> top_shape_mean(std::size_t min_bin) const;
};

/// Drive `initial` through every arrival of `stream`, checkpointing every
/// `record_every` events (0 picks n/100).
Trace run(const MatchRule& rule, BookState initial, const ArrivalStream& stream, std::uint64_t record_every,
          const RecorderOptions& options = {});

/// Same as `run` for an explicit order sequence; the final book is written
/// to `final_state` when given.
Trace run_orders(const MatchRule& rule, BookState initial, std::span<const TimedOrder> orders,
                 std::uint64_t record_every, const RecorderOptions& options = {},
                 BookState* final_state = nullptr);

struct KappaEstimate {
  double kappa_b = 0.0;
  double kappa_a = 0.0;
  double fb_kappa = 0.0;          ///< estimate of F_b(kappa_b)
  double one_minus_fa_kappa = 0.0;  ///< estimate of 1 - F_a(kappa_a)
  double spread_b = 0.0;  ///< spread of the five smallest tail ratios
  double spread_a = 0.0;
};

/// Tail-minimum estimate of liminf B_T/T and liminf A_T/T over the second
/// half of the checkpoints. Needs at least 10 checkpoints.
KappaEstimate estimate_kappa(const Trace& trace, const ArrivalSpec& spec);

struct EmpiricalPi {
  std::vector<double> pi_b;
  std::vector<double> pi_a;
};

/// Occupation divided by elapsed post-burn-in time; masses may sum to less
/// than one when a side was empty.
EmpiricalPi empirical_pi(const Trace& trace);

/// Run `fn(seed)` for every seed across hardware threads; results keep the
/// order of `seeds`.
template <class Fn>
auto run_replicas(const std::vector<std::uint64_t>& seeds, Fn fn) {
  using R = decltype(fn(std::uint64_t{}));
  std::vector<R> out;
  out.reserve(seeds.size());
  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < seeds.size(); start += width) {
    std::vector<std::future<R>> batch;
    for (std::size_t i = start; i < std::min(seeds.size(), start + width); ++i) {
      batch.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async, fn, seeds[i]));
    }
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace lob
