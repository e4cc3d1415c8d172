#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lob/book.hpp"
#include "lob/sim.hpp"
#include "lob/trace_io.hpp"

namespace lob {

/// Multiset difference "right minus left" between two books, keyed by
/// (side, price). Kept incrementally from the arrival effects on each book.
class BookDiff {
 public:
  using Key = std::pair<Side, double>;

  static BookDiff between(const BookState& left, const BookState& right);

  void left_effect(const Order& o, const ArrivalEffect& e) { effect(o, e, -1); }
  void right_effect(const Order& o, const ArrivalEffect& e) { effect(o, e, +1); }
  /// Record that the right book gained (+1) or lost (-1) an order.
  void right_changed(Side s, double price, int delta) { bump({s, price}, delta); }
  void left_changed(Side s, double price, int delta) { bump({s, price}, -delta); }

  /// Size of the symmetric difference.
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  const std::map<Key, int>& entries() const noexcept { return entries_; }
  std::string describe() const;

 private:
  void effect(const Order& o, const ArrivalEffect& e, int sign);
  void bump(const Key& k, int delta);

  std::map<Key, int> entries_;
  std::size_t size_ = 0;
};

struct Violation {
  std::uint64_t arrival = 0;  ///< number of arrivals processed when observed
  std::string expected;
  std::string observed;
};

struct CouplingReport {
  std::string check;
  std::uint64_t seed = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t violations = 0;
  std::optional<Violation> first;
  std::size_t max_difference = 0;
  std::string final_difference;

  bool passed() const noexcept { return violations == 0; }
};

/// Run `base` and `base + extra` on the same stream. After every arrival the
/// difference must be one order: the extra order's side added, or one order
/// of the opposite side missing. It never returns to the original extra order
/// once it has left it.
CouplingReport check_extra_order(const BookState& base, const Order& extra, const ArrivalStream& stream,
                                 const MatchRule& rule);

/// One edit of the perturbed book, applied just before arrival
/// `before_arrival` (n_events applies after the last arrival). A removal
/// without a price removes the best order of that side, if any.
struct Edit {
  std::uint64_t before_arrival = 0;
  Side side = Side::bid;
  bool add = true;
  std::optional<double> price;
};

/// Books differ by at most `m` orders after every arrival when at most `m`
/// orders were edited. More than `m` edits throws std::invalid_argument.
CouplingReport check_bounded_perturbation(const BookState& base, std::span<const Edit> edits,
                                          const ArrivalStream& stream, const MatchRule& rule, std::size_t m);

enum class RefinementKind : std::uint8_t { ordinary, strict };

/// Coarse (tilde) versus fine books of the given binned kind, from the same
/// initial state. Ordinary: B~(p) <= B(p) and A~(p) <= A(p) at every price;
/// strict: both reversed. Checked exactly at all prices after every arrival.
CouplingReport check_refinement(const BinPartition& fine, const BinPartition& coarse, RefinementKind kind,
                                const ArrivalStream& stream, const BookState& initial = {});

struct SandwichEstimate {
  KappaEstimate strict;  ///< strict binned, N bins
  KappaEstimate fine;    ///< ordinary binned, N bins
  KappaEstimate coarse;  ///< ordinary binned, N/2 bins
};

/// Threshold estimates of three books sharing one arrival stream. N must be
/// even and at least 4.
SandwichEstimate estimate_sandwich(std::size_t n_bins, const ArrivalSpec& spec, std::uint64_t n_events,
                                   std::uint64_t seed, std::uint64_t record_every = 0);

struct PerturbedStreams {
  std::vector<TimedOrder> a;
  std::vector<TimedOrder> b;
  std::uint64_t union_events = 0;
  std::uint64_t common = 0;
  std::uint64_t only_a = 0;
  std::uint64_t only_b = 0;
  double elapsed = 0.0;
  double diff_rate = 0.0;       ///< uncoupled fraction of union events
  double uncoupled_rate = 0.0;  ///< uncoupled arrivals per unit time
  double predicted_rate = 0.0;  ///< sum over sides of the integral of |lambda_A - lambda_B|
  double union_rate = 0.0;      ///< sum over sides of the integral of max(lambda_A, lambda_B)
};

/// Maximal coupling of two arrival laws, time scaled so each side arrives at
/// rate 2 p_side. The union process is drawn by rejection and every event is
/// split into common, A-only and B-only parts.
PerturbedStreams perturb_arrivals(const ArrivalSpec& spec_a, const ArrivalSpec& spec_b, std::uint64_t n_events,
                                  std::uint64_t seed);

struct PerturbationOutcome {
  PerturbedStreams streams;
  KappaEstimate kappa_a;
  KappaEstimate kappa_b;
  /// Pathwise check: ordinary books driven by the two streams never differ by
  /// more than the number of uncoupled arrivals seen so far.
  CouplingReport pathwise;
};

PerturbationOutcome perturbation_experiment(const ArrivalSpec& spec_a, const ArrivalSpec& spec_b,
                                            std::uint64_t n_events, std::uint64_t seed);

/// check,seed,arrivals,violations,first_violation_index
void write_reports_csv(std::ostream& out, std::span<const CouplingReport> reports, const OutputTag& tag);

}  // namespace lob
