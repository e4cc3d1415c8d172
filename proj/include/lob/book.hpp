#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <set>
#include <utility>

#include "lob/dist.hpp"

namespace lob {

enum class Side : std::uint8_t { bid, ask };

inline constexpr Side opposite(Side s) noexcept { return s == Side::bid ? Side::ask : Side::bid; }
const char* to_string(Side s) noexcept;

inline constexpr double kNoBid = -std::numeric_limits<double>::infinity();
inline constexpr double kNoAsk = std::numeric_limits<double>::infinity();

struct Order {
  Side side = Side::bid;
  double price = 0.0;
  std::uint64_t seq = 0;
};

enum class RuleKind : std::uint8_t { ordinary, ordinary_binned, strict_binned };

const char* to_string(RuleKind k) noexcept;

/// Matching rule. Binned kinds carry their partition.
class MatchRule {
 public:
  static MatchRule ordinary() { return MatchRule(RuleKind::ordinary, std::nullopt); }
  static MatchRule ordinary_binned(BinPartition bins) { return MatchRule(RuleKind::ordinary_binned, std::move(bins)); }
  static MatchRule strict_binned(BinPartition bins) { return MatchRule(RuleKind::strict_binned, std::move(bins)); }

  RuleKind kind() const noexcept { return kind_; }
  const std::optional<BinPartition>& partition() const noexcept { return bins_; }
  bool binned() const noexcept { return kind_ != RuleKind::ordinary; }

  /// Whether an arrival at `price` trades against the opposite best at `best`.
  /// The caller has already excluded an empty opposite side.
  bool executes(Side arriving, double price, double best) const;

 private:
  MatchRule(RuleKind kind, std::optional<BinPartition> bins);

  RuleKind kind_;
  std::optional<BinPartition> bins_;
};

/// Resting bids and asks. Prices are pairwise distinct, so plain ordered sets
/// suffice. Reservoirs are infinite supplies at one price and are never
/// stored as orders.
class BookState {
 public:
  BookState() = default;

  static BookState with_reservoirs(std::optional<double> bid_price, std::optional<double> ask_price);

  double best_bid() const noexcept;
  double best_ask() const noexcept;

  const std::set<double>& bids() const noexcept { return bids_; }
  const std::set<double>& asks() const noexcept { return asks_; }
  std::size_t size(Side s) const noexcept { return s == Side::bid ? bids_.size() : asks_.size(); }

  const std::optional<double>& bid_reservoir() const noexcept { return bid_reservoir_; }
  const std::optional<double>& ask_reservoir() const noexcept { return ask_reservoir_; }

  /// Add a resting order. A price already present (or equal to a reservoir
  /// price) throws invariant_error.
  void insert(Side s, double price);

  /// Remove a resting order; throws invariant_error if absent.
  void erase(Side s, double price);

  bool contains(Side s, double price) const;

  /// Throws invariant_error unless the book is uncrossed for `rule`: best bid
  /// below best ask, or, for strict binned books, a crossed pair confined to
  /// one bin.
  void check_invariants(const MatchRule& rule) const;

  bool operator==(const BookState&) const = default;

 private:
  std::set<double> bids_;
  std::set<double> asks_;
  std::optional<double> bid_reservoir_;
  std::optional<double> ask_reservoir_;
};

enum class Outcome : std::uint8_t { joined, executed };

struct ArrivalEffect {
  Outcome outcome = Outcome::joined;
  /// Price of the resting order the arrival traded with.
  std::optional<double> counterparty_price;
  /// True when the counterparty was a reservoir (nothing was removed).
  bool counterparty_reservoir = false;
  double new_beta = kNoBid;
  double new_alpha = kNoAsk;
};

/// Apply one arriving order under `rule`, mutating `state`.
ArrivalEffect apply_arrival(BookState& state, const MatchRule& rule, const Order& order);

struct SideCounts {
  std::size_t bids = 0;  ///< finite bids at prices <= p
  std::size_t asks = 0;  ///< finite asks at prices >= p
  bool operator==(const SideCounts&) const = default;
};

/// B_t(p) and A_t(p), reservoirs excluded. Linear in the book size.
SideCounts counts(const BookState& state, double p);

/// CSV snapshot: header `side,price,multiplicity`, one row per order,
/// reservoirs written with multiplicity `inf`.
void write_snapshot(std::ostream& out, const BookState& state);
BookState read_snapshot(std::istream& in);

}  // namespace lob
