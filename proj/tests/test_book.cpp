#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lob/book.hpp"
#include "lob/errors.hpp"

using namespace lob;

namespace {

Order bid(double p) { return {Side::bid, p, 0}; }
Order ask(double p) { return {Side::ask, p, 0}; }

}  // namespace

TEST(Book, AskJoinsEmptyBook) {
  BookState s;
  const ArrivalEffect e = apply_arrival(s, MatchRule::ordinary(), ask(0.5));
  EXPECT_EQ(e.outcome, Outcome::joined);
  EXPECT_DOUBLE_EQ(s.best_ask(), 0.5);
  EXPECT_EQ(s.best_bid(), kNoBid);
}

TEST(Book, AskBelowBestBidExecutes) {
  BookState s;
  s.insert(Side::bid, 0.6);
  const ArrivalEffect e = apply_arrival(s, MatchRule::ordinary(), ask(0.5));
  EXPECT_EQ(e.outcome, Outcome::executed);
  ASSERT_TRUE(e.counterparty_price);
  EXPECT_DOUBLE_EQ(*e.counterparty_price, 0.6);
  EXPECT_TRUE(s.asks().empty());
  EXPECT_EQ(s.best_bid(), kNoBid);
}

TEST(Book, OrdinaryExecutesAgainstBestOnly) {
  BookState s;
  s.insert(Side::bid, 0.3);
  s.insert(Side::bid, 0.45);
  s.insert(Side::ask, 0.7);
  apply_arrival(s, MatchRule::ordinary(), ask(0.2));
  EXPECT_TRUE(s.contains(Side::bid, 0.3));
  EXPECT_FALSE(s.contains(Side::bid, 0.45));
  apply_arrival(s, MatchRule::ordinary(), bid(0.5));
  EXPECT_DOUBLE_EQ(s.best_bid(), 0.5);
  apply_arrival(s, MatchRule::ordinary(), bid(0.9));
  EXPECT_EQ(s.best_ask(), kNoAsk);
  EXPECT_NO_THROW(s.check_invariants(MatchRule::ordinary()));
}

TEST(Book, OrdinaryBinnedTradesInsideBin) {
  const MatchRule rule = MatchRule::ordinary_binned(BinPartition::equal_width(10));
  BookState s;
  s.insert(Side::ask, 0.57);
  const ArrivalEffect e = apply_arrival(s, rule, bid(0.53));
  EXPECT_EQ(e.outcome, Outcome::executed);
  EXPECT_TRUE(s.asks().empty());
  EXPECT_TRUE(s.bids().empty());
}

TEST(Book, StrictBinnedJoinsInsideBin) {
  const MatchRule rule = MatchRule::strict_binned(BinPartition::equal_width(10));
  BookState s;
  s.insert(Side::ask, 0.57);
  const ArrivalEffect e = apply_arrival(s, rule, bid(0.59));
  EXPECT_EQ(e.outcome, Outcome::joined);
  EXPECT_DOUBLE_EQ(s.best_bid(), 0.59);
  EXPECT_NO_THROW(s.check_invariants(rule));
  EXPECT_THROW(s.check_invariants(MatchRule::ordinary()), invariant_error);
  EXPECT_EQ(apply_arrival(s, rule, bid(0.61)).outcome, Outcome::executed);
  EXPECT_TRUE(s.asks().empty());
  EXPECT_DOUBLE_EQ(s.best_bid(), 0.59);
  EXPECT_EQ(apply_arrival(s, rule, ask(0.52)).outcome, Outcome::joined);
  EXPECT_EQ(apply_arrival(s, rule, ask(0.45)).outcome, Outcome::executed);
  EXPECT_EQ(s.best_bid(), kNoBid);
}

TEST(Book, BinnedRulesNeedPartition) {
  EXPECT_EQ(MatchRule::ordinary().partition(), std::nullopt);
  EXPECT_TRUE(MatchRule::strict_binned(BinPartition::equal_width(2)).binned());
}

TEST(Book, ReservoirsNeverDeplete) {
  BookState s = BookState::with_reservoirs(0.4, 0.6);
  EXPECT_DOUBLE_EQ(s.best_bid(), 0.4);
  EXPECT_DOUBLE_EQ(s.best_ask(), 0.6);
  for (int i = 0; i < 5; ++i) {
    const ArrivalEffect e = apply_arrival(s, MatchRule::ordinary(), ask(0.1 + 0.01 * i));
    EXPECT_TRUE(e.counterparty_reservoir);
  }
  EXPECT_DOUBLE_EQ(s.best_bid(), 0.4);
  apply_arrival(s, MatchRule::ordinary(), bid(0.5));
  EXPECT_DOUBLE_EQ(s.best_bid(), 0.5);
  EXPECT_THROW(BookState::with_reservoirs(0.6, 0.4), std::invalid_argument);
}

TEST(Book, DuplicatePriceIsAnInvariantViolation) {
  BookState s;
  s.insert(Side::bid, 0.3);
  EXPECT_THROW(s.insert(Side::bid, 0.3), invariant_error);
  EXPECT_THROW(s.erase(Side::ask, 0.3), invariant_error);
  EXPECT_THROW(apply_arrival(s, MatchRule::ordinary(), bid(1.5)), invariant_error);
}

TEST(Book, Counts) {
  EXPECT_EQ(counts(BookState{}, 0.5), (SideCounts{0, 0}));
  BookState s;
  s.insert(Side::bid, 0.1);
  s.insert(Side::bid, 0.3);
  s.insert(Side::ask, 0.8);
  EXPECT_EQ(counts(s, 0.2), (SideCounts{1, 1}));
  EXPECT_EQ(counts(s, 0.3), (SideCounts{2, 1}));
  EXPECT_EQ(counts(s, 0.9), (SideCounts{2, 0}));
}

TEST(Book, SnapshotRoundTrip) {
  BookState s = BookState::with_reservoirs(0.05, std::nullopt);
  s.insert(Side::bid, 0.123456789012345);
  s.insert(Side::ask, 0.987654321);
  std::stringstream io;
  write_snapshot(io, s);
  const BookState back = read_snapshot(io);
  EXPECT_EQ(back, s);
  std::istringstream bad("side,price,multiplicity\nmid,0.5,1\n");
  EXPECT_THROW(read_snapshot(bad), std::invalid_argument);
}
