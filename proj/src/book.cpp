#include "lob/book.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lob/errors.hpp"

namespace lob {

namespace {

std::string price_str(double p) {
  std::ostringstream os;
  os << std::setprecision(17) << p;
  return os.str();
}

}  // namespace

const char* to_string(Side s) noexcept { return s == Side::bid ? "bid" : "ask"; }

const char* to_string(RuleKind k) noexcept {
  switch (k) {
    case RuleKind::ordinary: return "ordinary";
    case RuleKind::ordinary_binned: return "ordinary_binned";
    case RuleKind::strict_binned: return "strict_binned";
  }
  return "?";
}

MatchRule::MatchRule(RuleKind kind, std::optional<BinPartition> bins) : kind_(kind), bins_(std::move(bins)) {
  if (kind_ != RuleKind::ordinary && !bins_) throw std::invalid_argument("binned matching rules need a partition");
}

bool MatchRule::executes(Side arriving, double price, double best) const {
  const bool crosses = arriving == Side::bid ? price > best : price < best;
  switch (kind_) {
    case RuleKind::ordinary:
      return crosses;
    case RuleKind::ordinary_binned:
      return crosses || bins_->bin_of(price) == bins_->bin_of(best);
    case RuleKind::strict_binned:
      return crosses && bins_->bin_of(price) != bins_->bin_of(best);
  }
  return false;
}

BookState BookState::with_reservoirs(std::optional<double> bid_price, std::optional<double> ask_price) {
  if (bid_price && ask_price && !(*bid_price < *ask_price)) {
    throw std::invalid_argument("bid reservoir must lie below ask reservoir");
  }
  BookState s;
  s.bid_reservoir_ = bid_price;
  s.ask_reservoir_ = ask_price;
  return s;
}

double BookState::best_bid() const noexcept {
  double b = bids_.empty() ? kNoBid : *bids_.rbegin();
  if (bid_reservoir_) b = std::max(b, *bid_reservoir_);
  return b;
}

double BookState::best_ask() const noexcept {
  double a = asks_.empty() ? kNoAsk : *asks_.begin();
  if (ask_reservoir_) a = std::min(a, *ask_reservoir_);
  return a;
}

void BookState::insert(Side s, double price) {
  if (!std::isfinite(price)) throw invariant_error("order price must be finite");
  if ((bid_reservoir_ && *bid_reservoir_ == price) || (ask_reservoir_ && *ask_reservoir_ == price) ||
      bids_.count(price) || asks_.count(price)) {
    throw invariant_error("duplicate order price " + price_str(price));
  }
  (s == Side::bid ? bids_ : asks_).insert(price);
}

void BookState::erase(Side s, double price) {
  auto& set = s == Side::bid ? bids_ : asks_;
  if (set.erase(price) != 1) {
    throw invariant_error(std::string("no resting ") + to_string(s) + " at " + price_str(price));
  }
}

bool BookState::contains(Side s, double price) const {
  return (s == Side::bid ? bids_ : asks_).count(price) != 0;
}

void BookState::check_invariants(const MatchRule& rule) const {
  const double beta = best_bid();
  const double alpha = best_ask();
  if (beta < alpha) return;
  if (rule.kind() == RuleKind::strict_binned && std::isfinite(beta) && std::isfinite(alpha) &&
      rule.partition()->bin_of(beta) == rule.partition()->bin_of(alpha)) {
    return;
  }
  throw invariant_error("crossed book: best bid " + price_str(beta) + " >= best ask " + price_str(alpha) +
                        " under rule " + to_string(rule.kind()));
}

ArrivalEffect apply_arrival(BookState& state, const MatchRule& rule, const Order& order) {
  if (!(order.price >= 0.0 && order.price <= 1.0)) {
    throw invariant_error("arrival price outside [0,1]: " + price_str(order.price));
  }
  ArrivalEffect eff;
  const Side other = opposite(order.side);
  const double best = other == Side::bid ? state.best_bid() : state.best_ask();
  const bool has_best = std::isfinite(best);

  if (has_best && rule.executes(order.side, order.price, best)) {
    eff.outcome = Outcome::executed;
    eff.counterparty_price = best;
    const auto& reservoir = other == Side::bid ? state.bid_reservoir() : state.ask_reservoir();
    if (reservoir && *reservoir == best) {
      eff.counterparty_reservoir = true;
    } else {
      state.erase(other, best);
    }
  } else {
    state.insert(order.side, order.price);
  }
  eff.new_beta = state.best_bid();
  eff.new_alpha = state.best_ask();
  state.check_invariants(rule);
  return eff;
}

SideCounts counts(const BookState& state, double p) {
  SideCounts c;
  c.bids = static_cast<std::size_t>(std::distance(state.bids().begin(), state.bids().upper_bound(p)));
  c.asks = static_cast<std::size_t>(std::distance(state.asks().lower_bound(p), state.asks().end()));
  return c;
}

void write_snapshot(std::ostream& out, const BookState& state) {
  out << "side,price,multiplicity\n";
  out << std::setprecision(17);
  if (state.bid_reservoir()) out << "bid," << *state.bid_reservoir() << ",inf\n";
  for (double p : state.bids()) out << "bid," << p << ",1\n";
  for (double p : state.asks()) out << "ask," << p << ",1\n";
  if (state.ask_reservoir()) out << "ask," << *state.ask_reservoir() << ",inf\n";
}

BookState read_snapshot(std::istream& in) {
  std::optional<double> bid_res, ask_res;
  std::vector<std::pair<Side, double>> orders;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("side,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string side, price, mult;
    std::getline(ss, side, ',');
    std::getline(ss, price, ',');
    std::getline(ss, mult, ',');
    Side s;
    if (side == "bid") {
      s = Side::bid;
    } else if (side == "ask") {
      s = Side::ask;
    } else {
      throw std::invalid_argument("snapshot line " + std::to_string(lineno) + ": bad side '" + side + "'");
    }
    double p = std::stod(price);
    if (mult == "inf") {
      auto& slot = s == Side::bid ? bid_res : ask_res;
      if (slot) throw std::invalid_argument("snapshot: more than one reservoir per side");
      slot = p;
    } else if (mult.empty() || mult == "1") {
      orders.emplace_back(s, p);
    } else {
      throw std::invalid_argument("snapshot line " + std::to_string(lineno) + ": multiplicity must be 1 or inf");
    }
  }
  BookState state = BookState::with_reservoirs(bid_res, ask_res);
  for (auto [s, p] : orders) state.insert(s, p);
  return state;
}

}  // namespace lob
