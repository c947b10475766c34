#pragma once

#include <deque>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mmlab/marketdata.hpp"
#include "mmlab/types.hpp"

namespace mmlab {

enum class OrderKind : std::uint8_t { Limit, Market };

struct Order {
    OrderId id = 0;
    AgentId agent = 0;
    Side side = Side::Buy;
    Ticks price = 0;  // unused for market orders
    Lots qty = 0;     // remaining
    TsMs placed_ts = 0;
    OrderKind kind = OrderKind::Limit;
};

struct FillEvent {
    TsMs ts = 0;
    OrderId maker_order_id = 0;
    OrderId taker_order_id = 0;
    Ticks price = 0;  // maker's limit price
    Lots qty = 0;
    AgentId maker_agent = 0;
    AgentId taker_agent = 0;
    bool operator==(const FillEvent&) const = default;
};

// Price-time-priority book. Single-owner mutable state: one run mutates one
// book on one logical thread.
class Book {
public:
    // Crossing portion matches at the maker's price; remainder rests.
    // Throws ConfigError on duplicate order id.
    std::vector<FillEvent> place_limit(const Order& order);

    // Matches best-first until qty exhausted or the side empties; the
    // remainder is discarded.
    std::vector<FillEvent> execute_market(const Order& order);

    bool cancel(OrderId id);

    std::optional<Ticks> best_bid() const;
    std::optional<Ticks> best_ask() const;

    // Fill preview for a market order without mutating the book:
    // (fillable lots, total cost in quote-atoms).
    std::pair<Lots, QuoteAtoms> preview_market(Side side, Lots qty) const;

    LOBSnapshot snapshot(TsMs ts) const;
    std::vector<Order> orders_of(AgentId agent) const;
    const Order* find(OrderId id) const;
    std::size_t live_orders() const { return live_.size(); }

private:
    using BidLevels = std::map<Ticks, std::deque<Order>, std::greater<Ticks>>;
    using AskLevels = std::map<Ticks, std::deque<Order>>;

    template <typename Levels>
    std::vector<FillEvent> match(Levels& levels, Order& taker, bool limit_crosses_only);

    void insert_resting(const Order& order);
    void register_id(const Order& order);

    BidLevels bids_;
    AskLevels asks_;
    std::unordered_map<OrderId, std::pair<Side, Ticks>> live_;
    std::unordered_set<OrderId> seen_;
};

}  // namespace mmlab
