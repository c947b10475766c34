#include "mmlab/lob.hpp"

#include <algorithm>
#include <cassert>

namespace mmlab {

namespace {

bool crosses(Side taker_side, Ticks taker_price, Ticks maker_price) {
    return taker_side == Side::Buy ? taker_price >= maker_price : taker_price <= maker_price;
}

}  // namespace

void Book::register_id(const Order& order) {
    if (!seen_.insert(order.id).second)
        throw ConfigError("duplicate order id " + std::to_string(order.id));
}

template <typename Levels>
std::vector<FillEvent> Book::match(Levels& levels, Order& taker, bool limit_crosses_only) {
    std::vector<FillEvent> fills;
    while (taker.qty > 0 && !levels.empty()) {
        auto it = levels.begin();
        if (limit_crosses_only && !crosses(taker.side, taker.price, it->first)) break;
        auto& queue = it->second;
        while (taker.qty > 0 && !queue.empty()) {
            Order& maker = queue.front();
            Lots q = std::min(taker.qty, maker.qty);
            fills.push_back({taker.placed_ts, maker.id, taker.id, maker.price, q,
                             maker.agent, taker.agent});
            taker.qty -= q;
            maker.qty -= q;
            if (maker.qty == 0) {
                live_.erase(maker.id);
                queue.pop_front();
            }
        }
        if (queue.empty()) levels.erase(it);
    }
    return fills;
}

void Book::insert_resting(const Order& order) {
    auto place = [&](auto& levels) {
        auto& queue = levels[order.price];
        // FIFO by (placed_ts, id); appends are the common case.
        auto pos = std::upper_bound(queue.begin(), queue.end(), order,
                                    [](const Order& a, const Order& b) {
                                        return std::tie(a.placed_ts, a.id) <
                                               std::tie(b.placed_ts, b.id);
                                    });
        queue.insert(pos, order);
    };
    if (order.side == Side::Buy) place(bids_);
    else place(asks_);
    live_[order.id] = {order.side, order.price};
}

std::vector<FillEvent> Book::place_limit(const Order& order) {
    assert(order.kind == OrderKind::Limit && order.qty > 0 && order.price > 0);
    register_id(order);
    Order taker = order;
    std::vector<FillEvent> fills = order.side == Side::Buy
                                       ? match(asks_, taker, true)
                                       : match(bids_, taker, true);
    if (taker.qty > 0) insert_resting(taker);
    return fills;
}

std::vector<FillEvent> Book::execute_market(const Order& order) {
    assert(order.kind == OrderKind::Market && order.qty > 0);
    register_id(order);
    Order taker = order;
    return order.side == Side::Buy ? match(asks_, taker, false) : match(bids_, taker, false);
}

bool Book::cancel(OrderId id) {
    auto it = live_.find(id);
    if (it == live_.end()) return false;
    auto [side, price] = it->second;
    auto erase_from = [&](auto& levels) {
        auto lv = levels.find(price);
        auto& queue = lv->second;
        for (auto q = queue.begin(); q != queue.end(); ++q) {
            if (q->id == id) {
                queue.erase(q);
                break;
            }
        }
        if (queue.empty()) levels.erase(lv);
    };
    if (side == Side::Buy) erase_from(bids_);
    else erase_from(asks_);
    live_.erase(it);
    return true;
}

std::optional<Ticks> Book::best_bid() const {
    return bids_.empty() ? std::nullopt : std::optional<Ticks>(bids_.begin()->first);
}

std::optional<Ticks> Book::best_ask() const {
    return asks_.empty() ? std::nullopt : std::optional<Ticks>(asks_.begin()->first);
}

std::pair<Lots, QuoteAtoms> Book::preview_market(Side side, Lots qty) const {
    Lots remaining = qty;
    QuoteAtoms cost = 0;
    auto walk = [&](const auto& levels) {
        for (const auto& [price, queue] : levels) {
            for (const auto& o : queue) {
                if (remaining == 0) return;
                Lots q = std::min(remaining, o.qty);
                remaining -= q;
                cost += q * price;
            }
        }
    };
    if (side == Side::Buy) walk(asks_);
    else walk(bids_);
    return {qty - remaining, cost};
}

LOBSnapshot Book::snapshot(TsMs ts) const {
    LOBSnapshot snap;
    snap.ts = ts;
    for (const auto& [price, queue] : bids_) {
        Lots q = 0;
        for (const auto& o : queue) q += o.qty;
        snap.bids.push_back({price, q});
    }
    for (const auto& [price, queue] : asks_) {
        Lots q = 0;
        for (const auto& o : queue) q += o.qty;
        snap.asks.push_back({price, q});
    }
    return snap;
}

std::vector<Order> Book::orders_of(AgentId agent) const {
    std::vector<Order> out;
    auto collect = [&](const auto& levels) {
        for (const auto& [price, queue] : levels)
            for (const auto& o : queue)
                if (o.agent == agent) out.push_back(o);
    };
    collect(bids_);
    collect(asks_);
    std::sort(out.begin(), out.end(), [](const Order& a, const Order& b) {
        return std::tie(a.placed_ts, a.id) < std::tie(b.placed_ts, b.id);
    });
    return out;
}

const Order* Book::find(OrderId id) const {
    auto it = live_.find(id);
    if (it == live_.end()) return nullptr;
    auto [side, price] = it->second;
    auto search = [&](const auto& levels) -> const Order* {
        auto lv = levels.find(price);
        if (lv == levels.end()) return nullptr;
        for (const auto& o : lv->second)
            if (o.id == id) return &o;
        return nullptr;
    };
    return side == Side::Buy ? search(bids_) : search(asks_);
}

}  // namespace mmlab
