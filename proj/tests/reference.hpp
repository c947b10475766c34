#pragma once

// Test-only oracles: naive reference implementations kept independent of the
// engine code paths they check, plus seeded tape generators.

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "mmlab/backtest.hpp"
#include "mmlab/lob.hpp"
#include "mmlab/marketdata.hpp"
#include "mmlab/rng.hpp"

namespace ref {

using namespace mmlab;

// --- naive price-time-priority matcher --------------------------------------
// Flat vector of resting orders; every operation scans the whole set.

struct NaiveBook {
    std::vector<Order> resting;

    const Order* best_opposite(Side taker_side) const {
        const Order* best = nullptr;
        for (const auto& o : resting) {
            if (o.side == taker_side) continue;
            if (best == nullptr) {
                best = &o;
                continue;
            }
            bool better;
            if (o.side == Side::Sell)
                better = o.price < best->price ||
                         (o.price == best->price &&
                          std::tie(o.placed_ts, o.id) < std::tie(best->placed_ts, best->id));
            else
                better = o.price > best->price ||
                         (o.price == best->price &&
                          std::tie(o.placed_ts, o.id) < std::tie(best->placed_ts, best->id));
            if (better) best = &o;
        }
        return best;
    }

    std::vector<FillEvent> place_limit(Order taker) {
        std::vector<FillEvent> fills;
        while (taker.qty > 0) {
            const Order* best = best_opposite(taker.side);
            if (best == nullptr) break;
            bool crosses = taker.side == Side::Buy ? taker.price >= best->price
                                                   : taker.price <= best->price;
            if (!crosses) break;
            fills.push_back(match_against(taker, *best));
        }
        if (taker.qty > 0) resting.push_back(taker);
        return fills;
    }

    std::vector<FillEvent> execute_market(Order taker) {
        std::vector<FillEvent> fills;
        while (taker.qty > 0) {
            const Order* best = best_opposite(taker.side);
            if (best == nullptr) break;
            fills.push_back(match_against(taker, *best));
        }
        return fills;
    }

    bool cancel(OrderId id) {
        for (auto it = resting.begin(); it != resting.end(); ++it)
            if (it->id == id) {
                resting.erase(it);
                return true;
            }
        return false;
    }

    std::optional<Ticks> best_bid() const {
        std::optional<Ticks> best;
        for (const auto& o : resting)
            if (o.side == Side::Buy && (!best || o.price > *best)) best = o.price;
        return best;
    }
    std::optional<Ticks> best_ask() const {
        std::optional<Ticks> best;
        for (const auto& o : resting)
            if (o.side == Side::Sell && (!best || o.price < *best)) best = o.price;
        return best;
    }

    // (price, qty, id) triples for residual-book comparison
    std::vector<std::tuple<Ticks, Lots, OrderId>> residual() const {
        std::vector<std::tuple<Ticks, Lots, OrderId>> out;
        for (const auto& o : resting) out.emplace_back(o.price, o.qty, o.id);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    FillEvent match_against(Order& taker, const Order& best_ref) {
        for (auto it = resting.begin(); it != resting.end(); ++it) {
            if (it->id != best_ref.id) continue;
            Lots q = std::min(taker.qty, it->qty);
            FillEvent f{taker.placed_ts, it->id, taker.id, it->price, q, it->agent, taker.agent};
            taker.qty -= q;
            it->qty -= q;
            if (it->qty == 0) resting.erase(it);
            return f;
        }
        return {};
    }
};

// --- naive backtest fill matcher ---------------------------------------------
// O(orders x trades) double loop, re-deriving the fill rule from scratch.

inline std::vector<VirtualFill> naive_match(std::vector<VirtualOrder> orders,
                                            const std::vector<Trade>& trades,
                                            const FillRuleFlags& flags) {
    std::sort(orders.begin(), orders.end(), [](const VirtualOrder& a, const VirtualOrder& b) {
        if (a.placed_ts != b.placed_ts) return a.placed_ts < b.placed_ts;
        return a.id < b.id;
    });
    std::vector<VirtualFill> fills;
    for (std::size_t ti = 0; ti < trades.size(); ++ti) {
        const Trade& tr = trades[ti];
        Lots trade_left = tr.qty;
        for (auto& o : orders) {
            if (o.qty <= 0) continue;
            if (tr.ts <= o.placed_ts) continue;
            if (o.ttl_ms && tr.ts > o.placed_ts + *o.ttl_ms) continue;
            bool ok;
            if (o.side == Side::Buy)
                ok = flags.require_price_improvement ? tr.price < o.price : tr.price <= o.price;
            else
                ok = flags.require_price_improvement ? tr.price > o.price : tr.price >= o.price;
            if (!ok) continue;
            Lots avail = flags.deplete_trade_qty ? trade_left : tr.qty;
            if (avail <= 0) continue;
            Lots q = std::min(o.qty, avail);
            Ticks px = flags.fill_at_trade_price ? tr.price : o.price;
            fills.push_back({tr.ts, o.id, px, q, ti});
            o.qty -= q;
            if (flags.deplete_trade_qty) trade_left -= q;
        }
    }
    return fills;
}

// --- seeded synthetic tapes ----------------------------------------------------

// Mean-reverting tape: an Ornstein-Uhlenbeck walk around a (possibly
// drifting) anchor, one trade per step.
inline std::vector<Trade> ou_tape(std::uint64_t seed, std::size_t n, Ticks anchor0,
                                  double drift_per_step, double reversion, double vol_ticks,
                                  TsMs step_ms = 100) {
    Rng rng(seed);
    std::vector<Trade> tape;
    double anchor = static_cast<double>(anchor0);
    double price = anchor;
    for (std::size_t i = 0; i < n; ++i) {
        anchor += drift_per_step;
        price += reversion * (anchor - price) + vol_ticks * rng.normal();
        Ticks p = std::max<Ticks>(1, static_cast<Ticks>(std::llround(price)));
        Lots q = 1 + rng.geometric(0.5);
        tape.push_back({static_cast<TsMs>(i) * step_ms, p,
                        std::min<Lots>(q, 20), rng.bernoulli(0.5) ? Side::Buy : Side::Sell});
    }
    return tape;
}

}  // namespace ref
