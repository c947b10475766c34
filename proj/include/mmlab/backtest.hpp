#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmlab/account.hpp"
#include "mmlab/marketdata.hpp"
#include "mmlab/predictor.hpp"
#include "mmlab/sim.hpp"
#include "mmlab/strategies.hpp"

namespace mmlab {

// Simulated quotes against a real tape: orders fill only when a later
// historical trade matches them, and never touch the historical stream.

struct VirtualOrder {
    OrderId id = 0;
    AgentId agent = 0;
    Side side = Side::Buy;
    Ticks price = 0;
    Lots qty = 0;  // remaining
    TsMs placed_ts = 0;
    std::optional<TsMs> ttl_ms;  // absent -> lives until cancelled
};

struct VirtualFill {
    TsMs ts = 0;  // timestamp of the matching historical trade
    OrderId order_id = 0;
    Ticks price = 0;
    Lots qty = 0;
    std::size_t trade_index = 0;
    bool operator==(const VirtualFill&) const = default;
};

struct FillRuleFlags {
    // strict price improvement: buys need trade.price < order.price
    bool require_price_improvement = false;
    // one historical trade's qty is consumed across the orders it fills
    bool deplete_trade_qty = false;
    // optimistic alternative: execute at the trade's price, not the order's
    bool fill_at_trade_price = false;
};

// The fill rule. Time is strict (trade.ts > placed_ts); a trade at exactly
// the limit price fills unless require_price_improvement. Returns
// (qty, price) or nothing.
std::optional<std::pair<Lots, Ticks>> try_fill(const VirtualOrder& order, const Trade& trade,
                                               const FillRuleFlags& flags,
                                               Lots trade_qty_remaining);

// Static-order harness: replay the tape against a fixed order set, filling
// oldest-first. This is the exact matching path the engine uses; tests hold
// it against an independent brute-force matcher.
std::vector<VirtualFill> match_orders(std::vector<VirtualOrder> orders,
                                      std::span<const Trade> trades,
                                      const FillRuleFlags& flags);

struct BacktestConfig {
    const MarketHistory* history = nullptr;
    std::vector<AgentSpec> agents;
    TsMs cadence_ms = 0;  // 0 -> snapshot cadence, else candle bucket, else 1000
    std::int32_t maker_fee_bps = 0;
    std::int32_t taker_fee_bps = 0;
    FillRuleFlags flags;
    bool allow_oracle = false;
    std::uint64_t seed = 0;
    QuoteAtoms benchmark_quote = 1'000'000'000;  // hodl benchmark starting cash
    TsMs candle_bucket_ms = 60'000;              // model-predictor resample bucket
    PredictorConfig predictor;
    std::optional<TsMs> order_ttl_ms;  // expiry policy for all virtual orders
    bool keep_fill_log = false;
};

struct BacktestAgentResult : AgentResult {
    std::int64_t orders_placed = 0;
    std::int64_t orders_filled = 0;  // orders with at least one fill
    double fill_ratio = 0.0;
};

struct BacktestReport {
    std::vector<BacktestAgentResult> agents;
    double hodl_return = 0.0;  // benchmark, always present
    std::int64_t tape_trades = 0;
    Ticks first_price = 0;
    Ticks last_price = 0;
    std::vector<VirtualFill> fills;  // when keep_fill_log
};

BacktestReport run_backtest(const BacktestConfig& config);

}  // namespace mmlab
