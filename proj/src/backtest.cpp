#include "mmlab/backtest.hpp"

#include <algorithm>
#include <cassert>
#include <memory>

namespace mmlab {

std::optional<std::pair<Lots, Ticks>> try_fill(const VirtualOrder& order, const Trade& trade,
                                               const FillRuleFlags& flags,
                                               Lots trade_qty_remaining) {
    if (trade.ts <= order.placed_ts) return std::nullopt;  // strict: same-instant never fills
    if (order.ttl_ms && trade.ts > order.placed_ts + *order.ttl_ms) return std::nullopt;
    bool price_ok;
    if (order.side == Side::Buy)
        price_ok = flags.require_price_improvement ? trade.price < order.price
                                                   : trade.price <= order.price;
    else
        price_ok = flags.require_price_improvement ? trade.price > order.price
                                                   : trade.price >= order.price;
    if (!price_ok) return std::nullopt;

    Lots avail = flags.deplete_trade_qty ? trade_qty_remaining : trade.qty;
    Lots qty = std::min(order.qty, avail);
    if (qty <= 0) return std::nullopt;
    Ticks price = flags.fill_at_trade_price ? trade.price : order.price;
    return std::make_pair(qty, price);
}

std::vector<VirtualFill> match_orders(std::vector<VirtualOrder> orders,
                                      std::span<const Trade> trades,
                                      const FillRuleFlags& flags) {
    std::sort(orders.begin(), orders.end(), [](const VirtualOrder& a, const VirtualOrder& b) {
        return std::tie(a.placed_ts, a.id) < std::tie(b.placed_ts, b.id);
    });
    std::vector<VirtualFill> fills;
    for (std::size_t ti = 0; ti < trades.size(); ++ti) {
        const Trade& trade = trades[ti];
        Lots remaining = trade.qty;
        for (auto& order : orders) {
            if (order.qty == 0) continue;
            auto hit = try_fill(order, trade, flags, remaining);
            if (!hit) continue;
            auto [qty, price] = *hit;
            fills.push_back({trade.ts, order.id, price, qty, ti});
            order.qty -= qty;
            if (flags.deplete_trade_qty) {
                remaining -= qty;
                if (remaining == 0) break;
            }
        }
    }
    return fills;
}

namespace {

struct LiveOrder {
    VirtualOrder order;
    Ticks escrow_price = 0;  // buy escrow is held at the limit price
    bool filled_any = false;
};

struct BtRun {
    const BacktestConfig& cfg;
    const MarketHistory& hist;
    std::vector<AgentAccount> accounts;
    std::vector<LiveOrder> live;  // kept oldest-first (placed_ts, id)
    Lots burned_base = 0;
    QuoteAtoms burned_quote = 0;
    std::vector<std::int64_t> rejected, fill_events, orders_placed, orders_filled;
    std::vector<Lots> volumes;
    std::vector<VirtualFill> fill_log;
    OrderId next_id = 1;

    explicit BtRun(const BacktestConfig& c) : cfg(c), hist(*c.history) {}

    void release_escrow(const LiveOrder& lo) {
        AgentAccount& acct = accounts[static_cast<std::size_t>(lo.order.agent)];
        if (lo.order.side == Side::Buy) {
            acct.quote_reserved -= lo.escrow_price * lo.order.qty;
            acct.quote += lo.escrow_price * lo.order.qty;
        } else {
            acct.base_reserved -= lo.order.qty;
            acct.base += lo.order.qty;
        }
    }

    void settle(LiveOrder& lo, Lots qty, Ticks price, const Trade& trade, std::size_t ti) {
        AgentAccount& acct = accounts[static_cast<std::size_t>(lo.order.agent)];
        if (lo.order.side == Side::Buy) {
            acct.quote_reserved -= lo.escrow_price * qty;
            acct.quote += (lo.escrow_price - price) * qty;
            Lots bfee = qty * cfg.taker_fee_bps / 10'000;
            acct.base += qty - bfee;
            burned_base += bfee;
        } else {
            acct.base_reserved -= qty;
            QuoteAtoms qfee = price * qty * cfg.taker_fee_bps / 10'000;
            acct.quote += price * qty - qfee;
            burned_quote += qfee;
        }
        lo.order.qty -= qty;
        lo.filled_any = true;
        ++fill_events[static_cast<std::size_t>(lo.order.agent)];
        volumes[static_cast<std::size_t>(lo.order.agent)] += qty;
        if (cfg.keep_fill_log) fill_log.push_back({trade.ts, lo.order.id, price, qty, ti});
        assert(acct.sane());
    }

    void place(AgentId agent, Side side, Ticks price, Lots qty, TsMs now) {
        AgentAccount& acct = accounts[static_cast<std::size_t>(agent)];
        if (price <= 0 || qty <= 0) {
            ++rejected[static_cast<std::size_t>(agent)];
            return;
        }
        if (side == Side::Buy) {
            if (acct.quote < price * qty) {
                ++rejected[static_cast<std::size_t>(agent)];
                return;
            }
            acct.quote -= price * qty;
            acct.quote_reserved += price * qty;
        } else {
            if (acct.base < qty) {
                ++rejected[static_cast<std::size_t>(agent)];
                return;
            }
            acct.base -= qty;
            acct.base_reserved += qty;
        }
        LiveOrder lo;
        lo.order = {next_id++, agent, side, price, qty, now, cfg.order_ttl_ms};
        lo.escrow_price = price;
        live.push_back(lo);  // placed_ts nondecreasing, so appends keep order
        ++orders_placed[static_cast<std::size_t>(agent)];
    }

    // Market intent executes immediately and fully at the reference price
    // (zero slippage): there is no synthetic book to sweep, and the hodl
    // benchmark must reduce to a pure price ratio.
    void execute_market(AgentId agent, Side side, Ticks price, Lots qty, TsMs now,
                        std::size_t ti) {
        AgentAccount& acct = accounts[static_cast<std::size_t>(agent)];
        if (price <= 0 || qty <= 0) {
            ++rejected[static_cast<std::size_t>(agent)];
            return;
        }
        const QuoteAtoms notional = price * qty;
        if (side == Side::Buy) {
            if (acct.quote < notional) {
                ++rejected[static_cast<std::size_t>(agent)];
                return;
            }
            acct.quote -= notional;
            Lots bfee = qty * cfg.taker_fee_bps / 10'000;
            acct.base += qty - bfee;
            burned_base += bfee;
        } else {
            if (acct.base < qty) {
                ++rejected[static_cast<std::size_t>(agent)];
                return;
            }
            acct.base -= qty;
            QuoteAtoms qfee = notional * cfg.taker_fee_bps / 10'000;
            acct.quote += notional - qfee;
            burned_quote += qfee;
        }
        ++fill_events[static_cast<std::size_t>(agent)];
        volumes[static_cast<std::size_t>(agent)] += qty;
        ++orders_placed[static_cast<std::size_t>(agent)];
        ++orders_filled[static_cast<std::size_t>(agent)];
        if (cfg.keep_fill_log) fill_log.push_back({now, next_id, price, qty, ti});
        ++next_id;
        assert(acct.sane());
    }

    void cancel(AgentId agent, OrderId id) {
        for (auto it = live.begin(); it != live.end(); ++it) {
            if (it->order.id == id && it->order.agent == agent) {
                if (it->filled_any) ++orders_filled[static_cast<std::size_t>(agent)];
                release_escrow(*it);
                live.erase(it);
                return;
            }
        }
        ++rejected[static_cast<std::size_t>(agent)];
    }

    void on_trade(const Trade& trade, std::size_t ti) {
        // TTL expiry first, then oldest-first fill testing
        for (auto it = live.begin(); it != live.end();) {
            if (it->order.ttl_ms && trade.ts > it->order.placed_ts + *it->order.ttl_ms) {
                if (it->filled_any) ++orders_filled[static_cast<std::size_t>(it->order.agent)];
                release_escrow(*it);
                it = live.erase(it);
            } else {
                ++it;
            }
        }
        Lots remaining = trade.qty;
        for (auto it = live.begin(); it != live.end();) {
            auto hit = try_fill(it->order, trade, cfg.flags, remaining);
            if (hit) {
                auto [qty, price] = *hit;
                settle(*it, qty, price, trade, ti);
                if (cfg.flags.deplete_trade_qty) remaining -= qty;
                if (it->order.qty == 0) {
                    ++orders_filled[static_cast<std::size_t>(it->order.agent)];
                    it = live.erase(it);
                } else {
                    ++it;
                }
                if (cfg.flags.deplete_trade_qty && remaining == 0) break;
            } else {
                ++it;
            }
        }
    }
};

double run_agents(const BacktestConfig& cfg, const std::vector<AgentSpec>& agents,
                  std::vector<BacktestAgentResult>* results,
                  std::vector<VirtualFill>* fill_log) {
    const MarketHistory& hist = *cfg.history;
    if (hist.trades.empty()) throw ConfigError("backtest history has no trades");

    BtRun run(cfg);
    run.accounts.resize(agents.size());
    run.rejected.assign(agents.size(), 0);
    run.fill_events.assign(agents.size(), 0);
    run.orders_placed.assign(agents.size(), 0);
    run.orders_filled.assign(agents.size(), 0);
    run.volumes.assign(agents.size(), 0);

    // model-predictor candle feed shares one incremental resampler
    std::vector<std::unique_ptr<PredictionEngine>> engines(agents.size());
    bool any_model = false;

    std::vector<Candle> oracle_candles;
    bool any_oracle = false;
    for (const auto& a : agents) {
        if (a.predictor == "oracle") any_oracle = true;
        if (a.predictor == "model") any_model = true;
    }
    if (any_oracle) {
        if (!cfg.allow_oracle) throw ConfigError("oracle predictor requires allow_oracle");
        oracle_candles = resample(hist.trades, cfg.candle_bucket_ms);
    }

    std::vector<std::unique_ptr<Strategy>> strategies;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const AgentSpec& spec = agents[i];
        AgentAccount& acct = run.accounts[i];
        acct.id = static_cast<AgentId>(i);
        acct.base = spec.base;
        acct.quote = spec.quote;

        PredictionSource pred;
        if (spec.predictor == "oracle") {
            pred.kind = PredKind::Oracle;
            pred.horizon = spec.horizon;
            const std::vector<Candle>* series = &oracle_candles;
            const TsMs bucket = cfg.candle_bucket_ms;
            int horizon = spec.horizon;
            pred.lookup = [series, bucket, horizon](TsMs now) -> std::optional<Ticks> {
                TsMs target = now + horizon * bucket;
                // last candle opening at or before the target time
                auto it = std::upper_bound(series->begin(), series->end(), target,
                                           [](TsMs t, const Candle& c) { return t < c.ts; });
                if (it == series->begin()) return std::nullopt;
                --it;
                if (target >= it->ts + bucket) return std::nullopt;  // beyond series end
                return it->close;
            };
        } else if (spec.predictor == "model") {
            engines[i] = std::make_unique<PredictionEngine>(cfg.predictor);
            pred.kind = PredKind::Model;
            pred.horizon = spec.horizon;
            PredictionEngine* eng = engines[i].get();
            int horizon = spec.horizon;
            pred.lookup = [eng, horizon](TsMs) { return eng->predict(horizon); };
        } else if (spec.predictor != "none") {
            throw ConfigError("unknown predictor binding '" + spec.predictor + "'");
        }

        std::uint64_t agent_seed =
            cfg.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1));
        strategies.push_back(make_strategy(spec.strategy, spec.params, std::move(pred), agent_seed));
    }

    std::vector<Lots> initial_base(agents.size());
    std::vector<QuoteAtoms> initial_quote(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        initial_base[i] = run.accounts[i].base;
        initial_quote[i] = run.accounts[i].quote;
    }

    TsMs cadence = cfg.cadence_ms;
    if (cadence <= 0 && hist.snapshots.size() >= 2)
        cadence = hist.snapshots[1].ts - hist.snapshots[0].ts;
    if (cadence <= 0) cadence = 1000;

    const TsMs t_first = hist.trades.front().ts;
    const TsMs t_last = hist.trades.back().ts;

    // incremental candle feed for model predictors
    TsMs bucket_start = (t_first / cfg.candle_bucket_ms) * cfg.candle_bucket_ms;
    Ticks bucket_close = hist.trades.front().price;
    auto feed_until = [&](TsMs now) {
        if (!any_model) return;
        while (bucket_start + cfg.candle_bucket_ms <= now) {
            for (auto& eng : engines)
                if (eng) eng->push_close(bucket_close);
            bucket_start += cfg.candle_bucket_ms;
        }
    };

    std::size_t trade_i = 0;
    std::size_t snap_i = 0;
    Ticks last_price = hist.trades.front().price;

    for (TsMs tick = t_first; tick <= t_last; tick += cadence) {
        // trades up to and including the tick time happen first
        while (trade_i < hist.trades.size() && hist.trades[trade_i].ts <= tick) {
            run.on_trade(hist.trades[trade_i], trade_i);
            bucket_close = hist.trades[trade_i].price;
            last_price = hist.trades[trade_i].price;
            ++trade_i;
        }
        feed_until(tick);
        while (snap_i + 1 < hist.snapshots.size() && hist.snapshots[snap_i + 1].ts <= tick)
            ++snap_i;

        for (std::size_t i = 0; i < agents.size(); ++i) {
            Observation obs;
            obs.now_ts = tick;
            obs.ref_price = last_price;
            if (!hist.snapshots.empty() && hist.snapshots[snap_i].ts <= tick)
                obs.snapshot = hist.snapshots[snap_i];
            obs.account = run.accounts[i];
            for (const auto& lo : run.live)
                if (lo.order.agent == static_cast<AgentId>(i))
                    obs.own_orders.push_back({lo.order.id, lo.order.side, lo.order.price,
                                              lo.order.qty, lo.order.placed_ts});

            for (const Action& action : strategies[i]->on_tick(obs)) {
                if (const auto* c = std::get_if<CancelAction>(&action)) {
                    run.cancel(static_cast<AgentId>(i), c->id);
                } else if (const auto* p = std::get_if<PlaceLimitAction>(&action)) {
                    run.place(static_cast<AgentId>(i), p->side, p->price, p->qty, tick);
                } else if (const auto* m = std::get_if<PlaceMarketAction>(&action)) {
                    run.execute_market(static_cast<AgentId>(i), m->side, last_price, m->qty,
                                       tick, trade_i > 0 ? trade_i - 1 : 0);
                }
            }
        }
    }

    // remaining trades after the last tick
    while (trade_i < hist.trades.size()) {
        run.on_trade(hist.trades[trade_i], trade_i);
        last_price = hist.trades[trade_i].price;
        ++trade_i;
    }

    for (auto& lo : run.live) {
        if (lo.filled_any) ++run.orders_filled[static_cast<std::size_t>(lo.order.agent)];
        run.release_escrow(lo);
    }
    run.live.clear();

    const Ticks final_price = hist.trades.back().price;
    double first_return = 0.0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const AgentAccount& acct = run.accounts[i];
        BacktestAgentResult r;
        r.id = static_cast<AgentId>(i);
        r.strategy = agents[i].strategy;
        r.initial_value = initial_quote[i] + initial_base[i] * final_price;
        r.final_value = mark_to_market(acct, final_price);
        r.pnl = r.final_value - r.initial_value;
        r.ret = r.initial_value > 0
                    ? static_cast<double>(r.pnl) / static_cast<double>(r.initial_value)
                    : 0.0;
        r.fills = run.fill_events[i];
        r.volume = run.volumes[i];
        r.final_base = acct.base_total();
        r.final_quote = acct.quote_total();
        r.rejected_actions = run.rejected[i];
        r.used_oracle = strategies[i]->uses_oracle();
        r.orders_placed = run.orders_placed[i];
        r.orders_filled = run.orders_filled[i];
        r.fill_ratio = r.orders_placed > 0
                           ? static_cast<double>(r.orders_filled) /
                                 static_cast<double>(r.orders_placed)
                           : 0.0;
        if (i == 0) first_return = r.ret;
        if (results) results->push_back(std::move(r));
    }
    if (fill_log) *fill_log = std::move(run.fill_log);
    return first_return;
}

}  // namespace

BacktestReport run_backtest(const BacktestConfig& config) {
    if (config.history == nullptr) throw ConfigError("backtest requires a history");
    if (config.cadence_ms < 0) throw ConfigError("cadence must be > 0");

    BacktestReport report;
    report.tape_trades = static_cast<std::int64_t>(config.history->trades.size());
    if (!config.history->trades.empty()) {
        report.first_price = config.history->trades.front().price;
        report.last_price = config.history->trades.back().price;
    }

    run_agents(config, config.agents, &report.agents,
               config.keep_fill_log ? &report.fills : nullptr);

    // the benchmark is the hodl strategy run standalone on the same window
    AgentSpec hodl;
    hodl.strategy = "hodl";
    hodl.quote = config.benchmark_quote;
    report.hodl_return = run_agents(config, {hodl}, nullptr, nullptr);
    return report;
}

}  // namespace mmlab
