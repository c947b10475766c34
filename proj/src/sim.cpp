#include "mmlab/sim.hpp"

#include <algorithm>
#include <cassert>
#include <memory>
#include <numeric>

#include "mmlab/rng.hpp"

namespace mmlab {

namespace {

QuoteAtoms quote_fee(QuoteAtoms notional, std::int32_t bps) {
    return notional * bps / 10'000;
}

Lots base_fee(Lots qty, std::int32_t bps) { return qty * bps / 10'000; }

struct Ledger {
    std::vector<AgentAccount> accounts;
    Lots burned_base = 0;
    QuoteAtoms burned_quote = 0;
    std::int32_t maker_bps = 0;
    std::int32_t taker_bps = 0;

    // Fees are charged on the received asset and burned; escrow therefore
    // always covers exactly the notional.
    void settle(const FillEvent& f, Side taker_side, OrderKind taker_kind,
                Ticks taker_limit_price) {
        AgentAccount& maker = accounts[static_cast<std::size_t>(f.maker_agent)];
        AgentAccount& taker = accounts[static_cast<std::size_t>(f.taker_agent)];
        const QuoteAtoms notional = f.price * f.qty;

        AgentAccount& buyer = taker_side == Side::Buy ? taker : maker;
        AgentAccount& seller = taker_side == Side::Buy ? maker : taker;
        const std::int32_t buyer_bps = taker_side == Side::Buy ? taker_bps : maker_bps;
        const std::int32_t seller_bps = taker_side == Side::Buy ? maker_bps : taker_bps;

        // buyer pays quote, receives base
        if (&buyer == &taker && taker_kind == OrderKind::Market) {
            buyer.quote -= notional;
        } else {
            Ticks escrow_price = &buyer == &taker ? taker_limit_price : f.price;
            buyer.quote_reserved -= escrow_price * f.qty;
            buyer.quote += (escrow_price - f.price) * f.qty;  // refund of price improvement
        }
        Lots bfee = base_fee(f.qty, buyer_bps);
        buyer.base += f.qty - bfee;
        burned_base += bfee;

        // seller delivers base, receives quote
        if (&seller == &taker && taker_kind == OrderKind::Market) {
            seller.base -= f.qty;
        } else {
            seller.base_reserved -= f.qty;
        }
        QuoteAtoms qfee = quote_fee(notional, seller_bps);
        seller.quote += notional - qfee;
        burned_quote += qfee;

        assert(buyer.sane() && seller.sane());
    }
};

}  // namespace

RunReport run_simulation(const SimConfig& config) {
    if (config.steps < 1) throw ConfigError("steps must be >= 1");
    if (config.maker_fee_bps < 0 || config.taker_fee_bps < 0)
        throw ConfigError("fees must be >= 0");

    CurveSpec curve = config.curve;
    if (curve.kind != CurveKind::FromFile) curve.n = std::max(curve.n, config.steps);
    std::vector<Candle> candles = generate_curve(curve, config.spec);
    if (static_cast<std::int64_t>(candles.size()) < config.steps)
        throw ConfigError("curve shorter than requested steps");

    const std::size_t n_agents = config.agents.size();
    Ledger ledger;
    ledger.maker_bps = config.maker_fee_bps;
    ledger.taker_bps = config.taker_fee_bps;
    ledger.accounts.resize(n_agents);

    std::vector<std::unique_ptr<Strategy>> strategies;
    std::vector<std::unique_ptr<PredictionEngine>> engines(n_agents);
    std::vector<std::int64_t> rejected(n_agents, 0);
    std::vector<std::int64_t> fill_counts(n_agents, 0);
    std::vector<Lots> volumes(n_agents, 0);

    for (std::size_t i = 0; i < n_agents; ++i) {
        const AgentSpec& spec = config.agents[i];
        AgentAccount& acct = ledger.accounts[i];
        acct.id = static_cast<AgentId>(i);
        acct.base = spec.base;
        acct.quote = spec.quote;
        acct.income_rate = spec.income_rate;
        if (spec.base < 0 || spec.quote < 0 || spec.income_rate < 0)
            throw ConfigError("agent balances must be >= 0");

        PredictionSource pred;
        if (spec.predictor == "oracle") {
            if (!config.allow_oracle)
                throw ConfigError("oracle predictor requires allow_oracle");
            pred.kind = PredKind::Oracle;
            pred.horizon = spec.horizon;
            const TsMs step_ms = curve.step_ms;
            const std::vector<Candle>* series = &candles;  // outlives the run
            int horizon = spec.horizon;
            pred.lookup = [series, step_ms, horizon](TsMs now) -> std::optional<Ticks> {
                std::int64_t idx = now / step_ms + horizon;
                if (idx < 0 || idx >= static_cast<std::int64_t>(series->size()))
                    return std::nullopt;
                return (*series)[static_cast<std::size_t>(idx)].close;
            };
        } else if (spec.predictor == "model") {
            engines[i] = std::make_unique<PredictionEngine>(config.predictor);
            pred.kind = PredKind::Model;
            pred.horizon = spec.horizon;
            PredictionEngine* eng = engines[i].get();
            int horizon = spec.horizon;
            pred.lookup = [eng, horizon](TsMs) { return eng->predict(horizon); };
        } else if (spec.predictor != "none") {
            throw ConfigError("unknown predictor binding '" + spec.predictor + "'");
        }

        std::uint64_t agent_seed =
            config.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1));
        strategies.push_back(make_strategy(spec.strategy, spec.params, std::move(pred), agent_seed));
    }

    const Lots initial_base_total = std::accumulate(
        ledger.accounts.begin(), ledger.accounts.end(), Lots{0},
        [](Lots acc, const AgentAccount& a) { return acc + a.base_total(); });
    const QuoteAtoms initial_quote_total = std::accumulate(
        ledger.accounts.begin(), ledger.accounts.end(), QuoteAtoms{0},
        [](QuoteAtoms acc, const AgentAccount& a) { return acc + a.quote_total(); });
    std::vector<Lots> initial_base(n_agents);
    std::vector<QuoteAtoms> initial_quote(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) {
        initial_base[i] = ledger.accounts[i].base;
        initial_quote[i] = ledger.accounts[i].quote;
    }

    Book book;
    Rng run_rng(config.seed);
    OrderId next_id = 1;
    QuoteAtoms income_credited = 0;
    RunReport report;

    auto settle_fills = [&](const std::vector<FillEvent>& fills, Side taker_side,
                            OrderKind kind, Ticks limit_price) {
        for (const auto& f : fills) {
            ledger.settle(f, taker_side, kind, limit_price);
            ++fill_counts[static_cast<std::size_t>(f.maker_agent)];
            ++fill_counts[static_cast<std::size_t>(f.taker_agent)];
            volumes[static_cast<std::size_t>(f.maker_agent)] += f.qty;
            volumes[static_cast<std::size_t>(f.taker_agent)] += f.qty;
            ++report.total_trades;
            if (config.keep_fill_log) report.fills.push_back(f);
        }
    };

    auto release_order_escrow = [&](const Order& o) {
        AgentAccount& acct = ledger.accounts[static_cast<std::size_t>(o.agent)];
        if (o.side == Side::Buy) {
            acct.quote_reserved -= o.price * o.qty;
            acct.quote += o.price * o.qty;
        } else {
            acct.base_reserved -= o.qty;
            acct.base += o.qty;
        }
    };

    std::vector<std::size_t> poll_order(n_agents);
    std::iota(poll_order.begin(), poll_order.end(), std::size_t{0});

    for (std::int64_t t = 0; t < config.steps; ++t) {
        const Candle& candle = candles[static_cast<std::size_t>(t)];
        const Ticks fundamental = candle.close;
        const TsMs now = candle.ts;

        for (std::size_t i = 0; i < n_agents; ++i)
            if (engines[i]) engines[i]->push_close(fundamental);

        std::iota(poll_order.begin(), poll_order.end(), std::size_t{0});
        run_rng.shuffle(poll_order);

        for (std::size_t idx : poll_order) {
            AgentAccount& acct = ledger.accounts[idx];
            const AgentId agent = static_cast<AgentId>(idx);

            Observation obs;
            obs.now_ts = now;
            obs.ref_price = fundamental;
            obs.snapshot = book.snapshot(now);
            obs.account = acct;
            for (const Order& o : book.orders_of(agent))
                obs.own_orders.push_back({o.id, o.side, o.price, o.qty, o.placed_ts});

            for (const Action& action : strategies[idx]->on_tick(obs)) {
                if (const auto* c = std::get_if<CancelAction>(&action)) {
                    const Order* o = book.find(c->id);
                    if (o == nullptr || o->agent != agent) {
                        ++rejected[idx];
                        continue;
                    }
                    Order copy = *o;
                    book.cancel(c->id);
                    release_order_escrow(copy);
                } else if (const auto* p = std::get_if<PlaceLimitAction>(&action)) {
                    if (p->price <= 0 || p->qty <= 0) {
                        ++rejected[idx];
                        continue;
                    }
                    if (p->side == Side::Buy) {
                        if (acct.quote < p->price * p->qty) {
                            ++rejected[idx];
                            continue;
                        }
                    } else if (acct.base < p->qty) {
                        ++rejected[idx];
                        continue;
                    }
                    if (!config.allow_self_match) {
                        // self-match prevention: cancel own resting orders the
                        // incoming one would cross
                        for (const Order& own : book.orders_of(agent)) {
                            if (own.side == p->side) continue;
                            bool would_cross = p->side == Side::Buy ? p->price >= own.price
                                                                    : p->price <= own.price;
                            if (would_cross) {
                                book.cancel(own.id);
                                release_order_escrow(own);
                            }
                        }
                    }
                    Order order{next_id++, agent, p->side, p->price, p->qty, now,
                                OrderKind::Limit};
                    if (p->side == Side::Buy) {
                        acct.quote -= p->price * p->qty;
                        acct.quote_reserved += p->price * p->qty;
                    } else {
                        acct.base -= p->qty;
                        acct.base_reserved += p->qty;
                    }
                    auto fills = book.place_limit(order);
                    settle_fills(fills, p->side, OrderKind::Limit, p->price);
                } else if (const auto* m = std::get_if<PlaceMarketAction>(&action)) {
                    if (m->qty <= 0) {
                        ++rejected[idx];
                        continue;
                    }
                    if (m->side == Side::Buy) {
                        auto [fillable, cost] = book.preview_market(Side::Buy, m->qty);
                        (void)fillable;
                        if (cost > acct.quote) {
                            ++rejected[idx];
                            continue;
                        }
                    } else if (acct.base < m->qty) {
                        ++rejected[idx];
                        continue;
                    }
                    Order order{next_id++, agent, m->side, 0, m->qty, now, OrderKind::Market};
                    auto fills = book.execute_market(order);
                    settle_fills(fills, m->side, OrderKind::Market, 0);
                }
            }
        }

        for (auto& acct : ledger.accounts) {
            acct.quote += acct.income_rate;
            income_credited += acct.income_rate;
        }

#ifndef NDEBUG
        for (const auto& acct : ledger.accounts) assert(acct.sane());
#endif
    }

    // wind-down: cancel everything, release escrow, mark at the last price
    for (std::size_t i = 0; i < n_agents; ++i)
        for (const Order& o : book.orders_of(static_cast<AgentId>(i))) {
            book.cancel(o.id);
            release_order_escrow(o);
        }

    const Ticks final_price = candles[static_cast<std::size_t>(config.steps - 1)].close;
    report.final_price = final_price;

    Lots final_base_total = 0;
    QuoteAtoms final_quote_total = 0;
    for (std::size_t i = 0; i < n_agents; ++i) {
        const AgentAccount& acct = ledger.accounts[i];
        final_base_total += acct.base_total();
        final_quote_total += acct.quote_total();

        AgentResult r;
        r.id = static_cast<AgentId>(i);
        r.strategy = config.agents[i].strategy;
        r.initial_value = initial_quote[i] + initial_base[i] * final_price;
        r.final_value = mark_to_market(acct, final_price);
        r.pnl = r.final_value - r.initial_value;
        r.ret = r.initial_value > 0
                    ? static_cast<double>(r.pnl) / static_cast<double>(r.initial_value)
                    : 0.0;
        r.fills = fill_counts[i];
        r.volume = volumes[i];
        r.final_base = acct.base_total();
        r.final_quote = acct.quote_total();
        r.rejected_actions = rejected[i];
        r.used_oracle = strategies[i]->uses_oracle();
        report.agents.push_back(std::move(r));
    }

    report.burned_base_fees = ledger.burned_base;
    report.burned_quote_fees = ledger.burned_quote;
    report.conservation_residue_base =
        final_base_total + ledger.burned_base - initial_base_total;
    report.conservation_residue_quote =
        final_quote_total + ledger.burned_quote - initial_quote_total - income_credited;
    return report;
}

}  // namespace mmlab
