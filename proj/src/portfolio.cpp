#include "mmlab/portfolio.hpp"

#include <algorithm>
#include <cmath>

namespace mmlab {

namespace {
constexpr double kEps = 1e-12;
}

double modified_sharpe(double ret, double stdn) {
    if (ret > 0.0) return ret / std::max(stdn, kEps);
    if (ret < 0.0) return ret * stdn;
    return 0.0;
}

AssetMetrics asset_metrics(const std::string& symbol, std::span<const Candle> candles,
                           const TimeWindow& window) {
    std::vector<double> prices;
    TsMs start_ts = 0, end_ts = 0;
    for (const auto& c : candles) {
        if (c.ts < window.start || c.ts > window.end) continue;
        if (prices.empty()) start_ts = c.ts;
        end_ts = c.ts;
        prices.push_back(static_cast<double>(c.close));
    }
    if (prices.size() < 2)
        throw ConfigError("window for " + symbol + " has fewer than 2 prices");

    AssetMetrics m;
    m.symbol = symbol;
    m.start_ts = start_ts;
    m.end_ts = end_ts;
    m.ret = (prices.back() - prices.front()) / prices.front();

    double mean = 0.0;
    for (double p : prices) mean += p;
    mean /= static_cast<double>(prices.size());
    double var = 0.0;
    for (double p : prices) var += (p - mean) * (p - mean);
    var /= static_cast<double>(prices.size());  // population stdev
    m.stdn = std::sqrt(var) / mean;
    m.sharpe = m.ret / std::max(m.stdn, kEps);
    m.msharpe = modified_sharpe(m.ret, m.stdn);
    return m;
}

RankCriterion criterion_from_string(const std::string& s) {
    if (s == "ret") return RankCriterion::Ret;
    if (s == "stdn") return RankCriterion::Stdn;
    if (s == "sharpe") return RankCriterion::Sharpe;
    if (s == "msharpe") return RankCriterion::Msharpe;
    throw ConfigError("unknown ranking criterion '" + s + "'");
}

RankOutcome rank_assets(const std::map<std::string, std::vector<Candle>>& histories,
                        const TimeWindow& window, RankCriterion criterion) {
    RankOutcome out;
    std::vector<RankedAsset> ranked;
    for (const auto& [symbol, candles] : histories) {
        try {
            AssetMetrics m = asset_metrics(symbol, candles, window);
            double v = 0.0;
            switch (criterion) {
                case RankCriterion::Ret: v = m.ret; break;
                case RankCriterion::Stdn: v = m.stdn; break;
                case RankCriterion::Sharpe: v = m.sharpe; break;
                case RankCriterion::Msharpe: v = m.msharpe; break;
            }
            ranked.push_back({symbol, v, false});
        } catch (const ConfigError& e) {
            out.excluded[symbol] = e.what();
        }
    }
    const bool ascending = criterion == RankCriterion::Stdn;
    std::sort(ranked.begin(), ranked.end(), [&](const RankedAsset& a, const RankedAsset& b) {
        if (a.value != b.value) return ascending ? a.value < b.value : a.value > b.value;
        return a.symbol < b.symbol;
    });
    for (std::size_t i = 0; i + 1 < ranked.size(); ++i) {
        if (ranked[i].value == ranked[i + 1].value) {
            ranked[i].tie_broken = true;
            ranked[i + 1].tie_broken = true;
        }
    }
    out.order = std::move(ranked);
    return out;
}

RankingReport backtest_rank(const std::map<std::string, MarketHistory>& histories,
                            const TimeWindow& window,
                            const std::vector<AgentSpec>& strategy_set,
                            const BacktestRankOptions& options) {
    if (strategy_set.empty()) throw ConfigError("strategy set must be nonempty");

    RankingReport report;
    for (const auto& [symbol, hist] : histories) {
        // restrict the history to the window
        MarketHistory sliced;
        sliced.spec = hist.spec;
        for (const auto& t : hist.trades)
            if (t.ts >= window.start && t.ts <= window.end) sliced.trades.push_back(t);
        for (const auto& s : hist.snapshots)
            if (s.ts >= window.start && s.ts <= window.end) sliced.snapshots.push_back(s);
        sliced.candles = resample(sliced.trades, options.candle_bucket_ms);
        if (sliced.trades.empty())
            throw ConfigError("window not covered by " + symbol);

        report.metrics.push_back(asset_metrics(symbol, sliced.candles, window));

        BacktestOutcome outcome;
        outcome.symbol = symbol;
        bool first = true;
        for (const auto& strat : strategy_set) {
            BacktestConfig cfg;
            cfg.history = &sliced;
            AgentSpec agent = strat;
            agent.quote = options.initial_quote;
            agent.base = 0;
            cfg.agents = {agent};
            cfg.cadence_ms = options.cadence_ms;
            cfg.candle_bucket_ms = options.candle_bucket_ms;
            cfg.flags = options.flags;
            cfg.allow_oracle = options.allow_oracle;
            cfg.seed = options.seed;
            cfg.benchmark_quote = options.initial_quote;
            cfg.predictor = options.predictor;
            BacktestReport bt = run_backtest(cfg);
            outcome.hodl_return = bt.hodl_return;
            double ret = bt.agents.front().ret;
            if (first || ret > outcome.best_return) {
                outcome.best_return = ret;
                outcome.best_strategy = strat.strategy;
                first = false;
            }
        }
        report.backtests.push_back(std::move(outcome));
    }

    std::map<std::string, std::vector<Candle>> candle_map;
    for (const auto& [symbol, hist] : histories)
        candle_map[symbol] = resample(hist.trades, options.candle_bucket_ms);
    for (const auto& r : rank_assets(candle_map, window, RankCriterion::Msharpe).order)
        report.msharpe_order.push_back(r.symbol);

    std::vector<const BacktestOutcome*> by_best;
    for (const auto& o : report.backtests) by_best.push_back(&o);
    std::sort(by_best.begin(), by_best.end(), [](const BacktestOutcome* a, const BacktestOutcome* b) {
        if (a->best_return != b->best_return) return a->best_return > b->best_return;
        return a->symbol < b->symbol;
    });
    for (const auto* o : by_best) report.backtest_order.push_back(o->symbol);
    return report;
}

}  // namespace mmlab
