#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmlab/backtest.hpp"
#include "mmlab/marketdata.hpp"

namespace mmlab {

struct TimeWindow {
    TsMs start = 0;
    TsMs end = 0;  // inclusive bounds on candle open times
};

struct AssetMetrics {
    std::string symbol;
    TsMs start_ts = 0, end_ts = 0;
    double ret = 0.0;     // (p_end - p_start) / p_start
    double stdn = 0.0;    // population stdev(prices) / mean(prices)
    double sharpe = 0.0;  // ret / stdn, risk-free rate 0
    double msharpe = 0.0;
};

// Asymmetric risk adjustment: return divided by dispersion when positive,
// multiplied by dispersion when negative.
double modified_sharpe(double ret, double stdn);

AssetMetrics asset_metrics(const std::string& symbol, std::span<const Candle> candles,
                           const TimeWindow& window);

enum class RankCriterion { Ret, Stdn, Sharpe, Msharpe };
RankCriterion criterion_from_string(const std::string& s);

struct RankedAsset {
    std::string symbol;
    double value = 0.0;
    bool tie_broken = false;  // ordered by symbol against an equal neighbor
};

// Descending by criterion (ascending for stdn); ties broken lexicographically
// and flagged. Assets not covering the window are excluded with a reason.
struct RankOutcome {
    std::vector<RankedAsset> order;
    std::map<std::string, std::string> excluded;  // symbol -> reason
};

RankOutcome rank_assets(const std::map<std::string, std::vector<Candle>>& histories,
                        const TimeWindow& window, RankCriterion criterion);

struct BacktestOutcome {
    std::string symbol;
    double hodl_return = 0.0;
    double best_return = 0.0;
    std::string best_strategy;
};

struct RankingReport {
    std::vector<AssetMetrics> metrics;            // straight evaluation
    std::vector<BacktestOutcome> backtests;       // per asset
    std::vector<std::string> msharpe_order;       // straight ranking
    std::vector<std::string> backtest_order;      // by best-strategy return
};

struct BacktestRankOptions {
    QuoteAtoms initial_quote = 1'000'000'000;
    TsMs cadence_ms = 1000;
    TsMs candle_bucket_ms = 60'000;
    FillRuleFlags flags;
    bool allow_oracle = false;
    std::uint64_t seed = 0;
    PredictorConfig predictor;
};

// Each asset is backtested per strategy over the window with identical
// initial capital; assets are ordered by their best strategy's return.
RankingReport backtest_rank(const std::map<std::string, MarketHistory>& histories,
                            const TimeWindow& window,
                            const std::vector<AgentSpec>& strategy_set,
                            const BacktestRankOptions& options);

}  // namespace mmlab
