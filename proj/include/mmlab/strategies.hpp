#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmlab/account.hpp"
#include "mmlab/marketdata.hpp"
#include "mmlab/types.hpp"

namespace mmlab {

struct LiveOrderView {
    OrderId id = 0;
    Side side = Side::Buy;
    Ticks price = 0;
    Lots qty = 0;
    TsMs placed_ts = 0;
};

// What an agent sees at a poll. Contains nothing with ts > now_ts.
struct Observation {
    TsMs now_ts = 0;
    Ticks ref_price = 0;  // fundamental in sim, last trade in backtest
    std::optional<LOBSnapshot> snapshot;
    AgentAccount account;
    std::vector<LiveOrderView> own_orders;
};

struct CancelAction {
    OrderId id = 0;
};
struct PlaceLimitAction {
    Side side = Side::Buy;
    Ticks price = 0;
    Lots qty = 0;
};
struct PlaceMarketAction {
    Side side = Side::Buy;
    Lots qty = 0;
};
using Action = std::variant<CancelAction, PlaceLimitAction, PlaceMarketAction>;
using ActionSet = std::vector<Action>;

enum class PredKind { None, Oracle, Model };

// Prediction feed handed to prediction-fed strategies. `lookup(now_ts)`
// returns the predicted price at now + horizon. Oracle feeds have perfect
// foresight and are evaluation-only: runs reject them unless explicitly
// allowed, and every report labels agents that used one.
struct PredictionSource {
    PredKind kind = PredKind::None;
    int horizon = 1;
    std::function<std::optional<Ticks>(TsMs now_ts)> lookup;

    std::optional<Ticks> predicted_price(TsMs now_ts) const {
        if (kind == PredKind::None || !lookup) return std::nullopt;
        return lookup(now_ts);
    }
};

struct MMParams {
    Lots order_size = 1;
    Ticks half_spread = 0;
    Lots inventory_cap = 0;  // 0 -> 10 * order_size
    Ticks tick_improvement = 1;
    bool clamp_to_prediction = false;
    bool keep_if_unchanged = false;  // default requote policy: cancel-all-then-quote
};

struct NoiseParams {
    double lambda = 0.5;   // per-tick action probability
    double kappa = 1.0;    // logistic pull toward the fundamental
    double size_geo_p = 0.5;
    Lots max_size = 1'000'000;
};

class Strategy {
public:
    virtual ~Strategy() = default;
    virtual ActionSet on_tick(const Observation& obs) = 0;
    virtual const char* name() const = 0;
    virtual bool uses_oracle() const { return false; }
};

std::unique_ptr<Strategy> make_hodl();
std::unique_ptr<Strategy> make_zero_spread(MMParams params, PredictionSource pred);
std::unique_ptr<Strategy> make_tick_better(MMParams params, PredictionSource pred);
std::unique_ptr<Strategy> make_noise_taker(NoiseParams params, std::uint64_t seed);

// Bindings by config name: hodl | zero_spread | tick_better | noise_taker.
// Parameter keys follow the MMParams / NoiseParams field names.
std::unique_ptr<Strategy> make_strategy(const std::string& name,
                                        const std::map<std::string, std::string>& params,
                                        PredictionSource pred, std::uint64_t seed);

bool strategy_uses_prediction(const std::string& name);

}  // namespace mmlab
