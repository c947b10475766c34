#include "mmlab/strategies.hpp"

#include <algorithm>
#include <cmath>

#include "mmlab/rng.hpp"

namespace mmlab {

namespace {

std::int64_t param_i64(const std::map<std::string, std::string>& p, const std::string& key,
                       std::int64_t def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    return std::stoll(it->second);
}

double param_f64(const std::map<std::string, std::string>& p, const std::string& key,
                 double def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    return std::stod(it->second);
}

bool param_bool(const std::map<std::string, std::string>& p, const std::string& key, bool def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    return it->second == "true" || it->second == "1" || it->second == "yes";
}

Lots effective_cap(const MMParams& p) {
    return p.inventory_cap > 0 ? p.inventory_cap : 10 * p.order_size;
}

struct Quote {
    std::optional<Ticks> bid;
    std::optional<Ticks> ask;
};

// Shared requote plumbing for the market-making strategies: emit cancels per
// the requote policy, then place whichever sides survive the inventory and
// balance checks.
ActionSet emit_quotes(const Observation& obs, const MMParams& params, const Quote& quote) {
    ActionSet actions;
    bool bid_kept = false, ask_kept = false;
    for (const auto& o : obs.own_orders) {
        bool keep = false;
        if (params.keep_if_unchanged) {
            if (o.side == Side::Buy && quote.bid && o.price == *quote.bid && !bid_kept) {
                keep = true;
                bid_kept = true;
            } else if (o.side == Side::Sell && quote.ask && o.price == *quote.ask && !ask_kept) {
                keep = true;
                ask_kept = true;
            }
        }
        if (!keep) actions.push_back(CancelAction{o.id});
    }

    Lots cap = effective_cap(params);
    Lots inv = obs.account.base_total();

    // Escrow held by orders being cancelled comes back before the new quotes
    // are placed, so availability is judged on totals.
    if (quote.bid && !bid_kept) {
        bool room = inv + params.order_size <= cap;
        bool funded = obs.account.quote_total() >= *quote.bid * params.order_size;
        if (room && funded && *quote.bid > 0)
            actions.push_back(PlaceLimitAction{Side::Buy, *quote.bid, params.order_size});
    }
    if (quote.ask && !ask_kept) {
        bool stocked = inv >= params.order_size;
        if (stocked && *quote.ask > 0)
            actions.push_back(PlaceLimitAction{Side::Sell, *quote.ask, params.order_size});
    }
    return actions;
}

class HodlStrategy final : public Strategy {
public:
    // Converts the whole quote balance to base, then holds. Retries while
    // flat so a buy into a momentarily empty book is not lost forever.
    ActionSet on_tick(const Observation& obs) override {
        if (obs.account.base_total() > 0) return {};
        if (obs.account.quote <= 0 || obs.ref_price <= 0) return {};
        Lots qty = obs.account.quote / obs.ref_price;
        if (qty <= 0) return {};
        return {PlaceMarketAction{Side::Buy, qty}};
    }
    const char* name() const override { return "hodl"; }
};

class ZeroSpreadStrategy final : public Strategy {
public:
    ZeroSpreadStrategy(MMParams params, PredictionSource pred)
        : params_(params), pred_(std::move(pred)) {}

    ActionSet on_tick(const Observation& obs) override {
        auto p_hat = pred_.predicted_price(obs.now_ts);
        Quote quote;
        if (p_hat) {
            quote.bid = std::max<Ticks>(*p_hat - params_.half_spread, 1);
            quote.ask = *p_hat + params_.half_spread;
        }
        return emit_quotes(obs, params_, quote);
    }
    const char* name() const override { return "zero_spread"; }
    bool uses_oracle() const override { return pred_.kind == PredKind::Oracle; }

private:
    MMParams params_;
    PredictionSource pred_;
};

class TickBetterStrategy final : public Strategy {
public:
    TickBetterStrategy(MMParams params, PredictionSource pred)
        : params_(params), pred_(std::move(pred)) {}

    ActionSet on_tick(const Observation& obs) override {
        if (!obs.snapshot) return {};
        auto best_bid = obs.snapshot->best_bid();
        auto best_ask = obs.snapshot->best_ask();
        if (!best_bid || !best_ask) return emit_quotes(obs, params_, {});

        Ticks bid = *best_bid + params_.tick_improvement;
        Ticks ask = *best_ask - params_.tick_improvement;
        if (bid >= ask) {  // improving would cross; join the best quotes
            bid = *best_bid;
            ask = *best_ask;
        }
        if (params_.clamp_to_prediction) {
            if (auto p_hat = pred_.predicted_price(obs.now_ts)) {
                bid = std::min(bid, *p_hat);
                ask = std::max(ask, *p_hat);
            }
        }
        return emit_quotes(obs, params_, {bid, ask});
    }
    const char* name() const override { return "tick_better"; }
    bool uses_oracle() const override { return pred_.kind == PredKind::Oracle; }

private:
    MMParams params_;
    PredictionSource pred_;
};

class NoiseTakerStrategy final : public Strategy {
public:
    NoiseTakerStrategy(NoiseParams params, std::uint64_t seed) : params_(params), rng_(seed) {}

    ActionSet on_tick(const Observation& obs) override {
        if (!rng_.bernoulli(params_.lambda)) return {};

        double buy_prob = 0.5;
        if (obs.snapshot) {
            auto bb = obs.snapshot->best_bid();
            auto ba = obs.snapshot->best_ask();
            if (bb && ba) {
                double mid = 0.5 * static_cast<double>(*bb + *ba);
                double x = params_.kappa * (static_cast<double>(obs.ref_price) - mid);
                buy_prob = 1.0 / (1.0 + std::exp(-x));
            }
        }
        Side side = rng_.bernoulli(buy_prob) ? Side::Buy : Side::Sell;

        Lots size = 1 + rng_.geometric(params_.size_geo_p);
        size = std::min(size, params_.max_size);
        if (side == Side::Buy) {
            if (obs.ref_price <= 0) return {};
            size = std::min(size, obs.account.quote / obs.ref_price);
        } else {
            size = std::min(size, obs.account.base);
        }
        if (size <= 0) return {};
        return {PlaceMarketAction{side, size}};
    }
    const char* name() const override { return "noise_taker"; }

private:
    NoiseParams params_;
    Rng rng_;
};

MMParams mm_params_from(const std::map<std::string, std::string>& p) {
    MMParams m;
    m.order_size = param_i64(p, "order_size", 1);
    m.half_spread = param_i64(p, "half_spread", 0);
    m.inventory_cap = param_i64(p, "inventory_cap", 0);
    m.tick_improvement = param_i64(p, "tick_improvement", 1);
    m.clamp_to_prediction = param_bool(p, "clamp_to_prediction", false);
    m.keep_if_unchanged = param_bool(p, "keep_if_unchanged", false);
    if (m.order_size < 1) throw ConfigError("order_size must be >= 1");
    if (m.half_spread < 0) throw ConfigError("half_spread must be >= 0");
    return m;
}

}  // namespace

std::unique_ptr<Strategy> make_hodl() { return std::make_unique<HodlStrategy>(); }

std::unique_ptr<Strategy> make_zero_spread(MMParams params, PredictionSource pred) {
    return std::make_unique<ZeroSpreadStrategy>(params, std::move(pred));
}

std::unique_ptr<Strategy> make_tick_better(MMParams params, PredictionSource pred) {
    return std::make_unique<TickBetterStrategy>(params, std::move(pred));
}

std::unique_ptr<Strategy> make_noise_taker(NoiseParams params, std::uint64_t seed) {
    return std::make_unique<NoiseTakerStrategy>(params, seed);
}

bool strategy_uses_prediction(const std::string& name) {
    return name == "zero_spread" || name == "tick_better";
}

std::unique_ptr<Strategy> make_strategy(const std::string& name,
                                        const std::map<std::string, std::string>& params,
                                        PredictionSource pred, std::uint64_t seed) {
    if (name == "hodl") return make_hodl();
    if (name == "zero_spread") return make_zero_spread(mm_params_from(params), std::move(pred));
    if (name == "tick_better") return make_tick_better(mm_params_from(params), std::move(pred));
    if (name == "noise_taker") {
        NoiseParams n;
        n.lambda = param_f64(params, "lambda", 0.5);
        n.kappa = param_f64(params, "kappa", 1.0);
        n.size_geo_p = param_f64(params, "size_geo_p", 0.5);
        n.max_size = param_i64(params, "max_size", 1'000'000);
        return make_noise_taker(n, seed);
    }
    throw ConfigError("unknown strategy '" + name + "'");
}

}  // namespace mmlab
