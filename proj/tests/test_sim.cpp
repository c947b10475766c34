#include "doctest.h"
#include "mmlab/sim.hpp"

using namespace mmlab;

namespace {

SimConfig base_config(std::int64_t steps, CurveKind kind, double p0) {
    SimConfig cfg;
    cfg.curve.kind = kind;
    cfg.curve.p0 = p0;
    cfg.curve.n = steps;
    cfg.steps = steps;
    cfg.seed = 42;
    return cfg;
}

AgentSpec agent(std::string strategy, Lots base, QuoteAtoms quote,
                std::map<std::string, std::string> params = {}) {
    AgentSpec a;
    a.strategy = std::move(strategy);
    a.base = base;
    a.quote = quote;
    a.params = std::move(params);
    return a;
}

}  // namespace

TEST_CASE("zero agents: empty but well-formed report") {
    auto cfg = base_config(10, CurveKind::Constant, 100);
    auto report = run_simulation(cfg);
    CHECK(report.agents.empty());
    CHECK(report.total_trades == 0);
    CHECK(report.conservation_residue_base == 0);
    CHECK(report.conservation_residue_quote == 0);
    CHECK(report.final_price == 100);
}

TEST_CASE("lone hodler on a constant curve: no counterparty, return zero") {
    auto cfg = base_config(50, CurveKind::Constant, 100);
    cfg.agents.push_back(agent("hodl", 0, 10000));
    auto report = run_simulation(cfg);
    REQUIRE(report.agents.size() == 1);
    CHECK(report.agents[0].fills == 0);  // nobody on the other side
    CHECK(report.agents[0].pnl == 0);
    CHECK(report.agents[0].ret == doctest::Approx(0.0));
    CHECK(report.agents[0].final_quote == 10000);
}

TEST_CASE("hodler buys from an oracle maker and values at the final price") {
    auto cfg = base_config(20, CurveKind::Constant, 100);
    cfg.allow_oracle = true;
    cfg.agents.push_back(agent("hodl", 0, 10000));
    auto maker = agent("zero_spread", 1000, 1'000'000, {{"order_size", "200"}});
    maker.predictor = "oracle";
    cfg.agents.push_back(maker);
    auto report = run_simulation(cfg);
    REQUIRE(report.agents.size() == 2);
    const auto& hodler = report.agents[0];
    CHECK(hodler.fills > 0);
    CHECK(hodler.final_base == 100);  // 10000 atoms / 100 ticks
    CHECK(hodler.final_quote == 0);
    // Constant price, zero fees: both sides flat.
    CHECK(hodler.pnl == 0);
    CHECK(report.agents[1].pnl == 0);
    CHECK(report.agents[1].used_oracle);
    CHECK_FALSE(hodler.used_oracle);
}

TEST_CASE("oracle agents are rejected unless explicitly allowed") {
    auto cfg = base_config(5, CurveKind::Constant, 100);
    auto maker = agent("zero_spread", 10, 10000);
    maker.predictor = "oracle";
    cfg.agents.push_back(maker);
    CHECK_THROWS_AS(run_simulation(cfg), ConfigError);
    cfg.allow_oracle = true;
    CHECK_NOTHROW(run_simulation(cfg));
}

TEST_CASE("mark-to-market identities drive pnl") {
    // Rising linear curve: the hodler converts quote to base at ~100 and is
    // marked at the final price, so pnl is (final - entry) * base held.
    auto cfg = base_config(50, CurveKind::Linear, 100);
    cfg.curve.slope = 1.0;
    cfg.allow_oracle = true;
    cfg.agents.push_back(agent("hodl", 0, 10000));
    auto maker = agent("zero_spread", 1000, 10'000'000, {{"order_size", "200"}});
    maker.predictor = "oracle";
    cfg.agents.push_back(maker);
    auto report = run_simulation(cfg);
    const auto& hodler = report.agents[0];
    CHECK(report.final_price == 149);
    CHECK(hodler.final_value == hodler.final_quote + hodler.final_base * report.final_price);
    CHECK(hodler.pnl == hodler.final_value - hodler.initial_value);
    CHECK(hodler.pnl > 0);
}

TEST_CASE("zero-sum: pnl sums to zero and conservation holds exactly") {
    auto cfg = base_config(300, CurveKind::Gbm, 10000);
    cfg.curve.vol = 0.005;
    cfg.curve.seed = 7;
    cfg.allow_oracle = true;
    auto mm = agent("zero_spread", 500, 50'000'000, {{"order_size", "5"}});
    mm.predictor = "oracle";
    cfg.agents.push_back(mm);
    auto tb = agent("tick_better", 500, 50'000'000, {{"order_size", "3"}});
    tb.predictor = "oracle";
    cfg.agents.push_back(tb);
    cfg.agents.push_back(agent("noise_taker", 500, 50'000'000, {{"lambda", "0.8"}}));
    cfg.agents.push_back(agent("noise_taker", 500, 50'000'000, {{"lambda", "0.6"}}));
    cfg.agents.push_back(agent("hodl", 0, 1'000'000));

    auto report = run_simulation(cfg);
    CHECK(report.total_trades > 0);
    QuoteAtoms pnl_sum = 0;
    Lots base_sum = 0;
    QuoteAtoms quote_sum = 0;
    for (const auto& a : report.agents) {
        pnl_sum += a.pnl;
        base_sum += a.final_base;
        quote_sum += a.final_quote;
    }
    CHECK(pnl_sum == 0);  // same mark price on both ends, zero fees
    CHECK(base_sum == 500 * 4);
    CHECK(quote_sum == 50'000'000LL * 4 + 1'000'000);
    CHECK(report.conservation_residue_base == 0);
    CHECK(report.conservation_residue_quote == 0);
    CHECK(report.burned_quote_fees == 0);
    CHECK(report.burned_base_fees == 0);
}

TEST_CASE("fees are burned and conservation still closes") {
    auto cfg = base_config(200, CurveKind::Gbm, 10000);
    cfg.curve.vol = 0.005;
    cfg.curve.seed = 9;
    cfg.allow_oracle = true;
    cfg.maker_fee_bps = 10;
    cfg.taker_fee_bps = 20;
    auto mm = agent("zero_spread", 500, 50'000'000, {{"order_size", "5"}});
    mm.predictor = "oracle";
    cfg.agents.push_back(mm);
    cfg.agents.push_back(agent("noise_taker", 500, 50'000'000, {{"lambda", "0.9"}}));
    auto report = run_simulation(cfg);
    CHECK(report.total_trades > 0);
    CHECK(report.burned_quote_fees + report.burned_base_fees > 0);
    CHECK(report.conservation_residue_base == 0);
    CHECK(report.conservation_residue_quote == 0);
}

TEST_CASE("income credit is excluded from the conservation residue") {
    auto cfg = base_config(100, CurveKind::Constant, 100);
    auto a = agent("hodl", 0, 0);
    a.income_rate = 7;
    cfg.agents.push_back(a);
    auto report = run_simulation(cfg);
    CHECK(report.agents[0].final_quote == 700);
    CHECK(report.conservation_residue_quote == 0);
}

TEST_CASE("identical seeds give identical reports; different seeds diverge") {
    auto make = [](std::uint64_t seed) {
        auto cfg = base_config(200, CurveKind::Gbm, 10000);
        cfg.curve.vol = 0.01;
        cfg.curve.seed = 3;
        cfg.seed = seed;
        cfg.allow_oracle = true;
        auto mm = agent("zero_spread", 500, 50'000'000, {{"order_size", "5"}});
        mm.predictor = "oracle";
        cfg.agents.push_back(mm);
        cfg.agents.push_back(agent("noise_taker", 500, 50'000'000, {{"lambda", "0.9"}}));
        cfg.agents.push_back(agent("noise_taker", 500, 50'000'000, {{"lambda", "0.7"}}));
        return run_simulation(cfg);
    };
    auto r1 = make(11), r2 = make(11), r3 = make(12);
    REQUIRE(r1.agents.size() == r2.agents.size());
    for (std::size_t i = 0; i < r1.agents.size(); ++i) {
        CHECK(r1.agents[i].pnl == r2.agents[i].pnl);
        CHECK(r1.agents[i].fills == r2.agents[i].fills);
        CHECK(r1.agents[i].final_base == r2.agents[i].final_base);
    }
    bool any_diff = false;
    for (std::size_t i = 0; i < r1.agents.size(); ++i)
        if (r1.agents[i].fills != r3.agents[i].fills || r1.agents[i].pnl != r3.agents[i].pnl)
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("balances never go negative under heavy trading") {
    auto cfg = base_config(300, CurveKind::Gbm, 1000);
    cfg.curve.vol = 0.02;
    cfg.curve.seed = 21;
    cfg.allow_oracle = true;
    cfg.taker_fee_bps = 25;
    auto mm = agent("zero_spread", 50, 100'000, {{"order_size", "3"}});
    mm.predictor = "oracle";
    cfg.agents.push_back(mm);
    cfg.agents.push_back(agent("noise_taker", 50, 100'000, {{"lambda", "1.0"}}));
    auto report = run_simulation(cfg);
    for (const auto& a : report.agents) {
        CHECK(a.final_base >= 0);
        CHECK(a.final_quote >= 0);
    }
    CHECK(report.conservation_residue_base == 0);
    CHECK(report.conservation_residue_quote == 0);
}

TEST_CASE("fill log is kept only on request") {
    auto cfg = base_config(50, CurveKind::Constant, 100);
    cfg.allow_oracle = true;
    cfg.agents.push_back(agent("hodl", 0, 10000));
    auto maker = agent("zero_spread", 1000, 1'000'000, {{"order_size", "200"}});
    maker.predictor = "oracle";
    cfg.agents.push_back(maker);
    auto quiet = run_simulation(cfg);
    CHECK(quiet.fills.empty());
    cfg.keep_fill_log = true;
    auto logged = run_simulation(cfg);
    CHECK(static_cast<std::int64_t>(logged.fills.size()) == logged.total_trades);
    Lots vol = 0;
    for (const auto& f : logged.fills) vol += f.qty;
    CHECK(vol == 100);
}

TEST_CASE("invalid configs are rejected") {
    auto cfg = base_config(0, CurveKind::Constant, 100);
    CHECK_THROWS_AS(run_simulation(cfg), ConfigError);
    cfg = base_config(5, CurveKind::Constant, 100);
    cfg.agents.push_back(agent("nonsense", 0, 0));
    CHECK_THROWS_AS(run_simulation(cfg), ConfigError);
}
