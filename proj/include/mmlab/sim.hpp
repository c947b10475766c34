#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmlab/account.hpp"
#include "mmlab/lob.hpp"
#include "mmlab/marketdata.hpp"
#include "mmlab/predictor.hpp"
#include "mmlab/strategies.hpp"

namespace mmlab {

// One agent binding: strategy name + parameter table + starting balances.
struct AgentSpec {
    std::string strategy;
    std::map<std::string, std::string> params;
    Lots base = 0;
    QuoteAtoms quote = 0;
    QuoteAtoms income_rate = 0;
    std::string predictor = "none";  // none | oracle | model
    int horizon = 1;
};

struct SimConfig {
    CurveSpec curve;
    std::int64_t steps = 1;
    InstrumentSpec spec;
    std::vector<AgentSpec> agents;
    std::uint64_t seed = 0;
    std::int32_t maker_fee_bps = 0;
    std::int32_t taker_fee_bps = 0;
    bool allow_self_match = false;
    bool allow_oracle = false;
    bool keep_fill_log = false;
    PredictorConfig predictor;  // used by agents bound to predictor=model
};

struct AgentResult {
    AgentId id = 0;
    std::string strategy;
    QuoteAtoms initial_value = 0;  // start holdings marked at the final price
    QuoteAtoms final_value = 0;
    QuoteAtoms pnl = 0;
    double ret = 0.0;
    std::int64_t fills = 0;
    Lots volume = 0;
    Lots final_base = 0;
    QuoteAtoms final_quote = 0;
    std::int64_t rejected_actions = 0;
    bool used_oracle = false;
};

struct RunReport {
    std::vector<AgentResult> agents;
    std::int64_t total_trades = 0;
    QuoteAtoms burned_quote_fees = 0;
    Lots burned_base_fees = 0;
    // Exactly 0 with zero fees and zero income; computed as
    // final totals + burned - initial totals - credited income.
    Lots conservation_residue_base = 0;
    QuoteAtoms conservation_residue_quote = 0;
    Ticks final_price = 0;
    std::vector<FillEvent> fills;  // populated when keep_fill_log
};

RunReport run_simulation(const SimConfig& config);

}  // namespace mmlab
