#pragma once

#include "mmlab/types.hpp"

namespace mmlab {

// Balances with explicit escrow: reserved amounts back resting orders and
// move back to the free side on cancel or fill settlement.
struct AgentAccount {
    AgentId id = 0;
    Lots base = 0;
    Lots base_reserved = 0;
    QuoteAtoms quote = 0;
    QuoteAtoms quote_reserved = 0;
    QuoteAtoms income_rate = 0;  // quote-atoms credited per step

    Lots base_total() const { return base + base_reserved; }
    QuoteAtoms quote_total() const { return quote + quote_reserved; }

    bool sane() const {
        return base >= 0 && base_reserved >= 0 && quote >= 0 && quote_reserved >= 0;
    }
};

// Inventory marked at `price`; exact in quote-atoms because
// 1 atom = tick_size * lot_size.
inline QuoteAtoms mark_to_market(const AgentAccount& a, Ticks price) {
    return a.quote_total() + a.base_total() * price;
}

}  // namespace mmlab
