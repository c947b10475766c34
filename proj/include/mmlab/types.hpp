#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmlab {

// Prices are integer ticks, quantities integer lots, cash integer
// quote-atoms where 1 atom = tick_size * lot_size of quote currency.
// With that convention lots * ticks is an exact atom amount and every
// ledger identity can be checked with integer equality.
using Ticks = std::int64_t;
using Lots = std::int64_t;
using QuoteAtoms = std::int64_t;
using TsMs = std::int64_t;
using OrderId = std::uint64_t;
using AgentId = std::int32_t;

enum class Side : std::uint8_t { Buy, Sell };

inline Side opposite(Side s) { return s == Side::Buy ? Side::Sell : Side::Buy; }
inline const char* to_string(Side s) { return s == Side::Buy ? "buy" : "sell"; }

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mmlab
