#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmlab/fixed.hpp"
#include "mmlab/types.hpp"

namespace mmlab {

struct Trade {
    TsMs ts = 0;
    Ticks price = 0;
    Lots qty = 0;
    Side aggressor = Side::Buy;

    bool operator==(const Trade&) const = default;
};

struct Level {
    Ticks price = 0;
    Lots qty = 0;
    bool operator==(const Level&) const = default;
};

struct LOBSnapshot {
    TsMs ts = 0;
    std::vector<Level> bids;  // best first, price descending
    std::vector<Level> asks;  // best first, price ascending
    bool operator==(const LOBSnapshot&) const = default;

    std::optional<Ticks> best_bid() const {
        return bids.empty() ? std::nullopt : std::optional<Ticks>(bids.front().price);
    }
    std::optional<Ticks> best_ask() const {
        return asks.empty() ? std::nullopt : std::optional<Ticks>(asks.front().price);
    }
};

struct Candle {
    TsMs ts = 0;  // open time
    Ticks open = 0, high = 0, low = 0, close = 0;
    Lots volume = 0;
    bool operator==(const Candle&) const = default;
};

// Immutable once built; safe to share across concurrent runs.
struct MarketHistory {
    InstrumentSpec spec;
    std::vector<Trade> trades;
    std::vector<LOBSnapshot> snapshots;
    std::vector<Candle> candles;
};

// --- file ingestion -------------------------------------------------------
// trades CSV:    header `ts,price,qty,side`
// snapshots:     JSON Lines, {"ts":..,"bids":[[p,q],..],"asks":[[p,q],..]}
// candles CSV:   header `ts,open,high,low,close,volume`
// All prices/qtys are decimal strings quantized exactly to the instrument
// grid; off-grid values are rejected, not rounded.

std::vector<Trade> load_trades(const std::string& path, const InstrumentSpec& spec);
std::vector<LOBSnapshot> load_snapshots(const std::string& path, const InstrumentSpec& spec);
std::vector<Candle> load_candles(const std::string& path, const InstrumentSpec& spec);

void save_trades(const std::string& path, const std::vector<Trade>& trades,
                 const InstrumentSpec& spec);
void save_snapshots(const std::string& path, const std::vector<LOBSnapshot>& snaps,
                    const InstrumentSpec& spec);
void save_candles(const std::string& path, const std::vector<Candle>& candles,
                  const InstrumentSpec& spec);

// Adapter for the common 12-column exchange kline export
// (open_time, open, high, low, close, volume, close_time, ...extras ignored).
std::vector<Candle> load_klines(const std::string& path, const InstrumentSpec& spec);

// One candle per bucket that contains at least one trade; empty buckets are
// omitted. Volume-conserving by construction.
std::vector<Candle> resample(const std::vector<Trade>& trades, std::int64_t bucket_ms);

// --- synthetic fundamental curves -----------------------------------------

enum class CurveKind { Constant, Linear, Sine, Gbm, FromFile };

CurveKind curve_kind_from_string(const std::string& s);
const char* to_string(CurveKind k);

struct CurveSpec {
    CurveKind kind = CurveKind::Constant;
    Ticks p0 = 1;
    double slope = 0.0;      // linear: ticks per step
    double amplitude = 0.0;  // sine: ticks
    double period = 1.0;     // sine: steps per full cycle
    double vol = 0.0;        // gbm: per-step volatility fraction
    double drift = 0.0;      // gbm: per-step drift fraction
    std::string path;        // from_file: candles CSV
    std::uint64_t seed = 0;
    std::int64_t n = 1;
    TsMs step_ms = 1000;
};

// Deterministic for equal spec (gbm uses seeded mt19937_64 + Box-Muller,
// see rng.hpp). Prices clamp at 1 tick.
std::vector<Candle> generate_curve(const CurveSpec& spec,
                                   const InstrumentSpec& instrument = {});

}  // namespace mmlab
