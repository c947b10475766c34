#include "mmlab/marketdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mmlab/rng.hpp"

namespace mmlab {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

TsMs parse_ts(const std::string& s, std::size_t row) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad timestamp '" + s + "' at row " + std::to_string(row));
    }
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return in;
}

}  // namespace

std::vector<Trade> load_trades(const std::string& path, const InstrumentSpec& spec) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) return {};  // empty file
    std::vector<Trade> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (cols.size() != 4)
            throw ParseError("expected 4 columns at row " + std::to_string(row));
        Trade t;
        t.ts = parse_ts(cols[0], row);
        try {
            t.price = spec.price_to_ticks(cols[1]);
            t.qty = spec.qty_to_lots(cols[2]);
        } catch (const ParseError& e) {
            throw ParseError(std::string(e.what()) + " at row " + std::to_string(row));
        }
        if (cols[3] == "buy") t.aggressor = Side::Buy;
        else if (cols[3] == "sell") t.aggressor = Side::Sell;
        else throw ParseError("bad side '" + cols[3] + "' at row " + std::to_string(row));
        if (t.price <= 0)
            throw ParseError("nonpositive price at row " + std::to_string(row));
        if (t.qty <= 0)
            throw ParseError("nonpositive quantity at row " + std::to_string(row));
        if (!out.empty() && t.ts < out.back().ts)
            throw ParseError("unsorted timestamps at row " + std::to_string(row));
        out.push_back(t);
    }
    return out;
}

void save_trades(const std::string& path, const std::vector<Trade>& trades,
                 const InstrumentSpec& spec) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "ts,price,qty,side\n";
    for (const auto& t : trades)
        out << t.ts << ',' << spec.ticks_to_decimal(t.price) << ','
            << spec.lots_to_decimal(t.qty) << ',' << to_string(t.aggressor) << '\n';
}

// --- snapshot JSON Lines ----------------------------------------------------
// A tiny recursive-descent parser for the fixed snapshot schema. Decimals are
// consumed as raw tokens so grid quantization stays exact (a general JSON
// parser would round-trip them through double).

namespace {

struct JlParser {
    const std::string& s;
    std::size_t i = 0;

    void ws() { while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i; }
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }
    void expect(char c) {
        ws();
        if (i >= s.size() || s[i] != c) fail(std::string("expected '") + c + "' in snapshot line");
        ++i;
    }
    bool peek(char c) {
        ws();
        return i < s.size() && s[i] == c;
    }
    std::string number_token() {
        ws();
        std::size_t start = i;
        if (i < s.size() && s[i] == '-') ++i;
        while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
        if (i == start) fail("expected number in snapshot line");
        return s.substr(start, i - start);
    }
    std::string key() {
        expect('"');
        std::size_t start = i;
        while (i < s.size() && s[i] != '"') ++i;
        if (i >= s.size()) fail("unterminated key in snapshot line");
        std::string k = s.substr(start, i - start);
        ++i;
        expect(':');
        return k;
    }
    std::vector<Level> levels(const InstrumentSpec& spec) {
        std::vector<Level> out;
        expect('[');
        if (peek(']')) { ++i; return out; }
        while (true) {
            expect('[');
            Level lv;
            lv.price = spec.price_to_ticks(number_token());
            expect(',');
            lv.qty = spec.qty_to_lots(number_token());
            expect(']');
            out.push_back(lv);
            if (peek(',')) { ++i; continue; }
            expect(']');
            break;
        }
        return out;
    }
};

void check_snapshot(const LOBSnapshot& snap) {
    auto check_side = [&](const std::vector<Level>& lv, bool descending, const char* side) {
        for (std::size_t k = 0; k < lv.size(); ++k) {
            if (lv[k].qty <= 0)
                throw ParseError(std::string("nonpositive qty on ") + side + " at ts=" +
                                 std::to_string(snap.ts));
            if (lv[k].price <= 0)
                throw ParseError(std::string("nonpositive price on ") + side + " at ts=" +
                                 std::to_string(snap.ts));
            if (k > 0) {
                bool ok = descending ? lv[k].price < lv[k - 1].price
                                     : lv[k].price > lv[k - 1].price;
                if (!ok)
                    throw ParseError(std::string("unsorted ") + side + " levels at ts=" +
                                     std::to_string(snap.ts));
            }
        }
    };
    check_side(snap.bids, true, "bid");
    check_side(snap.asks, false, "ask");
    if (!snap.bids.empty() && !snap.asks.empty() &&
        snap.bids.front().price >= snap.asks.front().price)
        throw ParseError("crossed book at ts=" + std::to_string(snap.ts));
}

}  // namespace

std::vector<LOBSnapshot> load_snapshots(const std::string& path, const InstrumentSpec& spec) {
    std::ifstream in = open_or_throw(path);
    std::vector<LOBSnapshot> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        JlParser p{line};
        LOBSnapshot snap;
        bool have_ts = false;
        p.expect('{');
        while (!p.peek('}')) {
            std::string k = p.key();
            if (k == "ts") {
                snap.ts = parse_ts(p.number_token(), row);
                have_ts = true;
            } else if (k == "bids") {
                snap.bids = p.levels(spec);
            } else if (k == "asks") {
                snap.asks = p.levels(spec);
            } else {
                throw ParseError("unknown key '" + k + "' at line " + std::to_string(row));
            }
            if (p.peek(',')) ++p.i;
        }
        if (!have_ts) throw ParseError("missing ts at line " + std::to_string(row));
        check_snapshot(snap);
        if (!out.empty() && snap.ts < out.back().ts)
            throw ParseError("unsorted snapshots at ts=" + std::to_string(snap.ts));
        out.push_back(std::move(snap));
    }
    return out;
}

void save_snapshots(const std::string& path, const std::vector<LOBSnapshot>& snaps,
                    const InstrumentSpec& spec) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    auto levels = [&](const std::vector<Level>& lv) {
        std::string s = "[";
        for (std::size_t k = 0; k < lv.size(); ++k) {
            if (k) s += ",";
            s += "[" + spec.ticks_to_decimal(lv[k].price) + "," +
                 spec.lots_to_decimal(lv[k].qty) + "]";
        }
        return s + "]";
    };
    for (const auto& snap : snaps)
        out << "{\"ts\":" << snap.ts << ",\"bids\":" << levels(snap.bids)
            << ",\"asks\":" << levels(snap.asks) << "}\n";
}

// --- candles ----------------------------------------------------------------

std::vector<Candle> load_candles(const std::string& path, const InstrumentSpec& spec) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) return {};
    std::vector<Candle> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (cols.size() != 6)
            throw ParseError("expected 6 columns at row " + std::to_string(row));
        Candle c;
        c.ts = parse_ts(cols[0], row);
        try {
            c.open = spec.price_to_ticks(cols[1]);
            c.high = spec.price_to_ticks(cols[2]);
            c.low = spec.price_to_ticks(cols[3]);
            c.close = spec.price_to_ticks(cols[4]);
            c.volume = spec.qty_to_lots(cols[5]);
        } catch (const ParseError& e) {
            throw ParseError(std::string(e.what()) + " at row " + std::to_string(row));
        }
        if (c.low > c.open || c.low > c.close || c.high < c.open || c.high < c.close)
            throw ParseError("inconsistent OHLC at row " + std::to_string(row));
        if (!out.empty() && c.ts < out.back().ts)
            throw ParseError("unsorted timestamps at row " + std::to_string(row));
        out.push_back(c);
    }
    return out;
}

void save_candles(const std::string& path, const std::vector<Candle>& candles,
                  const InstrumentSpec& spec) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "ts,open,high,low,close,volume\n";
    for (const auto& c : candles)
        out << c.ts << ',' << spec.ticks_to_decimal(c.open) << ','
            << spec.ticks_to_decimal(c.high) << ',' << spec.ticks_to_decimal(c.low) << ','
            << spec.ticks_to_decimal(c.close) << ',' << spec.lots_to_decimal(c.volume) << '\n';
}

std::vector<Candle> load_klines(const std::string& path, const InstrumentSpec& spec) {
    // Column mapping (exchange kline export -> candle):
    //   0 open_time(ms) -> ts, 1 open, 2 high, 3 low, 4 close, 5 volume;
    //   columns 6+ (close_time, quote volume, trade count, ...) are ignored.
    std::ifstream in = open_or_throw(path);
    std::vector<Candle> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (row == 1 && !cols.empty() && !std::isdigit(static_cast<unsigned char>(cols[0][0])))
            continue;  // optional header
        if (cols.size() < 6)
            throw ParseError("expected >= 6 kline columns at row " + std::to_string(row));
        Candle c;
        c.ts = parse_ts(cols[0], row);
        c.open = spec.price_to_ticks(cols[1]);
        c.high = spec.price_to_ticks(cols[2]);
        c.low = spec.price_to_ticks(cols[3]);
        c.close = spec.price_to_ticks(cols[4]);
        c.volume = spec.qty_to_lots(cols[5]);
        out.push_back(c);
    }
    return out;
}

// --- resample ---------------------------------------------------------------

std::vector<Candle> resample(const std::vector<Trade>& trades, std::int64_t bucket_ms) {
    if (bucket_ms <= 0) throw ConfigError("bucket_ms must be > 0");
    std::vector<Candle> out;
    for (const auto& t : trades) {
        TsMs bucket = (t.ts / bucket_ms) * bucket_ms;
        if (out.empty() || out.back().ts != bucket) {
            out.push_back({bucket, t.price, t.price, t.price, t.price, t.qty});
        } else {
            Candle& c = out.back();
            c.high = std::max(c.high, t.price);
            c.low = std::min(c.low, t.price);
            c.close = t.price;
            c.volume += t.qty;
        }
    }
    return out;
}

// --- curve generation ---------------------------------------------------------

CurveKind curve_kind_from_string(const std::string& s) {
    if (s == "constant") return CurveKind::Constant;
    if (s == "linear") return CurveKind::Linear;
    if (s == "sine") return CurveKind::Sine;
    if (s == "gbm") return CurveKind::Gbm;
    if (s == "from_file") return CurveKind::FromFile;
    throw ConfigError("unknown curve kind '" + s + "'");
}

const char* to_string(CurveKind k) {
    switch (k) {
        case CurveKind::Constant: return "constant";
        case CurveKind::Linear: return "linear";
        case CurveKind::Sine: return "sine";
        case CurveKind::Gbm: return "gbm";
        case CurveKind::FromFile: return "from_file";
    }
    return "?";
}

std::vector<Candle> generate_curve(const CurveSpec& spec, const InstrumentSpec& instrument) {
    if (spec.kind == CurveKind::FromFile) return load_candles(spec.path, instrument);
    if (spec.n < 1) throw ConfigError("curve n must be >= 1");
    if (spec.p0 <= 0) throw ConfigError("curve p0 must be > 0");

    std::vector<Candle> out;
    out.reserve(static_cast<std::size_t>(spec.n));
    Rng rng(spec.seed);
    double log_p = std::log(static_cast<double>(spec.p0));
    for (std::int64_t t = 0; t < spec.n; ++t) {
        Ticks price = 1;
        switch (spec.kind) {
            case CurveKind::Constant:
                price = spec.p0;
                break;
            case CurveKind::Linear:
                price = spec.p0 + static_cast<Ticks>(std::llround(spec.slope * static_cast<double>(t)));
                break;
            case CurveKind::Sine: {
                if (spec.period <= 0) throw ConfigError("sine period must be > 0");
                double v = static_cast<double>(spec.p0) +
                           spec.amplitude * std::sin(2.0 * M_PI * static_cast<double>(t) / spec.period);
                price = static_cast<Ticks>(std::llround(v));
                break;
            }
            case CurveKind::Gbm: {
                if (t > 0) log_p += (spec.drift - 0.5 * spec.vol * spec.vol) + spec.vol * rng.normal();
                price = static_cast<Ticks>(std::llround(std::exp(log_p)));
                break;
            }
            case CurveKind::FromFile:
                break;  // handled above
        }
        price = std::max<Ticks>(price, 1);
        out.push_back({t * spec.step_ms, price, price, price, price, 0});
    }
    return out;
}

}  // namespace mmlab
