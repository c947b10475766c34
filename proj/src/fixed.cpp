#include "mmlab/fixed.hpp"

#include <cctype>
#include <cstdlib>

namespace mmlab {

std::int64_t parse_decimal_nanos(std::string_view s) {
    if (s.empty()) throw ParseError("empty decimal");
    std::size_t i = 0;
    bool neg = false;
    if (s[0] == '-') { neg = true; i = 1; }
    if (i >= s.size()) throw ParseError("bad decimal '" + std::string(s) + "'");

    std::int64_t whole = 0;
    bool any_digit = false;
    for (; i < s.size() && s[i] != '.'; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw ParseError("bad decimal '" + std::string(s) + "'");
        if (whole > 9'000'000'000) throw ParseError("decimal out of range '" + std::string(s) + "'");
        whole = whole * 10 + (s[i] - '0');
        any_digit = true;
    }

    std::int64_t frac = 0;
    int frac_digits = 0;
    if (i < s.size()) {  // fractional part
        ++i;
        for (; i < s.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i])))
                throw ParseError("bad decimal '" + std::string(s) + "'");
            if (frac_digits >= 9) {
                if (s[i] != '0')
                    throw ParseError("more than 9 fractional digits in '" + std::string(s) + "'");
                continue;
            }
            frac = frac * 10 + (s[i] - '0');
            ++frac_digits;
            any_digit = true;
        }
    }
    if (!any_digit) throw ParseError("bad decimal '" + std::string(s) + "'");
    while (frac_digits < 9) { frac *= 10; ++frac_digits; }

    std::int64_t nanos = whole * 1'000'000'000 + frac;
    return neg ? -nanos : nanos;
}

std::string format_nanos(std::int64_t nanos) {
    bool neg = nanos < 0;
    std::uint64_t v = neg ? static_cast<std::uint64_t>(-nanos) : static_cast<std::uint64_t>(nanos);
    std::uint64_t whole = v / 1'000'000'000;
    std::uint64_t frac = v % 1'000'000'000;
    std::string out = (neg ? "-" : "") + std::to_string(whole);
    if (frac != 0) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%09llu", static_cast<unsigned long long>(frac));
        std::string f(buf);
        while (!f.empty() && f.back() == '0') f.pop_back();
        out += "." + f;
    }
    return out;
}

InstrumentSpec InstrumentSpec::make(std::string symbol, std::string_view tick_size,
                                    std::string_view lot_size) {
    InstrumentSpec s;
    s.symbol = std::move(symbol);
    s.tick_nanos = parse_decimal_nanos(tick_size);
    s.lot_nanos = parse_decimal_nanos(lot_size);
    if (s.tick_nanos <= 0) throw ConfigError("tick_size must be > 0");
    if (s.lot_nanos <= 0) throw ConfigError("lot_size must be > 0");
    return s;
}

static std::int64_t to_grid(std::string_view decimal, std::int64_t grid_nanos,
                            const char* what) {
    std::int64_t nanos = parse_decimal_nanos(decimal);
    if (nanos % grid_nanos != 0)
        throw ParseError(std::string(what) + " '" + std::string(decimal) +
                         "' not aligned to grid " + format_nanos(grid_nanos));
    return nanos / grid_nanos;
}

Ticks InstrumentSpec::price_to_ticks(std::string_view decimal) const {
    return to_grid(decimal, tick_nanos, "price");
}

Lots InstrumentSpec::qty_to_lots(std::string_view decimal) const {
    return to_grid(decimal, lot_nanos, "quantity");
}

std::string InstrumentSpec::ticks_to_decimal(Ticks t) const {
    return format_nanos(t * tick_nanos);
}

std::string InstrumentSpec::lots_to_decimal(Lots l) const {
    return format_nanos(l * lot_nanos);
}

QuoteAtoms InstrumentSpec::quote_to_atoms(std::string_view decimal) const {
    std::int64_t nanos = parse_decimal_nanos(decimal);
    // atom value in nanos = tick_nanos * lot_nanos / 1e9; keep exactness by
    // comparing at the product scale.
    __int128 scaled = static_cast<__int128>(nanos) * 1'000'000'000;
    __int128 atom = static_cast<__int128>(tick_nanos) * lot_nanos;
    __int128 q = scaled / atom;
    if (scaled < 0 && scaled % atom != 0) --q;  // floor
    return static_cast<QuoteAtoms>(q);
}

std::string InstrumentSpec::atoms_to_decimal(QuoteAtoms a) const {
    __int128 nanos = static_cast<__int128>(a) * tick_nanos * lot_nanos / 1'000'000'000;
    return format_nanos(static_cast<std::int64_t>(nanos));
}

}  // namespace mmlab
