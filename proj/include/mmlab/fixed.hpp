#pragma once

#include <string>
#include <string_view>

#include "mmlab/types.hpp"

namespace mmlab {

// Decimal strings are held as integer nanos (scale 1e-9, up to 9 fractional
// digits). Parsing is exact; anything that does not land on the grid is an
// error, never rounded.
std::int64_t parse_decimal_nanos(std::string_view s);

// Canonical form: minimal fractional digits, no trailing zeros, no '+'.
std::string format_nanos(std::int64_t nanos);

struct InstrumentSpec {
    std::string symbol = "SYM";
    std::int64_t tick_nanos = 1'000'000'000;  // tick_size, quote units per tick
    std::int64_t lot_nanos = 1'000'000'000;   // lot_size, base units per lot

    static InstrumentSpec make(std::string symbol, std::string_view tick_size,
                               std::string_view lot_size);

    // Exact grid conversion; throws ParseError if the value is off-grid
    // or nonpositive where the grid requires positivity.
    Ticks price_to_ticks(std::string_view decimal) const;
    Lots qty_to_lots(std::string_view decimal) const;

    std::string ticks_to_decimal(Ticks t) const;
    std::string lots_to_decimal(Lots l) const;

    // Quote units (decimal string) -> quote-atoms, floored to the atom grid.
    // 1 atom = tick_size * lot_size quote units.
    QuoteAtoms quote_to_atoms(std::string_view decimal) const;
    std::string atoms_to_decimal(QuoteAtoms a) const;
};

}  // namespace mmlab
