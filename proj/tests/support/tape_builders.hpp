#pragma once

#include <string>

#include "darkscope/tape.hpp"

namespace darkscope::testing {

inline TapeEvent lit(Nanos ts, Side side = Side::Buy, double price = 100.0) {
    TapeEvent e;
    e.kind = EventKind::LitPrint;
    e.ts = ts;
    e.symbol = "XYZ";
    e.price = price;
    e.size = 100.0;
    e.side = side;
    return e;
}

inline TapeEvent dark(Nanos ts, Side side = Side::Buy, std::string venue = "DARK-A", double size = 10'000.0) {
    TapeEvent e;
    e.kind = EventKind::DarkFill;
    e.ts = ts;
    e.symbol = "XYZ";
    e.price = 100.0;
    e.size = size;
    e.side = side;
    e.venue = std::move(venue);
    return e;
}

inline Nanos secs(double s) { return from_seconds(s); }

}  // namespace darkscope::testing
