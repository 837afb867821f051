#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "darkscope/types.hpp"

namespace darkscope {

/// One timestamped record on the unified stream: a lit print or a dark fill.
struct TapeEvent {
    EventKind kind = EventKind::LitPrint;
    Nanos ts = 0;
    std::string symbol;
    double price = 0.0;
    double size = 0.0;  // notional, currency units
    Side side = Side::Unknown;
    std::optional<std::string> venue;
    std::optional<double> mid;

    // Optional extensions. `own` is carried but never interpreted. `id` and
    // `order` tag simulated fills; `truth` holds simulator ground truth.
    std::optional<bool> own;
    std::optional<std::int64_t> id;
    std::optional<std::int64_t> order;
    std::optional<std::string> truth;

    bool is_lit() const { return kind == EventKind::LitPrint; }
    bool is_dark() const { return kind == EventKind::DarkFill; }

    friend bool operator==(const TapeEvent&, const TapeEvent&) = default;
};

/// Tape ordering: by timestamp, lit prints before dark fills at equal ts.
inline bool tape_order(const TapeEvent& a, const TapeEvent& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    return a.kind == EventKind::LitPrint && b.kind == EventKind::DarkFill;
}

struct Tape {
    std::string symbol;
    std::vector<TapeEvent> events;
    std::map<std::string, std::string> meta;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }

    friend bool operator==(const Tape&, const Tape&) = default;
};

struct Violation {
    enum class Kind { Ordering, Field, Symbol };
    Kind kind;
    std::size_t index;
    std::string message;
};

/// All invariant violations, in event order. Empty iff the tape is valid.
std::vector<Violation> validate_tape(const Tape& tape);

/// Throws DomainError describing the first field violation of `e`, if any.
void check_event(const TapeEvent& e);

/// Reads line-delimited records (see line_format.hpp). Blank lines and
/// `meta` records are accepted; the result is stably sorted into tape order.
/// Throws ParseError naming the offending line.
Tape parse_tape(std::istream& in);

/// Writes meta records first, then one line per event.
void write_tape(std::ostream& out, const Tape& tape);

/// Stable merge into tape order; LitPrint first on ties. Throws DomainError
/// when both tapes are non-empty and carry different symbols.
Tape merge_streams(const Tape& lit, const Tape& dark);

/// Stable sort into tape order.
void sort_tape(Tape& tape);

}  // namespace darkscope
