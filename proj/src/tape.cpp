#include "darkscope/tape.hpp"

#include <algorithm>
#include <ostream>

#include "darkscope/line_format.hpp"

namespace darkscope {

void check_event(const TapeEvent& e) {
    if (e.ts < 0) throw DomainError("negative timestamp");
    if (!(e.price > 0.0)) throw DomainError("price must be positive");
    if (!(e.size > 0.0)) throw DomainError("size must be positive");
    if (e.mid && !(*e.mid > 0.0)) throw DomainError("mid must be positive");
    if (e.is_dark()) {
        if (!e.venue || e.venue->empty()) throw DomainError("dark fill without venue");
        if (e.side == Side::Unknown) throw DomainError("dark fill without side");
    }
}

std::vector<Violation> validate_tape(const Tape& tape) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < tape.events.size(); ++i) {
        const TapeEvent& e = tape.events[i];
        if (i > 0 && tape_order(e, tape.events[i - 1])) {
            out.push_back({Violation::Kind::Ordering, i, "event out of order"});
        }
        try {
            check_event(e);
        } catch (const DomainError& err) {
            out.push_back({Violation::Kind::Field, i, err.what()});
        }
        if (e.symbol != tape.symbol) {
            out.push_back({Violation::Kind::Symbol, i, "symbol '" + e.symbol + "' differs from tape"});
        }
    }
    return out;
}

void sort_tape(Tape& tape) { std::stable_sort(tape.events.begin(), tape.events.end(), tape_order); }

Tape parse_tape(std::istream& in) {
    Tape tape;
    bool have_symbol = false;
    for_each_line(in, [&](const Line& line, std::size_t lineno) {
        const std::string kind = line["kind"].get<std::string>();
        if (kind == "meta") {
            for (const auto& [key, value] : line.items()) {
                if (key == "kind") continue;
                tape.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
            return;
        }
        if (kind != "lit" && kind != "dark") throw ParseError(lineno, "unexpected record kind '" + kind + "'");
        TapeEvent e = event_from_line(line, lineno);
        if (!have_symbol) {
            tape.symbol = e.symbol;
            have_symbol = true;
        } else if (e.symbol != tape.symbol) {
            throw ParseError(lineno, "mixed symbols: '" + e.symbol + "' vs '" + tape.symbol + "'");
        }
        tape.events.push_back(std::move(e));
    });
    sort_tape(tape);
    return tape;
}

void write_tape(std::ostream& out, const Tape& tape) {
    if (!tape.meta.empty()) {
        Line meta;
        meta["kind"] = "meta";
        for (const auto& [k, v] : tape.meta) meta[k] = v;
        out << dump_line(meta) << '\n';
    }
    for (const TapeEvent& e : tape.events) out << dump_line(event_to_line(e)) << '\n';
}

Tape merge_streams(const Tape& lit, const Tape& dark) {
    if (!lit.empty() && !dark.empty() && lit.symbol != dark.symbol) {
        throw DomainError("cannot merge tapes for '" + lit.symbol + "' and '" + dark.symbol + "'");
    }
    Tape out;
    out.symbol = lit.empty() ? dark.symbol : lit.symbol;
    if (lit.empty() && dark.empty()) out.symbol = lit.symbol.empty() ? dark.symbol : lit.symbol;
    out.meta = lit.meta;
    for (const auto& [k, v] : dark.meta) out.meta.insert_or_assign(k, v);
    out.events.reserve(lit.size() + dark.size());
    out.events.insert(out.events.end(), lit.events.begin(), lit.events.end());
    out.events.insert(out.events.end(), dark.events.begin(), dark.events.end());
    sort_tape(out);
    return out;
}

}  // namespace darkscope
