#include "darkscope/line_format.hpp"

#include <cmath>

namespace darkscope {

namespace {

const Line& field(const Line& line, const char* key, std::size_t lineno) {
    auto it = line.find(key);
    if (it == line.end()) throw ParseError(lineno, std::string("missing field '") + key + "'");
    return *it;
}

}  // namespace

std::string_view to_string(EventKind k) { return k == EventKind::LitPrint ? "lit" : "dark"; }

std::string_view to_string(Side s) {
    switch (s) {
        case Side::Buy: return "buy";
        case Side::Sell: return "sell";
        default: return "unknown";
    }
}

EventKind parse_event_kind(std::string_view s) {
    if (s == "lit") return EventKind::LitPrint;
    if (s == "dark") return EventKind::DarkFill;
    throw DomainError("unknown event kind '" + std::string(s) + "'");
}

Side parse_side(std::string_view s) {
    if (s == "buy") return Side::Buy;
    if (s == "sell") return Side::Sell;
    if (s == "unknown") return Side::Unknown;
    throw DomainError("unknown side '" + std::string(s) + "'");
}

Line parse_line(std::string_view text, std::size_t lineno) {
    Line line = Line::parse(text, nullptr, false);
    if (line.is_discarded()) throw ParseError(lineno, "not a JSON object");
    if (!line.is_object()) throw ParseError(lineno, "record is not an object");
    for (const auto& [key, value] : line.items()) {
        if (value.is_object() || value.is_array())
            throw ParseError(lineno, "field '" + key + "' is not a scalar");
    }
    if (!line.contains("kind") || !line["kind"].is_string()) throw ParseError(lineno, "missing 'kind'");
    return line;
}

std::string dump_line(const Line& line) { return line.dump(); }

double get_number(const Line& line, const char* key, std::size_t lineno) {
    const Line& v = field(line, key, lineno);
    if (!v.is_number()) throw ParseError(lineno, std::string("field '") + key + "' is not a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(lineno, std::string("field '") + key + "' is not finite");
    return d;
}

std::int64_t get_integer(const Line& line, const char* key, std::size_t lineno) {
    const Line& v = field(line, key, lineno);
    if (!v.is_number_integer()) throw ParseError(lineno, std::string("field '") + key + "' is not an integer");
    return v.get<std::int64_t>();
}

std::string get_string(const Line& line, const char* key, std::size_t lineno) {
    const Line& v = field(line, key, lineno);
    if (!v.is_string()) throw ParseError(lineno, std::string("field '") + key + "' is not a string");
    return v.get<std::string>();
}

std::optional<double> find_number(const Line& line, const char* key, std::size_t lineno) {
    if (!line.contains(key) || line[key].is_null()) return std::nullopt;
    return get_number(line, key, lineno);
}

std::optional<std::int64_t> find_integer(const Line& line, const char* key, std::size_t lineno) {
    if (!line.contains(key) || line[key].is_null()) return std::nullopt;
    return get_integer(line, key, lineno);
}

std::optional<std::string> find_string(const Line& line, const char* key, std::size_t lineno) {
    if (!line.contains(key) || line[key].is_null()) return std::nullopt;
    return get_string(line, key, lineno);
}

Line event_to_line(const TapeEvent& e) {
    Line line;
    line["kind"] = to_string(e.kind);
    line["ts"] = e.ts;
    line["symbol"] = e.symbol;
    line["price"] = e.price;
    line["size"] = e.size;
    line["side"] = to_string(e.side);
    if (e.venue) line["venue"] = *e.venue;
    if (e.mid) line["mid"] = *e.mid;
    if (e.own) line["own"] = *e.own;
    if (e.id) line["id"] = *e.id;
    if (e.order) line["order"] = *e.order;
    if (e.truth) line["truth"] = *e.truth;
    return line;
}

TapeEvent event_from_line(const Line& line, std::size_t lineno) {
    static constexpr std::string_view known[] = {"kind", "ts",  "symbol", "price", "size",  "side",
                                                 "venue", "mid", "own",   "id",    "order", "truth"};
    for (const auto& [key, value] : line.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) throw ParseError(lineno, "unknown field '" + key + "'");
    }

    TapeEvent e;
    try {
        e.kind = parse_event_kind(get_string(line, "kind", lineno));
        e.side = parse_side(get_string(line, "side", lineno));
    } catch (const DomainError& err) {
        throw ParseError(lineno, err.what());
    }
    e.ts = get_integer(line, "ts", lineno);
    e.symbol = get_string(line, "symbol", lineno);
    e.price = get_number(line, "price", lineno);
    e.size = get_number(line, "size", lineno);
    e.venue = find_string(line, "venue", lineno);
    e.mid = find_number(line, "mid", lineno);
    if (line.contains("own") && !line["own"].is_null()) {
        if (!line["own"].is_boolean()) throw ParseError(lineno, "field 'own' is not a boolean");
        e.own = line["own"].get<bool>();
    }
    e.id = find_integer(line, "id", lineno);
    e.order = find_integer(line, "order", lineno);
    e.truth = find_string(line, "truth", lineno);

    try {
        check_event(e);
    } catch (const DomainError& err) {
        throw ParseError(lineno, err.what());
    }
    return e;
}

}  // namespace darkscope
