#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace darkscope {

/// Nanoseconds since epoch. Tape arithmetic stays in integers; statistics
/// convert to seconds at the boundary.
using Nanos = std::int64_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;

/// Smallest duration the statistics ever see (1 ns).
inline constexpr double kDurationFloorSeconds = 1e-9;

inline constexpr double to_seconds(Nanos ns) { return static_cast<double>(ns) * 1e-9; }

inline Nanos from_seconds(double s) { return static_cast<Nanos>(s * 1e9 + (s >= 0 ? 0.5 : -0.5)); }

enum class EventKind : std::uint8_t { LitPrint, DarkFill };

enum class Side : std::int8_t { Sell = -1, Unknown = 0, Buy = 1 };

/// +1 for a buy, -1 for a sell, 0 when unknown.
inline constexpr int sign(Side s) { return static_cast<int>(s); }

inline constexpr Side opposite(Side s) {
    return s == Side::Buy ? Side::Sell : s == Side::Sell ? Side::Buy : Side::Unknown;
}

std::string_view to_string(EventKind k);
std::string_view to_string(Side s);
EventKind parse_event_kind(std::string_view s);
Side parse_side(std::string_view s);

/// Invalid argument or violated precondition.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed external input. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace darkscope
