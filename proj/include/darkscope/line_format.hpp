#pragma once

// Line-delimited record format: one flat JSON object per line, discriminated
// by its `kind` field ("lit", "dark", "meta", "surprise", "evidence",
// "action", "report", "mid", "drift", "impact").

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "darkscope/tape.hpp"

namespace darkscope {

using Line = nlohmann::ordered_json;

/// Parses one non-blank line into a JSON object. Throws ParseError.
Line parse_line(std::string_view text, std::size_t lineno);

/// Serialized form of a line, without the trailing newline.
std::string dump_line(const Line& line);

Line event_to_line(const TapeEvent& e);

/// Decodes a "lit" or "dark" record and checks field domains. Throws
/// ParseError tagged with `lineno`.
TapeEvent event_from_line(const Line& line, std::size_t lineno);

/// Reads every non-blank line of `in`, invoking `fn(line, lineno)`.
template <class Fn>
void for_each_line(std::istream& in, Fn&& fn);

// Typed field access with ParseError on absence or type mismatch.
double get_number(const Line& line, const char* key, std::size_t lineno);
std::int64_t get_integer(const Line& line, const char* key, std::size_t lineno);
std::string get_string(const Line& line, const char* key, std::size_t lineno);
std::optional<double> find_number(const Line& line, const char* key, std::size_t lineno);
std::optional<std::int64_t> find_integer(const Line& line, const char* key, std::size_t lineno);
std::optional<std::string> find_string(const Line& line, const char* key, std::size_t lineno);

}  // namespace darkscope

#include <istream>

template <class Fn>
void darkscope::for_each_line(std::istream& in, Fn&& fn) {
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        fn(parse_line(text, lineno), lineno);
    }
}
