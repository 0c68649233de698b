#include "phri/core/numfmt.hpp"

#include <charconv>
#include <cmath>

#include "phri/core/errors.hpp"

namespace phri {

void append_double(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw FormatError("cannot format double");
    out.append(buf, end);
}

std::string format_double(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

double parse_double(std::string_view token) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        throw FormatError("not a number: '" + std::string(token) + "'");
    return v;
}

long long parse_int(std::string_view token) {
    token = trim(token);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        throw FormatError("not an integer: '" + std::string(token) + "'");
    return v;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace phri
