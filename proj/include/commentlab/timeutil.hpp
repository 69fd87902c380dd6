#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "error.hpp"

namespace commentlab {

using Timestamp = std::chrono::sys_seconds;

namespace detail {

inline int parse_fixed(std::string_view s, std::size_t pos, std::size_t width, std::string_view what) {
    int value = 0;
    if (pos + width > s.size()) throw Error("timestamp too short: " + std::string(what));
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + width, value);
    if (ec != std::errc{} || ptr != s.data() + pos + width) {
        throw Error("bad timestamp " + std::string(what) + " in '" + std::string(s) + "'");
    }
    return value;
}

inline void expect_char(std::string_view s, std::size_t pos, char c) {
    if (pos >= s.size() || s[pos] != c) {
        throw Error("bad timestamp '" + std::string(s) + "': expected '" + std::string(1, c) + "'");
    }
}

} // namespace detail

/// Parses ISO-8601 "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)" into UTC seconds.
/// A date alone ("YYYY-MM-DD") is midnight UTC; a missing zone means UTC.
inline Timestamp parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    const int y = detail::parse_fixed(s, 0, 4, "year");
    detail::expect_char(s, 4, '-');
    const int mo = detail::parse_fixed(s, 5, 2, "month");
    detail::expect_char(s, 7, '-');
    const int d = detail::parse_fixed(s, 8, 2, "day");
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw Error("invalid calendar date in '" + std::string(s) + "'");
    sys_seconds t = sys_days{ymd};
    if (s.size() == 10) return t;

    if (s[10] != 'T' && s[10] != ' ') throw Error("bad timestamp '" + std::string(s) + "': expected 'T'");
    const int hh = detail::parse_fixed(s, 11, 2, "hour");
    detail::expect_char(s, 13, ':');
    const int mm = detail::parse_fixed(s, 14, 2, "minute");
    detail::expect_char(s, 16, ':');
    const int ss = detail::parse_fixed(s, 17, 2, "second");
    if (hh > 23 || mm > 59 || ss > 60) throw Error("time of day out of range in '" + std::string(s) + "'");
    t += hours{hh} + minutes{mm} + seconds{ss};

    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
    if (pos == s.size()) return t;
    if (s[pos] == 'Z' && pos + 1 == s.size()) return t;
    if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size()) {
        const int oh = detail::parse_fixed(s, pos + 1, 2, "offset hour");
        detail::expect_char(s, pos + 3, ':');
        const int om = detail::parse_fixed(s, pos + 4, 2, "offset minute");
        const auto offset = hours{oh} + minutes{om};
        return s[pos] == '+' ? t - offset : t + offset;
    }
    throw Error("bad timezone suffix in '" + std::string(s) + "'");
}

inline std::chrono::sys_days utc_day(Timestamp t) {
    return std::chrono::floor<std::chrono::days>(t);
}

inline std::string format_day(std::chrono::sys_days d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

inline std::string format_timestamp(Timestamp t) {
    const auto day = utc_day(t);
    const std::chrono::hh_mm_ss tod{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_day(day).c_str(),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

inline std::chrono::sys_days parse_day(std::string_view s) {
    return utc_day(parse_timestamp(s.substr(0, 10)));
}

} // namespace commentlab
