#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "sirdcast/errors.hpp"

namespace sirdcast {

using Date = std::chrono::sys_days;

/// Parses an ISO "YYYY-MM-DD" date.
inline Date parse_date(std::string_view text)
{
    auto fail = [&] { return InvalidInput("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw fail();
    }
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        if (ec != std::errc{} || p != text.data() + pos + len) {
            throw fail();
        }
    };
    field(0, 4, y);
    field(5, 2, m);
    field(8, 2, d);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw fail();
    }
    return Date{ymd};
}

inline std::string format_date(Date date)
{
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline Date add_days(Date date, long days) { return date + std::chrono::days{days}; }

inline long days_between(Date from, Date to) { return (to - from).count(); }

} // namespace sirdcast
