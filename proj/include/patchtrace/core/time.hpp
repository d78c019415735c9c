#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <string>
#include <string_view>

#include "patchtrace/error.hpp"

namespace patchtrace {

// Timestamps are UTC with second precision, rendered as ISO-8601
// `YYYY-MM-DDTHH:MM:SSZ` and held internally as seconds since the epoch.

inline std::string format_utc(std::int64_t epoch_seconds)
{
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[72];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

inline std::int64_t parse_utc(std::string_view text)
{
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T'
        || text[13] != ':' || text[16] != ':' || text[19] != 'Z')
        raise(ErrorKind::malformed_record,
              "timestamp '" + std::string(text) + "' is not YYYY-MM-DDTHH:MM:SSZ");

    auto digits = [&](std::size_t pos, std::size_t len) {
        int value = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            char c = text[i];
            if (c < '0' || c > '9')
                raise(ErrorKind::malformed_record,
                      "timestamp '" + std::string(text) + "' contains a non-digit");
            value = value * 10 + (c - '0');
        }
        return value;
    };

    std::tm tm{};
    tm.tm_year = digits(0, 4) - 1900;
    tm.tm_mon = digits(5, 2) - 1;
    tm.tm_mday = digits(8, 2);
    tm.tm_hour = digits(11, 2);
    tm.tm_min = digits(14, 2);
    tm.tm_sec = digits(17, 2);
    if (tm.tm_mon < 0 || tm.tm_mon > 11 || tm.tm_mday < 1 || tm.tm_mday > 31
        || tm.tm_hour > 23 || tm.tm_min > 59 || tm.tm_sec > 60)
        raise(ErrorKind::malformed_record,
              "timestamp '" + std::string(text) + "' is out of range");

    std::time_t t = timegm(&tm);
    std::int64_t seconds = static_cast<std::int64_t>(t);
    if (format_utc(seconds) != std::string(text))
        raise(ErrorKind::malformed_record,
              "timestamp '" + std::string(text) + "' does not normalize");
    return seconds;
}

} // namespace patchtrace
