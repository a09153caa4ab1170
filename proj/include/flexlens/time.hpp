#pragma once

// UTC instants at minute precision, ISO-8601 parsing and facility-local calendar fields.

#include "flexlens/error.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace flexlens {

using Instant = std::chrono::sys_seconds;
using std::chrono::hours;
using std::chrono::minutes;
using std::chrono::seconds;

/// Fixed offset from UTC. Facility-local time = UTC + offset.
struct UtcOffset {
    minutes value{0};

    static UtcOffset parse(std::string_view text) {
        if (text.empty() || text == "UTC" || text == "Z" || text == "utc") return {};
        if (text.size() != 6 || (text[0] != '+' && text[0] != '-') || text[3] != ':')
            throw InputError("bad timezone '" + std::string(text) + "' (expected UTC or +HH:MM)");
        auto num = [&](std::size_t pos) {
            int v = 0;
            auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + 2, v);
            if (ec != std::errc{} || p != text.data() + pos + 2)
                throw InputError("bad timezone '" + std::string(text) + "'");
            return v;
        };
        int h = num(1), m = num(4);
        if (h > 14 || m > 59) throw InputError("bad timezone '" + std::string(text) + "'");
        int total = h * 60 + m;
        return UtcOffset{minutes(text[0] == '-' ? -total : total)};
    }

    std::string str() const {
        if (value.count() == 0) return "UTC";
        auto total = value.count();
        char sign = total < 0 ? '-' : '+';
        if (total < 0) total = -total;
        char buf[8];
        std::snprintf(buf, sizeof buf, "%c%02d:%02d", sign, static_cast<int>(total / 60),
                      static_cast<int>(total % 60));
        return buf;
    }
};

namespace detail {

inline bool parse_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc{} && p == s.data() + pos + len;
}

}  // namespace detail

/// Parses `YYYY-MM-DD[T| ]HH:MM[:SS][Z|+HH:MM|-HH:MM]` or a bare date.
/// Seconds must be zero. A timestamp without a zone is read in `assumed_zone`.
inline Instant parse_timestamp(std::string_view text, UtcOffset assumed_zone = {}) {
    using namespace std::chrono;
    auto fail = [&]() -> Instant {
        throw InputError("bad timestamp '" + std::string(text) + "'");
    };
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return fail();
    if (!detail::parse_int(text, 0, 4, y) || !detail::parse_int(text, 5, 2, mo) ||
        !detail::parse_int(text, 8, 2, d))
        return fail();
    std::size_t pos = 10;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') return fail();
        if (!detail::parse_int(text, pos + 1, 2, h) || text.size() < pos + 6 || text[pos + 3] != ':' ||
            !detail::parse_int(text, pos + 4, 2, mi))
            return fail();
        pos += 6;
        if (pos < text.size() && text[pos] == ':') {
            if (!detail::parse_int(text, pos + 1, 2, s)) return fail();
            pos += 3;
        }
    }
    UtcOffset zone = assumed_zone;
    if (pos < text.size()) {
        auto rest = text.substr(pos);
        if (rest == "Z")
            zone = {};
        else if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-'))
            zone = UtcOffset::parse(rest);
        else
            return fail();
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return fail();
    if (s != 0) throw InputError("timestamp '" + std::string(text) + "' is not minute-aligned");
    auto local = sys_days{ymd} + std::chrono::hours{h} + minutes{mi};
    return Instant{local - zone.value};
}

/// ISO-8601 UTC rendering, `YYYY-MM-DDTHH:MMZ`.
inline std::string format_timestamp(Instant t) {
    using namespace std::chrono;
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss hms{t - day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()));
    return buf;
}

inline Instant floor_hour(Instant t) { return std::chrono::floor<hours>(t); }

inline std::int64_t hours_between(Instant from, Instant to) {
    return std::chrono::duration_cast<hours>(to - from).count();
}

/// Calendar fields of an instant in facility-local time.
struct LocalCalendar {
    std::int64_t day_index = 0;  ///< days since 1970-01-01 (local)
    int hour = 0;                ///< 0-23
    int day = 1;                 ///< day of month
    int weekday = 0;             ///< 0 = Sunday
    int month = 1;               ///< 1-12
    int year = 1970;
    std::int64_t seconds_since_midnight = 0;

    static LocalCalendar of(Instant t, UtcOffset zone) {
        using namespace std::chrono;
        auto local = t + zone.value;
        auto day_point = floor<days>(local);
        year_month_day ymd{day_point};
        LocalCalendar c;
        c.day_index = day_point.time_since_epoch().count();
        c.seconds_since_midnight = duration_cast<seconds>(local - day_point).count();
        c.hour = static_cast<int>(c.seconds_since_midnight / 3600);
        c.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
        c.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
        c.year = static_cast<int>(ymd.year());
        c.weekday = static_cast<int>(std::chrono::weekday{day_point}.c_encoding());
        return c;
    }
};

}  // namespace flexlens
