#include <waitflow/date.hpp>
#include <waitflow/error.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>

namespace waitflow {
namespace {

int parse_int(std::string_view text, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError("malformed " + std::string(what) + ": '" + std::string(text) + "'");
    }
    return value;
}

} // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("malformed date, expected YYYY-MM-DD: '" + std::string(text) + "'");
    }
    const int y = parse_int(text.substr(0, 4), "date");
    const int m = parse_int(text.substr(5, 2), "date");
    const int d = parse_int(text.substr(8, 2), "date");
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) {
        throw DataError("invalid calendar date: '" + std::string(text) + "'");
    }
    return date;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

Date add_days(const Date& d, long days) {
    return Date{std::chrono::sys_days{d} + std::chrono::days{days}};
}

long days_between(const Date& from, const Date& to) {
    return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
}

int iso_weekday(const Date& d) {
    return static_cast<int>(std::chrono::weekday{std::chrono::sys_days{d}}.iso_encoding());
}

bool is_weekend(const Date& d) { return iso_weekday(d) >= 6; }

double parse_clock(std::string_view text) {
    if (text.size() != 5 && text.size() != 8) {
        throw DataError("malformed time, expected HH:MM[:SS]: '" + std::string(text) + "'");
    }
    if (text[2] != ':' || (text.size() == 8 && text[5] != ':')) {
        throw DataError("malformed time, expected HH:MM[:SS]: '" + std::string(text) + "'");
    }
    const int h = parse_int(text.substr(0, 2), "time");
    const int m = parse_int(text.substr(3, 2), "time");
    const int s = text.size() == 8 ? parse_int(text.substr(6, 2), "time") : 0;
    if (h > 23 || m > 59 || s > 59) {
        throw DataError("time out of range: '" + std::string(text) + "'");
    }
    return h * 60.0 + m + s / 60.0;
}

std::string format_clock(double minutes) {
    long total = std::lround(minutes * 60.0);
    if (total < 0 || total >= 24L * 3600L) {
        throw RangeError("clock time outside the day: " + std::to_string(minutes) + " min");
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02ld:%02ld:%02ld", total / 3600, (total / 60) % 60, total % 60);
    return buf;
}

} // namespace waitflow
