#include <waitflow/calendar.hpp>
#include <waitflow/error.hpp>

#include <algorithm>

namespace waitflow {

std::string_view to_string(DayType t) {
    switch (t) {
    case DayType::Ord: return "ORD";
    case DayType::Sch: return "SCH";
    case DayType::Pwe: return "PWE";
    }
    return "?";
}

std::string_view to_string(CollapsedDayType t) {
    return t == CollapsedDayType::Hol ? "HOL" : "ORW";
}

DayType parse_day_type(std::string_view text) {
    if (text == "ORD") return DayType::Ord;
    if (text == "SCH") return DayType::Sch;
    if (text == "PWE") return DayType::Pwe;
    throw DataError("unknown day type '" + std::string(text) + "', expected ORD, SCH or PWE");
}

ServiceCalendar::ServiceCalendar(Date start, std::vector<DayType> types)
    : start_(start), types_(std::move(types)) {
    if (!start_.ok()) {
        throw DataError("calendar start date is not a valid date");
    }
}

ServiceCalendar ServiceCalendar::from_entries(std::span<const std::pair<Date, DayType>> entries) {
    if (entries.empty()) {
        throw DataError("calendar has no rows");
    }
    std::vector<DayType> types;
    types.reserve(entries.size());
    for (std::size_t r = 0; r < entries.size(); ++r) {
        if (r > 0 && days_between(entries[r - 1].first, entries[r].first) != 1) {
            throw DataError("calendar dates must be contiguous and ascending at " +
                                format_date(entries[r].first),
                            static_cast<long>(r + 1));
        }
        types.push_back(entries[r].second);
    }
    return ServiceCalendar(entries.front().first, std::move(types));
}

void ServiceCalendar::check(std::size_t i) const {
    if (i < 1 || i > types_.size()) {
        throw RangeError("day index " + std::to_string(i) + " outside calendar 1.." +
                         std::to_string(types_.size()));
    }
}

Date ServiceCalendar::last() const {
    return add_days(start_, static_cast<long>(types_.size()) - 1);
}

Date ServiceCalendar::date(std::size_t i) const {
    check(i);
    return add_days(start_, static_cast<long>(i) - 1);
}

std::optional<std::size_t> ServiceCalendar::index_of(const Date& d) const {
    const long offset = days_between(start_, d);
    if (offset < 0 || offset >= static_cast<long>(types_.size())) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(offset) + 1;
}

DayType ServiceCalendar::day_type(std::size_t i) const {
    check(i);
    return types_[i - 1];
}

bool ServiceCalendar::is_weekend(std::size_t i) const { return waitflow::is_weekend(date(i)); }

bool ServiceCalendar::is_public_holiday(std::size_t i) const {
    return day_type(i) == DayType::Pwe && !is_weekend(i);
}

CollapsedDayType ServiceCalendar::collapsed_day_type(std::size_t i) const {
    const DayType t = day_type(i);
    if (t == DayType::Sch || (t == DayType::Pwe && !is_weekend(i))) {
        return CollapsedDayType::Hol;
    }
    return CollapsedDayType::Orw;
}

int ServiceCalendar::day_number(std::size_t i) const { return iso_weekday(date(i)); }

std::vector<std::size_t> ServiceCalendar::prior_same_weekday_offsets(std::size_t i) const {
    check(i);
    std::vector<std::size_t> out;
    for (std::size_t k = 7; k < i; k += 7) {
        out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> ServiceCalendar::prior_holiday_offsets(std::size_t i) const {
    check(i);
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k < i; ++k) {
        if (collapsed_day_type(i - k) == CollapsedDayType::Hol) {
            out.push_back(k);
        }
    }
    return out;
}

ServiceCalendar ServiceCalendar::slice(std::size_t first, std::size_t count) const {
    if (count == 0) {
        throw RangeError("empty calendar slice");
    }
    check(first);
    check(first + count - 1);
    return ServiceCalendar(date(first), std::vector<DayType>(types_.begin() + static_cast<long>(first - 1),
                                                             types_.begin() + static_cast<long>(first - 1 + count)));
}

namespace {

// Anonymous Gregorian algorithm.
Date easter_sunday(int year) {
    const int a = year % 19;
    const int b = year / 100;
    const int c = year % 100;
    const int d = b / 4;
    const int e = b % 4;
    const int f = (b + 8) / 25;
    const int g = (b - f + 1) / 3;
    const int h = (19 * a + b - d - g + 15) % 30;
    const int i = c / 4;
    const int k = c % 4;
    const int l = (32 + 2 * e + 2 * i - h - k) % 7;
    const int m = (a + 11 * h + 22 * l) / 451;
    const int month = (h + l - 7 * m + 114) / 31;
    const int day = ((h + l - 7 * m + 114) % 31) + 1;
    return Date{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                std::chrono::day{static_cast<unsigned>(day)}};
}

Date ymd(int y, unsigned m, unsigned d) {
    return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

} // namespace

std::vector<Date> french_public_holidays(int year) {
    const Date easter = easter_sunday(year);
    return {ymd(year, 1, 1),  add_days(easter, 1), ymd(year, 5, 1),   ymd(year, 5, 8),
            add_days(easter, 39), add_days(easter, 50), ymd(year, 7, 14), ymd(year, 8, 15),
            ymd(year, 11, 1), ymd(year, 11, 11), ymd(year, 12, 25)};
}

HolidayRules lyon_rules() {
    HolidayRules rules;
    // Zone A school holidays, first to last day off (inclusive).
    rules.school_holidays = {
        {ymd(2017, 7, 8), ymd(2017, 9, 3)},     {ymd(2017, 10, 21), ymd(2017, 11, 5)},
        {ymd(2017, 12, 23), ymd(2018, 1, 7)},   {ymd(2018, 2, 10), ymd(2018, 2, 25)},
        {ymd(2018, 4, 7), ymd(2018, 4, 22)},    {ymd(2018, 7, 7), ymd(2018, 9, 2)},
        {ymd(2018, 10, 20), ymd(2018, 11, 4)},  {ymd(2018, 12, 22), ymd(2019, 1, 6)},
        {ymd(2019, 2, 16), ymd(2019, 3, 3)},    {ymd(2019, 4, 13), ymd(2019, 4, 28)},
        {ymd(2019, 5, 30), ymd(2019, 6, 2)},    {ymd(2019, 7, 6), ymd(2019, 9, 1)},
        {ymd(2019, 10, 19), ymd(2019, 11, 3)},  {ymd(2019, 12, 21), ymd(2020, 1, 5)},
        {ymd(2020, 2, 22), ymd(2020, 3, 8)},    {ymd(2020, 4, 18), ymd(2020, 5, 3)},
        {ymd(2020, 7, 4), ymd(2020, 8, 31)},
    };
    for (int y = 2017; y <= 2020; ++y) {
        auto days = french_public_holidays(y);
        rules.public_holidays.insert(rules.public_holidays.end(), days.begin(), days.end());
    }
    // Transport strike, labeled as a public holiday in the service data.
    rules.overrides.emplace_back(ymd(2019, 5, 16), DayType::Pwe);
    return rules;
}

ServiceCalendar generate_calendar(const Date& first, std::size_t days, const HolidayRules& rules) {
    if (days == 0) {
        throw RangeError("calendar must cover at least one day");
    }
    std::vector<DayType> types(days, DayType::Ord);
    for (std::size_t n = 0; n < days; ++n) {
        const Date d = add_days(first, static_cast<long>(n));
        const auto sd = std::chrono::sys_days{d};
        const bool school = std::any_of(rules.school_holidays.begin(), rules.school_holidays.end(),
                                        [&](const auto& r) {
                                            return sd >= std::chrono::sys_days{r.first} &&
                                                   sd <= std::chrono::sys_days{r.second};
                                        });
        const bool pub = std::find(rules.public_holidays.begin(), rules.public_holidays.end(), d) !=
                         rules.public_holidays.end();
        if (is_weekend(d) || pub) {
            types[n] = DayType::Pwe;
        } else if (school) {
            types[n] = DayType::Sch;
        }
        for (const auto& [od, ot] : rules.overrides) {
            if (od == d) types[n] = ot;
        }
    }
    return ServiceCalendar(first, std::move(types));
}

} // namespace waitflow
