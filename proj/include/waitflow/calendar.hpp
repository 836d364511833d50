#pragma once

#include <waitflow/date.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace waitflow {

//! Day types driving the multi-level flow coefficients.
enum class DayType { Ord, Sch, Pwe };

//! Two-way collapse used by the same-weekday/holiday baseline.
enum class CollapsedDayType { Orw, Hol };

std::string_view to_string(DayType t);
std::string_view to_string(CollapsedDayType t);
DayType parse_day_type(std::string_view text);

/// Contiguous run of dated day-type annotations.
///
/// Day indices are 1-based: index 1 is start(). Every accessor taking a day
/// index throws RangeError outside [1, size()]. Immutable once built.
class ServiceCalendar {
public:
    ServiceCalendar(Date start, std::vector<DayType> types);

    //! Build from explicit (date, type) rows; rows must be contiguous and ascending.
    static ServiceCalendar from_entries(std::span<const std::pair<Date, DayType>> entries);

    std::size_t size() const noexcept { return types_.size(); }
    const Date& start() const noexcept { return start_; }
    Date last() const;
    std::span<const DayType> types() const noexcept { return types_; }

    Date date(std::size_t i) const;
    //! Day index of \p d, or nullopt when outside the calendar.
    std::optional<std::size_t> index_of(const Date& d) const;

    DayType day_type(std::size_t i) const;
    CollapsedDayType collapsed_day_type(std::size_t i) const;
    //! Monday = 1 ... Sunday = 7.
    int day_number(std::size_t i) const;
    bool is_weekend(std::size_t i) const;
    //! PWE annotation on a Monday-Friday date.
    bool is_public_holiday(std::size_t i) const;

    //! Offsets k < i with the same weekday as day i (multiples of 7, ascending).
    std::vector<std::size_t> prior_same_weekday_offsets(std::size_t i) const;
    //! Offsets k < i such that day i-k collapses to HOL (ascending).
    std::vector<std::size_t> prior_holiday_offsets(std::size_t i) const;

    //! Days [first, first + count) as a new calendar whose index 1 is \p first.
    ServiceCalendar slice(std::size_t first, std::size_t count) const;
    ServiceCalendar prefix(std::size_t count) const { return slice(1, count); }

    bool operator==(const ServiceCalendar&) const = default;

private:
    void check(std::size_t i) const;

    Date start_;
    std::vector<DayType> types_;
};

/// Holiday rules for generating a calendar rather than reading one.
///
/// Weekends and public holidays are PWE, remaining school-holiday days SCH,
/// everything else ORD. Overrides win over the rules.
struct HolidayRules {
    std::vector<std::pair<Date, Date>> school_holidays; // inclusive ranges
    std::vector<Date> public_holidays;
    std::vector<std::pair<Date, DayType>> overrides;
};

//! French public holidays (fixed dates plus Easter Monday, Ascension, Whit Monday).
std::vector<Date> french_public_holidays(int year);

//! Lyon (academic zone A) rules for 2017-2020, including the 2019-05-16 strike day.
HolidayRules lyon_rules();

ServiceCalendar generate_calendar(const Date& first, std::size_t days, const HolidayRules& rules);

} // namespace waitflow
