#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace waitflow {

using Date = std::chrono::year_month_day;

//! Parse YYYY-MM-DD. Throws DataError on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(const Date& d);

Date add_days(const Date& d, long days);
//! Signed number of days from \p from to \p to.
long days_between(const Date& from, const Date& to);

//! ISO weekday, Monday = 1 ... Sunday = 7.
int iso_weekday(const Date& d);
bool is_weekend(const Date& d);

//! Parse HH:MM or HH:MM:SS into minutes since midnight.
double parse_clock(std::string_view text);
//! Format minutes since midnight as HH:MM:SS (rounded to the second).
std::string format_clock(double minutes);

} // namespace waitflow
