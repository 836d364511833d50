#include <waitflow/error.hpp>
#include <waitflow/eval.hpp>

#include <algorithm>
#include <cmath>

namespace waitflow {

double pe_metric(const WaitTensor& observed, std::span<const double> predicted_mean, double delta) {
    if (!(delta >= 0.0)) throw DomainError("PE threshold delta must be >= 0");
    const std::size_t cells = observed.days * observed.intervals;
    if (observed.values.size() != cells * observed.replicates) {
        throw DataError("observed wait tensor size does not match its N x S x J shape");
    }
    if (predicted_mean.size() != cells) {
        throw DataError("predicted means have " + std::to_string(predicted_mean.size()) + " cells, observed " +
                        std::to_string(cells));
    }
    if (observed.values.empty()) throw DataError("PE of an empty wait tensor");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < observed.days; ++i) {
        for (std::size_t s = 0; s < observed.intervals; ++s) {
            const double m = predicted_mean[i * observed.intervals + s];
            for (std::size_t j = 0; j < observed.replicates; ++j) {
                if (std::abs(m - observed.at(i, s, j)) < delta) ++hits;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(observed.values.size());
}

double pe_metric_cells(const std::vector<std::vector<double>>& observed, std::span<const double> predicted_mean,
                       double delta) {
    if (!(delta >= 0.0)) throw DomainError("PE threshold delta must be >= 0");
    if (observed.size() != predicted_mean.size()) throw DataError("PE cell count mismatch");
    std::size_t hits = 0, total = 0;
    for (std::size_t c = 0; c < observed.size(); ++c) {
        for (double w : observed[c]) {
            if (std::abs(predicted_mean[c] - w) < delta) ++hits;
            ++total;
        }
    }
    if (total == 0) throw DataError("PE with no observations");
    return static_cast<double>(hits) / static_cast<double>(total);
}

PeCurve pe_curve(const std::vector<std::vector<double>>& observed, std::span<const double> predicted_mean,
                 std::span<const double> deltas) {
    if (!std::is_sorted(deltas.begin(), deltas.end())) throw DomainError("PE deltas must be ascending");
    PeCurve out;
    for (double d : deltas) out.emplace_back(d, pe_metric_cells(observed, predicted_mean, d));
    return out;
}

std::vector<WeekMse> weekly_mse(std::span<const double> observed, std::span<const double> predicted,
                                const ServiceCalendar& cal, std::size_t first_day) {
    if (observed.size() != predicted.size()) throw DataError("observed and predicted flows differ in length");
    if (observed.empty()) return {};
    if (first_day + observed.size() - 1 > cal.size()) throw RangeError("flows run past the calendar");
    std::vector<WeekMse> weeks;
    double ss = 0.0;
    for (std::size_t n = 0; n < observed.size(); ++n) {
        const std::size_t i = first_day + n;
        const Date d = cal.date(i);
        const Date monday = add_days(d, 1 - iso_weekday(d));
        if (weeks.empty() || weeks.back().week_start != monday) {
            if (!weeks.empty()) weeks.back().mse = ss / static_cast<double>(weeks.back().days);
            weeks.push_back({monday, 0.0, 0, false});
            ss = 0.0;
        }
        const double e = observed[n] - predicted[n];
        ss += e * e;
        weeks.back().days++;
    }
    weeks.back().mse = ss / static_cast<double>(weeks.back().days);
    for (auto& w : weeks) w.partial = w.days < 7;
    return weeks;
}

void ScenarioSpec::validate() const {
    if (days_between(train_start, train_end) < 0) throw ConfigError("scenario train range is empty");
    if (days_between(test_start, test_end) < 0) throw ConfigError("scenario test range is empty");
    if (days_between(train_end, test_start) < 1) throw ConfigError("scenario test must start after training ends");
    if (aggregation_weeks < 0) throw ConfigError("aggregation_weeks must be >= 0");
}

Scenario scenario_split(const ServiceCalendar& cal, const ScenarioSpec& spec) {
    spec.validate();
    auto locate = [&](const Date& d) {
        auto i = cal.index_of(d);
        if (!i) {
            throw RangeError("scenario date " + format_date(d) + " outside data range " + format_date(cal.start()) +
                             ".." + format_date(cal.last()));
        }
        return *i;
    };
    return {spec, locate(spec.train_start), locate(spec.train_end), locate(spec.test_start), locate(spec.test_end)};
}

namespace {
Date d(int y, unsigned m, unsigned dd) {
    return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{dd}};
}
} // namespace

std::vector<ScenarioSpec> lane_flow_scenarios() {
    const Date start = d(2018, 5, 15);
    auto week = [&](std::string label, Date monday) {
        return ScenarioSpec{std::move(label), start, add_days(monday, -1), monday, add_days(monday, 6), 0};
    };
    return {week("lane_s1", d(2019, 1, 14)), week("lane_s2", d(2019, 2, 25)), week("lane_s3", d(2019, 4, 29)),
            week("lane_s4", d(2019, 5, 6)),  week("lane_s5", d(2019, 5, 13)), week("lane_s6", d(2019, 5, 20))};
}

ScenarioSpec lane_wait_scenario() {
    return {"lane_waits", d(2019, 7, 25), d(2020, 1, 12), d(2020, 1, 13), d(2020, 2, 17), 5};
}

ScenarioSpec scenario_preset(const std::string& label) {
    for (auto& s : lane_flow_scenarios()) {
        if (s.label == label) return s;
    }
    if (label == "lane_waits") return lane_wait_scenario();
    throw ConfigError("unknown scenario preset '" + label + "'");
}

SplitRequests split_requests(const RequestLog& log, const Scenario& sc) {
    return {log.days(sc.train_first, sc.train_last), log.days(sc.test_first, sc.test_last)};
}

PooledWaits aggregate_sparse_waits(const RequestLog& log, const ServiceCalendar& cal, const IntervalGrid& grid,
                                   std::size_t i, std::size_t s, int weeks, bool include_current) {
    if (weeks < 1) throw DomainError("aggregation window must cover >= 1 week");
    if (s >= grid.size()) throw RangeError("interval index outside grid");
    const DayType type = cal.day_type(i);
    const int dn = cal.day_number(i);
    std::vector<std::size_t> days;
    if (include_current) days.push_back(i);
    for (std::size_t k = 7; k <= 7 * static_cast<std::size_t>(weeks) && k < i; k += 7) {
        if (cal.day_type(i - k) == type && cal.day_number(i - k) == dn) days.push_back(i - k);
    }
    PooledWaits out;
    for (const WaitRecord& w : log.records()) {
        if (grid.interval_of(w.request_minute) != s) continue;
        if (std::find(days.begin(), days.end(), w.day) != days.end()) out.waits.push_back(w.pseudo_wait);
    }
    out.days = days;
    out.empty = out.waits.empty();
    return out;
}

} // namespace waitflow
