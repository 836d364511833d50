#pragma once

#include <waitflow/calendar.hpp>
#include <waitflow/waiting_model.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace waitflow {

//! Dense N x S x J observed waits, index (i, s, j) at (i * S + s) * J + j (0-based).
struct WaitTensor {
    std::size_t days = 0;
    std::size_t intervals = 0;
    std::size_t replicates = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t s, std::size_t j) const {
        return values[(i * intervals + s) * replicates + j];
    }
};

/// Fraction of observations w(i,s,j) with |mean(i,s) - w(i,s,j)| < delta.
/// \p predicted_mean is N x S row-major. Throws DataError on shape mismatch.
double pe_metric(const WaitTensor& observed, std::span<const double> predicted_mean, double delta);

//! Same metric over ragged cells: observed[c] are the waits of cell c, predicted_mean[c] its mean.
double pe_metric_cells(const std::vector<std::vector<double>>& observed, std::span<const double> predicted_mean,
                       double delta);

using PeCurve = std::vector<std::pair<double, double>>;

//! PE at each delta of \p deltas (must be ascending).
PeCurve pe_curve(const std::vector<std::vector<double>>& observed, std::span<const double> predicted_mean,
                 std::span<const double> deltas);

struct WeekMse {
    Date week_start; // Monday
    double mse = 0.0;
    std::size_t days = 0;
    bool partial = false;
};

/// Mean squared error per Monday-anchored week. observed[n] and predicted[n]
/// belong to day first_day + n of \p cal. Weeks with < 7 days are flagged partial.
std::vector<WeekMse> weekly_mse(std::span<const double> observed, std::span<const double> predicted,
                                const ServiceCalendar& cal, std::size_t first_day = 1);

struct ScenarioSpec {
    std::string label;
    Date train_start;
    Date train_end;
    Date test_start;
    Date test_end;
    //! Sparse-wait aggregation window (0 = none).
    int aggregation_weeks = 0;

    void validate() const;
};

/// Resolved day ranges of a scenario on a calendar (1-based, inclusive).
struct Scenario {
    ScenarioSpec spec;
    std::size_t train_first = 0, train_last = 0;
    std::size_t test_first = 0, test_last = 0;

    std::size_t train_days() const { return train_last - train_first + 1; }
    std::size_t test_days() const { return test_last - test_first + 1; }
};

//! Throws RangeError when a boundary lies outside \p cal.
Scenario scenario_split(const ServiceCalendar& cal, const ScenarioSpec& spec);

//! The six driver-flow scenarios (test weeks Jan-May 2019, training from 2018-05-15).
std::vector<ScenarioSpec> lane_flow_scenarios();
//! The waiting-time scenario (5 aggregated test weeks).
ScenarioSpec lane_wait_scenario();
//! Preset by label ("lane_s1".."lane_s6", "lane_waits"); throws ConfigError.
ScenarioSpec scenario_preset(const std::string& label);

struct SplitRequests {
    RequestLog train;
    RequestLog test;
};

//! Split a request log by scenario, re-indexing days to each phase.
SplitRequests split_requests(const RequestLog& log, const Scenario& sc);

struct PooledWaits {
    std::vector<double> waits;
    std::vector<std::size_t> days; // contributing day indices, to be removed from training
    bool empty = true;
};

/// Waits of interval \p s pooled from days i-k, k = 7, 14, ..., 7*weeks, with the
/// same day type and weekday as day i. Day i itself is added when \p include_current.
PooledWaits aggregate_sparse_waits(const RequestLog& log, const ServiceCalendar& cal, const IntervalGrid& grid,
                                   std::size_t i, std::size_t s, int weeks, bool include_current = false);

} // namespace waitflow
