#pragma once

#include <waitflow/calendar.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace waitflow {

/// Same-weekday / previous-holiday average.
///
/// Day i that collapses to ORW is predicted by the mean of all earlier flows
/// on the same weekday; a HOL day by the mean of all earlier HOL days.
/// \p flows holds days 1..flows.size() of \p cal; only days before i are read,
/// so i may lie one or more days past the observed flows when the index set
/// is still inside them. Throws DataError on an empty index set.
double baseline_predict(const ServiceCalendar& cal, std::span<const double> flows, std::size_t i);

/// Multi-step baseline for days first..last: each prediction only uses
/// observed flows, never earlier predictions.
std::vector<double> baseline_forecast(const ServiceCalendar& cal, std::span<const double> flows, std::size_t first,
                                      std::size_t last);

struct FourierCycle {
    double period = 7.0;
    int order = 3;
    std::vector<double> cos_coef; // a_l, l = 1..order
    std::vector<double> sin_coef; // b_l
};

/// Additive trend + seasonality + holiday model.
///
/// Trend is piecewise linear in the day index with continuity offsets
/// gamma_l = -s_l * delta_l, so each changepoint adds delta_l * (i - s_l)
/// once i >= s_l.
struct ProphetParams {
    double k = 0.0;
    double m = 0.0;
    std::vector<double> changepoints; // s_l, ascending day indices
    std::vector<double> delta;
    std::vector<double> gamma;
    std::vector<FourierCycle> cycles;
    std::vector<double> kappa{1.0, 1.0}; // (SCH, PWE)

    void validate() const;
};

double prophet_trend(const ProphetParams& p, double i);
double prophet_seasonal(const ProphetParams& p, double i);
double prophet_holiday(const ProphetParams& p, const ServiceCalendar& cal, std::size_t i);
double prophet_predict(const ProphetParams& p, const ServiceCalendar& cal, std::size_t i);

struct ProphetConfig {
    int changepoints = 25;
    //! Changepoints are spread uniformly over this leading fraction of the training days.
    double changepoint_range = 0.8;
    //! Weight of the smoothed-L1 penalty on delta, in max-abs-scaled units.
    double changepoint_penalty = 0.05;
    bool weekly = true;
    int weekly_order = 3;
    //! -1 = only when the training span covers two years; 0 = never; 1 = always.
    int yearly = -1;
    int yearly_order = 10;
    bool fit_kappa = false;
    //! Ridge weight on Fourier coefficients (scaled units); 0 = unpenalized.
    double seasonality_ridge = 0.0;
    int irls_iterations = 50;

    void validate() const;
};

struct ProphetFitReport {
    bool regularized = false; // rank deficiency met with a ridge fallback
    std::string notice;
};

//! Penalized least squares on days 1..flows.size() of \p cal.
ProphetParams prophet_fit(const ServiceCalendar& cal, std::span<const double> flows, const ProphetConfig& config,
                          ProphetFitReport* report = nullptr);

} // namespace waitflow
