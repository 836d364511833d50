#pragma once

#include <waitflow/calendar.hpp>
#include <waitflow/inference.hpp>
#include <waitflow/rng.hpp>

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <span>
#include <string_view>
#include <vector>

namespace waitflow {

/// Multi-level moving-average coefficients. eta for ORD is fixed at 1 and
/// not stored.
struct FlowParams {
    double alpha_ord = 1.0;
    double alpha_sch = 1.0;
    double alpha_pwe = 1.0;
    double eta_sch = 1.0;
    double eta_pwe = 1.0;
    double sigma2_eps = 1.0;

    static constexpr std::size_t kDim = 6;
    static constexpr std::array<std::string_view, kDim> kNames{"alpha_ord", "alpha_sch", "alpha_pwe",
                                                              "eta_sch",   "eta_pwe",   "sigma2_eps"};

    double alpha(DayType t) const;
    double eta(DayType t) const;

    std::array<double, kDim> to_array() const;
    static FlowParams from_array(std::span<const double> v);

    //! Throws DomainError unless every field is > 0 and finite.
    void validate() const;
};

//! Moving-average order K >= 1.
class FlowOrder {
public:
    explicit FlowOrder(int k);
    std::size_t value() const noexcept { return k_; }

private:
    std::size_t k_;
};

//! Daily flows aligned with a calendar of the same length.
class FlowSeries {
public:
    FlowSeries(ServiceCalendar calendar, std::vector<double> flows);

    const ServiceCalendar& calendar() const noexcept { return calendar_; }
    std::span<const double> flows() const noexcept { return flows_; }
    std::size_t size() const noexcept { return flows_.size(); }
    //! Flow of 1-based day \p i.
    double flow(std::size_t i) const;

    FlowSeries prefix(std::size_t count) const;

private:
    ServiceCalendar calendar_;
    std::vector<double> flows_;
};

enum class LikelihoodRange {
    //! Normalizer counts N-K+1 terms, residuals summed over the computable days K+1..N.
    AsPrinted,
    //! Conditional on the first K days: N-K terms.
    Conditional,
};

//! Current-day coefficient alpha_DT(i) times the eta-weighted sum of the K previous flows.
double flow_mean(const FlowParams& params, const FlowSeries& series, std::size_t i, FlowOrder order);

double flow_log_likelihood(const FlowParams& params, const FlowSeries& series, FlowOrder order,
                           LikelihoodRange range = LikelihoodRange::AsPrinted);

//! Log likelihood plus the non-informative prior -log(sigma2), no other constants dropped.
double flow_log_posterior(const FlowParams& params, const FlowSeries& series, FlowOrder order,
                          LikelihoodRange range = LikelihoodRange::AsPrinted);

/// Per-day sufficient pieces of the flow likelihood.
///
/// For each day i > K the history sum splits by the day type of the history
/// day, so g_i = alpha_DT(i) * (ord_i + eta_sch * sch_i + eta_pwe * pwe_i)
/// and the likelihood is O(N) per evaluation.
class FlowDesign {
public:
    FlowDesign(const FlowSeries& series, FlowOrder order, LikelihoodRange range = LikelihoodRange::AsPrinted);

    double log_likelihood(const FlowParams& params) const;
    double log_posterior(const FlowParams& params) const;
    double sum_squared_residuals(const FlowParams& params) const;

    //! Number of Gaussian terms in the normalizer.
    std::size_t normalizer_terms() const noexcept { return normalizer_terms_; }

    //! Which free parameters the data can inform, in FlowParams::kNames order (sigma2 always true).
    std::array<bool, FlowParams::kDim> identified() const;

private:
    struct Row {
        DayType type;
        double y;
        double ord, sch, pwe;
    };
    std::vector<Row> rows_;
    std::size_t normalizer_terms_;
};

struct SimulationOptions {
    //! Mean of the Normal used for the first K days.
    double init_mean = 30.0;
    //! Repeat-until-positive attempts before a SimulationError.
    int max_attempts = 1000;
};

/// Day-by-day driver flow simulator with one value per day per run.
///
/// Days 1..K are drawn from Normal(init_mean, sigma2); later days from
/// Normal(coefficient(i) * sum of the K previous simulated flows, sigma2),
/// redrawn until positive. Values are memoized, so flow(i) always returns the
/// same draw within one simulator instance.
class FlowSimulator {
public:
    //! Algorithm without day types: one coefficient for every day.
    FlowSimulator(double alpha, FlowOrder order, double sigma2_eps, Rng& rng, SimulationOptions opts = {});
    //! With day types: ORD -> alpha_ord, SCH -> alpha_sch*eta_sch, PWE -> alpha_pwe*eta_pwe.
    FlowSimulator(const ServiceCalendar& calendar, const FlowParams& params, FlowOrder order, Rng& rng,
                  SimulationOptions opts = {});

    double flow(std::size_t i);
    //! Flows of days 1..n.
    std::vector<double> path(std::size_t n);

private:
    double coefficient(std::size_t i) const;
    void check_stability() const;

    const ServiceCalendar* calendar_ = nullptr;
    FlowParams params_{};
    double alpha_ = 0.0;
    std::size_t k_;
    double sd_;
    Rng& rng_;
    SimulationOptions opts_;
    std::vector<double> memo_;
};

//! Single-day entry point of the day-type-free simulator (one fresh run up to day i).
double simulate_flow(std::size_t i, double alpha, FlowOrder order, double sigma2_eps, Rng& rng,
                     SimulationOptions opts = {});
//! Single-day entry point of the day-type simulator (one fresh run up to day i).
double simulate_flow_daytypes(std::size_t i, const ServiceCalendar& calendar, const FlowParams& params,
                              FlowOrder order, Rng& rng, SimulationOptions opts = {});

//! Draw the next value of a recurrence, redrawing until positive.
double draw_positive(Rng& rng, double mean, double sd, int max_attempts);

/// Posterior predictive flow samples: rows are draws, columns horizon days.
struct FlowPredictive {
    std::size_t draws = 0;
    std::size_t horizon = 0;
    std::vector<double> values; // row-major draws x horizon
    std::vector<std::size_t> source_rows; // posterior row used per predictive draw

    double at(std::size_t j, std::size_t h) const { return values[j * horizon + h]; }
    std::vector<double> day(std::size_t h) const;
    std::vector<double> mean() const;
};

/// Roll the multi-level recurrence forward from the observed history for each
/// selected posterior draw, adding Normal(0, sigma2) noise redrawn until the
/// flow is positive. \p calendar must start where the history starts and
/// cover history + horizon days. \p max_draws > 0 thins the draws evenly.
FlowPredictive posterior_predict_flow(const PosteriorDraws& draws, const FlowSeries& history, FlowOrder order,
                                      const ServiceCalendar& calendar, std::size_t horizon, Rng& rng,
                                      std::size_t max_draws = 0, SimulationOptions opts = {});

//! FlowParams from one row of draws carrying FlowParams::kNames columns.
FlowParams flow_params_from_draw(const PosteriorDraws& draws, std::size_t row);

struct FlowFitOptions {
    LikelihoodRange range = LikelihoodRange::AsPrinted;
    McmcConfig mcmc{};
    //! Hold parameters at the given values (NaN = free), FlowParams::kNames order.
    std::array<double, FlowParams::kDim> fixed = unfixed();

    static std::array<double, FlowParams::kDim> unfixed() {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan, nan, nan, nan};
    }
};

struct FlowFit {
    SampleResult result; // columns: every FlowParams::kNames entry (fixed ones constant)
    std::array<bool, FlowParams::kDim> free{};
    std::vector<std::string> unidentified;
};

//! MCMC over the flow posterior. Unidentified parameters are held at alpha = 1/K, eta = 1.
FlowFit fit_flow(const FlowSeries& series, FlowOrder order, const FlowFitOptions& opts);

} // namespace waitflow
