#pragma once

#include <waitflow/flow_model.hpp>
#include <waitflow/inference.hpp>
#include <waitflow/rng.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace waitflow {

//! S equal half-open intervals [start, end) partitioning the day, in minutes.
class IntervalGrid {
public:
    explicit IntervalGrid(int intervals);

    std::size_t size() const noexcept { return s_; }
    double width() const noexcept { return 1440.0 / static_cast<double>(s_); }
    double start(std::size_t s) const;
    double end(std::size_t s) const;
    //! 0-based interval containing \p minute.
    std::size_t interval_of(double minute) const;

private:
    std::size_t s_;
};

struct WaitParams {
    double nu = 1.0;
    std::vector<double> beta;
};

//! One passenger request on a 1-based day of the flow series.
struct WaitRecord {
    std::size_t day = 0;
    double request_minute = 0.0;
    double pseudo_wait = 0.0;
    std::optional<double> arrival_minute;
    std::optional<double> perceived_wait;
};

/// Passenger requests with their pseudo waiting times, ordered by day then
/// request time. Request times strictly increase within a day and every
/// pseudo wait is positive.
class RequestLog {
public:
    RequestLog() = default;
    explicit RequestLog(std::vector<WaitRecord> records);

    std::span<const WaitRecord> records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    //! Records whose day lies in [first, last], re-indexed so day \p first becomes 1.
    RequestLog days(std::size_t first, std::size_t last) const;
    std::size_t max_day() const;

private:
    std::vector<WaitRecord> records_;
};

struct EventWaits {
    std::vector<double> pseudo;
    std::vector<double> perceived;
};

/// Pseudo and perceived waits from one day's FIFO request/arrival events.
/// Passenger j leaves with the j-th arriving driver; the first passenger's
/// previous departure is taken as their own request time.
EventWaits pseudo_waits_from_events(std::span<const double> requests, std::span<const double> arrivals);

//! Sum over observations of log Gamma(w; nu, beta_s * y_day). -inf when beta_s = 0 meets data in I_s.
double wait_log_likelihood(const WaitParams& wp, const FlowSeries& flows, const RequestLog& log,
                           const IntervalGrid& grid);

enum class BetaPriorKind { FlatPositive, Dirichlet };

struct BetaPrior {
    BetaPriorKind kind = BetaPriorKind::FlatPositive;
    std::vector<double> concentration; // Dirichlet only, length S

    void validate(std::size_t intervals) const;
};

/// Log posterior of beta up to a constant. Flat prior: the likelihood on
/// beta >= 0, -inf elsewhere. Dirichlet: adds sum (a_s - 1) log beta_s and
/// requires beta on the simplex.
double beta_log_posterior(const WaitParams& wp, const FlowSeries& flows, const RequestLog& log,
                          const IntervalGrid& grid, const BetaPrior& prior = {});

struct GammaDist {
    double shape;
    double rate;
    double mean() const { return shape / rate; }
    double variance() const { return shape / (rate * rate); }
};

//! Exact flat-prior marginal posterior of beta_s: Gamma(nu*n_s + 1, sum y*w). Throws ImproperPosteriorError if n_s = 0.
GammaDist beta_conjugate_posterior(double nu, const FlowSeries& flows, const RequestLog& log,
                                   const IntervalGrid& grid, std::size_t interval);

//! Observation count per interval.
std::vector<std::size_t> interval_counts(const RequestLog& log, const IntervalGrid& grid);

//! Method-of-moments shape: per-interval mean^2/variance of y*w, weighted by n_s - 1.
double estimate_nu_moments(const FlowSeries& flows, const RequestLog& log, const IntervalGrid& grid);

std::string beta_name(std::size_t interval); // "beta[1]" for interval 0

struct WaitFitOptions {
    BetaPrior prior{};
    McmcConfig mcmc{};
};

struct WaitFit {
    double nu = 0.0;
    SampleResult result; // columns beta[s] for identified intervals only (all S under Dirichlet)
    std::vector<std::size_t> unidentified; // 0-based intervals without data (flat prior)
};

//! MCMC over beta for a fixed shape \p nu.
WaitFit fit_wait(double nu, const FlowSeries& flows, const RequestLog& log, const IntervalGrid& grid,
                 const WaitFitOptions& opts);

/// Output of the waiting-time simulator: one flow per day shared by all
/// replicates, then replicates[j][(i-1)*S + s] ~ Gamma(nu, beta_s * flows[i-1]).
struct WaitSimulation {
    std::vector<double> flows;
    std::size_t days = 0;
    std::size_t intervals = 0;
    std::vector<std::vector<double>> replicates;

    double at(std::size_t j, std::size_t i, std::size_t s) const { return replicates[j][(i - 1) * intervals + s]; }
};

WaitSimulation simulate_waits(const ServiceCalendar& calendar, std::size_t days, const FlowParams& params,
                              FlowOrder order, double nu, std::span<const double> beta, std::size_t replicates,
                              Rng& rng, SimulationOptions opts = {});

//! Waits from already simulated flows (the replicate loops alone).
WaitSimulation simulate_waits_given_flows(std::span<const double> flows, double nu, std::span<const double> beta,
                                          std::size_t replicates, Rng& rng);

//! Beta_s draws for one interval; throws ImproperPosteriorError when it was not sampled.
std::vector<double> interval_beta_draws(const PosteriorDraws& draws, std::size_t interval);

//! One Gamma(nu, b * flow) draw per beta draw b.
std::vector<double> predict_wait_given_flow(std::span<const double> beta_draws, double nu, double flow, Rng& rng);

/// Draw j pairs beta_draws[j] with flow_draws[j]; the output has
/// min(beta_draws.size(), flow_draws.size()) samples.
std::vector<double> predict_wait_marginal(std::span<const double> beta_draws, double nu,
                                          std::span<const double> flow_draws, Rng& rng);

/// Perceived wait of a second passenger who requested zeta minutes after the
/// first: w2 + (w1 - zeta | w1 > zeta), the two parts independent. w1 is
/// resampled from \p w1_draws; one output per w2 draw.
std::vector<double> perceived_from_pseudo(std::span<const double> w1_draws, std::span<const double> w2_draws,
                                          double zeta, Rng& rng);

} // namespace waitflow
