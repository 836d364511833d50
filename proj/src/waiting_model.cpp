#include <waitflow/error.hpp>
#include <waitflow/waiting_model.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace waitflow {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Grid and log

IntervalGrid::IntervalGrid(int intervals) : s_(static_cast<std::size_t>(intervals)) {
    if (intervals < 1 || 1440 % intervals != 0) {
        throw DomainError("interval count S must divide 1440 minutes evenly, got " + std::to_string(intervals));
    }
}

double IntervalGrid::start(std::size_t s) const {
    if (s >= s_) throw RangeError("interval " + std::to_string(s) + " outside grid of " + std::to_string(s_));
    return width() * static_cast<double>(s);
}

double IntervalGrid::end(std::size_t s) const { return start(s) + width(); }

std::size_t IntervalGrid::interval_of(double minute) const {
    if (!(minute >= 0.0 && minute < 1440.0)) {
        throw RangeError("time " + std::to_string(minute) + " min is outside the day");
    }
    // Exact integer arithmetic on the 1440-minute day keeps boundaries half-open.
    const auto per = static_cast<double>(1440 / s_);
    return std::min(s_ - 1, static_cast<std::size_t>(std::floor(minute / per)));
}

RequestLog::RequestLog(std::vector<WaitRecord> records) : records_(std::move(records)) {
    for (std::size_t r = 0; r < records_.size(); ++r) {
        const WaitRecord& w = records_[r];
        if (w.day < 1) throw DataError("wait record day index must be >= 1", static_cast<long>(r + 1));
        if (!(w.pseudo_wait > 0.0) || !std::isfinite(w.pseudo_wait)) {
            throw DataError("pseudo waiting time must be > 0", static_cast<long>(r + 1));
        }
        if (!(w.request_minute >= 0.0 && w.request_minute < 1440.0)) {
            throw DataError("request time outside the day", static_cast<long>(r + 1));
        }
        if (r > 0) {
            const WaitRecord& p = records_[r - 1];
            if (w.day < p.day || (w.day == p.day && !(w.request_minute > p.request_minute))) {
                throw DataError("request times must strictly increase within a day and days must be ascending",
                                static_cast<long>(r + 1));
            }
        }
    }
}

RequestLog RequestLog::days(std::size_t first, std::size_t last) const {
    std::vector<WaitRecord> out;
    for (const WaitRecord& w : records_) {
        if (w.day >= first && w.day <= last) {
            WaitRecord c = w;
            c.day = w.day - first + 1;
            out.push_back(c);
        }
    }
    return RequestLog(std::move(out));
}

std::size_t RequestLog::max_day() const { return records_.empty() ? 0 : records_.back().day; }

std::string beta_name(std::size_t interval) { return "beta[" + std::to_string(interval + 1) + "]"; }

// ---------------------------------------------------------------------------
// Events

EventWaits pseudo_waits_from_events(std::span<const double> requests, std::span<const double> arrivals) {
    if (requests.size() != arrivals.size()) {
        throw DataError("request and arrival vectors differ in length");
    }
    EventWaits out;
    double previous_departure = requests.empty() ? 0.0 : requests.front();
    for (std::size_t j = 0; j < requests.size(); ++j) {
        if (j > 0 && !(requests[j] > requests[j - 1])) throw DataError("request times must be strictly increasing");
        if (j > 0 && arrivals[j] < arrivals[j - 1]) throw DataError("arrival times must be ascending");
        const double from = std::max(requests[j], previous_departure);
        const double pseudo = arrivals[j] - from;
        if (!(pseudo > 0.0)) {
            throw DataError("driver " + std::to_string(j + 1) + " arrives before the passenger can board",
                            static_cast<long>(j + 1));
        }
        out.pseudo.push_back(pseudo);
        out.perceived.push_back(arrivals[j] - requests[j]);
        previous_departure = arrivals[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Likelihood

namespace {

struct IntervalStats {
    std::vector<std::size_t> count;
    std::vector<double> yw;     // sum y * w
    std::vector<double> log_y;  // sum log y
    double log_w = 0.0;         // sum log w
};

IntervalStats collect(const FlowSeries& flows, const RequestLog& log, const IntervalGrid& grid) {
    IntervalStats st;
    st.count.assign(grid.size(), 0);
    st.yw.assign(grid.size(), 0.0);
    st.log_y.assign(grid.size(), 0.0);
    for (const WaitRecord& w : log.records()) {
        if (w.day > flows.size()) {
            throw DataError("wait on day " + std::to_string(w.day) + " has no daily flow");
        }
        const double y = flows.flow(w.day);
        const std::size_t s = grid.interval_of(w.request_minute);
        st.count[s]++;
        st.yw[s] += y * w.pseudo_wait;
        st.log_y[s] += std::log(y);
        st.log_w += std::log(w.pseudo_wait);
    }
    return st;
}

void check_shape(const WaitParams& wp, const IntervalGrid& grid) {
    if (!(wp.nu > 0.0)) throw DomainError("Gamma shape nu must be > 0");
    if (wp.beta.size() != grid.size()) {
        throw DomainError("beta has " + std::to_string(wp.beta.size()) + " entries for " +
                          std::to_string(grid.size()) + " intervals");
    }
}

} // namespace

double wait_log_likelihood(const WaitParams& wp, const FlowSeries& flows, const RequestLog& log,
                           const IntervalGrid& grid) {
    check_shape(wp, grid);
    const double lg = std::lgamma(wp.nu);
    double total = 0.0;
    for (const WaitRecord& w : log.records()) {
        if (w.day > flows.size()) throw DataError("wait on day " + std::to_string(w.day) + " has no daily flow");
        const std::size_t s = grid.interval_of(w.request_minute);
        const double rate = wp.beta[s] * flows.flow(w.day);
        if (!(rate > 0.0)) return kNegInf;
        total += wp.nu * std::log(rate) - lg + (wp.nu - 1.0) * std::log(w.pseudo_wait) - rate * w.pseudo_wait;
    }
    return total;
}

void BetaPrior::validate(std::size_t intervals) const {
    if (kind == BetaPriorKind::Dirichlet) {
        if (concentration.size() != intervals) {
            throw ConfigError("Dirichlet prior needs " + std::to_string(intervals) + " concentration values");
        }
        for (double a : concentration) {
            if (!(a > 0.0)) throw ConfigError("Dirichlet concentrations must be > 0");
        }
    }
}

double beta_log_posterior(const WaitParams& wp, const FlowSeries& flows, const RequestLog& log,
                          const IntervalGrid& grid, const BetaPrior& prior) {
    check_shape(wp, grid);
    prior.validate(grid.size());
    for (double b : wp.beta) {
        if (b < 0.0 || std::isnan(b)) return kNegInf;
    }
    double lp = 0.0;
    if (prior.kind == BetaPriorKind::Dirichlet) {
        const double sum = std::accumulate(wp.beta.begin(), wp.beta.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-9) return kNegInf;
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const double a = prior.concentration[s];
            if (a != 1.0) {
                if (wp.beta[s] == 0.0) return a > 1.0 ? kNegInf : std::numeric_limits<double>::infinity();
                lp += (a - 1.0) * std::log(wp.beta[s]);
            }
        }
    }
    return lp + wait_log_likelihood(wp, flows, log, grid);
}

std::vector<std::size_t> interval_counts(const RequestLog& log, const IntervalGrid& grid) {
    std::vector<std::size_t> n(grid.size(), 0);
    for (const WaitRecord& w : log.records()) n[grid.interval_of(w.request_minute)]++;
    return n;
}

GammaDist beta_conjugate_posterior(double nu, const FlowSeries& flows, const RequestLog& log,
                                   const IntervalGrid& grid, std::size_t interval) {
    if (!(nu > 0.0)) throw DomainError("Gamma shape nu must be > 0");
    if (interval >= grid.size()) throw RangeError("interval index outside grid");
    const IntervalStats st = collect(flows, log, grid);
    if (st.count[interval] == 0) {
        throw ImproperPosteriorError("interval " + std::to_string(interval + 1) +
                                     " has no observations; its flat-prior posterior is improper");
    }
    return {nu * static_cast<double>(st.count[interval]) + 1.0, st.yw[interval]};
}

double estimate_nu_moments(const FlowSeries& flows, const RequestLog& log, const IntervalGrid& grid) {
    std::vector<std::vector<double>> z(grid.size());
    for (const WaitRecord& w : log.records()) {
        if (w.day > flows.size()) throw DataError("wait on day " + std::to_string(w.day) + " has no daily flow");
        z[grid.interval_of(w.request_minute)].push_back(flows.flow(w.day) * w.pseudo_wait);
    }
    double num = 0.0, den = 0.0;
    for (const auto& v : z) {
        if (v.size() < 2) continue;
        const double n = static_cast<double>(v.size());
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        const double var = ss / (n - 1.0);
        if (!(var > 0.0)) continue;
        num += (n - 1.0) * m * m / var;
        den += n - 1.0;
    }
    if (den == 0.0) throw ImproperPosteriorError("need an interval with >= 2 distinct waits to estimate nu");
    return num / den;
}

// ---------------------------------------------------------------------------
// Fit

WaitFit fit_wait(double nu, const FlowSeries& flows, const RequestLog& log, const IntervalGrid& grid,
                 const WaitFitOptions& opts) {
    if (!(nu > 0.0)) throw DomainError("Gamma shape nu must be > 0");
    opts.prior.validate(grid.size());
    const IntervalStats st = collect(flows, log, grid);
    const std::size_t S = grid.size();
    WaitFit fit;
    fit.nu = nu;

    if (opts.prior.kind == BetaPriorKind::FlatPositive) {
        std::vector<std::size_t> slots;
        std::vector<ParamSpec> specs;
        std::vector<double> init;
        for (std::size_t s = 0; s < S; ++s) {
            if (st.count[s] == 0) {
                fit.unidentified.push_back(s);
                continue;
            }
            slots.push_back(s);
            specs.push_back({beta_name(s), Support::Positive});
            init.push_back(nu * static_cast<double>(st.count[s]) / st.yw[s]);
        }
        if (slots.empty()) throw ImproperPosteriorError("no waiting-time observations to fit");
        // Factorized kernel: sum_s nu n_s log beta_s - beta_s sum(y w), constants dropped.
        LogDensity target = [&st, slots, nu](std::span<const double> beta) {
            double lp = 0.0;
            for (std::size_t n = 0; n < slots.size(); ++n) {
                const std::size_t s = slots[n];
                lp += nu * static_cast<double>(st.count[s]) * std::log(beta[n]) - beta[n] * st.yw[s];
            }
            return lp;
        };
        fit.result = sample(target, specs, init, opts.mcmc);
        return fit;
    }

    // Dirichlet: additive log-ratio coordinates z_1..z_{S-1}, beta_S as reference.
    if (S < 2) throw ConfigError("Dirichlet prior needs at least 2 intervals");
    const std::vector<double> conc = opts.prior.concentration;
    auto to_simplex = [S](std::span<const double> z, std::vector<double>& beta) {
        beta.resize(S);
        double mx = 0.0;
        for (double v : z) mx = std::max(mx, v);
        double sum = std::exp(-mx);
        for (std::size_t s = 0; s + 1 < S; ++s) sum += std::exp(z[s] - mx);
        for (std::size_t s = 0; s + 1 < S; ++s) beta[s] = std::exp(z[s] - mx) / sum;
        beta[S - 1] = std::exp(-mx) / sum;
    };
    LogDensity target = [&st, nu, conc, S, to_simplex](std::span<const double> z) {
        std::vector<double> beta;
        to_simplex(z, beta);
        double lp = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            if (!(beta[s] > 0.0)) return kNegInf;
            const double lb = std::log(beta[s]);
            // Likelihood kernel + Dirichlet kernel + log-Jacobian of the log-ratio map.
            lp += nu * static_cast<double>(st.count[s]) * lb - beta[s] * st.yw[s] + (conc[s] - 1.0) * lb + lb;
        }
        return lp;
    };
    std::vector<ParamSpec> specs;
    std::vector<double> init;
    {
        // Start at the normalized per-interval MLE (prior mean where empty).
        std::vector<double> b(S);
        double total = 0.0;
        const double conc_sum = std::accumulate(conc.begin(), conc.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            b[s] = st.count[s] > 0 ? nu * static_cast<double>(st.count[s]) / st.yw[s] : conc[s] / conc_sum;
            total += b[s];
        }
        for (std::size_t s = 0; s + 1 < S; ++s) {
            specs.push_back({"z[" + std::to_string(s + 1) + "]", Support::Real});
            init.push_back(std::log(b[s] / total) - std::log(b[S - 1] / total));
        }
    }
    SampleResult zres = sample(target, specs, init, opts.mcmc);

    std::vector<std::string> names;
    for (std::size_t s = 0; s < S; ++s) names.push_back(beta_name(s));
    fit.result.draws = PosteriorDraws(names);
    std::vector<double> beta;
    for (std::size_t r = 0; r < zres.draws.size(); ++r) {
        to_simplex(zres.draws.row(r), beta);
        fit.result.draws.append(zres.draws.chain(r), zres.draws.iter(r), beta);
    }
    Diagnostics& dg = fit.result.diagnostics;
    dg.names = names;
    dg.rhat = opts.mcmc.chains >= 2 ? split_rhat(fit.result.draws)
                                    : std::vector<double>(S, std::numeric_limits<double>::quiet_NaN());
    dg.ess = effective_sample_size(fit.result.draws);
    // Acceptance is per log-ratio coordinate; report the reference interval as the mean.
    for (const auto& rates : zres.diagnostics.accept_rate) {
        std::vector<double> r(rates);
        r.push_back(std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size()));
        dg.accept_rate.push_back(std::move(r));
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Simulation and prediction

WaitSimulation simulate_waits_given_flows(std::span<const double> flows, double nu, std::span<const double> beta,
                                          std::size_t replicates, Rng& rng) {
    if (!(nu > 0.0)) throw DomainError("Gamma shape nu must be > 0");
    for (double b : beta) {
        if (!(b > 0.0)) throw DomainError("every beta_s must be > 0 to simulate waits");
    }
    WaitSimulation out;
    out.flows.assign(flows.begin(), flows.end());
    out.days = flows.size();
    out.intervals = beta.size();
    out.replicates.resize(replicates);
    for (std::size_t j = 0; j < replicates; ++j) {
        auto& m = out.replicates[j];
        m.resize(out.days * out.intervals);
        for (std::size_t i = 0; i < out.days; ++i) {
            for (std::size_t s = 0; s < out.intervals; ++s) {
                m[i * out.intervals + s] = draw_gamma(rng, nu, beta[s] * flows[i]);
            }
        }
    }
    return out;
}

WaitSimulation simulate_waits(const ServiceCalendar& calendar, std::size_t days, const FlowParams& params,
                              FlowOrder order, double nu, std::span<const double> beta, std::size_t replicates,
                              Rng& rng, SimulationOptions opts) {
    FlowSimulator sim(calendar, params, order, rng, opts);
    const std::vector<double> flows = sim.path(days);
    return simulate_waits_given_flows(flows, nu, beta, replicates, rng);
}

std::vector<double> interval_beta_draws(const PosteriorDraws& draws, std::size_t interval) {
    const auto c = draws.find(beta_name(interval));
    if (!c) {
        throw ImproperPosteriorError("interval " + std::to_string(interval + 1) +
                                     " had no training observations; refusing to predict its waits");
    }
    return draws.column(*c);
}

std::vector<double> predict_wait_given_flow(std::span<const double> beta_draws, double nu, double flow, Rng& rng) {
    if (beta_draws.empty()) throw DataError("no beta draws to predict from");
    if (!(flow > 0.0)) throw DomainError("flow must be > 0");
    if (!(nu > 0.0)) throw DomainError("Gamma shape nu must be > 0");
    std::vector<double> out;
    out.reserve(beta_draws.size());
    for (double b : beta_draws) out.push_back(draw_gamma(rng, nu, b * flow));
    return out;
}

std::vector<double> predict_wait_marginal(std::span<const double> beta_draws, double nu,
                                          std::span<const double> flow_draws, Rng& rng) {
    if (beta_draws.empty() || flow_draws.empty()) throw DataError("marginal prediction needs beta and flow draws");
    if (!(nu > 0.0)) throw DomainError("Gamma shape nu must be > 0");
    const std::size_t n = std::min(beta_draws.size(), flow_draws.size());
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) out.push_back(draw_gamma(rng, nu, beta_draws[j] * flow_draws[j]));
    return out;
}

std::vector<double> perceived_from_pseudo(std::span<const double> w1_draws, std::span<const double> w2_draws,
                                          double zeta, Rng& rng) {
    if (!(zeta >= 0.0)) throw DomainError("inter-request gap zeta must be >= 0");
    if (w1_draws.empty() || w2_draws.empty()) throw DataError("perceived waits need w1 and w2 draws");
    const auto above = static_cast<double>(
        std::count_if(w1_draws.begin(), w1_draws.end(), [zeta](double w) { return w > zeta; }));
    if (above / static_cast<double>(w1_draws.size()) < 1e-6) {
        throw SimulationError("conditioning w1 > zeta is infeasible: acceptance rate below 1e-6");
    }
    std::uniform_int_distribution<std::size_t> pick(0, w1_draws.size() - 1);
    std::vector<double> out;
    out.reserve(w2_draws.size());
    for (double w2 : w2_draws) {
        double w1;
        do {
            w1 = w1_draws[pick(rng)];
        } while (!(w1 > zeta));
        out.push_back(w2 + (w1 - zeta));
    }
    return out;
}

} // namespace waitflow
