#include <waitflow/error.hpp>
#include <waitflow/flow_model.hpp>
#include <waitflow/log.hpp>

#include <cmath>
#include <numbers>

namespace waitflow {

// ---------------------------------------------------------------------------
// Types

double FlowParams::alpha(DayType t) const {
    switch (t) {
    case DayType::Ord: return alpha_ord;
    case DayType::Sch: return alpha_sch;
    case DayType::Pwe: return alpha_pwe;
    }
    return alpha_ord;
}

double FlowParams::eta(DayType t) const {
    switch (t) {
    case DayType::Ord: return 1.0;
    case DayType::Sch: return eta_sch;
    case DayType::Pwe: return eta_pwe;
    }
    return 1.0;
}

std::array<double, FlowParams::kDim> FlowParams::to_array() const {
    return {alpha_ord, alpha_sch, alpha_pwe, eta_sch, eta_pwe, sigma2_eps};
}

FlowParams FlowParams::from_array(std::span<const double> v) {
    if (v.size() != kDim) throw DomainError("flow parameters need 6 values");
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

void FlowParams::validate() const {
    const auto a = to_array();
    for (std::size_t d = 0; d < kDim; ++d) {
        if (!(a[d] > 0.0) || !std::isfinite(a[d])) {
            throw DomainError("flow parameter " + std::string(kNames[d]) + " must be finite and > 0");
        }
    }
}

FlowOrder::FlowOrder(int k) : k_(static_cast<std::size_t>(k)) {
    if (k < 1) throw DomainError("moving-average order K must be >= 1");
}

FlowSeries::FlowSeries(ServiceCalendar calendar, std::vector<double> flows)
    : calendar_(std::move(calendar)), flows_(std::move(flows)) {
    if (flows_.size() != calendar_.size()) {
        throw DataError("flow series has " + std::to_string(flows_.size()) + " days but calendar has " +
                        std::to_string(calendar_.size()));
    }
    for (std::size_t n = 0; n < flows_.size(); ++n) {
        if (!(flows_[n] > 0.0) || !std::isfinite(flows_[n])) {
            throw DataError("flow on " + format_date(calendar_.date(n + 1)) + " must be > 0",
                            static_cast<long>(n + 1));
        }
    }
}

double FlowSeries::flow(std::size_t i) const {
    if (i < 1 || i > flows_.size()) {
        throw RangeError("day index " + std::to_string(i) + " outside flow series 1.." + std::to_string(flows_.size()));
    }
    return flows_[i - 1];
}

FlowSeries FlowSeries::prefix(std::size_t count) const {
    return FlowSeries(calendar_.prefix(count),
                      std::vector<double>(flows_.begin(), flows_.begin() + static_cast<long>(count)));
}

// ---------------------------------------------------------------------------
// Likelihood

double flow_mean(const FlowParams& params, const FlowSeries& series, std::size_t i, FlowOrder order) {
    const std::size_t k_max = order.value();
    if (i <= k_max) {
        throw RangeError("flow mean needs i > K (i = " + std::to_string(i) + ", K = " + std::to_string(k_max) + ")");
    }
    const ServiceCalendar& cal = series.calendar();
    double sum = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        sum += params.eta(cal.day_type(i - k)) * series.flow(i - k);
    }
    return params.alpha(cal.day_type(i)) * sum;
}

FlowDesign::FlowDesign(const FlowSeries& series, FlowOrder order, LikelihoodRange range) {
    const std::size_t n = series.size();
    const std::size_t k_max = order.value();
    if (n <= k_max) {
        throw RangeError("flow likelihood needs N > K (N = " + std::to_string(n) + ", K = " +
                         std::to_string(k_max) + ")");
    }
    const ServiceCalendar& cal = series.calendar();
    for (std::size_t i = k_max + 1; i <= n; ++i) {
        Row r{cal.day_type(i), series.flow(i), 0.0, 0.0, 0.0};
        for (std::size_t k = 1; k <= k_max; ++k) {
            const double y = series.flow(i - k);
            switch (cal.day_type(i - k)) {
            case DayType::Ord: r.ord += y; break;
            case DayType::Sch: r.sch += y; break;
            case DayType::Pwe: r.pwe += y; break;
            }
        }
        rows_.push_back(r);
    }
    normalizer_terms_ = range == LikelihoodRange::AsPrinted ? n - k_max + 1 : n - k_max;
}

double FlowDesign::sum_squared_residuals(const FlowParams& p) const {
    double ss = 0.0;
    for (const Row& r : rows_) {
        const double g = p.alpha(r.type) * (r.ord + p.eta_sch * r.sch + p.eta_pwe * r.pwe);
        const double e = r.y - g;
        ss += e * e;
    }
    return ss;
}

double FlowDesign::log_likelihood(const FlowParams& p) const {
    if (!(p.sigma2_eps > 0.0)) throw DomainError("sigma2_eps must be > 0");
    const double m = static_cast<double>(normalizer_terms_);
    return -0.5 * m * std::log(2.0 * std::numbers::pi * p.sigma2_eps) -
           sum_squared_residuals(p) / (2.0 * p.sigma2_eps);
}

double FlowDesign::log_posterior(const FlowParams& p) const {
    return log_likelihood(p) - std::log(p.sigma2_eps);
}

std::array<bool, FlowParams::kDim> FlowDesign::identified() const {
    std::array<bool, FlowParams::kDim> id{false, false, false, false, false, true};
    for (const Row& r : rows_) {
        if (r.type == DayType::Ord) id[0] = true;
        if (r.type == DayType::Sch) id[1] = true;
        if (r.type == DayType::Pwe) id[2] = true;
        if (r.sch > 0.0) id[3] = true;
        if (r.pwe > 0.0) id[4] = true;
    }
    return id;
}

double flow_log_likelihood(const FlowParams& params, const FlowSeries& series, FlowOrder order,
                           LikelihoodRange range) {
    if (!(params.sigma2_eps > 0.0)) throw DomainError("sigma2_eps must be > 0");
    return FlowDesign(series, order, range).log_likelihood(params);
}

double flow_log_posterior(const FlowParams& params, const FlowSeries& series, FlowOrder order,
                          LikelihoodRange range) {
    if (!(params.sigma2_eps > 0.0)) throw DomainError("sigma2_eps must be > 0");
    return FlowDesign(series, order, range).log_posterior(params);
}

// ---------------------------------------------------------------------------
// Simulation

double draw_positive(Rng& rng, double mean, double sd, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const double y = draw_normal(rng, mean, sd);
        if (y > 0.0) return y;
    }
    throw SimulationError("no positive flow after " + std::to_string(max_attempts) +
                          " attempts (mean " + std::to_string(mean) + ", sd " + std::to_string(sd) + ")");
}

FlowSimulator::FlowSimulator(double alpha, FlowOrder order, double sigma2_eps, Rng& rng, SimulationOptions opts)
    : alpha_(alpha), k_(order.value()), sd_(std::sqrt(sigma2_eps)), rng_(rng), opts_(opts) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    if (!(sigma2_eps >= 0.0)) throw DomainError("sigma2_eps must be >= 0");
    check_stability();
}

FlowSimulator::FlowSimulator(const ServiceCalendar& calendar, const FlowParams& params, FlowOrder order, Rng& rng,
                             SimulationOptions opts)
    : calendar_(&calendar), params_(params), k_(order.value()), sd_(std::sqrt(params.sigma2_eps)), rng_(rng),
      opts_(opts) {
    const auto a = params.to_array();
    for (std::size_t d = 0; d + 1 < FlowParams::kDim; ++d) {
        if (!(a[d] > 0.0)) throw DomainError("flow parameter " + std::string(FlowParams::kNames[d]) + " must be > 0");
    }
    if (!(params.sigma2_eps >= 0.0)) throw DomainError("sigma2_eps must be >= 0");
    check_stability();
}

double FlowSimulator::coefficient(std::size_t i) const {
    if (!calendar_) return alpha_;
    switch (calendar_->day_type(i)) {
    case DayType::Ord: return params_.alpha_ord;
    case DayType::Sch: return params_.alpha_sch * params_.eta_sch;
    case DayType::Pwe: return params_.alpha_pwe * params_.eta_pwe;
    }
    return params_.alpha_ord;
}

void FlowSimulator::check_stability() const {
    const double kd = static_cast<double>(k_);
    auto check = [&](double c, std::string_view what) {
        if (c * kd > 1.0 + 1e-12) {
            warn("simulation coefficient for " + std::string(what) + " times K is " + std::to_string(c * kd) +
                 " > 1; the simulated flow may grow without bound");
        }
    };
    if (!calendar_) {
        check(alpha_, "all days");
    } else {
        check(params_.alpha_ord, "ORD");
        check(params_.alpha_sch * params_.eta_sch, "SCH");
        check(params_.alpha_pwe * params_.eta_pwe, "PWE");
    }
}

double FlowSimulator::flow(std::size_t i) {
    if (i < 1) throw RangeError("day index must be >= 1");
    if (calendar_ && i > calendar_->size()) {
        throw RangeError("no calendar entry for simulated day " + std::to_string(i));
    }
    while (memo_.size() < i) {
        const std::size_t day = memo_.size() + 1;
        if (day <= k_) {
            memo_.push_back(draw_normal(rng_, opts_.init_mean, sd_));
        } else {
            double sum = 0.0;
            for (std::size_t k = 1; k <= k_; ++k) sum += memo_[day - k - 1];
            memo_.push_back(draw_positive(rng_, coefficient(day) * sum, sd_, opts_.max_attempts));
        }
    }
    return memo_[i - 1];
}

std::vector<double> FlowSimulator::path(std::size_t n) {
    if (n > 0) flow(n);
    return {memo_.begin(), memo_.begin() + static_cast<long>(n)};
}

double simulate_flow(std::size_t i, double alpha, FlowOrder order, double sigma2_eps, Rng& rng,
                     SimulationOptions opts) {
    FlowSimulator sim(alpha, order, sigma2_eps, rng, opts);
    return sim.flow(i);
}

double simulate_flow_daytypes(std::size_t i, const ServiceCalendar& calendar, const FlowParams& params,
                              FlowOrder order, Rng& rng, SimulationOptions opts) {
    FlowSimulator sim(calendar, params, order, rng, opts);
    return sim.flow(i);
}

// ---------------------------------------------------------------------------
// Posterior predictive

std::vector<double> FlowPredictive::day(std::size_t h) const {
    std::vector<double> out(draws);
    for (std::size_t j = 0; j < draws; ++j) out[j] = at(j, h);
    return out;
}

std::vector<double> FlowPredictive::mean() const {
    std::vector<double> out(horizon, 0.0);
    for (std::size_t j = 0; j < draws; ++j) {
        for (std::size_t h = 0; h < horizon; ++h) out[h] += at(j, h);
    }
    for (double& v : out) v /= static_cast<double>(draws);
    return out;
}

FlowParams flow_params_from_draw(const PosteriorDraws& draws, std::size_t row) {
    FlowParams p;
    std::array<double, FlowParams::kDim> v{};
    for (std::size_t d = 0; d < FlowParams::kDim; ++d) v[d] = draws.value(row, draws.index(FlowParams::kNames[d]));
    p = FlowParams::from_array(v);
    return p;
}

FlowPredictive posterior_predict_flow(const PosteriorDraws& draws, const FlowSeries& history, FlowOrder order,
                                      const ServiceCalendar& calendar, std::size_t horizon, Rng& rng,
                                      std::size_t max_draws, SimulationOptions opts) {
    if (draws.empty()) throw DataError("posterior predictive needs at least one posterior draw");
    if (calendar.start() != history.calendar().start()) {
        throw DataError("prediction calendar must start on the history start date " +
                        format_date(history.calendar().start()));
    }
    const std::size_t n = history.size();
    const std::size_t k_max = order.value();
    if (n < k_max) throw RangeError("history shorter than the moving-average order");
    if (calendar.size() < n + horizon) {
        throw RangeError("calendar ends " + format_date(calendar.last()) + ", before the prediction horizon");
    }
    for (std::size_t i = 1; i <= n; ++i) {
        if (calendar.day_type(i) != history.calendar().day_type(i)) {
            throw DataError("prediction calendar disagrees with the history calendar on " +
                            format_date(calendar.date(i)));
        }
    }

    std::vector<std::size_t> rows;
    if (max_draws == 0 || max_draws >= draws.size()) {
        for (std::size_t r = 0; r < draws.size(); ++r) rows.push_back(r);
    } else {
        for (std::size_t j = 0; j < max_draws; ++j) rows.push_back(j * draws.size() / max_draws);
    }

    FlowPredictive out;
    out.draws = rows.size();
    out.horizon = horizon;
    out.values.resize(rows.size() * horizon);
    out.source_rows = rows;
    std::vector<double> path(history.flows().begin(), history.flows().end());
    path.resize(n + horizon);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const FlowParams p = flow_params_from_draw(draws, rows[j]);
        const double sd = std::sqrt(p.sigma2_eps);
        for (std::size_t h = 0; h < horizon; ++h) {
            const std::size_t i = n + h + 1;
            double sum = 0.0;
            for (std::size_t k = 1; k <= k_max; ++k) sum += p.eta(calendar.day_type(i - k)) * path[i - k - 1];
            const double y = draw_positive(rng, p.alpha(calendar.day_type(i)) * sum, sd, opts.max_attempts);
            path[i - 1] = y;
            out.values[j * horizon + h] = y;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fit

FlowFit fit_flow(const FlowSeries& series, FlowOrder order, const FlowFitOptions& opts) {
    const FlowDesign design(series, order, opts.range);
    const auto identified = design.identified();

    // Starting point: per-type least squares for alpha with eta = 1.
    std::array<double, FlowParams::kDim> init{};
    const double k_inv = 1.0 / static_cast<double>(order.value());
    init.fill(1.0);
    init[0] = init[1] = init[2] = k_inv;
    {
        std::array<double, 3> num{}, den{};
        const auto& cal = series.calendar();
        for (std::size_t i = order.value() + 1; i <= series.size(); ++i) {
            double s = 0.0;
            for (std::size_t k = 1; k <= order.value(); ++k) s += series.flow(i - k);
            const auto t = static_cast<std::size_t>(cal.day_type(i));
            num[t] += series.flow(i) * s;
            den[t] += s * s;
        }
        for (std::size_t t = 0; t < 3; ++t) {
            if (den[t] > 0.0 && num[t] > 0.0) init[t] = num[t] / den[t];
        }
    }

    FlowFit fit;
    for (std::size_t d = 0; d < FlowParams::kDim; ++d) {
        if (!std::isnan(opts.fixed[d])) {
            if (!(opts.fixed[d] > 0.0)) {
                throw DomainError("fixed value for " + std::string(FlowParams::kNames[d]) + " must be > 0");
            }
            init[d] = opts.fixed[d];
            fit.free[d] = false;
        } else if (!identified[d]) {
            fit.free[d] = false;
            fit.unidentified.emplace_back(FlowParams::kNames[d]);
            warn("flow parameter " + std::string(FlowParams::kNames[d]) +
                 " has no data behind it and is held at its default");
        } else {
            fit.free[d] = true;
        }
    }
    {
        FlowParams p = FlowParams::from_array(init);
        p.sigma2_eps = 1.0;
        const double ss = design.sum_squared_residuals(p);
        if (std::isnan(opts.fixed[5])) {
            init[5] = std::max(ss / static_cast<double>(design.normalizer_terms()), 1e-6);
        }
    }

    std::vector<ParamSpec> specs;
    std::vector<double> start;
    std::vector<std::size_t> slot;
    for (std::size_t d = 0; d < FlowParams::kDim; ++d) {
        if (fit.free[d]) {
            specs.push_back({std::string(FlowParams::kNames[d]), Support::Positive});
            start.push_back(init[d]);
            slot.push_back(d);
        }
    }
    if (specs.empty()) throw SamplerError("every flow parameter is fixed; nothing to fit");

    const auto base = init;
    LogDensity target = [&design, base, slot](std::span<const double> x) {
        auto v = base;
        for (std::size_t n = 0; n < slot.size(); ++n) v[slot[n]] = x[n];
        return design.log_posterior(FlowParams::from_array(v));
    };
    SampleResult sub = sample(target, specs, start, opts.mcmc);

    // Expand to the full parameter set so downstream code sees every name.
    std::vector<std::string> names(FlowParams::kNames.begin(), FlowParams::kNames.end());
    fit.result.draws = PosteriorDraws(names);
    for (std::size_t r = 0; r < sub.draws.size(); ++r) {
        auto v = base;
        for (std::size_t n = 0; n < slot.size(); ++n) v[slot[n]] = sub.draws.value(r, n);
        fit.result.draws.append(sub.draws.chain(r), sub.draws.iter(r), v);
    }
    Diagnostics& dg = fit.result.diagnostics;
    dg.names = names;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    dg.rhat.assign(FlowParams::kDim, nan);
    dg.ess.assign(FlowParams::kDim, nan);
    dg.accept_rate.assign(sub.diagnostics.accept_rate.size(), std::vector<double>(FlowParams::kDim, nan));
    for (std::size_t n = 0; n < slot.size(); ++n) {
        dg.rhat[slot[n]] = sub.diagnostics.rhat[n];
        dg.ess[slot[n]] = sub.diagnostics.ess[n];
        for (std::size_t c = 0; c < dg.accept_rate.size(); ++c) {
            dg.accept_rate[c][slot[n]] = sub.diagnostics.accept_rate[c][n];
        }
    }
    return fit;
}

} // namespace waitflow
