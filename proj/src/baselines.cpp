#include <waitflow/baselines.hpp>
#include <waitflow/error.hpp>
#include <waitflow/log.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace waitflow {

// ---------------------------------------------------------------------------
// Same-weekday / holiday average

double baseline_predict(const ServiceCalendar& cal, std::span<const double> flows, std::size_t i) {
    const bool holiday = cal.collapsed_day_type(i) == CollapsedDayType::Hol;
    const auto offsets = holiday ? cal.prior_holiday_offsets(i) : cal.prior_same_weekday_offsets(i);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k : offsets) {
        if (i - k <= flows.size()) {
            sum += flows[i - k - 1];
            ++n;
        }
    }
    if (n == 0) {
        throw DataError("baseline cold start on " + format_date(cal.date(i)) + ": no earlier observed " +
                        (holiday ? std::string("holidays") : std::string("days with the same weekday")));
    }
    return sum / static_cast<double>(n);
}

std::vector<double> baseline_forecast(const ServiceCalendar& cal, std::span<const double> flows, std::size_t first,
                                      std::size_t last) {
    std::vector<double> out;
    for (std::size_t i = first; i <= last; ++i) out.push_back(baseline_predict(cal, flows, i));
    return out;
}

// ---------------------------------------------------------------------------
// Prophet-style model

void ProphetParams::validate() const {
    if (delta.size() != changepoints.size() || gamma.size() != changepoints.size()) {
        throw DomainError("changepoint, delta and gamma lengths differ");
    }
    for (std::size_t l = 0; l < changepoints.size(); ++l) {
        if (std::abs(gamma[l] + changepoints[l] * delta[l]) > 1e-9 * std::max(1.0, std::abs(gamma[l]))) {
            throw DomainError("gamma does not keep the trend continuous at changepoint " + std::to_string(l + 1));
        }
    }
    for (const auto& c : cycles) {
        if (!(c.period > 0.0)) throw DomainError("seasonal period must be > 0");
        if (c.order < 1) throw DomainError("Fourier order must be >= 1");
        if (c.cos_coef.size() != static_cast<std::size_t>(c.order) ||
            c.sin_coef.size() != static_cast<std::size_t>(c.order)) {
            throw DomainError("Fourier coefficient count does not match the order");
        }
    }
    if (kappa.size() != 2) throw DomainError("kappa must have 2 entries (SCH, PWE)");
}

double prophet_trend(const ProphetParams& p, double i) {
    double slope = p.k;
    double offset = p.m;
    for (std::size_t l = 0; l < p.changepoints.size(); ++l) {
        if (i >= p.changepoints[l]) {
            slope += p.delta[l];
            offset += p.gamma[l];
        }
    }
    return slope * i + offset;
}

double prophet_seasonal(const ProphetParams& p, double i) {
    double s = 0.0;
    for (const auto& c : p.cycles) {
        for (int l = 1; l <= c.order; ++l) {
            const double x = 2.0 * std::numbers::pi * l * i / c.period;
            s += c.cos_coef[static_cast<std::size_t>(l - 1)] * std::cos(x) +
                 c.sin_coef[static_cast<std::size_t>(l - 1)] * std::sin(x);
        }
    }
    return s;
}

double prophet_holiday(const ProphetParams& p, const ServiceCalendar& cal, std::size_t i) {
    switch (cal.day_type(i)) {
    case DayType::Sch: return p.kappa[0];
    case DayType::Pwe: return p.kappa[1];
    case DayType::Ord: return 0.0;
    }
    return 0.0;
}

double prophet_predict(const ProphetParams& p, const ServiceCalendar& cal, std::size_t i) {
    const auto x = static_cast<double>(i);
    return prophet_trend(p, x) + prophet_seasonal(p, x) + prophet_holiday(p, cal, i);
}

void ProphetConfig::validate() const {
    if (changepoints < 0) throw ConfigError("prophet.changepoints must be >= 0");
    if (!(changepoint_range > 0.0 && changepoint_range <= 1.0)) {
        throw ConfigError("prophet.changepoint_range must lie in (0, 1]");
    }
    if (!(changepoint_penalty >= 0.0)) throw ConfigError("prophet.changepoint_penalty must be >= 0");
    if (weekly_order < 1 || yearly_order < 1) throw ConfigError("Fourier orders must be >= 1");
    if (yearly < -1 || yearly > 1) throw ConfigError("prophet.yearly must be -1, 0 or 1");
    if (!(seasonality_ridge >= 0.0)) throw ConfigError("prophet.seasonality_ridge must be >= 0");
    if (irls_iterations < 1) throw ConfigError("prophet.irls_iterations must be >= 1");
}

ProphetParams prophet_fit(const ServiceCalendar& cal, std::span<const double> flows, const ProphetConfig& config,
                          ProphetFitReport* report) {
    config.validate();
    const std::size_t n = flows.size();
    if (n > cal.size()) throw DataError("more flows than calendar days");

    ProphetParams p;
    if (config.weekly) p.cycles.push_back({7.0, config.weekly_order, {}, {}});
    const bool yearly = config.yearly == 1 || (config.yearly == -1 && n >= 730);
    if (yearly) p.cycles.push_back({365.25, config.yearly_order, {}, {}});

    // Changepoints on a uniform grid over the leading range, strictly inside it.
    const auto span_days = static_cast<double>(n) * config.changepoint_range;
    for (int l = 1; l <= config.changepoints; ++l) {
        const double s = std::floor(1.0 + span_days * l / (config.changepoints + 1));
        if (s > 1.0 && (p.changepoints.empty() || s > p.changepoints.back())) p.changepoints.push_back(s);
    }
    const std::size_t n_cp = p.changepoints.size();
    std::size_t n_fourier = 0;
    for (const auto& c : p.cycles) n_fourier += 2 * static_cast<std::size_t>(c.order);
    const std::size_t n_hol = config.fit_kappa ? 2 : 0;
    const std::size_t cols = 2 + n_cp + n_fourier + n_hol;
    if (n < cols - n_cp) {
        throw DataError("Prophet fit needs at least " + std::to_string(cols - n_cp) + " days, got " + std::to_string(n));
    }

    // Response and time in scaled units: y / max|y|, t = i / n.
    double y_scale = 0.0;
    for (double y : flows) y_scale = std::max(y_scale, std::abs(y));
    if (y_scale == 0.0) y_scale = 1.0;
    const double t_scale = static_cast<double>(n);

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = r + 1;
        const auto x = static_cast<double>(i);
        const auto row = static_cast<Eigen::Index>(r);
        double target = flows[r];
        if (!config.fit_kappa) target -= prophet_holiday(p, cal, i);
        y[row] = target / y_scale;
        Eigen::Index c = 0;
        X(row, c++) = x / t_scale;
        X(row, c++) = 1.0;
        for (double s : p.changepoints) X(row, c++) = x >= s ? (x - s) / t_scale : 0.0;
        for (const auto& cyc : p.cycles) {
            for (int l = 1; l <= cyc.order; ++l) {
                const double a = 2.0 * std::numbers::pi * l * x / cyc.period;
                X(row, c++) = std::cos(a);
                X(row, c++) = std::sin(a);
            }
        }
        if (config.fit_kappa) {
            const DayType t = cal.day_type(i);
            X(row, c++) = t == DayType::Sch ? 1.0 : 0.0;
            X(row, c++) = t == DayType::Pwe ? 1.0 : 0.0;
        }
    }

    const auto C = static_cast<Eigen::Index>(cols);
    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::VectorXd Xty = X.transpose() * y;
    Eigen::VectorXd ridge = Eigen::VectorXd::Zero(C);
    for (std::size_t f = 0; f < n_fourier; ++f) ridge[static_cast<Eigen::Index>(2 + n_cp + f)] = config.seasonality_ridge;

    auto solve = [&](const Eigen::VectorXd& diag, bool& fallback) -> Eigen::VectorXd {
        Eigen::MatrixXd A = XtX;
        A.diagonal() += diag;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        const double scale = std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
        const double min_pivot = ldlt.vectorD().cwiseAbs().minCoeff();
        if (ldlt.info() != Eigen::Success || min_pivot < 1e-12 * scale) {
            fallback = true;
            A.diagonal().array() += 1e-8 * scale;
            return A.ldlt().solve(Xty);
        }
        return ldlt.solve(Xty);
    };

    bool fallback = false;
    Eigen::VectorXd beta = solve(ridge, fallback);
    if (n_cp > 0 && config.changepoint_penalty > 0.0) {
        // Smoothed L1 on delta via iteratively reweighted ridge: |d| ~ d^2 / (2 sqrt(d^2 + eps)).
        constexpr double eps = 1e-8;
        for (int it = 0; it < config.irls_iterations; ++it) {
            Eigen::VectorXd w = ridge;
            for (std::size_t l = 0; l < n_cp; ++l) {
                const double d = beta[static_cast<Eigen::Index>(2 + l)];
                w[static_cast<Eigen::Index>(2 + l)] = config.changepoint_penalty / (2.0 * std::sqrt(d * d + eps));
            }
            Eigen::VectorXd next = solve(w, fallback);
            const double change = (next - beta).cwiseAbs().maxCoeff();
            beta = next;
            if (change < 1e-10) break;
        }
    }

    if (report) {
        report->regularized = fallback;
        report->notice = fallback ? "design matrix is rank deficient; a small ridge term was added" : "";
    }
    if (fallback) warn("Prophet design matrix is rank deficient; solved with a small ridge term");

    Eigen::Index c = 0;
    p.k = beta[c++] * y_scale / t_scale;
    p.m = beta[c++] * y_scale;
    for (std::size_t l = 0; l < n_cp; ++l) {
        p.delta.push_back(beta[c++] * y_scale / t_scale);
        p.gamma.push_back(-p.changepoints[l] * p.delta.back());
    }
    for (auto& cyc : p.cycles) {
        for (int l = 1; l <= cyc.order; ++l) {
            cyc.cos_coef.push_back(beta[c++] * y_scale);
            cyc.sin_coef.push_back(beta[c++] * y_scale);
        }
    }
    if (config.fit_kappa) {
        p.kappa[0] = beta[c++] * y_scale;
        p.kappa[1] = beta[c++] * y_scale;
    }
    return p;
}

} // namespace waitflow
