#include <waitflow/error.hpp>
#include <waitflow/io.hpp>
#include <waitflow/log.hpp>
#include <waitflow/pipeline.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace waitflow::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

io::Manifest manifest_of(const RunConfig& cfg) { return {cfg.hash(), cfg.seed}; }

ordered_json manifest_json(const RunConfig& cfg) {
    return ordered_json{{"config_hash", cfg.hash()}, {"seed", cfg.seed}};
}

void write_json(const fs::path& path, const ordered_json& j, Report& r) {
    io::write_text(path, j.dump(2) + "\n");
    r.outputs.push_back(path);
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ServiceCalendar simulation_calendar(const SimulationConfig& s, std::size_t days) {
    const Date start = parse_date(s.start);
    if (s.calendar == "lyon") return generate_calendar(start, days, lyon_rules());
    if (s.calendar == "all_ord") return ServiceCalendar(start, std::vector<DayType>(days, DayType::Ord));
    const ServiceCalendar file = io::read_calendar(s.calendar);
    const auto first = file.index_of(start);
    if (!first || *first + days - 1 > file.size()) {
        throw RangeError("calendar " + s.calendar + " does not cover " + std::to_string(days) + " days from " +
                         s.start);
    }
    return file.slice(*first, days);
}

//! n rows spread evenly over [0, total).
std::vector<std::size_t> even_rows(std::size_t total, std::size_t n) {
    if (n == 0 || n >= total) n = total;
    std::vector<std::size_t> rows(n);
    for (std::size_t j = 0; j < n; ++j) rows[j] = j * total / n;
    return rows;
}

struct FlowData {
    ServiceCalendar calendar; // full calendar file
    io::DatedFlows flows;
    FlowSeries series;
};

FlowData load_flow_data(const fs::path& data) {
    ServiceCalendar cal = io::read_calendar(data / "calendar.csv");
    io::DatedFlows flows = io::read_flows(data / "flows.csv");
    FlowSeries series = io::to_series(flows, cal);
    return {std::move(cal), std::move(flows), std::move(series)};
}

void require_history(const FlowSeries& s, int k) {
    if (s.size() <= static_cast<std::size_t>(k)) {
        throw DataError("flow series has " + std::to_string(s.size()) + " days; N > K = " + std::to_string(k) +
                        " is required");
    }
}

ordered_json param_summary(const SampleResult& res) {
    ordered_json arr = ordered_json::array();
    const PosteriorDraws& d = res.draws;
    for (std::size_t c = 0; c < d.dim(); ++c) {
        std::vector<double> col = d.column(c);
        const double mean = d.mean(c);
        double ss = 0.0;
        for (double v : col) ss += (v - mean) * (v - mean);
        std::sort(col.begin(), col.end());
        auto q = [&](double p) { return col[static_cast<std::size_t>(p * static_cast<double>(col.size() - 1))]; };
        arr.push_back(ordered_json{{"name", d.names()[c]},
                                   {"mean", mean},
                                   {"sd", col.size() > 1 ? std::sqrt(ss / static_cast<double>(col.size() - 1)) : 0.0},
                                   {"q05", q(0.05)},
                                   {"q50", q(0.5)},
                                   {"q95", q(0.95)},
                                   {"rhat", number_or_null(res.diagnostics.rhat[c])},
                                   {"ess", number_or_null(res.diagnostics.ess[c])}});
    }
    return arr;
}

void check_rhat(const Diagnostics& diag, Report& r) {
    for (std::size_t c = 0; c < diag.names.size(); ++c) {
        const double rh = diag.rhat[c];
        if (std::isfinite(rh) && rh > kRhatWarning) {
            r.rhat_warning = true;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", rh);
            r.warnings.push_back("rhat " + std::string(buf) + " > 1.05 for " + diag.names[c]);
        }
    }
}

ordered_json mcmc_summary(const McmcConfig& m) {
    return ordered_json{{"chains", m.chains},
                        {"warmup", m.warmup_iters},
                        {"iterations", m.keep_iters},
                        {"thin", m.thin},
                        {"proposal", m.proposal == ProposalKind::Joint ? "joint" : "coordinate"},
                        {"target_accept", m.resolved_target()}};
}

//! Predictive samples keyed by (date, model), rows in file order.
struct PredictedFlows {
    std::map<std::pair<std::string, std::string>, std::vector<double>> values;
};

PredictedFlows read_predicted_flows(const fs::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const std::size_t cd = t.column("date"), cf = t.column("flow"), cm = t.column("model");
    PredictedFlows out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto row = static_cast<long>(r + 1);
        try {
            (void)parse_date(t.rows[r][cd]);
            (void)parse_model(t.rows[r][cm]);
        } catch (const std::exception& e) {
            throw DataError(std::string("predictive flows: ") + e.what(), row);
        }
        out.values[{t.rows[r][cd], t.rows[r][cm]}].push_back(io::parse_double(t.rows[r][cf], row));
    }
    return out;
}

double read_nu(const fs::path& fit) {
    const fs::path p = fit / "wait_diagnostics.json";
    json j;
    try {
        j = json::parse(io::read_text(p));
        return j.at("nu").get<double>();
    } catch (const json::exception& e) {
        throw DataError(p.filename().string() + ": cannot read nu (" + e.what() + ")");
    }
}

std::string cell_key(const std::string& date, std::size_t interval) {
    return date + "#" + std::to_string(interval);
}

} // namespace

// ---------------------------------------------------------------------------

Report simulate(const RunConfig& cfg, const fs::path& out) {
    cfg.validate();
    Report r{"simulate", {}, {}, false};
    const SimulationConfig& s = cfg.simulation;
    const auto n = static_cast<std::size_t>(s.days);
    const auto total = n + static_cast<std::size_t>(s.test_days);
    const ServiceCalendar cal = simulation_calendar(s, total);

    Rng flow_rng = make_rng(cfg.seed, "flow-sim");
    FlowSimulator sim(cal, s.theta, FlowOrder(cfg.K), flow_rng, {s.init_mean, s.max_attempts});
    const std::vector<double> flows = sim.path(total);

    Rng wait_rng = make_rng(cfg.seed, "wait-sim");
    const WaitSimulation ws = simulate_waits_given_flows(flows, s.nu, s.beta, static_cast<std::size_t>(s.replicates),
                                                         wait_rng);
    const IntervalGrid grid(cfg.S);
    const double spacing = grid.width() / static_cast<double>(s.replicates);

    auto log_for = [&](std::size_t first, std::size_t last) {
        std::vector<WaitRecord> recs;
        for (std::size_t i = first; i <= last; ++i) {
            for (std::size_t g = 0; g < grid.size(); ++g) {
                for (std::size_t j = 0; j < ws.replicates.size(); ++j) {
                    WaitRecord w;
                    w.day = i;
                    // Whole seconds so the CSV clock form reads back exactly.
                    w.request_minute = std::round((grid.start(g) + (static_cast<double>(j) + 0.5) * spacing) * 60.0) / 60.0;
                    w.pseudo_wait = ws.at(j, i, g);
                    recs.push_back(w);
                }
            }
        }
        return RequestLog(std::move(recs));
    };

    const io::Manifest m = manifest_of(cfg);
    const Date start = cal.start();
    io::write_calendar(out / "calendar.csv", cal, m);
    io::write_flows(out / "flows.csv", start, std::span<const double>(flows).first(n), m);
    io::write_waits(out / "waits.csv", log_for(1, n), start, m);
    io::write_flows(out / "flows_test.csv", cal.date(n + 1 <= total ? n + 1 : n),
                    std::span<const double>(flows).subspan(n), m);
    {
        // Test waits keep day indices relative to the calendar start.
        io::write_waits(out / "waits_test.csv", total > n ? log_for(n + 1, total) : RequestLog{}, start, m);
    }
    r.outputs = {out / "calendar.csv", out / "flows.csv", out / "waits.csv", out / "flows_test.csv",
                 out / "waits_test.csv"};

    ordered_json run_config = ordered_json::parse(cfg.to_json());
    run_config.erase("out");
    ordered_json man{{"manifest", manifest_json(cfg)},
                     {"config", run_config},
                     {"days", n},
                     {"test_days", total - n},
                     {"wait_entries", n * grid.size() * ws.replicates.size()}};
    write_json(out / "manifest.json", man, r);
    return r;
}

Report fit_flow(const RunConfig& cfg, const fs::path& data, const fs::path& out) {
    cfg.validate();
    Report r{"fit-flow", {}, {}, false};
    const FlowData d = load_flow_data(data);
    require_history(d.series, cfg.K);
    FlowFitOptions opts;
    opts.range = cfg.likelihood_range;
    opts.mcmc = cfg.mcmc;
    opts.mcmc.seed = cfg.seed;
    const FlowFit fit = fit_flow(d.series, FlowOrder(cfg.K), opts);
    check_rhat(fit.result.diagnostics, r);
    for (const std::string& name : fit.unidentified) {
        r.warnings.push_back(name + " is not identified by the data and was held fixed");
    }

    io::write_draws(out / "flow_draws.csv", fit.result.draws, manifest_of(cfg));
    r.outputs.push_back(out / "flow_draws.csv");

    ordered_json unid = fit.unidentified;
    ordered_json diag{{"manifest", manifest_json(cfg)},
                      {"K", cfg.K},
                      {"likelihood_range", cfg.likelihood_range == LikelihoodRange::AsPrinted ? "as_printed"
                                                                                               : "conditional"},
                      {"days", d.series.size()},
                      {"first_date", format_date(d.flows.start)},
                      {"mcmc", mcmc_summary(cfg.mcmc)},
                      {"params", param_summary(fit.result)},
                      {"accept_rate", fit.result.diagnostics.accept_rate},
                      {"unidentified", unid},
                      {"max_rhat", number_or_null(fit.result.diagnostics.max_rhat())},
                      {"min_ess", number_or_null(fit.result.diagnostics.min_ess())},
                      {"warnings", r.warnings}};
    write_json(out / "flow_diagnostics.json", diag, r);
    return r;
}

Report fit_wait(const RunConfig& cfg, const fs::path& data, const fs::path& out) {
    cfg.validate();
    Report r{"fit-wait", {}, {}, false};
    const FlowData d = load_flow_data(data);
    const RequestLog log = io::read_waits(data / "waits.csv", d.flows.start);
    if (log.empty()) throw DataError("waits.csv has no records");
    if (log.max_day() > d.series.size()) {
        throw DataError("waits extend past the last flow date " +
                        format_date(add_days(d.flows.start, static_cast<long>(d.series.size()) - 1)));
    }
    const IntervalGrid grid(cfg.S);
    const double nu = cfg.nu ? *cfg.nu : estimate_nu_moments(d.series, log, grid);
    WaitFitOptions opts;
    opts.prior = cfg.prior;
    opts.mcmc = cfg.mcmc;
    opts.mcmc.seed = cfg.seed;
    const WaitFit fit = fit_wait(nu, d.series, log, grid, opts);
    check_rhat(fit.result.diagnostics, r);
    ordered_json unid = ordered_json::array();
    for (std::size_t s : fit.unidentified) {
        unid.push_back(s + 1);
        r.warnings.push_back("interval " + std::to_string(s + 1) + " has no observations; beta[" +
                             std::to_string(s + 1) + "] was not sampled");
    }

    io::write_draws(out / "wait_draws.csv", fit.result.draws, manifest_of(cfg));
    r.outputs.push_back(out / "wait_draws.csv");

    const std::vector<std::size_t> counts = interval_counts(log, grid);
    ordered_json diag{{"manifest", manifest_json(cfg)},
                      {"S", cfg.S},
                      {"nu", fit.nu},
                      {"nu_source", cfg.nu ? "config" : "moments"},
                      {"prior", cfg.prior.kind == BetaPriorKind::Dirichlet ? "dirichlet" : "flat"},
                      {"observations", log.size()},
                      {"interval_counts", counts},
                      {"mcmc", mcmc_summary(cfg.mcmc)},
                      {"params", param_summary(fit.result)},
                      {"accept_rate", fit.result.diagnostics.accept_rate},
                      {"unidentified_intervals", unid},
                      {"max_rhat", number_or_null(fit.result.diagnostics.max_rhat())},
                      {"min_ess", number_or_null(fit.result.diagnostics.min_ess())},
                      {"warnings", r.warnings}};
    write_json(out / "wait_diagnostics.json", diag, r);
    return r;
}

Report predict_flow(const RunConfig& cfg, const fs::path& data, const fs::path& fit, const fs::path& out,
                    const PredictFlowOptions& opts) {
    cfg.validate();
    Report r{"predict-flow", {}, {}, false};
    const FlowData d = load_flow_data(data);
    require_history(d.series, cfg.K);
    const std::size_t n = d.series.size();
    const auto h = static_cast<std::size_t>(cfg.predict.horizon);
    const std::size_t first = *d.calendar.index_of(d.flows.start);
    const bool uses_bhml = std::find(cfg.models.begin(), cfg.models.end(), Model::Bhml) != cfg.models.end();
    const PosteriorDraws draws = uses_bhml ? io::read_draws(fit / "flow_draws.csv") : PosteriorDraws{};
    const FlowOrder order(cfg.K);

    std::string csv = io::Manifest(manifest_of(cfg)).line() + "\ndraw,date,flow,model\n";
    auto emit = [&](std::size_t draw, const Date& date, double v, Model m) {
        csv += std::to_string(draw) + ',' + format_date(date) + ',' + io::format_double(v) + ',' +
               std::string(to_string(m)) + '\n';
    };

    if (opts.in_sample) {
        const ServiceCalendar& cal = d.series.calendar();
        for (Model m : cfg.models) {
            switch (m) {
            case Model::Bhml: {
                const auto rows = even_rows(draws.size(), static_cast<std::size_t>(cfg.predict.draws));
                std::vector<FlowParams> params;
                for (std::size_t row : rows) params.push_back(flow_params_from_draw(draws, row));
                for (std::size_t i = order.value() + 1; i <= n; ++i) {
                    double acc = 0.0;
                    for (const FlowParams& p : params) acc += flow_mean(p, d.series, i, order);
                    emit(0, cal.date(i), acc / static_cast<double>(params.size()), m);
                }
                break;
            }
            case Model::Base:
                for (std::size_t i = 2; i <= n; ++i) {
                    try {
                        emit(0, cal.date(i), baseline_predict(cal, d.series.flows(), i), m);
                    } catch (const DataError&) {
                        // No comparable earlier day yet.
                    }
                }
                break;
            case Model::Prop: {
                ProphetFitReport rep;
                const ProphetParams p = prophet_fit(cal, d.series.flows(), cfg.prophet, &rep);
                if (rep.regularized) r.warnings.push_back("PROP: " + rep.notice);
                for (std::size_t i = 1; i <= n; ++i) emit(0, cal.date(i), prophet_predict(p, cal, i), m);
                break;
            }
            }
        }
        io::write_text(out / "fitted_flows.csv", csv);
        r.outputs.push_back(out / "fitted_flows.csv");
        return r;
    }

    if (first + n - 1 + h > d.calendar.size()) {
        throw RangeError("calendar ends " + format_date(d.calendar.last()) + " but the forecast needs " +
                         std::to_string(h) + " days after " + format_date(d.calendar.date(first + n - 1)));
    }
    const ServiceCalendar cal = d.calendar.slice(first, n + h);
    for (Model m : cfg.models) {
        switch (m) {
        case Model::Bhml: {
            Rng rng = make_rng(cfg.seed, "predict-flow");
            const FlowPredictive pred = posterior_predict_flow(draws, d.series, order, cal, h, rng,
                                                               static_cast<std::size_t>(cfg.predict.draws));
            for (std::size_t j = 0; j < pred.draws; ++j) {
                for (std::size_t t = 0; t < h; ++t) emit(j, cal.date(n + 1 + t), pred.at(j, t), m);
            }
            break;
        }
        case Model::Base: {
            const std::vector<double> f = baseline_forecast(cal, d.series.flows(), n + 1, n + h);
            for (std::size_t t = 0; t < h; ++t) emit(0, cal.date(n + 1 + t), f[t], m);
            break;
        }
        case Model::Prop: {
            ProphetFitReport rep;
            const ProphetParams p = prophet_fit(cal.prefix(n), d.series.flows(), cfg.prophet, &rep);
            if (rep.regularized) r.warnings.push_back("PROP: " + rep.notice);
            for (std::size_t t = 0; t < h; ++t) emit(0, cal.date(n + 1 + t), prophet_predict(p, cal, n + 1 + t), m);
            break;
        }
        }
    }
    io::write_text(out / "predictive_flows.csv", csv);
    r.outputs.push_back(out / "predictive_flows.csv");
    return r;
}

Report predict_wait(const RunConfig& cfg, const fs::path& fit, const fs::path& out, const PredictWaitOptions& opts) {
    cfg.validate();
    Report r{"predict-wait", {}, {}, false};
    if (opts.flows.empty()) throw ConfigError("predict-wait needs a flows file");
    const PosteriorDraws draws = io::read_draws(fit / "wait_draws.csv");
    const double nu = read_nu(fit);
    const IntervalGrid grid(cfg.S);

    // Beta columns available, in interval order.
    std::vector<std::optional<std::vector<double>>> beta(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        try {
            beta[s] = interval_beta_draws(draws, s);
        } catch (const ImproperPosteriorError& e) {
            r.warnings.push_back("interval " + std::to_string(s + 1) + " refused: " + e.what());
        }
    }

    // Flow input per date: a single known flow or BHML predictive draws.
    std::vector<std::pair<std::string, std::vector<double>>> flows;
    if (opts.mode == WaitMode::GivenFlow) {
        const io::DatedFlows f = io::read_flows(opts.flows);
        for (std::size_t t = 0; t < f.flows.size(); ++t) {
            flows.push_back({format_date(add_days(f.start, static_cast<long>(t))), {f.flows[t]}});
        }
    } else {
        const PredictedFlows pf = read_predicted_flows(opts.flows);
        for (const auto& [key, v] : pf.values) {
            if (key.second == "BHML") flows.push_back({key.first, v});
        }
        if (flows.empty()) throw DataError(opts.flows.filename().string() + " has no BHML rows");
    }

    Rng rng = make_rng(cfg.seed, "predict-wait");
    const io::Manifest m = manifest_of(cfg);
    std::string csv = m.line() + "\ndraw,date,interval_index,wait_min\n";
    std::string means = m.line() + "\ndate,interval_index,mean,draws\n";
    for (const auto& [date, y] : flows) {
        for (std::size_t s = 0; s < grid.size(); ++s) {
            if (!beta[s]) continue;
            std::vector<double> samples;
            if (opts.mode == WaitMode::GivenFlow) {
                std::vector<double> b;
                for (std::size_t row : even_rows(beta[s]->size(), static_cast<std::size_t>(cfg.predict.draws))) {
                    b.push_back((*beta[s])[row]);
                }
                samples = predict_wait_given_flow(b, nu, y.front(), rng);
            } else {
                std::vector<double> b;
                for (std::size_t row : even_rows(beta[s]->size(), y.size())) b.push_back((*beta[s])[row]);
                samples = predict_wait_marginal(b, nu, y, rng);
            }
            const std::string idx = std::to_string(s + 1);
            for (std::size_t j = 0; j < samples.size(); ++j) {
                csv += std::to_string(j) + ',' + date + ',' + idx + ',' + io::format_double(samples[j]) + '\n';
            }
            const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
            means += date + ',' + idx + ',' + io::format_double(mean) + ',' + std::to_string(samples.size()) + '\n';
        }
    }
    io::write_text(out / "predictive_waits.csv", csv);
    io::write_text(out / "predictive_wait_means.csv", means);
    r.outputs = {out / "predictive_waits.csv", out / "predictive_wait_means.csv"};
    return r;
}

Report evaluate(const RunConfig& cfg, const EvaluateInputs& in, const fs::path& out) {
    cfg.validate();
    Report r{"evaluate", {}, {}, false};
    ordered_json metrics{{"manifest", manifest_json(cfg)}};
    if (cfg.scenario) metrics["scenario"] = cfg.scenario->label;

    if (!in.flows_truth.empty() || !in.flows_pred.empty()) {
        if (in.flows_truth.empty() || in.flows_pred.empty() || in.calendar.empty()) {
            throw ConfigError("flow evaluation needs a calendar, truth flows and predicted flows");
        }
        const ServiceCalendar cal = io::read_calendar(in.calendar);
        const io::DatedFlows truth = io::read_flows(in.flows_truth);
        (void)io::to_series(truth, cal);
        const PredictedFlows pred = read_predicted_flows(in.flows_pred);
        const std::size_t first = *cal.index_of(truth.start);

        std::size_t skip = 0;
        if (in.in_sample && cfg.eval.burn_in_weeks > 0) {
            // Whole Monday-anchored weeks; a partial first week counts as one.
            const int dn = cal.day_number(first);
            const auto weeks = static_cast<std::size_t>(cfg.eval.burn_in_weeks);
            skip = dn == 1 ? 7 * weeks : static_cast<std::size_t>(8 - dn) + 7 * (weeks - 1);
        }

        ordered_json models = ordered_json::array();
        for (Model m : cfg.models) {
            const std::string name(to_string(m));
            std::vector<double> obs, prd;
            std::size_t start_day = 0, missing = 0;
            for (std::size_t t = skip; t < truth.flows.size(); ++t) {
                const std::size_t i = first + t;
                auto it = pred.values.find({format_date(cal.date(i)), name});
                if (it == pred.values.end()) {
                    if (obs.empty()) continue; // leading days without predictions
                    ++missing;
                    continue;
                }
                if (missing > 0) {
                    throw DataError(name + " predictions have a gap before " + format_date(cal.date(i)));
                }
                if (obs.empty()) start_day = i;
                obs.push_back(truth.flows[t]);
                prd.push_back(std::accumulate(it->second.begin(), it->second.end(), 0.0) /
                              static_cast<double>(it->second.size()));
            }
            if (obs.empty()) {
                r.warnings.push_back(name + ": no predictions overlap the truth dates");
                continue;
            }
            const std::vector<WeekMse> weeks = weekly_mse(obs, prd, cal, start_day);
            ordered_json wj = ordered_json::array();
            double sum = 0.0;
            for (const WeekMse& w : weeks) {
                wj.push_back(ordered_json{{"week_start", format_date(w.week_start)},
                                          {"mse", w.mse},
                                          {"days", w.days},
                                          {"partial", w.partial}});
                sum += w.mse;
            }
            models.push_back(ordered_json{{"model", name},
                                          {"first_date", format_date(cal.date(start_day))},
                                          {"days", obs.size()},
                                          {"weekly_mse", wj},
                                          {"mse_sum", sum}});
        }
        metrics["flows"] = ordered_json{{"burn_in_days", skip}, {"models", models}};
    }

    if (!in.waits_truth.empty() || !in.waits_pred.empty()) {
        if (in.waits_truth.empty() || in.waits_pred.empty()) {
            throw ConfigError("wait evaluation needs truth waits and predicted waits");
        }
        const IntervalGrid grid(cfg.S);
        const io::WaitCells cells = io::read_wait_cells(in.waits_truth, grid);
        const io::CsvTable t = io::read_csv(in.waits_pred);
        std::map<std::string, std::pair<double, double>> acc; // key -> (sum, weight)
        const std::size_t cd = t.column("date"), ci = t.column("interval_index");
        const auto cmean = t.find("mean");
        const std::size_t cv = cmean ? *cmean : t.column("wait_min");
        const auto cn = t.find("draws");
        for (std::size_t row = 0; row < t.rows.size(); ++row) {
            const auto rn = static_cast<long>(row + 1);
            const long idx = std::lround(io::parse_double(t.rows[row][ci], rn));
            if (idx < 1 || static_cast<std::size_t>(idx) > grid.size()) {
                throw DataError("interval_index outside the grid", rn);
            }
            const double v = io::parse_double(t.rows[row][cv], rn);
            const double w = cmean && cn ? io::parse_double(t.rows[row][*cn], rn) : 1.0;
            auto& a = acc[cell_key(t.rows[row][cd], static_cast<std::size_t>(idx - 1))];
            a.first += v * w;
            a.second += w;
        }
        std::vector<std::vector<double>> observed;
        std::vector<double> mean;
        std::size_t unpredicted = 0, unpredicted_obs = 0;
        for (std::size_t c = 0; c < cells.dates.size(); ++c) {
            auto it = acc.find(cell_key(format_date(cells.dates[c]), cells.intervals[c]));
            if (it == acc.end()) {
                ++unpredicted;
                unpredicted_obs += cells.waits[c].size();
                continue;
            }
            observed.push_back(cells.waits[c]);
            mean.push_back(it->second.first / it->second.second);
        }
        if (unpredicted > 0) {
            r.warnings.push_back(std::to_string(unpredicted_obs) + " observed waits in " + std::to_string(unpredicted) +
                                 " cells have no prediction and are excluded from PE");
        }
        if (observed.empty()) throw DataError("no observed wait cell has a prediction");
        const PeCurve curve = pe_curve(observed, mean, cfg.eval.deltas);
        ordered_json cj = ordered_json::array();
        for (const auto& [delta, pe] : curve) cj.push_back(ordered_json::array({delta, pe}));
        std::size_t nobs = 0;
        for (const auto& v : observed) nobs += v.size();
        metrics["waits"] = ordered_json{{"cells", observed.size()},
                                        {"observations", nobs},
                                        {"excluded_cells", unpredicted},
                                        {"excluded_observations", unpredicted_obs},
                                        {"pe_curve", cj}};
    }
    if (!metrics.contains("flows") && !metrics.contains("waits")) {
        throw ConfigError("evaluate needs flow inputs, wait inputs, or both");
    }
    metrics["warnings"] = r.warnings;
    write_json(out / "metrics.json", metrics, r);
    return r;
}

Report scenario(const RunConfig& cfg, const fs::path& data, const fs::path& out) {
    cfg.validate();
    if (!cfg.scenario) throw ConfigError("scenario command needs config.scenario");
    Report r{"scenario", {}, {}, false};
    const ScenarioSpec& spec = *cfg.scenario;
    const FlowData d = load_flow_data(data);
    const ServiceCalendar& cal = d.series.calendar(); // day 1 = first flow date
    const Scenario sc = scenario_split(cal, spec);
    const io::Manifest m = manifest_of(cfg);
    const IntervalGrid grid(cfg.S);

    const ServiceCalendar train_cal = cal.slice(sc.train_first, sc.test_last - sc.train_first + 1);
    const ServiceCalendar test_cal = cal.slice(sc.test_first, sc.test_days());
    const std::span<const double> f = d.series.flows();
    io::write_calendar(out / "train" / "calendar.csv", train_cal, m);
    io::write_flows(out / "train" / "flows.csv", cal.date(sc.train_first), f.subspan(sc.train_first - 1, sc.train_days()),
                    m);
    io::write_calendar(out / "test" / "calendar.csv", test_cal, m);
    io::write_flows(out / "test" / "flows.csv", cal.date(sc.test_first), f.subspan(sc.test_first - 1, sc.test_days()),
                    m);
    r.outputs = {out / "train" / "calendar.csv", out / "train" / "flows.csv", out / "test" / "calendar.csv",
                 out / "test" / "flows.csv"};

    ordered_json waits_info = nullptr;
    if (fs::exists(data / "waits.csv")) {
        const RequestLog log = io::read_waits(data / "waits.csv", d.flows.start);
        std::set<std::size_t> removed;
        std::size_t test_count = 0;
        if (spec.aggregation_weeks > 0) {
            io::WaitCells cells;
            const std::size_t pred_first = sc.test_last >= 6 + sc.test_first ? sc.test_last - 6 : sc.test_first;
            for (std::size_t i = pred_first; i <= sc.test_last; ++i) {
                for (std::size_t s = 0; s < grid.size(); ++s) {
                    const PooledWaits p = aggregate_sparse_waits(log, cal, grid, i, s, spec.aggregation_weeks, true);
                    for (std::size_t day : p.days) removed.insert(day);
                    if (p.empty) continue;
                    cells.dates.push_back(cal.date(i));
                    cells.intervals.push_back(s);
                    cells.waits.push_back(p.waits);
                    test_count += p.waits.size();
                }
            }
            io::write_wait_cells(out / "test" / "waits.csv", cells, m);
        } else {
            const RequestLog test = log.days(sc.test_first, sc.test_last);
            test_count = test.size();
            io::write_waits(out / "test" / "waits.csv", test, cal.date(sc.test_first), m);
        }
        std::vector<WaitRecord> train;
        for (const WaitRecord& w : log.records()) {
            if (w.day >= sc.train_first && w.day <= sc.train_last && !removed.count(w.day)) {
                WaitRecord c = w;
                c.day = w.day - sc.train_first + 1;
                train.push_back(c);
            }
        }
        const std::size_t train_count = train.size();
        io::write_waits(out / "train" / "waits.csv", RequestLog(std::move(train)), cal.date(sc.train_first), m);
        r.outputs.push_back(out / "train" / "waits.csv");
        r.outputs.push_back(out / "test" / "waits.csv");
        std::size_t removed_train = 0;
        for (std::size_t day : removed) removed_train += day >= sc.train_first && day <= sc.train_last ? 1 : 0;
        waits_info = ordered_json{{"train", train_count},
                                  {"test", test_count},
                                  {"train_days_moved_to_test", removed_train}};
    }

    ordered_json j{{"manifest", manifest_json(cfg)},
                   {"label", spec.label},
                   {"train", ordered_json{{"start", format_date(spec.train_start)},
                                          {"end", format_date(spec.train_end)},
                                          {"days", sc.train_days()}}},
                   {"test", ordered_json{{"start", format_date(spec.test_start)},
                                         {"end", format_date(spec.test_end)},
                                         {"days", sc.test_days()}}},
                   {"aggregation_weeks", spec.aggregation_weeks},
                   {"waits", waits_info}};
    write_json(out / "scenario.json", j, r);
    return r;
}

} // namespace waitflow::pipeline
