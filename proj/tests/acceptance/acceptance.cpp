// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--expect-fail N]... [--work DIR]
// Criteria listed with --expect-fail are still reported as FAIL when they
// fail, but do not make the exit status nonzero.

#include <waitflow/baselines.hpp>
#include <waitflow/config.hpp>
#include <waitflow/eval.hpp>
#include <waitflow/flow_model.hpp>
#include <waitflow/io.hpp>
#include <waitflow/log.hpp>
#include <waitflow/pipeline.hpp>
#include <waitflow/waiting_model.hpp>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace waitflow;

namespace {

struct Outcome {
    bool pass = false;
    std::vector<std::string> details;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

double pe_at(const json& metrics, double delta) {
    for (const auto& pair : metrics["waits"]["pe_curve"]) {
        if (std::abs(pair[0].get<double>() - delta) < 1e-9) return pair[1].get<double>();
    }
    return std::nan("");
}

std::map<std::string, double> param_means(const json& diag) {
    std::map<std::string, double> m;
    for (const auto& p : diag["params"]) m[p["name"].get<std::string>()] = p["mean"].get<double>();
    return m;
}

// ---------------------------------------------------------------------------
// 1. Simulation-study pipeline

struct StudyRun {
    double seconds = 0.0;
};

StudyRun run_study(const RunConfig& cfg, const fs::path& root) {
    namespace pl = pipeline;
    pl::simulate(cfg, root / "sim");
    const auto t0 = std::chrono::steady_clock::now();
    pl::fit_flow(cfg, root / "sim", root / "fit");
    pl::fit_wait(cfg, root / "sim", root / "fit");
    pl::predict_flow(cfg, root / "sim", root / "fit", root / "pred");
    pl::predict_wait(cfg, root / "fit", root / "pred", {pl::WaitMode::Marginal, root / "pred/predictive_flows.csv"});
    pl::predict_wait(cfg, root / "fit", root / "insample", {pl::WaitMode::GivenFlow, root / "sim/flows.csv"});
    const auto t1 = std::chrono::steady_clock::now();
    pl::evaluate(cfg,
                 {root / "sim/calendar.csv", root / "sim/flows_test.csv", root / "pred/predictive_flows.csv",
                  root / "sim/waits_test.csv", root / "pred/predictive_wait_means.csv", false},
                 root / "eval_test");
    pl::evaluate(cfg, {{}, {}, {}, root / "sim/waits.csv", root / "insample/predictive_wait_means.csv", false},
                 root / "eval_train");
    return {std::chrono::duration<double>(t1 - t0).count()};
}

RunConfig study_config() {
    RunConfig cfg = RunConfig::defaults();
    cfg.seed = 2024;
    cfg.nu = 7.0;
    cfg.predict.horizon = cfg.simulation.test_days;
    return cfg;
}

// PE(8) of the true conditional means nu / (beta_s y_i) against the simulated waits.
double oracle_pe(const RunConfig& cfg, const fs::path& sim, double delta) {
    const io::DatedFlows f = io::read_flows(sim / "flows.csv");
    const IntervalGrid grid(cfg.S);
    const io::WaitCells cells = io::read_wait_cells(sim / "waits.csv", grid);
    std::vector<double> mean;
    for (std::size_t c = 0; c < cells.dates.size(); ++c) {
        const long day = days_between(f.start, cells.dates[c]);
        mean.push_back(cfg.simulation.nu /
                       (cfg.simulation.beta[cells.intervals[c]] * f.flows[static_cast<std::size_t>(day)]));
    }
    return pe_metric_cells(cells.waits, mean, delta);
}

Outcome criterion_1(const fs::path& work) {
    Outcome o;
    const RunConfig cfg = study_config();
    const fs::path root = work / "study_a";
    const StudyRun run = run_study(cfg, root);
    const bool fast = run.seconds < 600.0;
    o.details.push_back("fit + predict wall time " + fmt(run.seconds, 3) + " s (limit 600 s)");

    bool alpha_ok = true;
    const auto flow = param_means(read_json(root / "fit/flow_diagnostics.json"));
    const FlowParams& th = cfg.simulation.theta;
    for (auto [name, truth] : {std::pair{"alpha_ord", th.alpha_ord}, std::pair{"alpha_sch", th.alpha_sch},
                               std::pair{"alpha_pwe", th.alpha_pwe}}) {
        const double rel = std::abs(flow.at(name) - truth) / truth;
        alpha_ok = alpha_ok && rel <= 0.15;
        o.details.push_back(std::string(name) + " mean " + fmt(flow.at(name)) + " vs " + fmt(truth) + " (rel err " +
                            fmt(100 * rel, 3) + "%, limit 15%)");
    }

    bool beta_ok = true;
    const auto wait = param_means(read_json(root / "fit/wait_diagnostics.json"));
    double worst = 0.0;
    for (std::size_t s = 0; s < cfg.simulation.beta.size(); ++s) {
        const double truth = cfg.simulation.beta[s];
        const auto it = wait.find(beta_name(s));
        const double rel = it == wait.end() ? INFINITY : std::abs(it->second - truth) / truth;
        worst = std::max(worst, rel);
        beta_ok = beta_ok && rel <= 0.20;
    }
    o.details.push_back("max beta_s rel err " + fmt(100 * worst, 3) + "% (limit 20%)");

    const double pe_train = pe_at(read_json(root / "eval_train/metrics.json"), 8.0);
    const double pe_test = pe_at(read_json(root / "eval_test/metrics.json"), 8.0);
    const double pe_true = oracle_pe(cfg, root / "sim", 8.0);
    const bool pe_ok = pe_train >= 0.9 && pe_test >= 0.9;
    o.details.push_back("PE(8) train " + fmt(pe_train) + ", test " + fmt(pe_test) + " (need >= 0.9)");
    o.details.push_back("PE(8) of the true conditional means on train " + fmt(pe_true) +
                        " (upper reference for any predictor of the cell mean)");
    std::vector<double> refs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RunConfig c = cfg;
        c.seed = seed;
        const fs::path sim = work / "oracle_pe" / std::to_string(seed);
        pipeline::simulate(c, sim);
        refs.push_back(oracle_pe(c, sim, 8.0));
    }
    std::sort(refs.begin(), refs.end());
    o.details.push_back("true-mean PE(8) over seeds 1..20: min " + fmt(refs.front()) + ", median " +
                        fmt(0.5 * (refs[9] + refs[10])) + ", max " + fmt(refs.back()));
    o.pass = fast && alpha_ok && beta_ok && pe_ok;
    return o;
}

// ---------------------------------------------------------------------------
// 2. Conjugate oracle

Outcome criterion_2() {
    Outcome o;
    const double nu = 7.0, beta = 0.015;
    Rng rng = make_rng(77, "acceptance-conjugate");
    std::vector<double> y;
    std::vector<WaitRecord> recs;
    for (std::size_t d = 1; d <= 50; ++d) {
        y.push_back(20.0 + 15.0 * draw_uniform(rng));
        WaitRecord r;
        r.day = d;
        r.request_minute = 480.0;
        r.pseudo_wait = draw_gamma(rng, nu, beta * y.back());
        recs.push_back(r);
    }
    const FlowSeries flows(oracle::weekday_calendar(50), y);
    const RequestLog log(recs);
    const IntervalGrid grid(1);
    const GammaDist post = beta_conjugate_posterior(nu, flows, log, grid, 0);

    WaitFitOptions opts;
    opts.mcmc.seed = 5;
    opts.mcmc.keep_iters = 10000;
    const WaitFit fit = fit_wait(nu, flows, log, grid, opts);
    const auto draws = fit.result.draws.column(beta_name(0));
    const double ess = fit.result.diagnostics.ess[0];
    const double ks = oracle::ks_statistic(draws, [&](double x) { return boost::math::gamma_p(post.shape, post.rate * x); });
    const double mean_rel = std::abs(oracle::mean(draws) - post.mean()) / post.mean();
    o.details.push_back("analytic Gamma(" + fmt(post.shape, 6) + ", " + fmt(post.rate, 6) + "), mean " +
                        fmt(post.mean(), 6));
    o.details.push_back("KS " + fmt(ks) + " (limit 0.05), ESS " + fmt(ess, 6) + " (need >= 5000), mean rel err " +
                        fmt(100 * mean_rel, 3) + "% (limit 1%)");
    o.pass = ks < 0.05 && ess >= 5000.0 && mean_rel <= 0.01;
    return o;
}

// ---------------------------------------------------------------------------
// 3. Conditional Gaussian oracle

Outcome criterion_3() {
    Outcome o;
    const double alpha = 0.33, sigma2 = 5.0;
    const std::size_t n = 365;
    const ServiceCalendar cal(oracle::ymd(2018, 1, 1), std::vector<DayType>(n, DayType::Ord));
    Rng rng = make_rng(3, "acceptance-gauss");
    FlowSimulator sim(alpha, FlowOrder(3), sigma2, rng);
    const FlowSeries series(cal, sim.path(n));

    // Gaussian likelihood in alpha alone: mean sum(y S) / sum(S^2), variance sigma2 / sum(S^2).
    double sys = 0.0, sss = 0.0;
    for (std::size_t i = 4; i <= n; ++i) {
        const double s = series.flow(i - 1) + series.flow(i - 2) + series.flow(i - 3);
        sys += series.flow(i) * s;
        sss += s * s;
    }
    const double mean = sys / sss, var = sigma2 / sss;

    FlowFitOptions opts;
    opts.mcmc.seed = 9;
    opts.mcmc.keep_iters = 50000;
    opts.fixed[3] = 1.0;
    opts.fixed[4] = 1.0;
    opts.fixed[5] = sigma2;
    const FlowFit fit = fit_flow(series, FlowOrder(3), opts);
    const auto draws = fit.result.draws.column("alpha_ord");
    const double m = oracle::mean(draws), v = oracle::variance(draws);
    const double mrel = std::abs(m - mean) / mean, vrel = std::abs(v - var) / var;
    o.details.push_back("closed form N(" + fmt(mean, 8) + ", " + fmt(var, 6) + "); sampled mean " + fmt(m, 8) +
                        ", variance " + fmt(v, 6) + ", ESS " + fmt(fit.result.diagnostics.ess[0], 6));
    o.details.push_back("rel err mean " + fmt(100 * mrel, 3) + "%, variance " + fmt(100 * vrel, 3) + "% (limit 2%)");
    o.pass = mrel <= 0.02 && vrel <= 0.02;
    return o;
}

// ---------------------------------------------------------------------------
// 4. Model comparison

Outcome criterion_4() {
    Outcome o;
    const FlowParams theta{0.355, 0.30, 0.25, 0.335 / 0.30, 1.2, 5.0};
    const FlowOrder K(3);
    const Date start = oracle::ymd(2018, 5, 15);
    const auto specs = lane_flow_scenarios();
    const Date end = specs.back().test_end;
    const auto days = static_cast<std::size_t>(days_between(start, end) + 1);
    const ServiceCalendar cal = generate_calendar(start, days, lyon_rules());
    const int seeds = 10;

    std::vector<std::array<double, 3>> mse(specs.size(), {0.0, 0.0, 0.0}); // BHML, BASE, PROP
    for (int seed = 1; seed <= seeds; ++seed) {
        Rng rng = make_rng(static_cast<std::uint64_t>(seed), "flow-sim");
        FlowSimulator sim(cal, theta, K, rng);
        const std::vector<double> y = sim.path(days);
        for (std::size_t k = 0; k < specs.size(); ++k) {
            const Scenario sc = scenario_split(cal, specs[k]);
            const std::vector<double> train(y.begin(), y.begin() + static_cast<long>(sc.train_last));
            const FlowSeries hist(cal.prefix(sc.train_last), train);

            FlowFitOptions opts;
            opts.mcmc.seed = static_cast<std::uint64_t>(1000 * seed + static_cast<int>(k));
            opts.mcmc.keep_iters = 2000;
            const FlowFit fit = fit_flow(hist, K, opts);
            Rng prng = make_rng(opts.mcmc.seed, "predict-flow");
            const FlowPredictive pred = posterior_predict_flow(fit.result.draws, hist, K, cal, 7, prng, 2000);
            const std::vector<double> bhml = pred.mean();
            const std::vector<double> base = baseline_forecast(cal, train, sc.test_first, sc.test_last);
            const ProphetParams pp = prophet_fit(cal, train, ProphetConfig{});

            for (std::size_t h = 0; h < 7; ++h) {
                const std::size_t i = sc.test_first + h;
                const double truth = y[i - 1];
                mse[k][0] += std::pow(bhml[h] - truth, 2) / 7.0 / seeds;
                mse[k][1] += std::pow(base[h] - truth, 2) / 7.0 / seeds;
                mse[k][2] += std::pow(prophet_predict(pp, cal, i) - truth, 2) / 7.0 / seeds;
            }
        }
    }

    o.pass = true;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const Scenario sc = scenario_split(cal, specs[k]);
        std::set<DayType> types;
        for (std::size_t i = sc.test_first; i <= sc.test_last; ++i) types.insert(cal.day_type(i));
        const bool mixed = types.size() >= 2;
        const bool ok_base = !mixed || mse[k][0] <= mse[k][1];
        const bool ok_prop = mse[k][0] <= mse[k][2];
        o.pass = o.pass && ok_base && ok_prop;
        o.details.push_back(specs[k].label + " (" + std::to_string(types.size()) + " day types): MSE BHML " +
                            fmt(mse[k][0]) + ", BASE " + fmt(mse[k][1]) + ", PROP " + fmt(mse[k][2]) +
                            (ok_base && ok_prop ? "" : "  <- violates ordering"));
    }
    return o;
}

// ---------------------------------------------------------------------------
// 5. Metric correctness

Outcome criterion_5() {
    Outcome o;
    Rng rng = make_rng(5, "acceptance-metrics");
    double worst_pe = 0.0, worst_mse = 0.0;
    bool monotone = true;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t N = 1 + trial % 5, S = 1 + trial % 4, J = 1 + trial % 3;
        WaitTensor t{N, S, J, {}};
        std::vector<double> mean;
        for (std::size_t c = 0; c < N * S * J; ++c) t.values.push_back(std::round(40.0 * draw_uniform(rng)) / 4.0);
        for (std::size_t c = 0; c < N * S; ++c) mean.push_back(std::round(40.0 * draw_uniform(rng)) / 4.0);

        std::vector<double> deltas;
        for (int k = 1; k <= 100; ++k) deltas.push_back(0.125 * k);
        double last = 0.0;
        for (double d : deltas) {
            std::size_t hit = 0;
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t s = 0; s < S; ++s)
                    for (std::size_t j = 0; j < J; ++j)
                        if (std::abs(mean[i * S + s] - t.values[(i * S + s) * J + j]) < d) ++hit;
            const double brute = static_cast<double>(hit) / static_cast<double>(N * S * J);
            const double got = pe_metric(t, mean, d);
            worst_pe = std::max(worst_pe, std::abs(got - brute));
            monotone = monotone && got >= last;
            last = got;
        }

        const std::size_t days = 3 + trial;
        const ServiceCalendar cal = oracle::weekday_calendar(days + 10);
        std::vector<double> obs, pred;
        for (std::size_t n = 0; n < days; ++n) {
            obs.push_back(std::round(100.0 * draw_uniform(rng)));
            pred.push_back(std::round(100.0 * draw_uniform(rng)));
        }
        const std::size_t first = 1 + trial % 7;
        const auto weeks = weekly_mse(obs, pred, cal, first);
        std::map<long, std::pair<double, int>> brute;
        for (std::size_t n = 0; n < days; ++n) {
            const long week = static_cast<long>(first - 1 + n) / 7; // calendar starts on a Monday
            brute[week].first += (obs[n] - pred[n]) * (obs[n] - pred[n]);
            brute[week].second += 1;
        }
        std::size_t w = 0;
        for (const auto& [week, acc] : brute) {
            worst_mse = std::max(worst_mse, std::abs(weeks.at(w++).mse - acc.first / acc.second));
        }
        if (w != weeks.size()) worst_mse = INFINITY;
    }
    o.details.push_back("max |PE - enumeration| " + fmt(worst_pe) + ", max |weekly MSE - enumeration| " +
                        fmt(worst_mse) + " (limit 1e-12); PE monotone over 100-point grids: " +
                        (monotone ? "yes" : "no"));
    o.pass = worst_pe <= 1e-12 && worst_mse <= 1e-12 && monotone;
    return o;
}

// ---------------------------------------------------------------------------
// 6. Scenario bookkeeping

Outcome criterion_6() {
    Outcome o;
    const ServiceCalendar cal = generate_calendar(oracle::ymd(2018, 5, 15), 400, lyon_rules());
    const std::vector<std::size_t> expected{244, 286, 349, 356, 363, 370};
    const auto specs = lane_flow_scenarios();
    o.pass = specs.size() == expected.size();
    std::string got;
    for (std::size_t k = 0; k < specs.size() && k < expected.size(); ++k) {
        const Scenario sc = scenario_split(cal, specs[k]);
        got += (k ? ", " : "") + std::to_string(sc.train_days());
        o.pass = o.pass && sc.train_days() == expected[k] && sc.test_days() == 7;
    }
    o.details.push_back("training days " + got + " (expected 244, 286, 349, 356, 363, 370)");
    return o;
}

// ---------------------------------------------------------------------------
// 7. Determinism

Outcome criterion_7(const fs::path& work) {
    Outcome o;
    const RunConfig cfg = study_config();
    run_study(cfg, work / "study_b");
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(work / "study_a")) {
        if (!e.is_regular_file()) continue;
        ++files;
        const fs::path twin = work / "study_b" / fs::relative(e.path(), work / "study_a");
        if (!fs::exists(twin) || slurp(e.path()) != slurp(twin)) {
            ++differ;
            o.details.push_back("differs: " + fs::relative(e.path(), work / "study_a").string());
        }
    }
    o.details.push_back(std::to_string(files) + " files compared, " + std::to_string(differ) + " differ");
    o.pass = files > 0 && differ == 0;
    return o;
}

// ---------------------------------------------------------------------------
// 8. Waiting-time definitions

Outcome criterion_8() {
    Outcome o;
    Rng rng = make_rng(8, "acceptance-events");
    std::size_t checked = 0, violations = 0;
    for (int set = 0; set < 1000; ++set) {
        const int n = 1 + static_cast<int>(30 * draw_uniform(rng));
        std::vector<double> req, arr;
        double t = 1440.0 * 0.5 * draw_uniform(rng), a = 0.0;
        for (int j = 0; j < n; ++j) {
            t += 0.01 + 10.0 * draw_uniform(rng);
            a = std::max(a, t) + 0.01 + 8.0 * draw_uniform(rng);
            req.push_back(t);
            arr.push_back(a);
        }
        const EventWaits w = pseudo_waits_from_events(req, arr);
        for (int j = 0; j < n; ++j) {
            ++checked;
            const bool head = j == 0 || arr[static_cast<std::size_t>(j - 1)] <= req[static_cast<std::size_t>(j)];
            const auto u = static_cast<std::size_t>(j);
            if (!(w.pseudo[u] > 0.0) || w.pseudo[u] > w.perceived[u] + 1e-12) ++violations;
            if (head && std::abs(w.pseudo[u] - w.perceived[u]) > 1e-12) ++violations;
            if (std::abs(w.perceived[u] - (arr[u] - req[u])) > 1e-12) ++violations;
        }
    }
    o.details.push_back(std::to_string(checked) + " passengers over 1000 event sets, " + std::to_string(violations) +
                        " violations");
    o.pass = violations == 0;
    return o;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> expect_fail;
    fs::path work = fs::temp_directory_path() / "waitflow_acceptance";
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--expect-fail" && a + 1 < argc) expect_fail.insert(std::stoi(argv[++a]));
        else if (arg == "--work" && a + 1 < argc) work = argv[++a];
        else {
            std::cerr << "usage: acceptance [--expect-fail N]... [--work DIR]\n";
            return 2;
        }
    }
    fs::remove_all(work);
    fs::create_directories(work);

    std::vector<std::string> warnings;
    set_warning_sink([&warnings](std::string_view w) { warnings.emplace_back(w); });

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"simulation-study pipeline: runtime, alpha/beta recovery, PE(8) >= 0.9", [&] { return criterion_1(work); }},
        {"conjugate oracle for beta_s (KS < 0.05, ESS >= 5000, mean within 1%)", criterion_2},
        {"conditional Gaussian oracle for alpha_ORD (mean and variance within 2%)", criterion_3},
        {"model comparison over 10 seeds (BHML <= BASE on mixed weeks, BHML <= PROP)", criterion_4},
        {"metric correctness against enumeration (1e-12) and PE monotonicity", criterion_5},
        {"scenario training-day counts 244, 286, 349, 356, 363, 370", criterion_6},
        {"byte-identical outputs across two seeded pipeline runs", [&] { return criterion_7(work); }},
        {"pseudo <= perceived waits, equal at the queue head, 1000 FIFO sets", criterion_8},
    };

    int unexpected = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.details.push_back(std::string("exception: ") + e.what());
        }
        const bool known = expect_fail.count(id) > 0;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[k].first
                  << (!o.pass && known ? " [known failure]" : "") << "\n";
        for (const auto& d : o.details) std::cout << "    " << d << "\n";
        std::cout.flush();
        if (!o.pass && !known) ++unexpected;
    }
    fs::remove_all(work);
    return unexpected == 0 ? 0 : 1;
}
