#include <waitflow/error.hpp>
#include <waitflow/log.hpp>
#include <waitflow/pipeline.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace pl = waitflow::pipeline;
using nlohmann::ordered_json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "RunConfig JSON file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Override the config seed");
    cmd->add_option("--out", c.out, "Output directory (default: config 'out')");
}

waitflow::RunConfig resolve(const Common& c) {
    waitflow::RunConfig cfg = c.config.empty() ? waitflow::RunConfig::defaults() : waitflow::RunConfig::load(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (!c.out.empty()) cfg.out = c.out;
    cfg.validate();
    return cfg;
}

int error_exit(const std::string& type, const std::string& message, long row, int code) {
    ordered_json err{{"type", type}, {"message", message}};
    if (row >= 0) err["row"] = row;
    std::cout << ordered_json{{"status", "error"}, {"error", err}}.dump() << std::endl;
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driver flow and passenger waiting-time forecasting"};
    app.require_subcommand(1);

    std::vector<std::string> warnings;
    waitflow::set_warning_sink([&warnings](std::string_view w) { warnings.emplace_back(w); });

    Common c_sim, c_ff, c_fw, c_pf, c_pw, c_ev, c_sc;
    std::string data = "data", fit_dir, flows_file, mode = "given-flow", preset;
    bool in_sample = false;
    std::optional<int> horizon;
    pl::EvaluateInputs ev;

    auto* sim = app.add_subcommand("simulate", "Simulate flows and waiting times");
    add_common(sim, c_sim);

    auto* ff = app.add_subcommand("fit-flow", "Sample the flow-model posterior");
    add_common(ff, c_ff);
    ff->add_option("--data", data, "Directory with calendar.csv and flows.csv")->check(CLI::ExistingDirectory);

    auto* fw = app.add_subcommand("fit-wait", "Sample the waiting-time posterior");
    add_common(fw, c_fw);
    fw->add_option("--data", data, "Directory with calendar.csv, flows.csv and waits.csv")
        ->check(CLI::ExistingDirectory);

    auto* pf = app.add_subcommand("predict-flow", "Forecast daily flows");
    add_common(pf, c_pf);
    pf->add_option("--data", data, "Directory with calendar.csv and flows.csv")->check(CLI::ExistingDirectory);
    pf->add_option("--fit", fit_dir, "Directory with flow_draws.csv (default: --data)");
    pf->add_option("--horizon", horizon, "Days to forecast (default: config predict.horizon)");
    pf->add_flag("--in-sample", in_sample, "Write fitted values for the training days");

    auto* pw = app.add_subcommand("predict-wait", "Posterior predictive waiting times");
    add_common(pw, c_pw);
    pw->add_option("--fit", fit_dir, "Directory with wait_draws.csv and wait_diagnostics.json")->required();
    pw->add_option("--flows", flows_file, "flows.csv (given-flow) or predictive_flows.csv (marginal)")
        ->required()
        ->check(CLI::ExistingFile);
    pw->add_option("--mode", mode, "given-flow or marginal")->check(CLI::IsMember({"given-flow", "marginal"}));

    auto* evc = app.add_subcommand("evaluate", "Weekly MSE and PE curve");
    add_common(evc, c_ev);
    evc->add_option("--calendar", ev.calendar, "calendar.csv covering the truth flows");
    evc->add_option("--flows-truth", ev.flows_truth, "Observed flows");
    evc->add_option("--flows-pred", ev.flows_pred, "predictive_flows.csv or fitted_flows.csv");
    evc->add_option("--waits-truth", ev.waits_truth, "Observed waits");
    evc->add_option("--waits-pred", ev.waits_pred, "predictive_waits.csv or predictive_wait_means.csv");
    evc->add_flag("--in-sample", ev.in_sample, "Drop burn-in weeks from the flow MSE");

    auto* sc = app.add_subcommand("scenario", "Split a dataset into training and test sets");
    add_common(sc, c_sc);
    sc->add_option("--data", data, "Directory with calendar.csv, flows.csv and optional waits.csv")
        ->check(CLI::ExistingDirectory);
    sc->add_option("--preset", preset, "lane_s1..lane_s6 or lane_waits (overrides config scenario)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_exit("UsageError", e.what(), -1, 2);
    }

    try {
        pl::Report report;
        if (*sim) {
            const auto cfg = resolve(c_sim);
            report = pl::simulate(cfg, cfg.out);
        } else if (*ff) {
            const auto cfg = resolve(c_ff);
            report = pl::fit_flow(cfg, data, cfg.out);
        } else if (*fw) {
            const auto cfg = resolve(c_fw);
            report = pl::fit_wait(cfg, data, cfg.out);
        } else if (*pf) {
            auto cfg = resolve(c_pf);
            if (horizon) cfg.predict.horizon = *horizon;
            report = pl::predict_flow(cfg, data, fit_dir.empty() ? data : fit_dir, cfg.out, {in_sample});
        } else if (*pw) {
            const auto cfg = resolve(c_pw);
            pl::PredictWaitOptions o;
            o.mode = mode == "marginal" ? pl::WaitMode::Marginal : pl::WaitMode::GivenFlow;
            o.flows = flows_file;
            report = pl::predict_wait(cfg, fit_dir, cfg.out, o);
        } else if (*evc) {
            const auto cfg = resolve(c_ev);
            report = pl::evaluate(cfg, ev, cfg.out);
        } else if (*sc) {
            auto cfg = resolve(c_sc);
            if (!preset.empty()) cfg.scenario = waitflow::scenario_preset(preset);
            report = pl::scenario(cfg, data, cfg.out);
        }
        for (const auto& w : warnings) report.warnings.push_back(w);
        ordered_json outputs = ordered_json::array();
        for (const auto& p : report.outputs) outputs.push_back(p.string());
        ordered_json res{{"status", "ok"}, {"command", report.command}, {"outputs", outputs},
                         {"warnings", report.warnings}};
        if (report.rhat_warning) res["annotation"] = "rhat_warning";
        std::cout << res.dump() << std::endl;
        return 0;
    } catch (const waitflow::ConfigError& e) {
        return error_exit("ConfigError", e.what(), -1, 2);
    } catch (const waitflow::DataError& e) {
        return error_exit("DataError", e.what(), e.row(), 3);
    } catch (const waitflow::RangeError& e) {
        return error_exit("RangeError", e.what(), -1, 4);
    } catch (const waitflow::DomainError& e) {
        return error_exit("DomainError", e.what(), -1, 4);
    } catch (const waitflow::ImproperPosteriorError& e) {
        return error_exit("ImproperPosteriorError", e.what(), -1, 5);
    } catch (const waitflow::SamplerError& e) {
        return error_exit("SamplerError", e.what(), -1, 6);
    } catch (const waitflow::SimulationError& e) {
        return error_exit("SimulationError", e.what(), -1, 7);
    } catch (const std::exception& e) {
        return error_exit("Error", e.what(), -1, 1);
    }
}
