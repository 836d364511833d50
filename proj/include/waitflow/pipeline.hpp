#pragma once

#include <waitflow/config.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace waitflow::pipeline {

namespace fs = std::filesystem;

/// Outcome of one command. Warnings are annotations (e.g. R-hat above 1.05);
/// failures are reported by exception.
struct Report {
    std::string command;
    std::vector<fs::path> outputs;
    std::vector<std::string> warnings;
    bool rhat_warning = false;
};

//! Threshold above which a fit is annotated as not converged.
inline constexpr double kRhatWarning = 1.05;

/// Simulate the day-type flow model and the Gamma waiting times.
/// Writes calendar.csv, flows.csv, waits.csv, flows_test.csv, waits_test.csv, manifest.json.
Report simulate(const RunConfig& cfg, const fs::path& out);

//! Reads data/{calendar,flows}.csv; writes flow_draws.csv and flow_diagnostics.json.
Report fit_flow(const RunConfig& cfg, const fs::path& data, const fs::path& out);

//! Reads data/{calendar,flows,waits}.csv; writes wait_draws.csv and wait_diagnostics.json.
Report fit_wait(const RunConfig& cfg, const fs::path& data, const fs::path& out);

struct PredictFlowOptions {
    //! Fitted values on the training days (fitted_flows.csv) instead of a forecast.
    bool in_sample = false;
};

/// Forecast config.predict.horizon days after the last observed flow for every
/// configured model. Writes predictive_flows.csv (draw,date,flow,model).
Report predict_flow(const RunConfig& cfg, const fs::path& data, const fs::path& fit, const fs::path& out,
                    const PredictFlowOptions& opts = {});

enum class WaitMode {
    //! Condition on known flows (a flows.csv).
    GivenFlow,
    //! Integrate over BHML predictive flows (a predictive_flows.csv).
    Marginal,
};

struct PredictWaitOptions {
    WaitMode mode = WaitMode::GivenFlow;
    fs::path flows; // empty: data/flows.csv
};

/// Posterior predictive waits per (date, interval). Intervals without a
/// sampled beta are refused and listed as warnings. Writes
/// predictive_waits.csv (draw,date,interval_index,wait_min) and
/// predictive_wait_means.csv (date,interval_index,mean,draws).
Report predict_wait(const RunConfig& cfg, const fs::path& fit, const fs::path& out, const PredictWaitOptions& opts);

struct EvaluateInputs {
    fs::path calendar;
    fs::path flows_truth;
    fs::path flows_pred; // predictive_flows.csv or fitted_flows.csv
    fs::path waits_truth; // waits.csv or pooled cells
    fs::path waits_pred; // predictive_waits.csv or predictive_wait_means.csv
    //! Drop config.eval.burn_in_weeks leading weeks from the flow MSE.
    bool in_sample = false;
};

//! Weekly MSE per model and the PE curve. Writes metrics.json.
Report evaluate(const RunConfig& cfg, const EvaluateInputs& in, const fs::path& out);

/// Split data/ by config.scenario into out/train and out/test. With
/// aggregation weeks, test waits of the final test week are pooled from the
/// same weekday and day type in earlier weeks and those days leave training.
Report scenario(const RunConfig& cfg, const fs::path& data, const fs::path& out);

} // namespace waitflow::pipeline
