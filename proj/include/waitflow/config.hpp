#pragma once

#include <waitflow/baselines.hpp>
#include <waitflow/eval.hpp>
#include <waitflow/flow_model.hpp>
#include <waitflow/inference.hpp>
#include <waitflow/waiting_model.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace waitflow {

enum class Model { Bhml, Base, Prop };
std::string_view to_string(Model m);
Model parse_model(std::string_view text);

struct SimulationConfig {
    std::string start = "2018-01-01";
    int days = 365;
    int test_days = 5;
    //! "lyon", "all_ord" or a calendar.csv path.
    std::string calendar = "lyon";
    FlowParams theta{0.333, 0.33, 0.331, 1.0, 1.0, 5.0};
    double nu = 7.0;
    std::vector<double> beta{0.012, 0.01, 0.011, 0.013, 0.018, 0.016, 0.017, 0.019};
    int replicates = 10;
    double init_mean = 30.0;
    int max_attempts = 1000;
};

struct PredictConfig {
    int horizon = 7;
    //! Posterior draws used per predictive sample set (0 = all).
    int draws = 1000;

    bool operator==(const PredictConfig&) const = default;
};

struct EvalConfig {
    std::vector<double> deltas; // ascending PE grid, minutes
    //! Leading weeks dropped from in-sample MSE.
    int burn_in_weeks = 1;

    bool operator==(const EvalConfig&) const = default;
};

/// Everything a run needs. Validated in full by validate() before any
/// computation; to_json/from_json round-trip losslessly.
struct RunConfig {
    std::uint64_t seed = 1;
    int K = 3;
    int S = 8;
    LikelihoodRange likelihood_range = LikelihoodRange::AsPrinted;
    BetaPrior prior{};
    //! Unset: method-of-moments estimate from the training waits.
    std::optional<double> nu;
    //! mcmc.seed is ignored; the sampler is seeded from \c seed.
    McmcConfig mcmc{};
    SimulationConfig simulation{};
    std::optional<ScenarioSpec> scenario;
    std::vector<Model> models{Model::Bhml, Model::Base, Model::Prop};
    PredictConfig predict{};
    ProphetConfig prophet{};
    EvalConfig eval{};
    std::string out = "out";

    static RunConfig defaults();

    //! Throws ConfigError naming the offending field.
    void validate() const;

    std::string to_json() const; // canonical, pretty-printed
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);

    //! FNV-1a of the canonical JSON without \c out, 16 hex digits.
    std::string hash() const;

    bool operator==(const RunConfig& o) const;
};

} // namespace waitflow
