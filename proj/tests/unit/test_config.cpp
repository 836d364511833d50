#include <waitflow/config.hpp>
#include <waitflow/error.hpp>

#include <gtest/gtest.h>

#include <fstream>

using namespace waitflow;

namespace {

std::string with(const std::string& body) { return "{" + body + "}"; }

std::string config_error(const std::string& text) {
    try {
        RunConfig::from_json(text).validate();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Config, DefaultsValidate) {
    const RunConfig c = RunConfig::defaults();
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.K, 3);
    EXPECT_EQ(c.S, 8);
    EXPECT_EQ(c.eval.deltas.size(), 100u);
    EXPECT_EQ(c.eval.deltas.front(), 0.2);
    EXPECT_EQ(c.eval.deltas.back(), 20.0);
    EXPECT_EQ(c.simulation.beta.size(), 8u);
    EXPECT_FALSE(c.nu.has_value());
}

TEST(Config, RoundTripLossless) {
    RunConfig c = RunConfig::defaults();
    c.seed = 18446744073709551615ull;
    c.K = 2;
    c.S = 3;
    c.simulation.beta = {0.1, 0.2, 1.0 / 3.0};
    c.likelihood_range = LikelihoodRange::Conditional;
    c.prior = {BetaPriorKind::Dirichlet, {1.0, 2.5, 0.5}};
    c.nu = 6.5;
    c.mcmc.proposal = ProposalKind::Joint;
    c.mcmc.target_accept = 0.3;
    c.scenario = scenario_preset("lane_waits");
    c.models = {Model::Prop, Model::Bhml};
    c.prophet.yearly = 1;
    c.eval.deltas = {0.5, 8.0};
    c.out = "elsewhere";
    c.validate();
    const RunConfig back = RunConfig::from_json(c.to_json());
    EXPECT_TRUE(back == c);
    EXPECT_EQ(back.to_json(), c.to_json());
    EXPECT_EQ(back.hash(), c.hash());
    const RunConfig def = RunConfig::from_json(RunConfig::defaults().to_json());
    EXPECT_TRUE(def == RunConfig::defaults());
}

TEST(Config, EmptyObjectIsDefaults) {
    EXPECT_TRUE(RunConfig::from_json("{}") == RunConfig::defaults());
}

TEST(Config, HashIsStableAndSensitive) {
    const RunConfig a = RunConfig::defaults();
    RunConfig b = a;
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
    b.out = "elsewhere";
    EXPECT_EQ(a.hash(), b.hash());
    b.seed = 2;
    EXPECT_NE(a.hash(), b.hash());
}

TEST(Config, ScenarioPresetAndCustom) {
    const RunConfig p = RunConfig::from_json(with(R"("scenario": {"preset": "lane_s2"})"));
    ASSERT_TRUE(p.scenario);
    EXPECT_EQ(p.scenario->label, "lane_s2");
    const RunConfig s = RunConfig::from_json(with(R"("scenario": "lane_s4")"));
    EXPECT_EQ(s.scenario->label, "lane_s4");
    const RunConfig c = RunConfig::from_json(with(
        R"("scenario": {"train_start": "2018-01-01", "train_end": "2018-03-31", "test_start": "2018-04-01", "test_end": "2018-04-07"})"));
    EXPECT_EQ(c.scenario->label, "custom");
    EXPECT_NE(config_error(with(R"("scenario": {"train_start": "2018-01-01"})")), "");
}

TEST(Config, RejectsBadFields) {
    EXPECT_NE(config_error(with(R"("K": 0)")).find("K"), std::string::npos);
    EXPECT_NE(config_error(with(R"("S": 7)")).find("S"), std::string::npos);
    EXPECT_NE(config_error(with(R"("simulation": {"days": 0})")).find("simulation.days"), std::string::npos);
    EXPECT_NE(config_error(with(R"("simulation": {"days": 3})")).find("simulation.days"), std::string::npos);
    EXPECT_NE(config_error(with(R"("unknown_key": 1)")).find("unknown_key"), std::string::npos);
    EXPECT_NE(config_error(with(R"("mcmc": {"chains": 0})")), "");
    EXPECT_NE(config_error(with(R"("mcmc": {"proposal": "hmc"})")), "");
    EXPECT_NE(config_error(with(R"("nu": -1)")).find("nu"), std::string::npos);
    EXPECT_NE(config_error(with(R"("nu": "guess")")).find("nu"), std::string::npos);
    EXPECT_NE(config_error(with(R"("models": [])")).find("models"), std::string::npos);
    EXPECT_NE(config_error(with(R"("models": ["BHML", "BHML"])")).find("models"), std::string::npos);
    EXPECT_NE(config_error(with(R"("models": ["ARIMA"])")), "");
    EXPECT_NE(config_error(with(R"("eval": {"deltas": [2, 1]})")).find("eval.deltas"), std::string::npos);
    EXPECT_NE(config_error(with(R"("likelihood_range": "both")")).find("likelihood_range"), std::string::npos);
    EXPECT_NE(config_error(with(R"("prior": {"beta": "dirichlet", "concentration": [1, 1]})")).find("prior"),
              std::string::npos);
    EXPECT_NE(config_error(with(R"("simulation": {"beta": [0.1]})")).find("simulation.beta"), std::string::npos);
    EXPECT_NE(config_error(with(R"("seed": -4)")).find("seed"), std::string::npos);
    EXPECT_NE(config_error("{not json"), "");
    EXPECT_NE(config_error("[1, 2]"), "");
}

TEST(Config, ModelNames) {
    EXPECT_EQ(to_string(Model::Bhml), "BHML");
    EXPECT_EQ(parse_model("PROP"), Model::Prop);
    EXPECT_THROW(parse_model("prop "), ConfigError);
}

TEST(Config, LoadFromFile) {
    const auto path = std::filesystem::temp_directory_path() / "waitflow_config_test.json";
    {
        std::ofstream f(path);
        f << with(R"("seed": 77, "nu": 7)");
    }
    const RunConfig c = RunConfig::load(path);
    EXPECT_EQ(c.seed, 77u);
    EXPECT_EQ(*c.nu, 7.0);
    std::filesystem::remove(path);
    EXPECT_THROW(RunConfig::load(path), ConfigError);
}
