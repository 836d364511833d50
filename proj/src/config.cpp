#include <waitflow/config.hpp>
#include <waitflow/error.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace waitflow {

using nlohmann::json;

std::string_view to_string(Model m) {
    switch (m) {
    case Model::Bhml: return "BHML";
    case Model::Base: return "BASE";
    case Model::Prop: return "PROP";
    }
    return "?";
}

Model parse_model(std::string_view text) {
    if (text == "BHML") return Model::Bhml;
    if (text == "BASE") return Model::Base;
    if (text == "PROP") return Model::Prop;
    throw ConfigError("unknown model '" + std::string(text) + "' (expected BHML, BASE or PROP)");
}

namespace {

std::vector<double> default_deltas() {
    std::vector<double> d;
    for (int n = 1; n <= 100; ++n) d.push_back(n / 5.0);
    return d;
}

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

template <class T>
T get(const json& j, const char* key, const T& fallback, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + key + ": wrong type");
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& path) {
    if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ConfigError("unknown config field '" + path + it.key() + "'");
    }
}

json mcmc_json(const McmcConfig& m) {
    json j;
    j["chains"] = m.chains;
    j["warmup"] = m.warmup_iters;
    j["iterations"] = m.keep_iters;
    j["thin"] = m.thin;
    j["target_accept"] = m.target_accept ? json(*m.target_accept) : json(nullptr);
    j["proposal"] = m.proposal == ProposalKind::Joint ? "joint" : "coordinate";
    j["adapt_window"] = m.adapt_window;
    j["initial_scale"] = m.initial_scale;
    j["init_jitter"] = m.init_jitter;
    j["parallel"] = m.parallel;
    return j;
}

McmcConfig mcmc_from(const json& j, std::uint64_t seed) {
    const std::string p = "mcmc.";
    reject_unknown(j, {"chains", "warmup", "iterations", "thin", "target_accept", "proposal", "adapt_window",
                       "initial_scale", "init_jitter", "parallel"},
                   p);
    McmcConfig m;
    m.chains = get(j, "chains", m.chains, p);
    m.warmup_iters = get(j, "warmup", m.warmup_iters, p);
    m.keep_iters = get(j, "iterations", m.keep_iters, p);
    m.thin = get(j, "thin", m.thin, p);
    if (j.contains("target_accept") && !j["target_accept"].is_null()) m.target_accept = get(j, "target_accept", 0.0, p);
    const std::string prop = get<std::string>(j, "proposal", "coordinate", p);
    if (prop == "joint") m.proposal = ProposalKind::Joint;
    else if (prop != "coordinate") throw ConfigError("mcmc.proposal must be 'coordinate' or 'joint'");
    m.adapt_window = get(j, "adapt_window", m.adapt_window, p);
    m.initial_scale = get(j, "initial_scale", m.initial_scale, p);
    m.init_jitter = get(j, "init_jitter", m.init_jitter, p);
    m.parallel = get(j, "parallel", m.parallel, p);
    m.seed = seed;
    return m;
}

json theta_json(const FlowParams& t) {
    json j;
    const auto a = t.to_array();
    for (std::size_t c = 0; c < FlowParams::kDim; ++c) j[std::string(FlowParams::kNames[c])] = a[c];
    return j;
}

FlowParams theta_from(const json& j) {
    const std::string p = "simulation.theta.";
    reject_unknown(j, {"alpha_ord", "alpha_sch", "alpha_pwe", "eta_sch", "eta_pwe", "sigma2_eps"}, p);
    auto a = FlowParams{0.333, 0.33, 0.331, 1.0, 1.0, 5.0}.to_array();
    for (std::size_t c = 0; c < FlowParams::kDim; ++c) {
        a[c] = get(j, std::string(FlowParams::kNames[c]).c_str(), a[c], p);
    }
    return FlowParams::from_array(a);
}

json scenario_json(const ScenarioSpec& s) {
    return json{{"label", s.label},
                {"train_start", format_date(s.train_start)},
                {"train_end", format_date(s.train_end)},
                {"test_start", format_date(s.test_start)},
                {"test_end", format_date(s.test_end)},
                {"aggregation_weeks", s.aggregation_weeks}};
}

ScenarioSpec scenario_from(const json& j) {
    const std::string p = "scenario.";
    if (j.is_string()) return scenario_preset(j.get<std::string>());
    reject_unknown(j, {"preset", "label", "train_start", "train_end", "test_start", "test_end", "aggregation_weeks"},
                   p);
    ScenarioSpec s;
    if (j.contains("preset")) s = scenario_preset(get<std::string>(j, "preset", "", p));
    auto date = [&](const char* key, Date fallback, bool have) {
        if (!j.contains(key)) {
            if (!have) throw ConfigError(p + key + " is required");
            return fallback;
        }
        try {
            return parse_date(get<std::string>(j, key, "", p));
        } catch (const DataError& e) {
            throw ConfigError(p + key + ": " + e.what());
        }
    };
    const bool have = j.contains("preset");
    s.label = get(j, "label", have ? s.label : std::string("custom"), p);
    s.train_start = date("train_start", s.train_start, have);
    s.train_end = date("train_end", s.train_end, have);
    s.test_start = date("test_start", s.test_start, have);
    s.test_end = date("test_end", s.test_end, have);
    s.aggregation_weeks = get(j, "aggregation_weeks", s.aggregation_weeks, p);
    return s;
}

json prophet_json(const ProphetConfig& c) {
    return json{{"changepoints", c.changepoints},
                {"changepoint_range", c.changepoint_range},
                {"changepoint_penalty", c.changepoint_penalty},
                {"weekly", c.weekly},
                {"weekly_order", c.weekly_order},
                {"yearly", c.yearly < 0 ? json("auto") : json(c.yearly == 1)},
                {"yearly_order", c.yearly_order},
                {"fit_kappa", c.fit_kappa},
                {"seasonality_ridge", c.seasonality_ridge},
                {"irls_iterations", c.irls_iterations}};
}

ProphetConfig prophet_from(const json& j) {
    const std::string p = "prophet.";
    reject_unknown(j, {"changepoints", "changepoint_range", "changepoint_penalty", "weekly", "weekly_order", "yearly",
                       "yearly_order", "fit_kappa", "seasonality_ridge", "irls_iterations"},
                   p);
    ProphetConfig c;
    c.changepoints = get(j, "changepoints", c.changepoints, p);
    c.changepoint_range = get(j, "changepoint_range", c.changepoint_range, p);
    c.changepoint_penalty = get(j, "changepoint_penalty", c.changepoint_penalty, p);
    c.weekly = get(j, "weekly", c.weekly, p);
    c.weekly_order = get(j, "weekly_order", c.weekly_order, p);
    if (j.contains("yearly")) {
        const json& y = j["yearly"];
        if (y.is_string() && y.get<std::string>() == "auto") c.yearly = -1;
        else if (y.is_boolean()) c.yearly = y.get<bool>() ? 1 : 0;
        else throw ConfigError("prophet.yearly must be true, false or \"auto\"");
    }
    c.yearly_order = get(j, "yearly_order", c.yearly_order, p);
    c.fit_kappa = get(j, "fit_kappa", c.fit_kappa, p);
    c.seasonality_ridge = get(j, "seasonality_ridge", c.seasonality_ridge, p);
    c.irls_iterations = get(j, "irls_iterations", c.irls_iterations, p);
    return c;
}

json to_json_object(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["K"] = c.K;
    j["S"] = c.S;
    j["likelihood_range"] = c.likelihood_range == LikelihoodRange::AsPrinted ? "as_printed" : "conditional";
    json prior{{"beta", c.prior.kind == BetaPriorKind::Dirichlet ? "dirichlet" : "flat"}};
    if (c.prior.kind == BetaPriorKind::Dirichlet) prior["concentration"] = c.prior.concentration;
    j["prior"] = prior;
    j["nu"] = c.nu ? json(*c.nu) : json("moments");
    j["mcmc"] = mcmc_json(c.mcmc);
    const SimulationConfig& s = c.simulation;
    j["simulation"] = json{{"start", s.start},         {"days", s.days},
                           {"test_days", s.test_days}, {"calendar", s.calendar},
                           {"theta", theta_json(s.theta)}, {"nu", s.nu},
                           {"beta", s.beta},           {"replicates", s.replicates},
                           {"init_mean", s.init_mean}, {"max_attempts", s.max_attempts}};
    j["scenario"] = c.scenario ? scenario_json(*c.scenario) : json(nullptr);
    json models = json::array();
    for (Model m : c.models) models.push_back(std::string(to_string(m)));
    j["models"] = models;
    j["predict"] = json{{"horizon", c.predict.horizon}, {"draws", c.predict.draws}};
    j["prophet"] = prophet_json(c.prophet);
    j["eval"] = json{{"deltas", c.eval.deltas}, {"burn_in_weeks", c.eval.burn_in_weeks}};
    j["out"] = c.out;
    return j;
}

} // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.eval.deltas = default_deltas();
    return c;
}

void RunConfig::validate() const {
    if (K < 1) throw ConfigError("K must be >= 1");
    if (S < 1 || 1440 % S != 0) throw ConfigError("S must be a positive divisor of 1440");
    try {
        prior.validate(static_cast<std::size_t>(S));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("prior: ") + e.what());
    }
    if (nu && !(*nu > 0.0 && std::isfinite(*nu))) throw ConfigError("nu must be > 0 or \"moments\"");
    mcmc.validate();
    const SimulationConfig& s = simulation;
    try {
        (void)parse_date(s.start);
    } catch (const DataError& e) {
        throw ConfigError(std::string("simulation.start: ") + e.what());
    }
    if (s.days <= K) throw ConfigError("simulation.days must exceed K (got " + std::to_string(s.days) + ")");
    if (s.test_days < 0) throw ConfigError("simulation.test_days must be >= 0");
    if (s.calendar.empty()) throw ConfigError("simulation.calendar must be 'lyon', 'all_ord' or a file path");
    try {
        s.theta.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("simulation.theta: ") + e.what());
    }
    if (!(s.nu > 0.0)) throw ConfigError("simulation.nu must be > 0");
    if (s.beta.size() != static_cast<std::size_t>(S)) throw ConfigError("simulation.beta must have S entries");
    for (double b : s.beta) {
        if (!(b > 0.0 && std::isfinite(b))) throw ConfigError("simulation.beta entries must be > 0");
    }
    if (s.replicates < 1) throw ConfigError("simulation.replicates must be >= 1");
    if (!(s.init_mean > 0.0)) throw ConfigError("simulation.init_mean must be > 0");
    if (s.max_attempts < 1) throw ConfigError("simulation.max_attempts must be >= 1");
    if (scenario) {
        try {
            scenario->validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
    }
    if (models.empty()) throw ConfigError("models must list at least one of BHML, BASE, PROP");
    for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
            if (models[a] == models[b]) throw ConfigError("models lists a model twice");
        }
    }
    if (predict.horizon < 1) throw ConfigError("predict.horizon must be >= 1");
    if (predict.draws < 0) throw ConfigError("predict.draws must be >= 0");
    try {
        prophet.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("prophet: ") + e.what());
    }
    if (eval.deltas.empty()) throw ConfigError("eval.deltas must not be empty");
    for (std::size_t n = 0; n < eval.deltas.size(); ++n) {
        if (!(eval.deltas[n] >= 0.0) || (n > 0 && !(eval.deltas[n] > eval.deltas[n - 1]))) {
            throw ConfigError("eval.deltas must be non-negative and strictly ascending");
        }
    }
    if (eval.burn_in_weeks < 0) throw ConfigError("eval.burn_in_weeks must be >= 0");
    if (out.empty()) throw ConfigError("out must not be empty");
}

std::string RunConfig::to_json() const { return to_json_object(*this).dump(2) + "\n"; }

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"seed", "K", "S", "likelihood_range", "prior", "nu", "mcmc", "simulation", "scenario", "models",
                       "predict", "prophet", "eval", "out"},
                   "");
    RunConfig c = defaults();
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.K = get(j, "K", c.K, "");
    c.S = get(j, "S", c.S, "");
    const std::string range = get<std::string>(j, "likelihood_range", "as_printed", "");
    if (range == "conditional") c.likelihood_range = LikelihoodRange::Conditional;
    else if (range != "as_printed") throw ConfigError("likelihood_range must be 'as_printed' or 'conditional'");
    if (j.contains("prior") && !j["prior"].is_null()) {
        const json& p = j["prior"];
        reject_unknown(p, {"beta", "concentration"}, "prior.");
        const std::string kind = get<std::string>(p, "beta", "flat", "prior.");
        if (kind == "dirichlet") {
            c.prior.kind = BetaPriorKind::Dirichlet;
            c.prior.concentration = get(p, "concentration", std::vector<double>(static_cast<std::size_t>(std::max(c.S, 0)), 1.0),
                                        "prior.");
        } else if (kind != "flat") {
            throw ConfigError("prior.beta must be 'flat' or 'dirichlet'");
        }
    }
    if (j.contains("nu") && !j["nu"].is_null()) {
        const json& n = j["nu"];
        if (n.is_string()) {
            if (n.get<std::string>() != "moments") throw ConfigError("nu must be a number or \"moments\"");
        } else if (n.is_number()) {
            c.nu = n.get<double>();
        } else {
            throw ConfigError("nu must be a number or \"moments\"");
        }
    }
    if (j.contains("mcmc") && !j["mcmc"].is_null()) c.mcmc = mcmc_from(j["mcmc"], c.seed);
    c.mcmc.seed = c.seed;
    if (j.contains("simulation") && !j["simulation"].is_null()) {
        const json& s = j["simulation"];
        const std::string p = "simulation.";
        reject_unknown(s, {"start", "days", "test_days", "calendar", "theta", "nu", "beta", "replicates", "init_mean",
                           "max_attempts"},
                       p);
        SimulationConfig& sc = c.simulation;
        sc.start = get(s, "start", sc.start, p);
        sc.days = get(s, "days", sc.days, p);
        sc.test_days = get(s, "test_days", sc.test_days, p);
        sc.calendar = get(s, "calendar", sc.calendar, p);
        if (s.contains("theta")) sc.theta = theta_from(s["theta"]);
        sc.nu = get(s, "nu", sc.nu, p);
        sc.beta = get(s, "beta", sc.beta, p);
        sc.replicates = get(s, "replicates", sc.replicates, p);
        sc.init_mean = get(s, "init_mean", sc.init_mean, p);
        sc.max_attempts = get(s, "max_attempts", sc.max_attempts, p);
    }
    if (j.contains("scenario") && !j["scenario"].is_null()) c.scenario = scenario_from(j["scenario"]);
    if (j.contains("models")) {
        c.models.clear();
        for (const auto& m : get<std::vector<std::string>>(j, "models", {}, "")) c.models.push_back(parse_model(m));
    }
    if (j.contains("predict") && !j["predict"].is_null()) {
        reject_unknown(j["predict"], {"horizon", "draws"}, "predict.");
        c.predict.horizon = get(j["predict"], "horizon", c.predict.horizon, "predict.");
        c.predict.draws = get(j["predict"], "draws", c.predict.draws, "predict.");
    }
    if (j.contains("prophet") && !j["prophet"].is_null()) c.prophet = prophet_from(j["prophet"]);
    if (j.contains("eval") && !j["eval"].is_null()) {
        reject_unknown(j["eval"], {"deltas", "burn_in_weeks"}, "eval.");
        c.eval.deltas = get(j["eval"], "deltas", c.eval.deltas, "eval.");
        c.eval.burn_in_weeks = get(j["eval"], "burn_in_weeks", c.eval.burn_in_weeks, "eval.");
    }
    c.out = get(j, "out", c.out, "");
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string RunConfig::hash() const {
    json j = to_json_object(*this);
    j.erase("out");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool RunConfig::operator==(const RunConfig& o) const {
    auto mcmc_eq = [](const McmcConfig& a, const McmcConfig& b) {
        return a.chains == b.chains && a.warmup_iters == b.warmup_iters && a.keep_iters == b.keep_iters &&
               a.thin == b.thin && a.target_accept == b.target_accept && a.proposal == b.proposal &&
               a.adapt_window == b.adapt_window && same_double(a.initial_scale, b.initial_scale) &&
               same_double(a.init_jitter, b.init_jitter) && a.parallel == b.parallel;
    };
    auto scen_eq = [](const std::optional<ScenarioSpec>& a, const std::optional<ScenarioSpec>& b) {
        if (a.has_value() != b.has_value()) return false;
        if (!a) return true;
        return a->label == b->label && a->train_start == b->train_start && a->train_end == b->train_end &&
               a->test_start == b->test_start && a->test_end == b->test_end &&
               a->aggregation_weeks == b->aggregation_weeks;
    };
    auto prophet_eq = [](const ProphetConfig& a, const ProphetConfig& b) {
        return a.changepoints == b.changepoints && a.changepoint_range == b.changepoint_range &&
               a.changepoint_penalty == b.changepoint_penalty && a.weekly == b.weekly &&
               a.weekly_order == b.weekly_order && a.yearly == b.yearly && a.yearly_order == b.yearly_order &&
               a.fit_kappa == b.fit_kappa && a.seasonality_ridge == b.seasonality_ridge &&
               a.irls_iterations == b.irls_iterations;
    };
    return seed == o.seed && K == o.K && S == o.S && likelihood_range == o.likelihood_range &&
           prior.kind == o.prior.kind && prior.concentration == o.prior.concentration && nu == o.nu &&
           mcmc_eq(mcmc, o.mcmc) && simulation.start == o.simulation.start &&
           simulation.days == o.simulation.days && simulation.test_days == o.simulation.test_days &&
           simulation.calendar == o.simulation.calendar &&
           simulation.theta.to_array() == o.simulation.theta.to_array() && simulation.nu == o.simulation.nu &&
           simulation.beta == o.simulation.beta && simulation.replicates == o.simulation.replicates &&
           simulation.init_mean == o.simulation.init_mean && simulation.max_attempts == o.simulation.max_attempts &&
           scen_eq(scenario, o.scenario) && models == o.models && predict == o.predict &&
           prophet_eq(prophet, o.prophet) && eval == o.eval && out == o.out;
}

} // namespace waitflow
