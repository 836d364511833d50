// Python bindings for the waitflow core. Dates cross the boundary as YYYY-MM-DD strings.
#include <waitflow/calendar.hpp>
#include <waitflow/config.hpp>
#include <waitflow/error.hpp>
#include <waitflow/eval.hpp>
#include <waitflow/flow_model.hpp>
#include <waitflow/pipeline.hpp>
#include <waitflow/waiting_model.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <utility>
#include <vector>

namespace py = pybind11;
namespace wf = waitflow;
namespace pl = waitflow::pipeline;

namespace {

wf::FlowSeries make_series(const std::string& start, const std::vector<std::string>& types,
                           std::vector<double> flows) {
    std::vector<wf::DayType> dt;
    dt.reserve(types.size());
    for (const auto& t : types) dt.push_back(wf::parse_day_type(t));
    wf::ServiceCalendar cal(wf::parse_date(start), std::move(dt));
    return wf::FlowSeries(std::move(cal), std::move(flows));
}

wf::LikelihoodRange parse_range(const std::string& s) {
    if (s == "as_printed") return wf::LikelihoodRange::AsPrinted;
    if (s == "conditional") return wf::LikelihoodRange::Conditional;
    throw wf::ConfigError("likelihood_range must be as_printed or conditional, got " + s);
}

py::dict report(const pl::Report& r) {
    py::dict d;
    d["command"] = r.command;
    d["outputs"] = r.outputs;
    d["warnings"] = r.warnings;
    d["rhat_warning"] = r.rhat_warning;
    return d;
}

wf::RunConfig config(const std::string& json) {
    wf::RunConfig c = wf::RunConfig::from_json(json);
    c.validate();
    return c;
}

} // namespace

PYBIND11_MODULE(_waitflow, m) {
    m.doc() = "Day-type flow and Gamma waiting-time models";

    py::register_exception<wf::DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<wf::RangeError>(m, "RangeError", PyExc_IndexError);
    py::register_exception<wf::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<wf::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<wf::SimulationError>(m, "SimulationError", PyExc_RuntimeError);
    py::register_exception<wf::ImproperPosteriorError>(m, "ImproperPosteriorError", PyExc_RuntimeError);
    py::register_exception<wf::SamplerError>(m, "SamplerError", PyExc_RuntimeError);

    py::class_<wf::FlowParams>(m, "FlowParams")
        .def(py::init([](double a_ord, double a_sch, double a_pwe, double e_sch, double e_pwe, double s2) {
                 wf::FlowParams p{a_ord, a_sch, a_pwe, e_sch, e_pwe, s2};
                 p.validate();
                 return p;
             }),
             py::arg("alpha_ord"), py::arg("alpha_sch"), py::arg("alpha_pwe"), py::arg("eta_sch") = 1.0,
             py::arg("eta_pwe") = 1.0, py::arg("sigma2_eps") = 1.0)
        .def_readwrite("alpha_ord", &wf::FlowParams::alpha_ord)
        .def_readwrite("alpha_sch", &wf::FlowParams::alpha_sch)
        .def_readwrite("alpha_pwe", &wf::FlowParams::alpha_pwe)
        .def_readwrite("eta_sch", &wf::FlowParams::eta_sch)
        .def_readwrite("eta_pwe", &wf::FlowParams::eta_pwe)
        .def_readwrite("sigma2_eps", &wf::FlowParams::sigma2_eps)
        .def("__repr__", [](const wf::FlowParams& p) {
            return "FlowParams(alpha_ord=" + std::to_string(p.alpha_ord) + ", alpha_sch=" +
                   std::to_string(p.alpha_sch) + ", alpha_pwe=" + std::to_string(p.alpha_pwe) +
                   ", eta_sch=" + std::to_string(p.eta_sch) + ", eta_pwe=" + std::to_string(p.eta_pwe) +
                   ", sigma2_eps=" + std::to_string(p.sigma2_eps) + ")";
        });

    m.def(
        "flow_log_likelihood",
        [](const wf::FlowParams& p, const std::string& start, const std::vector<std::string>& types,
           std::vector<double> flows, int K, const std::string& range) {
            return wf::flow_log_likelihood(p, make_series(start, types, std::move(flows)), wf::FlowOrder(K),
                                           parse_range(range));
        },
        py::arg("params"), py::arg("start"), py::arg("day_types"), py::arg("flows"), py::arg("K") = 3,
        py::arg("likelihood_range") = "as_printed");
    m.def(
        "flow_log_posterior",
        [](const wf::FlowParams& p, const std::string& start, const std::vector<std::string>& types,
           std::vector<double> flows, int K, const std::string& range) {
            return wf::flow_log_posterior(p, make_series(start, types, std::move(flows)), wf::FlowOrder(K),
                                          parse_range(range));
        },
        py::arg("params"), py::arg("start"), py::arg("day_types"), py::arg("flows"), py::arg("K") = 3,
        py::arg("likelihood_range") = "as_printed");

    m.def(
        "lyon_calendar",
        [](const std::string& start, std::size_t days) {
            const wf::ServiceCalendar cal = wf::generate_calendar(wf::parse_date(start), days, wf::lyon_rules());
            std::vector<std::pair<std::string, std::string>> rows;
            for (std::size_t i = 1; i <= cal.size(); ++i)
                rows.emplace_back(wf::format_date(cal.date(i)), std::string(wf::to_string(cal.day_type(i))));
            return rows;
        },
        py::arg("start"), py::arg("days"), "(date, day_type) rows of the built-in lyon calendar.");

    m.def(
        "pseudo_waits_from_events",
        [](const std::vector<double>& requests, const std::vector<double>& arrivals) {
            const wf::EventWaits w = wf::pseudo_waits_from_events(requests, arrivals);
            return std::make_pair(w.pseudo, w.perceived);
        },
        py::arg("requests"), py::arg("arrivals"), "(pseudo, perceived) waits from one day's FIFO events.");

    m.def(
        "pe_metric",
        [](const std::vector<std::vector<double>>& observed, const std::vector<double>& mean, double delta) {
            return wf::pe_metric_cells(observed, mean, delta);
        },
        py::arg("observed"), py::arg("predicted_mean"), py::arg("delta"));

    m.def(
        "weekly_mse",
        [](const std::vector<double>& observed, const std::vector<double>& predicted, const std::string& start) {
            const wf::ServiceCalendar cal(wf::parse_date(start),
                                          std::vector<wf::DayType>(observed.size(), wf::DayType::Ord));
            py::list out;
            for (const auto& w : wf::weekly_mse(observed, predicted, cal)) {
                py::dict d;
                d["week_start"] = wf::format_date(w.week_start);
                d["mse"] = w.mse;
                d["days"] = w.days;
                d["partial"] = w.partial;
                out.append(d);
            }
            return out;
        },
        py::arg("observed"), py::arg("predicted"), py::arg("start"));

    m.def("default_config", [] { return wf::RunConfig::defaults().to_json(); });
    m.def("config_hash", [](const std::string& json) { return config(json).hash(); }, py::arg("config"));

    m.def(
        "simulate", [](const std::string& c, const pl::fs::path& out) { return report(pl::simulate(config(c), out)); },
        py::arg("config"), py::arg("out"));
    m.def(
        "fit_flow",
        [](const std::string& c, const pl::fs::path& data, const pl::fs::path& out) {
            return report(pl::fit_flow(config(c), data, out));
        },
        py::arg("config"), py::arg("data"), py::arg("out"));
    m.def(
        "fit_wait",
        [](const std::string& c, const pl::fs::path& data, const pl::fs::path& out) {
            return report(pl::fit_wait(config(c), data, out));
        },
        py::arg("config"), py::arg("data"), py::arg("out"));
    m.def(
        "predict_flow",
        [](const std::string& c, const pl::fs::path& data, const pl::fs::path& fit, const pl::fs::path& out,
           bool in_sample) { return report(pl::predict_flow(config(c), data, fit, out, {in_sample})); },
        py::arg("config"), py::arg("data"), py::arg("fit"), py::arg("out"), py::arg("in_sample") = false);
    m.def(
        "predict_wait",
        [](const std::string& c, const pl::fs::path& fit, const pl::fs::path& out, const std::string& mode,
           const pl::fs::path& flows) {
            pl::PredictWaitOptions o;
            if (mode == "given_flow") o.mode = pl::WaitMode::GivenFlow;
            else if (mode == "marginal") o.mode = pl::WaitMode::Marginal;
            else throw wf::ConfigError("mode must be given_flow or marginal, got " + mode);
            o.flows = flows;
            return report(pl::predict_wait(config(c), fit, out, o));
        },
        py::arg("config"), py::arg("fit"), py::arg("out"), py::arg("mode") = "given_flow",
        py::arg("flows") = pl::fs::path{});
    m.def(
        "evaluate",
        [](const std::string& c, const pl::fs::path& out, const pl::fs::path& calendar,
           const pl::fs::path& flows_truth, const pl::fs::path& flows_pred, const pl::fs::path& waits_truth,
           const pl::fs::path& waits_pred, bool in_sample) {
            return report(pl::evaluate(config(c),
                                       {calendar, flows_truth, flows_pred, waits_truth, waits_pred, in_sample}, out));
        },
        py::arg("config"), py::arg("out"), py::arg("calendar") = pl::fs::path{},
        py::arg("flows_truth") = pl::fs::path{}, py::arg("flows_pred") = pl::fs::path{},
        py::arg("waits_truth") = pl::fs::path{}, py::arg("waits_pred") = pl::fs::path{},
        py::arg("in_sample") = false);
    m.def(
        "scenario",
        [](const std::string& c, const pl::fs::path& data, const pl::fs::path& out) {
            return report(pl::scenario(config(c), data, out));
        },
        py::arg("config"), py::arg("data"), py::arg("out"));
}
