import json
import math

import pytest

import waitflow as wf


def small_config(tmp_path, **mcmc):
    cfg = json.loads(wf.default_config())
    cfg["mcmc"].update({"chains": 2, "warmup": 200, "iterations": 300, "parallel": False, **mcmc})
    cfg["predict"]["draws"] = 50
    cfg["out"] = str(tmp_path)
    return json.dumps(cfg)


def test_flow_likelihood_matches_fixture():
    p = wf.FlowParams(0.32, 0.3, 0.3, 1.0, 1.0, 2.0)
    flows = [10.0, 11.0, 9.5, 10.2, 10.8]
    types = ["ORD"] * 5
    ll = wf.flow_log_likelihood(p, "2018-01-01", types, flows, K=3)
    lp = wf.flow_log_posterior(p, "2018-01-01", types, flows, K=3)
    assert math.isfinite(ll)
    assert lp == pytest.approx(ll - math.log(2.0), abs=1e-12)
    cond = wf.flow_log_likelihood(p, "2018-01-01", types, flows, K=3, likelihood_range="conditional")
    assert ll - cond == pytest.approx(-0.5 * math.log(2 * math.pi * 2.0), abs=1e-12)


def test_invalid_params_raise():
    with pytest.raises(wf.DomainError):
        wf.FlowParams(0.3, 0.3, -0.1)
    with pytest.raises(wf.ConfigError):
        wf.flow_log_likelihood(wf.FlowParams(0.3, 0.3, 0.3), "2018-01-01", ["ORD"] * 4, [1.0] * 4,
                               likelihood_range="bogus")
    with pytest.raises(ValueError):
        wf.lyon_calendar("2018-02-30", 3)


def test_lyon_calendar_christmas():
    rows = dict(wf.lyon_calendar("2018-12-24", 3))
    assert rows["2018-12-25"] == "PWE"
    assert rows["2018-12-24"] == "SCH"


def test_pseudo_never_exceeds_perceived():
    pseudo, perceived = wf.pseudo_waits_from_events([1.0, 2.0, 3.0], [5.0, 6.0, 7.0])
    assert pseudo == [4.0, 1.0, 1.0]
    assert perceived == [4.0, 4.0, 4.0]
    assert pseudo[0] == perceived[0]


def test_metrics():
    assert wf.pe_metric([[1.0, 2.0], [5.0]], [1.5, 9.0], 1.0) == pytest.approx(2 / 3)
    weeks = wf.weekly_mse([1.0] * 7, [3.0] * 7, "2018-01-01")
    assert len(weeks) == 1
    assert weeks[0]["mse"] == pytest.approx(4.0)
    assert not weeks[0]["partial"]


def test_config_hash_ignores_out(tmp_path):
    a = small_config(tmp_path / "a")
    b = small_config(tmp_path / "b")
    assert wf.config_hash(a) == wf.config_hash(b)
    with pytest.raises(wf.ConfigError):
        wf.config_hash(json.dumps({**json.loads(a), "K": 0}))


def test_pipeline_end_to_end(tmp_path):
    cfg = json.loads(small_config(tmp_path))
    cfg["nu"] = 7.0
    cfg["predict"]["horizon"] = cfg["simulation"]["test_days"]
    cfg = json.dumps(cfg)
    sim = wf.simulate(cfg, tmp_path / "sim")
    assert any(str(p).endswith("flows.csv") for p in sim["outputs"])
    wf.fit_flow(cfg, tmp_path / "sim", tmp_path / "fit")
    wf.fit_wait(cfg, tmp_path / "sim", tmp_path / "fit")
    wf.predict_flow(cfg, tmp_path / "sim", tmp_path / "fit", tmp_path / "pred")
    wf.predict_wait(cfg, tmp_path / "fit", tmp_path / "pred", mode="marginal",
                    flows=tmp_path / "pred" / "predictive_flows.csv")
    rep = wf.evaluate(cfg, tmp_path / "eval", calendar=tmp_path / "sim" / "calendar.csv",
                      flows_truth=tmp_path / "sim" / "flows_test.csv",
                      flows_pred=tmp_path / "pred" / "predictive_flows.csv",
                      waits_truth=tmp_path / "sim" / "waits_test.csv",
                      waits_pred=tmp_path / "pred" / "predictive_wait_means.csv")
    metrics = json.loads((tmp_path / "eval" / "metrics.json").read_text())
    assert rep["command"] == "evaluate"
    curve = [v for _, v in metrics["waits"]["pe_curve"]]
    assert all(0.0 <= v <= 1.0 for v in curve)
    assert curve == sorted(curve)


def test_missing_data_raises(tmp_path):
    with pytest.raises(wf.DataError):
        wf.fit_flow(small_config(tmp_path), tmp_path / "nothing", tmp_path / "fit")
