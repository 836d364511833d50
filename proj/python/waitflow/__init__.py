"""Day-type driver flows and Gamma waiting times for a ride-sharing lane."""

import json

from ._waitflow import (
    ConfigError,
    DataError,
    DomainError,
    FlowParams,
    ImproperPosteriorError,
    RangeError,
    SamplerError,
    SimulationError,
    config_hash,
    default_config,
    evaluate,
    fit_flow,
    fit_wait,
    flow_log_likelihood,
    flow_log_posterior,
    lyon_calendar,
    pe_metric,
    predict_flow,
    predict_wait,
    pseudo_waits_from_events,
    scenario,
    simulate,
    weekly_mse,
)


def config(**overrides):
    """Default run configuration as a JSON string, with top-level keys replaced."""
    cfg = json.loads(default_config())
    for key, value in overrides.items():
        if key not in cfg:
            raise KeyError(key)
        cfg[key] = value
    return json.dumps(cfg)


__all__ = [
    "ConfigError",
    "DataError",
    "DomainError",
    "FlowParams",
    "ImproperPosteriorError",
    "RangeError",
    "SamplerError",
    "SimulationError",
    "config",
    "config_hash",
    "default_config",
    "evaluate",
    "fit_flow",
    "fit_wait",
    "flow_log_likelihood",
    "flow_log_posterior",
    "lyon_calendar",
    "pe_metric",
    "predict_flow",
    "predict_wait",
    "pseudo_waits_from_events",
    "scenario",
    "simulate",
    "weekly_mse",
]
