"""Python bindings for the nextmon prediction core.

Dict-valued configuration (coders, run configs) is accepted as plain Python
objects and passed to the extension as JSON.
"""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    DomainError,
    Horizon,
    HouseParams,
    HouseState,
    InputError,
    NextmonError,
    ParseError,
    PredictorBank,
    RunArtifacts,
    RunConfig,
    SimulationFault,
    control_hysteresis,
    demo_watertank,
    detect_switch_events,
    gamma_from_tau,
    ideal_prediction,
    load_config,
    replay,
    rmse,
    run_experiment,
    step_house,
    watertank_config,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Horizon",
    "HouseParams",
    "HouseState",
    "InputError",
    "NextmonError",
    "Nexter",
    "ParseError",
    "PredictorBank",
    "RunArtifacts",
    "RunConfig",
    "SimulationFault",
    "TileCoder",
    "control_hysteresis",
    "demo_watertank",
    "detect_switch_events",
    "gamma_from_tau",
    "ideal_prediction",
    "load_config",
    "metrics",
    "parse_config",
    "replay",
    "rmse",
    "run_experiment",
    "step_house",
    "watertank_config",
]


def _text(value):
    return value if isinstance(value, str) else _json.dumps(value)


def TileCoder(coder, layout):
    """Tile coder with history; `coder` is a dict with "groups" and "history_depth"."""
    return _core.TileCoder(_text(coder), list(layout))


def Nexter(coder, layout, horizons, reward_channel, alpha=None, lam=0.9):
    """Streaming encode, update, predict loop over one pseudo-reward channel."""
    return _core.Nexter(_text(coder), list(layout), list(horizons), alpha=alpha, lam=lam, reward_channel=reward_channel)


def parse_config(config, base_dir=""):
    """Builds a RunConfig from a dict; relative paths resolve against base_dir."""
    return _core.parse_config(_text(config), base_dir)


def metrics(artifacts):
    """Per-horizon metrics of a run as a dict."""
    return _json.loads(artifacts.metrics_json())
