"""Probabilistic CBF safety filter with sample-based CVaR certificates."""

import json

from ._core import (
    PcbfError,
    certified_cvar_bound,
    default_config_json,
    dkw_epsilon,
    dkw_truncation_bound,
    empirical_cvar,
    filter_control,
    gaussian_cvar_closed_form,
    order_statistic_cvar,
    per_step_alpha,
    run_trial,
    shifted_cvar,
    tail_correction,
)
from ._core import run_montecarlo as _run_montecarlo


def default_config():
    return json.loads(default_config_json())


def run_montecarlo(config=None):
    """Runs the Monte Carlo study; config is a dict in the CLI's JSON layout."""
    text = json.dumps(config if config is not None else {})
    return json.loads(_run_montecarlo(text))


__all__ = [
    "PcbfError",
    "certified_cvar_bound",
    "default_config",
    "default_config_json",
    "dkw_epsilon",
    "dkw_truncation_bound",
    "empirical_cvar",
    "filter_control",
    "gaussian_cvar_closed_form",
    "order_statistic_cvar",
    "per_step_alpha",
    "run_montecarlo",
    "run_trial",
    "shifted_cvar",
    "tail_correction",
]
