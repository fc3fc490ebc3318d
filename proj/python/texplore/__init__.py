"""Targeted exploration input design for linear systems."""

import json

from . import _texplore
from ._texplore import (
    ConfigError,
    InfeasibleError,
    ResourceError,
    hermitian_embed,
    rls_estimate,
    simulate,
    spectral_amplitude,
    synth_multisine,
)

__all__ = [
    "ConfigError",
    "InfeasibleError",
    "ResourceError",
    "constants",
    "design",
    "hermitian_embed",
    "paper_example_config",
    "rls_estimate",
    "simulate",
    "spectral_amplitude",
    "sweep",
    "synth_multisine",
    "validate",
]


def paper_example_config():
    return json.loads(_texplore.paper_example_config())


def design(config=None, preset=""):
    return json.loads(_texplore.design(json.dumps(config or {}), preset))


def validate(config, design_result, replicas, preset=""):
    return json.loads(_texplore.validate(json.dumps(config or {}), json.dumps(design_result), replicas, preset))


def sweep(config, T_list, ddes_per_T, preset=""):
    return _texplore.sweep(json.dumps(config or {}), [int(t) for t in T_list], ddes_per_T, preset)


def constants(config=None, preset=""):
    return json.loads(_texplore.constants(json.dumps(config or {}), preset))
