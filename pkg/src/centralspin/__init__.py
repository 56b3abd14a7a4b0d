"""Driven-dissipative central spin model: exact and perturbative steady states."""

from .errors import *  # noqa: F401,F403
from .params import ModelParams, SpinExpectations, beta_to_polarization, derived_scales

__version__ = "0.1.0"
