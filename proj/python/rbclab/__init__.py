"""Rayleigh-Benard DNS, heat-transport diagnostics and Stokes certification."""

from ._core import *  # noqa: F401,F403
from ._core import Error, ConfigError, ParameterError, FitError, DomainError  # noqa: F401

__version__ = "0.1.0"
