"""Asynchronous MDI-QKD with post-matching: finite-key rates and simulation."""

from asyncmdi.channel import ChannelConfig, SourceConfig
from asyncmdi.drift import DriftConfig
from asyncmdi.exceptions import DomainError, NumericError, ParameterError, ScenarioMismatchError
from asyncmdi.keyrate import KeyRateResult, SecurityConfig, evaluate, plob_bound
from asyncmdi.matching import MatchingConfig
from asyncmdi.montecarlo import simulate, validate
from asyncmdi.optimizer import SearchSpace, optimize
from asyncmdi.scenario import Scenario, load_scenario

__all__ = [
    "ChannelConfig",
    "DomainError",
    "DriftConfig",
    "KeyRateResult",
    "MatchingConfig",
    "NumericError",
    "ParameterError",
    "Scenario",
    "ScenarioMismatchError",
    "SearchSpace",
    "SecurityConfig",
    "SourceConfig",
    "evaluate",
    "load_scenario",
    "optimize",
    "plob_bound",
    "simulate",
    "validate",
]
__version__ = "0.1.0"
