"""Max-SINR reception of hexagonal multicarrier transmission over doubly dispersive channels."""

from .analysis import (
    closed_form_dt,
    sinr_upper_bound,
    theoretical_sinr,
    SinrOperatingPoint,
)
from .channel import ChannelPaths, ExpUScattering, draw_paths, scattering_for_csf
from .errors import ConfigError, CoverageError, HmtError, IncompatibleGridError, ParameterError
from .hexmod import LatticeParams, SymbolFrame, demodulate, match_parameters, modulate
from .montecarlo import SinrReport, TrialConfig, estimate_sinr, sweep
from .pulse import GaussianPulse, ambiguity_gaussian, eval_pulse

__version__ = "0.1.0"

__all__ = [
    "ChannelPaths", "ConfigError", "CoverageError", "ExpUScattering", "GaussianPulse", "HmtError",
    "IncompatibleGridError", "LatticeParams", "ParameterError", "SinrOperatingPoint", "SinrReport",
    "SymbolFrame", "TrialConfig", "ambiguity_gaussian", "closed_form_dt", "demodulate", "draw_paths",
    "estimate_sinr", "eval_pulse", "match_parameters", "modulate", "scattering_for_csf",
    "sinr_upper_bound", "sweep", "theoretical_sinr",
]
