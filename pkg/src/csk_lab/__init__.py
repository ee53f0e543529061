"""Chaos shift keying over error-free decode-and-forward relay networks."""

from .chaos_maps import MapKind, MapTag, ChaoticSequence, generate_sequence
from .df_relay_network import NetworkConfig, transmit_frame
from .energy_stats import GeneralizedGammaParams, collect_alpha, fit_ggamma
from .analytic_ber import ber_mgf, ber_quadrature, mgf_series_from_fit
from .config import ConfigError, ExperimentConfig, parse_config
from .harness import BerCurve, run_compare, run_fit_study, run_sweep

__version__ = "0.1.0"

__all__ = [
    "MapKind",
    "MapTag",
    "ChaoticSequence",
    "generate_sequence",
    "NetworkConfig",
    "transmit_frame",
    "GeneralizedGammaParams",
    "collect_alpha",
    "fit_ggamma",
    "ber_mgf",
    "ber_quadrature",
    "mgf_series_from_fit",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "BerCurve",
    "run_sweep",
    "run_fit_study",
    "run_compare",
]
