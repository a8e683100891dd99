"""Generalized DMT of half-duplex relay channels.

Closed-form tradeoff curves, an outage-exponent optimizer that reproduces
them independently, and a Rayleigh-fading Monte Carlo estimator for the
finite-SNR slopes.
"""

from relaydmt.core import (
    ChannelExponents,
    DMTCurve,
    ExponentVector,
    ParallelExponentVector,
    Regime,
    classify_regime,
    d_ddf,
    d_full_duplex,
    d_local_csi_bound,
    d_parallel,
    d_static_qmf,
    exponent_order,
)
from relaydmt.errors import (
    DomainError,
    InsufficientDataError,
    RelayDMTError,
    UnsupportedConfigurationError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelExponents",
    "DMTCurve",
    "DomainError",
    "ExponentVector",
    "InsufficientDataError",
    "ParallelExponentVector",
    "Regime",
    "RelayDMTError",
    "UnsupportedConfigurationError",
    "ValidationError",
    "classify_regime",
    "d_ddf",
    "d_full_duplex",
    "d_local_csi_bound",
    "d_parallel",
    "d_static_qmf",
    "exponent_order",
]
