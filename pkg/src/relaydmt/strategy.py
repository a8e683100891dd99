"""Finite-SNR rates and outage predicates for each relaying strategy.

These are the cut-set expressions with the SNR-independent gap constants
dropped, evaluated in nats. Every function accepts scalar draws or numpy
arrays of draws (one entry per realization) and broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from relaydmt.core import ChannelExponents, exponent_order
from relaydmt.errors import DomainError, ValidationError

__all__ = [
    "FadingDraw",
    "ParallelFadingDraw",
    "ParallelSchedule",
    "Schedule",
    "ddf_listen_fraction",
    "ddf_outage",
    "dynamic_qmf_schedule",
    "parallel_cut_rates",
    "parallel_dynamic_schedule",
    "parallel_outage",
    "qmf_outage",
    "rate_full_duplex",
    "rate_half_duplex_cutset",
]


def _gains(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or not np.all(arr > 0):
        raise ValidationError(f"{name} must be strictly positive and finite")
    return arr


def _fraction(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ValidationError(f"{name} must lie in [0, 1]")
    return arr


def _check_rho(rho):
    rho = float(rho)
    if not rho > 1.0:
        raise DomainError(f"rho must exceed 1, got {rho}")
    return rho


@dataclass(frozen=True)
class FadingDraw:
    """Squared link magnitudes ``|h|^2`` of one (or a batch of) quasi-static realizations."""

    g_sr: object
    g_rd: object
    g_sd: object

    def __post_init__(self):
        for name in ("g_sr", "g_rd", "g_sd"):
            object.__setattr__(self, name, _gains(name, getattr(self, name)))


@dataclass(frozen=True)
class ParallelFadingDraw:
    """Gains of the two-relay network: S-R1, S-R2, R1-D, R2-D."""

    g_sr1: object
    g_sr2: object
    g_r1d: object
    g_r2d: object

    def __post_init__(self):
        for name in ("g_sr1", "g_sr2", "g_r1d", "g_r2d"):
            object.__setattr__(self, name, _gains(name, getattr(self, name)))


@dataclass(frozen=True)
class Schedule:
    """Fraction ``t`` of the block the relay spends listening."""

    t: object

    def __post_init__(self):
        object.__setattr__(self, "t", _fraction("t", self.t))


@dataclass(frozen=True)
class ParallelSchedule:
    t1: object
    t2: object

    def __post_init__(self):
        object.__setattr__(self, "t1", _fraction("t1", self.t1))
        object.__setattr__(self, "t2", _fraction("t2", self.t2))


def rate_full_duplex(d: FadingDraw, x: ChannelExponents, rho: float):
    """Full-duplex cut-set: the weaker of the broadcast and multiple-access cuts."""
    rho = _check_rho(rho)
    direct = d.g_sd * rho**x.c
    return np.minimum(np.log1p(d.g_sr * rho**x.a + direct), np.log1p(d.g_rd * rho**x.b + direct))


def rate_half_duplex_cutset(d: FadingDraw, x: ChannelExponents, rho: float, s: Schedule):
    """Half-duplex cut-set with the relay listening for a fraction ``s.t``."""
    rho = _check_rho(rho)
    t = s.t
    direct = np.log1p(d.g_sd * rho**x.c)
    listen = np.log1p(d.g_sr * rho**x.a + d.g_sd * rho**x.c)
    talk = np.log1p(d.g_sd * rho**x.c + d.g_rd * rho**x.b)
    return np.minimum(t * listen + (1.0 - t) * direct, t * direct + (1.0 - t) * talk)


def ddf_listen_fraction(d: FadingDraw, x: ChannelExponents, rho: float, r: float):
    """Time the relay needs to decode; above 1 it never finishes."""
    rho = _check_rho(rho)
    return r * np.log(rho) / np.log1p(d.g_sr * rho**x.a)


def ddf_outage(d: FadingDraw, x: ChannelExponents, rho: float, r: float):
    """Dynamic decode-and-forward outage.

    If the relay cannot decode within the block only the direct link
    counts; otherwise the S,R-D cut with the decoding time as listen phase.
    """
    rho = _check_rho(rho)
    target = r * np.log(rho)
    frac = ddf_listen_fraction(d, x, rho, r)
    t = np.minimum(frac, 1.0)
    direct = np.log1p(d.g_sd * rho**x.c)
    talk = np.log1p(d.g_sd * rho**x.c + d.g_rd * rho**x.b)
    helped = t * direct + (1.0 - t) * talk
    return np.where(frac > 1.0, direct < target, helped < target)


def dynamic_qmf_schedule(alpha_order, r: float) -> Schedule:
    """Listen time ``1 - alpha (1 - r)`` chosen from the observed S-R order."""
    return Schedule(np.clip(1.0 - np.asarray(alpha_order, dtype=float) * (1.0 - r), 0.0, 1.0))


def qmf_outage(d: FadingDraw, x: ChannelExponents, rho: float, r: float, s: Schedule):
    """Quantize-map-and-forward outage for schedule ``s`` (static or dynamic)."""
    return rate_half_duplex_cutset(d, x, rho, s) < r * np.log(_check_rho(rho))


def parallel_cut_rates(d: ParallelFadingDraw, rho: float, t1, t2):
    """Smallest of the four half-duplex cuts of the two-relay network (unit SNR exponents)."""
    rho = _check_rho(rho)
    t1 = _fraction("t1", t1)
    t2 = _fraction("t2", t2)
    l_sr1, l_sr2 = np.log1p(d.g_sr1 * rho), np.log1p(d.g_sr2 * rho)
    l_r1d, l_r2d = np.log1p(d.g_r1d * rho), np.log1p(d.g_r2d * rho)
    cuts = (
        t1 * l_sr1 + t2 * l_sr2,
        t2 * l_sr2 + (1.0 - t1) * l_r1d,
        t1 * l_sr1 + (1.0 - t2) * l_r2d,
        (1.0 - t1) * l_r1d + (1.0 - t2) * l_r2d,
    )
    return np.minimum(np.minimum(cuts[0], cuts[1]), np.minimum(cuts[2], cuts[3]))


def parallel_dynamic_schedule(d: ParallelFadingDraw, rho: float, r: float) -> ParallelSchedule:
    """Each relay applies the dynamic QMF rule to its own incoming order."""
    t1 = dynamic_qmf_schedule(exponent_order(d.g_sr1, rho, 1.0), r).t
    t2 = dynamic_qmf_schedule(exponent_order(d.g_sr2, rho, 1.0), r).t
    return ParallelSchedule(t1, t2)


def parallel_outage(d: ParallelFadingDraw, rho: float, r: float, s: ParallelSchedule):
    return parallel_cut_rates(d, rho, s.t1, s.t2) < r * np.log(_check_rho(rho))
