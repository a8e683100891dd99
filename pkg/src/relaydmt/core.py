"""Domain types and closed-form tradeoff curves.

Every function here is plain piecewise arithmetic in float64. The DMT is
taken in the standard sense, ``log P_out / log rho -> -d``, and every
diversity is clamped at zero so that sweeps past the maximum multiplexing
gain return 0 instead of raising.
"""

from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from relaydmt.errors import DomainError, ValidationError

__all__ = [
    "ChannelExponents",
    "DMTCurve",
    "ExponentVector",
    "ParallelExponentVector",
    "Regime",
    "RegimeClassification",
    "classify_regime",
    "d_ddf",
    "d_full_duplex",
    "d_local_csi_bound",
    "d_parallel",
    "d_static_qmf",
    "exponent_order",
]


def _check_real(name, value, lo=None, hi=None):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValidationError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    if lo is not None and value < lo:
        raise ValidationError(f"{name}={value} is below {lo}")
    if hi is not None and value > hi:
        raise ValidationError(f"{name}={value} is above {hi}")
    return float(value)


def _pos(x: float) -> float:
    # `+ 0.0` turns a -0.0 into 0.0 so CSV output never shows "-0.000000"
    return max(x, 0.0) + 0.0


@dataclass(frozen=True)
class ChannelExponents:
    """SNR scaling exponents of the S-R, R-D and S-D links (rho^a, rho^b, rho^c)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, _check_real(name, getattr(self, name), lo=0.0))

    @property
    def relay_min(self) -> float:
        return min(self.a, self.b)

    @property
    def relay_max(self) -> float:
        return max(self.a, self.b)

    @property
    def symmetric(self) -> bool:
        return self.a == self.b

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class ExponentVector:
    """Fading exponent orders (alpha, beta, gamma) of |h_sr|^2, |h_rd|^2, |h_sd|^2."""

    alpha: float
    beta: float
    gamma: float
    exponents: ChannelExponents | None = None

    def __post_init__(self):
        x = self.exponents
        bounds = (x.a, x.b, x.c) if x is not None else (None, None, None)
        for name, hi in zip(("alpha", "beta", "gamma"), bounds):
            object.__setattr__(self, name, _check_real(name, getattr(self, name), lo=0.0, hi=hi))


@dataclass(frozen=True)
class ParallelExponentVector:
    """Exponent orders for the two-relay parallel network.

    ``alpha``/``gamma`` are the first-stage links S-R1/S-R2, ``beta``/``delta``
    the second-stage links R1-D/R2-D. All average SNRs share one exponent, so
    every component lives in [0, 1].
    """

    alpha: float
    gamma: float
    beta: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "gamma", "beta", "delta"):
            object.__setattr__(self, name, _check_real(name, getattr(self, name), lo=0.0, hi=1.0))


def _check_r(r) -> float:
    return _check_real("r", r, lo=0.0)


def d_full_duplex(x: ChannelExponents, r: float) -> float:
    """Full-duplex tradeoff ``(min(a,b) - r)^+ + (c - r)^+``."""
    r = _check_r(r)
    return _pos(x.relay_min - r) + _pos(x.c - r)


def d_static_qmf(x: ChannelExponents, r: float) -> float:
    """Tradeoff of QMF with the fixed half-listen/half-transmit schedule."""
    r = _check_r(r)
    m = x.relay_min
    if x.c > m:
        return _pos(m - r) + _pos(x.c - r)
    return _pos(m + x.c - 2.0 * r)


def d_ddf(x: ChannelExponents, r: float) -> float:
    """Tradeoff of dynamic decode-and-forward, valid when ``c < min(a, b)``.

    Three pieces: the full-duplex-matching line up to ``min(c, max(a,b)/2)``,
    a hyperbolic arc up to ``max(a,b)/2``, and ``ab/r - a - b + c`` beyond.
    At exact breakpoints the left piece is used; the pieces agree there.
    """
    r = _check_r(r)
    m, big, c = x.relay_min, x.relay_max, x.c
    if not c < m:
        raise DomainError(
            f"DDF closed form requires c < min(a, b); got c={c}, min(a, b)={m}"
        )
    if r <= min(c, big / 2.0):
        return _pos(m + c - 2.0 * r)
    if r < big / 2.0:
        return _pos(m - (big - c) * r / (big - r))
    return _pos(x.a * x.b / r - x.a - x.b + c)


def d_local_csi_bound(p: float, c: float, r: float) -> float:
    """Upper bound on the DMT with receive-only CSI at the relay, ``a = b = p``.

    Only established for ``c < r < p/2``; elsewhere a :class:`DomainError`
    is raised.
    """
    p = _check_real("p", p, lo=0.0)
    c = _check_real("c", c, lo=0.0)
    r = _check_r(r)
    if not c < p:
        raise DomainError(f"local-CSI bound requires c < p; got c={c}, p={p}")
    if not (c < r < p / 2.0):
        raise DomainError(
            f"local-CSI bound is established only for c < r < p/2; got r={r} (c={c}, p={p})"
        )
    return max(c, p - (p - c) * r / (p - r))


def d_parallel(r: float) -> float:
    """Optimal tradeoff of the half-duplex two-relay parallel network with CSIR."""
    r = _check_real("r", r)
    if r < 0.0 or r > 1.0:
        raise DomainError(f"parallel-relay tradeoff is defined for 0 <= r <= 1; got r={r}")
    if r <= 0.5:
        return 2.0 - r / (1.0 - r)
    return _pos(2.0 * (1.0 - r))


class Regime(str, enum.Enum):
    FD_ACHIEVABLE = "fd-achievable"
    DDF_OPTIMAL = "ddf-optimal"
    STATIC_QMF_BELOW_FD = "static-qmf-optimal-below-fd"
    UNRESOLVED = "unresolved"


class RegimeClassification(NamedTuple):
    regime: Regime
    scheme: str | None


def classify_regime(x: ChannelExponents, r: float) -> RegimeClassification:
    """Which strategy is DMT-optimal at ``(x, r)``.

    The ``c < min(a,b)``, ``r > c`` corner is only resolved for ``a == b``;
    asymmetric configurations there come back as ``UNRESOLVED``.
    """
    r = _check_r(r)
    if x.c >= x.relay_min or r <= x.c:
        return RegimeClassification(Regime.FD_ACHIEVABLE, "static-qmf")
    if not x.symmetric:
        return RegimeClassification(Regime.UNRESOLVED, None)
    if r < x.a / 2.0:
        return RegimeClassification(Regime.DDF_OPTIMAL, "ddf")
    return RegimeClassification(Regime.STATIC_QMF_BELOW_FD, "static-qmf")


def exponent_order(g, rho: float, e: float):
    """Finite-SNR exponential order ``log(1 + g rho^e) / log rho``.

    Accepts scalars or numpy arrays for ``g``.
    """
    if not rho > 1.0:
        raise DomainError(f"exponent order needs rho > 1; got rho={rho}")
    val = np.log1p(np.asarray(g, dtype=float) * rho**e) / math.log(rho)
    return float(val) if np.ndim(val) == 0 else val


# slack for solver-produced curves; closed forms are exactly monotone
_MONOTONE_SLACK = 1e-6


@dataclass(frozen=True)
class DMTCurve:
    scheme: str
    exponents: ChannelExponents | None
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(r), float(d)) for r, d in self.points)
        object.__setattr__(self, "points", pts)
        for (r0, d0), (r1, d1) in zip(pts, pts[1:]):
            if not r1 > r0:
                raise ValidationError(f"curve r values must increase strictly ({r0} -> {r1})")
            if d1 > d0 + _MONOTONE_SLACK:
                raise ValidationError(f"curve d must be nonincreasing ({d0} -> {d1} at r={r1})")
        if any(d < 0 for _, d in pts):
            raise ValidationError("curve d must be nonnegative")

    @property
    def r(self) -> list[float]:
        return [p[0] for p in self.points]

    @property
    def d(self) -> list[float]:
        return [p[1] for p in self.points]

    @classmethod
    def from_function(cls, scheme: str, x: ChannelExponents | None, fn, r_values: Sequence[float]):
        return cls(scheme, x, tuple((r, fn(r)) for r in r_values))
