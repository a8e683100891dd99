"""Rayleigh-fading Monte Carlo estimates of outage probability and diversity slope.

Seeding
-------
Draws for SNR index ``i`` and chunk ``j`` come from
``SeedSequence(seed, spawn_key=(i, j))`` feeding a PCG64 generator. The
chunk size is fixed (``CHUNK``), so the set of draws is a function of the
seed alone; worker processes only change who evaluates which chunk, and
merging adds integer counts. Results are therefore identical for any
worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import binomtest

from relaydmt.core import ChannelExponents, d_ddf, d_full_duplex, d_parallel, d_static_qmf, exponent_order
from relaydmt.errors import InsufficientDataError, UnsupportedConfigurationError, ValidationError
from relaydmt.strategy import (
    FadingDraw,
    ParallelFadingDraw,
    ParallelSchedule,
    Schedule,
    ddf_outage,
    dynamic_qmf_schedule,
    parallel_dynamic_schedule,
    parallel_outage,
    qmf_outage,
    rate_full_duplex,
)

__all__ = [
    "CHUNK",
    "DEFAULT_FLOOR",
    "DEFAULT_LADDER",
    "SCHEMES",
    "FitResult",
    "OutagePoint",
    "SweepConfig",
    "SweepResult",
    "closed_form_diversity",
    "estimate_outage",
    "fit_diversity",
    "read_sweep_csv",
    "sample_fading",
    "wilson_interval",
    "with_fit",
    "write_sweep_csv",
]

SCHEMES = ("fd", "sqmf", "ddf", "dqmf", "parallel-sqmf", "parallel-dqmf")
PARALLEL = ("parallel-sqmf", "parallel-dqmf")
DEFAULT_LADDER = tuple(10.0**k for k in (2.0, 2.5, 3.0, 3.5, 4.0))
DEFAULT_FLOOR = 20
CHUNK = 1 << 16
CSV_COLUMNS = ("rho", "rate_nats", "n", "outage_count", "p_hat", "ci_lo", "ci_hi")


@dataclass(frozen=True)
class SweepConfig:
    scheme: str
    exponents: ChannelExponents
    r: float
    snrs: tuple = DEFAULT_LADDER
    samples: int = 10**6
    seed: int = 0
    floor: int = DEFAULT_FLOOR

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        snrs = tuple(float(s) for s in self.snrs)
        object.__setattr__(self, "snrs", snrs)
        if len(snrs) < 2:
            raise ValidationError("a sweep needs at least two SNR points")
        if any(not (math.isfinite(s) and s > 1.0) for s in snrs):
            raise ValidationError("SNR values must be finite and greater than 1")
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValidationError("SNR values must be strictly increasing")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValidationError(f"samples must be a positive integer, got {self.samples}")
        object.__setattr__(self, "samples", int(self.samples))
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValidationError(f"r must be a finite nonnegative number, got {self.r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in 64 unsigned bits")
        if self.floor < 1:
            raise ValidationError("fit floor must be at least 1")


@dataclass(frozen=True)
class OutagePoint:
    rho: float
    rate_nats: float
    n: int
    outage_count: int
    p_hat: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class FitResult:
    d_hat: float
    intercept: float
    residual: float
    points_used: tuple
    dropped: tuple = ()


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig | None
    points: tuple
    fit: FitResult | None = None

    @property
    def d_hat(self):
        return None if self.fit is None else self.fit.d_hat

    @property
    def residual(self):
        return None if self.fit is None else self.fit.residual


def sample_fading(rng: np.random.Generator, count: int, parallel: bool = False):
    """``count`` independent unit-mean exponential gain tuples from ``rng``."""
    if count < 1:
        raise ValidationError(f"count must be at least 1, got {count}")
    k = 4 if parallel else 3
    g = rng.standard_exponential((k, count))
    # exponential variates are almost surely positive; guard the measure-zero 0.0
    g = np.maximum(g, np.finfo(float).tiny)
    return ParallelFadingDraw(*g) if parallel else FadingDraw(*g)


def _stream(seed: int, rho_index: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(rho_index, chunk_index))
    return np.random.Generator(np.random.PCG64(ss))


def _outage_mask(scheme, draw, x, rho, r):
    if scheme == "fd":
        return rate_full_duplex(draw, x, rho) < r * math.log(rho)
    if scheme == "sqmf":
        return qmf_outage(draw, x, rho, r, Schedule(0.5))
    if scheme == "ddf":
        return ddf_outage(draw, x, rho, r)
    if scheme == "dqmf":
        s = dynamic_qmf_schedule(exponent_order(draw.g_sr, rho, x.a), r)
        return qmf_outage(draw, x, rho, r, s)
    if scheme == "parallel-sqmf":
        return parallel_outage(draw, rho, r, ParallelSchedule(0.5, 0.5))
    return parallel_outage(draw, rho, r, parallel_dynamic_schedule(draw, rho, r))


def _count_chunk(task):
    scheme, x, r, rho, seed, i, j, size = task
    draw = sample_fading(_stream(seed, i, j), size, parallel=scheme in PARALLEL)
    return int(np.count_nonzero(_outage_mask(scheme, draw, x, rho, r)))


def wilson_interval(k: int, n: int, level: float = 0.95):
    """Wilson score interval for ``k`` successes out of ``n``."""
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _check_supported(cfg: SweepConfig):
    if cfg.scheme == "dqmf" and cfg.exponents.a != 1.0:
        raise UnsupportedConfigurationError(
            f"dynamic QMF schedule is defined only for a = 1; got a={cfg.exponents.a}"
        )


def estimate_outage(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Outage frequency at each SNR of the ladder, with 95% Wilson intervals."""
    _check_supported(cfg)
    tasks = []
    for i, rho in enumerate(cfg.snrs):
        for j, start in enumerate(range(0, cfg.samples, CHUNK)):
            size = min(CHUNK, cfg.samples - start)
            tasks.append((cfg.scheme, cfg.exponents, float(cfg.r), rho, cfg.seed, i, j, size))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_count_chunk, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        counts = [_count_chunk(t) for t in tasks]
    per_rho = [0] * len(cfg.snrs)
    for task, k in zip(tasks, counts):
        per_rho[task[5]] += k
    points = []
    for rho, k in zip(cfg.snrs, per_rho):
        lo, hi = wilson_interval(k, cfg.samples)
        points.append(OutagePoint(rho, cfg.r * math.log(rho), cfg.samples, k, k / cfg.samples, lo, hi))
    return SweepResult(cfg, tuple(points))


def fit_diversity(result: SweepResult, floor: int | None = None) -> FitResult:
    """Least-squares slope of ``-log p_hat`` against ``log rho``.

    Points with fewer than ``floor`` outages are left out. ``residual`` is
    the root-mean-square misfit in ``log p``.
    """
    if floor is None:
        floor = result.config.floor if result.config is not None else DEFAULT_FLOOR
    used = [p for p in result.points if p.outage_count >= floor]
    dropped = tuple(
        (p.rho, f"outage_count={p.outage_count} < floor={floor}") for p in result.points if p.outage_count < floor
    )
    if len(used) < 2:
        raise InsufficientDataError(
            f"need at least 2 SNR points with >= {floor} outages; {len(used)} qualify", dropped
        )
    x = np.log([p.rho for p in used])
    y = -np.log([p.p_hat for p in used])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return FitResult(
        float(slope),
        float(intercept),
        float(np.sqrt(np.mean(resid**2))),
        tuple(p.rho for p in used),
        dropped,
    )


def closed_form_diversity(scheme: str, x: ChannelExponents, r: float) -> float:
    """Asymptotic diversity the sweep's slope should approach."""
    if scheme == "fd":
        return d_full_duplex(x, r)
    if scheme == "sqmf":
        return d_static_qmf(x, r)
    if scheme in ("ddf", "dqmf"):
        return d_ddf(x, r)
    if scheme == "parallel-sqmf":
        return 2.0 * (1.0 - r)
    return d_parallel(r)


def _fmt(v) -> str:
    return format(v, ".12g")


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in result.points:
            w.writerow([_fmt(p.rho), _fmt(p.rate_nats), p.n, p.outage_count, _fmt(p.p_hat), _fmt(p.ci_lo), _fmt(p.ci_hi)])


def read_sweep_csv(path) -> SweepResult:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValidationError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
    points = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise ValidationError(f"{path}:{line}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        try:
            rho, rate, n, k, p, lo, hi = row
            points.append(OutagePoint(float(rho), float(rate), int(n), int(k), float(p), float(lo), float(hi)))
        except ValueError as exc:
            raise ValidationError(f"{path}:{line}: {exc}") from None
    return SweepResult(None, tuple(points))


def with_fit(result: SweepResult, floor: int | None = None) -> SweepResult:
    return replace(result, fit=fit_diversity(result, floor))
