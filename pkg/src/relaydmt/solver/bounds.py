"""Nested outage problems: global-CSI and CSIR upper bounds, parallel relays.

All three reduce to an outer scan over the exponents the relay observes
(or, for global CSI, over ``(alpha, gamma)``) and an exact inner solve on
the remaining two variables. Outer scans start on a grid and are refined by
zooming in around the incumbent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from relaydmt.core import ChannelExponents, _check_real, d_full_duplex
from relaydmt.errors import DomainError, ValidationError
from relaydmt.solver.expr import Const, OutageRegionSpec, Var, Variable, minimum
from relaydmt.solver.grid import DEFAULT_STEP, DEFAULT_STEP_4D, axis
from relaydmt.solver.outage import (
    DEFAULT_EPSILONS,
    DEGENERATE_GAP,
    ExponentSolution,
    exact_minimize,
    open_minimize,
    scaled_epsilons,
)
from relaydmt.solver.regions import half_duplex_rate

__all__ = [
    "GlobalCSIRegion",
    "StrictnessGap",
    "dynamic_schedule",
    "local_csi_inner_region",
    "parallel_inner_region",
    "solve_global_csi",
    "solve_local_csi",
    "solve_parallel_dynamic",
    "static_schedule",
    "strictness_gap_at",
]

_ZOOM_POINTS = 21
_ZOOM_ROUNDS = 3
_T_ZOOM_ROUNDS = 4


def _symmetric(x: ChannelExponents) -> float:
    if x.a != x.b:
        raise DomainError(f"bound is stated for a = b = p only; got a={x.a}, b={x.b}")
    if not x.c < x.a:
        raise DomainError(f"bound requires c < p; got c={x.c}, p={x.a}")
    return x.a


# --------------------------------------------------------------------------
# global CSI
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GlobalCSIRegion:
    """Outage set of the half-duplex cut-set with ``t`` tuned to all gains.

    With ``gamma < min(alpha, beta)`` the best ``t`` balances the two cuts
    and the rate becomes ``(alpha beta - gamma^2) / (alpha + beta - 2 gamma)``.
    The denominator vanishes only at ``alpha = beta = gamma``, which the
    strict constraint already excludes.
    """

    p: float
    c: float
    r: float

    def rate(self, alpha, beta, gamma):
        alpha, beta, gamma = (np.asarray(v, dtype=float) for v in (alpha, beta, gamma))
        den = alpha + beta - 2.0 * gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (alpha * beta - gamma**2) / den
        return np.where(den > 0, out, np.nan)

    def contains(self, alpha, beta, gamma, tol=1e-9):
        alpha, beta, gamma = (np.asarray(v, dtype=float) for v in (alpha, beta, gamma))
        inside = (gamma < np.minimum(alpha, beta)) & (self.rate(alpha, beta, gamma) <= self.r + tol)
        box = (alpha >= -tol) & (alpha <= self.p + tol) & (beta >= -tol) & (beta <= self.p + tol)
        box &= (gamma >= -tol) & (gamma <= self.c + tol)
        return inside & box

    def max_beta(self, alpha, gamma):
        """Largest feasible ``beta`` for each ``(alpha, gamma)``; NaN if none.

        The rate constraint is linear in ``beta``: ``beta (alpha - r) <=
        gamma^2 + r alpha - 2 r gamma``. Also ``gamma < beta`` must be
        reachable, so a maximizer equal to ``gamma`` counts as infeasible.
        """
        alpha = np.asarray(alpha, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        r, p = self.r, self.p
        rhs = gamma**2 + r * alpha - 2.0 * r * gamma
        slope = alpha - r
        with np.errstate(divide="ignore", invalid="ignore"):
            upper = np.where(slope > 0, rhs / slope, p)
            lower = np.where(slope < 0, rhs / slope, -np.inf)
        upper = np.where((slope == 0) & (rhs < 0), -np.inf, upper)
        beta = np.minimum(upper, p)
        ok = (gamma < alpha) & (beta > gamma) & (beta >= lower - 1e-12)
        return np.where(ok, beta, np.nan)


def _gcsi_profile(region: GlobalCSIRegion, alpha):
    """Best ``(cost, beta, gamma)`` over the region's closure, per ``alpha``.

    For ``alpha > r`` the feasible ``gamma`` run over ``[0, min(c, r)]`` with
    ``beta = min(p, r + (gamma - r)^2 / (alpha - r))``. The cost falls while
    ``beta`` sits at the cap ``p`` and is concave afterwards, so the knee
    and the top end are the only candidates (``0`` when the knee is
    negative). For ``alpha <= r``, ``beta = p`` and ``gamma = min(alpha, c)``.
    Equal costs resolve to the smaller ``beta``, then ``gamma``.
    """
    p, c, r = region.p, region.c, region.r
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    above = alpha > r
    top = np.where(above, min(c, r), np.minimum(alpha, c))
    with np.errstate(invalid="ignore"):
        knee = np.clip(r - np.sqrt(np.maximum((p - r) * (alpha - r), 0.0)), 0.0, top)
    gam = np.stack([knee, top], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        bet = np.minimum(p, r + (gam - r) ** 2 / (alpha - r)[:, None])
    bet = np.where(above[:, None], bet, p)
    cost = 2.0 * p + c - alpha[:, None] - bet - gam
    second = (cost[:, 1] < cost[:, 0] - 1e-12) | (
        (np.abs(cost[:, 1] - cost[:, 0]) <= 1e-12) & (bet[:, 1] < bet[:, 0])
    )
    k = second.astype(int)
    rows = np.arange(alpha.size)
    return cost[rows, k], bet[rows, k], gam[rows, k]


@lru_cache(maxsize=16)
def _gcsi_grid_rates(p: float, c: float, step: float, t_step: float):
    """Grid max over ``t`` of the half-duplex rate; independent of ``r``."""
    al = axis(0.0, p, step)
    be = axis(0.0, p, step)
    ga = axis(0.0, c, step)
    t = axis(0.0, 1.0, t_step)
    A, B, G = np.meshgrid(al, be, ga, indexing="ij")
    A, B, G = A.ravel(), B.ravel(), G.ravel()
    best = np.full(A.size, -np.inf)
    for tk in t:
        first = tk * np.maximum(A, G) + (1.0 - tk) * G
        second = tk * G + (1.0 - tk) * np.maximum(B, G)
        np.maximum(best, np.minimum(first, second), out=best)
    cost = 2.0 * p + c - A - B - G
    order = np.lexsort((G, B, A))
    return best[order], cost[order], np.stack([A, B, G], axis=1)[order]


def _gcsi_grid(p, c, r, step, t_step):
    rates, cost, pts = _gcsi_grid_rates(p, c, step, t_step)
    mask = rates <= r + 1e-12
    if not mask.any():
        return math.inf, None
    vals = np.where(mask, cost, np.inf)
    k = int(np.argmax(vals <= vals.min() + 1e-12))
    return float(vals[k]), tuple(float(v) for v in pts[k])


def solve_global_csi(
    x: ChannelExponents,
    r: float,
    alpha_step: float = DEFAULT_STEP,
    grid_step: float = DEFAULT_STEP_4D,
    t_step: float = 1.0 / 200,
    cross_check: bool = True,
) -> ExponentSolution:
    """Upper bound on the DMT when the relay schedule may use every channel gain.

    Route (i) works on the balanced-rate region directly: ``beta`` is
    eliminated in closed form and ``(alpha, gamma)`` is scanned then
    polished. Route (ii), a plain grid over ``(alpha, beta, gamma)`` with
    the rate maximized on a ``t`` grid, is run as a cross-check. Both are
    capped by the full-duplex value, which covers ``gamma >= min(alpha, beta)``.
    """
    p = _symmetric(x)
    c = x.c
    r = _check_real("r", r, lo=0.0)
    region = GlobalCSIRegion(p, c, r)
    cap = d_full_duplex(x, r)

    alphas = np.union1d(axis(0.0, p, alpha_step), [min(r, p)])
    cost, beta, gamma = _gcsi_profile(region, alphas)
    k = int(np.argmin(cost))
    best, wit = float(cost[k]), (float(alphas[k]), float(beta[k]), float(gamma[k]))
    if math.isfinite(best):
        lo, hi = alphas[max(k - 1, 0)], alphas[min(k + 1, alphas.size - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda a: float(_gcsi_profile(region, [a])[0][0]),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if res.fun < best - 1e-12:
                cst, bb, gg = _gcsi_profile(region, [res.x])
                best, wit = float(cst[0]), (float(res.x), float(bb[0]), float(gg[0]))
    details = {"direct_value": best}
    if cross_check:
        gv, garg = _gcsi_grid(p, c, r, grid_step, t_step)
        gv_capped = min(gv, cap)
        tol = 2.0 * grid_step * 3.0
        details.update(grid_value=gv_capped, grid_argmin=garg, grid_tolerance=tol)
        details["cross_check_ok"] = bool(abs(gv_capped - min(best, cap)) <= tol)
    if cap < best:
        details["capped_by_full_duplex"] = True
        best = cap
    return ExponentSolution(best, wit, "exact-polyhedral", 0.0, ("alpha", "beta", "gamma"), None, False, details)


# --------------------------------------------------------------------------
# CSIR at the relay
# --------------------------------------------------------------------------


def local_csi_inner_region(p: float, c: float, r: float, alpha, t, strict: bool = True) -> OutageRegionSpec:
    """``(beta, gamma)`` outage set once the relay has seen ``alpha`` and fixed ``t``.

    ``alpha`` and ``t`` broadcast together into a batch.
    """
    alpha, t = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(t, dtype=float))
    variables = (Variable("beta", 0.0, p), Variable("gamma", 0.0, c))
    b, g = Var(0, "beta"), Var(1, "gamma")
    rate = half_duplex_rate(t, Const(alpha), b, g)
    thr = np.full(alpha.shape, float(r))
    return OutageRegionSpec(variables, (rate.lt(thr) if strict else rate.le(thr),))


def _lcsi_inner(p, c, r, alpha, t, epsilons):
    alpha, t = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(t, dtype=float))
    region = local_csi_inner_region(p, c, r, alpha, t, strict=True)
    objective = Const(2.0 * p + c - alpha) - Var(0) - Var(1)
    val, _, arg = open_minimize(region, objective, epsilons)
    return val, arg


def _max_over_t(p, c, r, alpha, t_step, epsilons):
    """Per ``alpha``: grid max over ``t`` followed by zoomed re-scans."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    t = axis(0.0, 1.0, t_step)
    vals, _ = _lcsi_inner(p, c, r, alpha[:, None], t[None, :], epsilons)
    k = np.argmax(vals, axis=1)
    best = vals[np.arange(alpha.size), k]
    t_best = t[k]
    width = t_step
    for _ in range(_T_ZOOM_ROUNDS):
        offs = np.linspace(-width, width, _ZOOM_POINTS)
        tz = np.clip(t_best[:, None] + offs[None, :], 0.0, 1.0)
        vz, _ = _lcsi_inner(p, c, r, alpha[:, None], tz, epsilons)
        kz = np.argmax(vz, axis=1)
        vbest = vz[np.arange(alpha.size), kz]
        better = vbest > best
        best = np.where(better, vbest, best)
        t_best = np.where(better, tz[np.arange(alpha.size), kz], t_best)
        width *= 2.0 / (_ZOOM_POINTS - 1)
    return best, t_best


@dataclass(frozen=True)
class LocalCSIResult:
    """Outcome of the CSIR min-max; ``float()`` gives the bound."""

    value: float
    alpha: float
    t: float
    uncapped: float
    details: dict

    def __float__(self):
        return float(self.value)


def solve_local_csi(
    p: float,
    c: float,
    r: float,
    alpha_step: float = DEFAULT_STEP,
    t_step: float = DEFAULT_STEP,
    epsilons=DEFAULT_EPSILONS,
) -> LocalCSIResult:
    """Upper bound on the DMT when the listen time may depend only on ``alpha``.

    Nature picks ``alpha``; the relay answers with the ``t`` that maximizes
    the adversary's cheapest ``(beta, gamma)`` outage cost. The outer
    minimum and middle maximum are grid scans refined by zooming; the inner
    minimum is an exact open-region solve. Capped by the full-duplex value.
    """
    p = _check_real("p", p, lo=0.0)
    c = _check_real("c", c, lo=0.0)
    r = _check_real("r", r, lo=0.0)
    if not c < p:
        raise DomainError(f"CSIR bound requires c < p; got c={c}, p={p}")
    eps = scaled_epsilons(r, epsilons)
    cap = d_full_duplex(ChannelExponents(p, p, c), r)
    if r == 0.0:
        return LocalCSIResult(cap, p, 0.0, cap, {"zero_rate": True})
    alphas = axis(0.0, p, alpha_step)
    vals, ts = _max_over_t(p, c, r, alphas, t_step, eps)
    k = int(np.argmin(vals))
    best, a_best, t_best = float(vals[k]), float(alphas[k]), float(ts[k])
    width = alpha_step
    for _ in range(2):
        az = np.clip(a_best + np.linspace(-width, width, 11), 0.0, p)
        vz, tz = _max_over_t(p, c, r, az, t_step, eps)
        kz = int(np.argmin(vz))
        if vz[kz] < best:
            best, a_best, t_best = float(vz[kz]), float(az[kz]), float(tz[kz])
        width /= 5.0
    details = {"alpha_grid": alphas.size, "grid_value": float(vals.min())}
    return LocalCSIResult(min(best, cap), a_best, t_best, best, details)


# --------------------------------------------------------------------------
# parallel relays
# --------------------------------------------------------------------------

Schedule = Callable[[np.ndarray, np.ndarray], tuple]


def dynamic_schedule(r: float) -> Schedule:
    """Listen times ``t1 = 1 - alpha (1 - r)``, ``t2 = 1 - gamma (1 - r)``."""

    def schedule(alpha, gamma):
        return 1.0 - np.asarray(alpha) * (1.0 - r), 1.0 - np.asarray(gamma) * (1.0 - r)

    schedule.label = "dynamic"
    return schedule


def static_schedule(t: float = 0.5) -> Schedule:
    """Both relays listen for the fixed fraction ``t``."""

    def schedule(alpha, gamma):
        shape = np.broadcast(np.asarray(alpha), np.asarray(gamma)).shape
        return np.full(shape, float(t)), np.full(shape, float(t))

    schedule.label = "static"
    return schedule


def _apply_schedule(schedule, alpha, gamma, clamp):
    try:
        t1, t2 = schedule(alpha, gamma)
        t1 = np.broadcast_to(np.asarray(t1, dtype=float), alpha.shape)
        t2 = np.broadcast_to(np.asarray(t2, dtype=float), alpha.shape)
    except (TypeError, ValueError):
        pairs = [schedule(float(a), float(g)) for a, g in zip(alpha.ravel(), gamma.ravel())]
        t1 = np.array([q[0] for q in pairs], dtype=float).reshape(alpha.shape)
        t2 = np.array([q[1] for q in pairs], dtype=float).reshape(alpha.shape)
    if not (np.all(np.isfinite(t1)) and np.all(np.isfinite(t2))):
        raise ValidationError("schedule returned non-finite listen times")
    if clamp:
        return np.clip(t1, 0.0, 1.0), np.clip(t2, 0.0, 1.0)
    bad = (t1 < 0) | (t1 > 1) | (t2 < 0) | (t2 > 1)
    if bad.any():
        i = int(np.flatnonzero(bad.ravel())[0])
        raise ValidationError(
            f"schedule left [0,1]^2 at (alpha, gamma)=({alpha.ravel()[i]}, {gamma.ravel()[i]}): "
            f"({t1.ravel()[i]}, {t2.ravel()[i]}); pass clamp=True to clip"
        )
    return t1, t2


def parallel_inner_region(r: float, alpha, gamma, t1, t2, strict: bool = True) -> OutageRegionSpec:
    """Second-stage ``(beta, delta)`` outage set for fixed first stage and schedule.

    Four cuts: {S}, {S,R1}, {S,R2}, {S,R1,R2}; a link counts only while its
    transmitter sends and its receiver listens.
    """
    alpha, gamma, t1, t2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, gamma, t1, t2)))
    variables = (Variable("beta", 0.0, 1.0), Variable("delta", 0.0, 1.0))
    b, d = Var(0, "beta"), Var(1, "delta")
    cut_s = Const(t1 * alpha + t2 * gamma)
    cut_sr1 = (1.0 - t1) * b + t2 * gamma
    cut_sr2 = (1.0 - t2) * d + t1 * alpha
    cut_all = (1.0 - t1) * b + (1.0 - t2) * d
    rate = minimum(cut_s, cut_sr1, cut_sr2, cut_all)
    thr = np.full(alpha.shape, float(r))
    return OutageRegionSpec(variables, (rate.lt(thr) if strict else rate.le(thr),))


def _parallel_values(r, schedule, alpha, gamma, epsilons, clamp):
    t1, t2 = _apply_schedule(schedule, alpha, gamma, clamp)
    region = parallel_inner_region(r, alpha, gamma, t1, t2, strict=True)
    objective = Const(4.0 - alpha - gamma) - Var(0) - Var(1)
    return open_minimize(region, objective, epsilons)


def _solve_parallel_at(r, schedule, step, epsilons, clamp):
    al = axis(0.0, 1.0, step)
    A, G = np.meshgrid(al, al, indexing="ij")
    A, G = A.ravel(), G.ravel()
    val, closed, arg = _parallel_values(r, schedule, A, G, epsilons, clamp)
    key = np.lexsort((arg[:, 1], arg[:, 0], G, A, np.round(np.where(np.isfinite(val), val, np.inf), 12)))
    k = int(key[0])
    best, wit = float(val[k]), (float(A[k]), float(G[k]), float(arg[k, 0]), float(arg[k, 1]))
    closed_best = float(np.min(closed))
    width = step
    for _ in range(_ZOOM_ROUNDS):
        if not math.isfinite(best):
            break
        offs = np.linspace(-width, width, 21)
        az = np.clip(wit[0] + offs, 0.0, 1.0)
        gz = np.clip(wit[1] + offs, 0.0, 1.0)
        AZ, GZ = (m.ravel() for m in np.meshgrid(az, gz, indexing="ij"))
        vz, cz, argz = _parallel_values(r, schedule, AZ, GZ, epsilons, clamp)
        closed_best = min(closed_best, float(np.min(cz)))
        kz = int(np.argmin(vz))
        if vz[kz] < best - 1e-12:
            best = float(vz[kz])
            wit = (float(AZ[kz]), float(GZ[kz]), float(argz[kz, 0]), float(argz[kz, 1]))
        width /= 10.0
    return best, wit, closed_best


def solve_parallel_dynamic(
    r: float,
    schedule: Schedule | None = None,
    step: float = DEFAULT_STEP_4D,
    epsilons=DEFAULT_EPSILONS,
    clamp: bool = False,
) -> ExponentSolution:
    """Diversity of the two-relay parallel network under a CSIR schedule.

    ``schedule(alpha, gamma) -> (t1, t2)`` maps first-stage orders to listen
    fractions; the default is :func:`dynamic_schedule`. The outer
    ``(alpha, gamma)`` scan is a grid with zoom refinement; the inner
    ``(beta, delta)`` adversary is solved exactly over the open region.
    The closed-region minimum is reported too, and a gap above
    ``DEGENERATE_GAP`` marks the solution ``degenerate``.

    At ``r = 0`` the open region is empty; the zero-rate value is the
    linear extrapolation of the solutions at two small positive rates.
    """
    r = _check_real("r", r, lo=0.0)
    if r >= 1.0:
        raise DomainError(f"parallel-relay solver needs 0 <= r < 1, got r={r}")
    names = ("alpha", "gamma", "beta", "delta")
    if r == 0.0:
        r1, r2 = 2e-3, 1e-3
        s1 = solve_parallel_dynamic(r1, schedule, step, epsilons, clamp)
        s2 = solve_parallel_dynamic(r2, schedule, step, epsilons, clamp)
        value = s2.value - (s1.value - s2.value) * r2 / (r1 - r2)
        return ExponentSolution(
            value, s2.argmin, "grid", 0.0, names, None, False, {"zero_rate_from": (r1, r2)}
        )
    if schedule is None:
        schedule = dynamic_schedule(r)
    eps = scaled_epsilons(r, epsilons)
    best, wit, closed = _solve_parallel_at(r, schedule, step, eps, clamp)
    degenerate = math.isfinite(best) and not abs(best - closed) <= DEGENERATE_GAP
    return ExponentSolution(
        best,
        wit if math.isfinite(best) else None,
        "grid",
        float(min(eps)),
        names,
        closed,
        degenerate,
        {"step": step, "schedule": getattr(schedule, "label", "custom")},
    )


@dataclass(frozen=True)
class StrictnessGap:
    """Open versus closed inner minimum at one first-stage point."""

    open_value: float
    closed_value: float
    gap: float
    degenerate: bool
    closed_witness: tuple


def strictness_gap_at(r: float, schedule: Schedule | None, alpha: float, gamma: float, epsilons=DEFAULT_EPSILONS):
    """Compare ``{< r}`` and ``{<= r}`` outage costs with ``(alpha, gamma)`` held fixed."""
    r = _check_real("r", r, lo=0.0)
    if schedule is None:
        schedule = dynamic_schedule(r)
    A = np.array([float(alpha)])
    G = np.array([float(gamma)])
    val, closed, _ = _parallel_values(r, schedule, A, G, scaled_epsilons(r, epsilons), False)
    t1, t2 = _apply_schedule(schedule, A, G, False)
    region = parallel_inner_region(r, A, G, t1, t2, strict=False)
    _, warg = exact_minimize(region, Const(4.0 - A - G) - Var(0) - Var(1), 0.0)
    open_v, closed_v = float(val[0]), float(closed[0])
    gap = open_v - closed_v if math.isfinite(open_v) else math.inf
    return StrictnessGap(
        open_v,
        closed_v,
        gap,
        bool(gap > DEGENERATE_GAP),
        (float(alpha), float(gamma), float(warg[0, 0]), float(warg[0, 1])),
    )
