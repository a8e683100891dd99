"""Outage regions of the single-relay strategies, in exponent space.

Variables are the fading orders ``alpha`` (S-R), ``beta`` (R-D) and
``gamma`` (S-D) boxed by the SNR exponents ``(a, b, c)``; the objective
is always ``a + b + c - alpha - beta - gamma``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from relaydmt.core import ChannelExponents
from relaydmt.errors import DomainError
from relaydmt.solver.expr import Const, OutageRegionSpec, Var, Variable, maximum, minimum
from relaydmt.solver.grid import DEFAULT_STEP, axis
from relaydmt.solver.outage import (
    DEFAULT_EPSILONS,
    ExponentSolution,
    exact_minimize,
    open_minimize,
    scaled_epsilons,
)

__all__ = [
    "ddf_grid_profile",
    "ddf_inner_region",
    "exponent_cost",
    "full_duplex_region",
    "half_duplex_rate",
    "single_relay_vars",
    "solve_ddf_exponent",
    "static_qmf_region",
]


def single_relay_vars(x: ChannelExponents):
    return (Variable("alpha", 0.0, x.a), Variable("beta", 0.0, x.b), Variable("gamma", 0.0, x.c))


def exponent_cost(x: ChannelExponents):
    a, b, g = Var(0, "alpha"), Var(1, "beta"), Var(2, "gamma")
    return (x.a + x.b + x.c) - a - b - g


def half_duplex_rate(t, alpha, beta, gamma):
    """High-SNR half-duplex cut-set rate with listen fraction ``t``.

    ``min(t max(alpha, gamma) + (1-t) gamma, t gamma + (1-t) max(beta, gamma))``;
    the arguments may be expressions or constants.
    """
    first = t * maximum(alpha, gamma) + (1.0 - np.asarray(t)) * gamma
    second = t * gamma + (1.0 - np.asarray(t)) * maximum(beta, gamma)
    return minimum(first, second)


def full_duplex_region(x: ChannelExponents, r: float, strict: bool = False) -> OutageRegionSpec:
    a, b, g = Var(0, "alpha"), Var(1, "beta"), Var(2, "gamma")
    expr = minimum(maximum(a, g), maximum(b, g))
    cmp = expr.lt(r) if strict else expr.le(r)
    return OutageRegionSpec(single_relay_vars(x), (cmp,))


def static_qmf_region(x: ChannelExponents, r: float, t: float = 0.5, strict: bool = False) -> OutageRegionSpec:
    a, b, g = Var(0, "alpha"), Var(1, "beta"), Var(2, "gamma")
    expr = half_duplex_rate(t, a, b, g)
    cmp = expr.lt(r) if strict else expr.le(r)
    return OutageRegionSpec(single_relay_vars(x), (cmp,))


def ddf_inner_region(x: ChannelExponents, r: float, alpha, strict: bool = True) -> OutageRegionSpec:
    """DDF outage over ``(beta, gamma)`` for fixed S-R order(s) ``alpha``.

    With ``alpha > r`` the relay listens ``t = r / alpha`` and the S,R-D
    cut ``t gamma + (1-t) max(gamma, beta)`` must fall below ``r``. With
    ``alpha <= r`` it needs the whole block (``t >= 1``), never transmits,
    and only ``gamma < r`` matters. All ``alpha`` values in one call must
    lie on the same side of ``r``.
    """
    alpha = np.asarray(alpha, dtype=float)
    variables = (Variable("beta", 0.0, x.b), Variable("gamma", 0.0, x.c))
    b, g = Var(0, "beta"), Var(1, "gamma")
    if np.all(alpha > r):
        t = r / alpha
        expr = t * g + (1.0 - t) * maximum(g, b)
        thr = np.full(alpha.shape, float(r))
    elif np.all(alpha <= r):
        expr = g + Const(np.zeros(alpha.shape))
        thr = np.full(alpha.shape, float(r))
    else:
        raise DomainError("alpha batch straddles r; split it first")
    cmp = expr.lt(thr) if strict else expr.le(thr)
    return OutageRegionSpec(variables, (cmp,))


def _ddf_inner(x, r, alpha, epsilons, strict=True):
    """Open-region inner minimum of ``b + c - beta - gamma`` at each ``alpha``."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.empty(alpha.shape)
    args = np.full(alpha.shape + (2,), np.nan)
    b, g = Var(0, "beta"), Var(1, "gamma")
    objective = (x.b + x.c) - b - g
    for sel in (alpha <= r, alpha > r):
        if not sel.any():
            continue
        region = ddf_inner_region(x, r, alpha[sel], strict=strict)
        if strict:
            out[sel], _, args[sel] = open_minimize(region, objective, epsilons)
        else:
            out[sel], args[sel] = exact_minimize(region, objective, 0.0)
    return out, args


def solve_ddf_exponent(
    x: ChannelExponents,
    r: float,
    alpha_step: float = DEFAULT_STEP,
    epsilons=DEFAULT_EPSILONS,
    polish: bool = True,
) -> ExponentSolution:
    """DDF diversity from its outage region, independent of the closed form.

    The listen time ``r / alpha`` makes the region non-polyhedral in
    ``alpha``, so ``alpha`` is scanned on a grid (plus the breakpoint
    ``alpha = r``) and, for each value, the ``(beta, gamma)`` subproblem is
    solved exactly. A bounded Brent search then polishes the best cell.

    At ``r = 0`` the open region is empty; the zero-rate diversity is the
    right limit, which is the minimum over the closed region.
    """
    if not x.c < x.relay_min:
        raise DomainError(f"DDF region requires c < min(a, b); got {x.as_tuple()}")
    r = float(r)
    strict = r > 0.0
    epsilons = scaled_epsilons(r, epsilons)
    grid = np.union1d(axis(0.0, x.a, alpha_step), [min(r, x.a)])

    def total(al):
        inner, arg = _ddf_inner(x, r, al, epsilons, strict)
        return x.a - np.atleast_1d(al) + inner, arg

    vals, args = total(grid)
    k = int(np.argmin(vals))
    best, best_alpha, best_arg = float(vals[k]), float(grid[k]), args[k]
    details = {"alpha_grid": grid.size, "grid_value": best}
    if polish and math.isfinite(best):
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, grid.size - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda al: float(total(np.array([al]))[0][0]),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if res.fun < best - 1e-13:
                best, best_alpha = float(res.fun), float(res.x)
                best_arg = total(np.array([best_alpha]))[1][0]
    argmin = None
    if math.isfinite(best):
        argmin = (best_alpha, float(best_arg[0]), float(best_arg[1]))
    return ExponentSolution(
        best,
        argmin,
        "parametric",
        float(min(epsilons)) if strict else 0.0,
        ("alpha", "beta", "gamma"),
        None,
        False,
        details,
    )


_CLOSURE_TOL = 1e-12


def ddf_grid_profile(x: ChannelExponents, rs, step: float = DEFAULT_STEP) -> np.ndarray:
    """Grid cross-check of the DDF exponent at each rate in ``rs``.

    ``(alpha, gamma)`` are scanned on the grid. For fixed ``(alpha, gamma)``
    the decoding condition is monotone in ``beta``, so the largest ``beta``
    still in outage is taken in closed form rather than scanned; a plain
    3-D grid misses the curved boundary by about one step. The scan runs
    over the closure of the outage region.
    """
    if not x.c < x.relay_min:
        raise DomainError(f"DDF region requires c < min(a, b); got {x.as_tuple()}")
    al = axis(0.0, x.a, step)[:, None]
    ga = axis(0.0, x.c, step)[None, :]
    out = np.empty(len(rs))
    for i, r in enumerate(np.asarray(rs, dtype=float)):
        below = ga <= r + _CLOSURE_TOL
        # relay never decodes (alpha <= r) or direct link is the stronger one
        free = np.where(below, x.b, -np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = r * (al - ga) / (al - r)
        decoded = np.where(ga <= cap + _CLOSURE_TOL, np.minimum(x.b, cap), -np.inf)
        beta = np.where((ga > al) | (al <= r), free, decoded)
        out[i] = float(np.min(x.a + x.b + x.c - al - beta - ga))
    return out
