"""Minimum exponent cost over an outage region.

The diversity of a scheme is the smallest total exponent deficit
``sum(bound_i - x_i)`` over the fading orders that put it in outage. Two
routes compute it: an exact route over the DNF union of polyhedra, and a
grid route over the raw expression tree.

Strict comparisons (``<``) describe open regions. Their infimum is taken
as the limit of closed minima over ``{<= thr - eps}`` for a shrinking
``eps`` schedule, linearly extrapolated to ``eps = 0``. The plain closed
minimum (``eps = 0``) is reported alongside; when the two differ by more
than ``DEGENERATE_GAP`` the region touches the threshold on a measure-zero
set and the solution is marked ``degenerate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from relaydmt.errors import ValidationError
from relaydmt.solver.expr import Expr, OutageRegionSpec, normal_form, validate
from relaydmt.solver.grid import DEFAULT_STEP, grid_minimize
from relaydmt.solver.polyhedral import FEAS_TOL, minimize_over_union

__all__ = [
    "DEFAULT_EPSILONS",
    "DEGENERATE_GAP",
    "ExponentSolution",
    "affine_objective",
    "epsilon_limit",
    "exact_minimize",
    "open_minimize",
    "scaled_epsilons",
    "solve_outage_exponent",
]

DEFAULT_EPSILONS = (1e-3, 1e-4, 1e-5)
DEGENERATE_GAP = 1e-3
_LINEARITY_TOL = 1e-6


@dataclass(frozen=True)
class ExponentSolution:
    value: float
    argmin: tuple | None
    method: str
    epsilon: float = 0.0
    names: tuple = ()
    closed_value: float | None = None
    degenerate: bool = False
    details: dict = field(default_factory=dict, compare=False)

    @property
    def empty(self) -> bool:
        """True when the region has no points; the caller reads this as ``d = +inf``."""
        return math.isinf(self.value)

    @property
    def assignment(self) -> dict:
        if self.argmin is None:
            return {}
        return dict(zip(self.names, self.argmin))

    def __float__(self):
        return float(self.value)


def affine_objective(objective: Expr, nvars: int):
    """Return ``(c, c0)`` for an affine expression; reject anything with min/max."""
    validate(objective, nvars)
    nf = normal_form(objective, nvars)
    if len(nf) != 1 or len(nf[0]) != 1:
        raise ValidationError("objective must be affine (no min/max nodes)")
    aff = nf[0][0]
    return aff.coef, aff.const


def exact_minimize(region: OutageRegionSpec, objective: Expr, eps: float = 0.0):
    """Exact polyhedral minimum for one ``eps``; batch-aware. Returns ``(value, argmin)``."""
    c, c0 = affine_objective(objective, region.dim)
    return minimize_over_union(region.polyhedra(eps), region.lo, region.hi, c, c0, FEAS_TOL)


def epsilon_limit(values_by_eps, epsilons, closed=None):
    """Extrapolate ``v(eps) -> eps = 0`` from the two smallest ``eps``.

    The extrapolation is linear. If the three-point slope check fails
    (a kink inside the schedule), fall back to the value at the smallest
    ``eps``. Shrinking ``eps`` only enlarges the region, so the limit is
    clipped into ``[closed, v(eps_min)]`` when the closed minimum is given;
    this stops a kink just below ``eps_min`` from overshooting. Works
    elementwise on arrays.
    """
    eps = np.asarray(epsilons, dtype=float)
    order = np.argsort(eps)[::-1]
    vals = [np.asarray(values_by_eps[i], dtype=float) for i in order]
    e = eps[order]
    if len(vals) == 1:
        return vals[0]
    v1, v2 = vals[-2], vals[-1]
    e1, e2 = e[-2], e[-1]
    with np.errstate(invalid="ignore"):
        s12 = (v1 - v2) / (e1 - e2)
        lim = v2 - s12 * e2
        linear = np.isfinite(v1) & np.isfinite(v2)
        if len(vals) >= 3:
            v0, e0 = vals[-3], e[-3]
            s01 = (v0 - v1) / (e0 - e1)
            linear &= np.isfinite(v0) & (np.abs(s01 - s12) <= _LINEARITY_TOL * np.maximum(1.0, np.abs(s12)))
    out = np.where(linear, lim, v2)
    if closed is not None:
        closed = np.asarray(closed, dtype=float)
        out = np.where(np.isfinite(v2), np.clip(out, np.minimum(closed, v2), v2), out)
    return out


def scaled_epsilons(r: float, epsilons=DEFAULT_EPSILONS) -> tuple:
    """Shrink the schedule for small rates so ``r - eps`` stays positive."""
    scale = min(1.0, 10.0 * float(r))
    return tuple(e * scale for e in epsilons)


def open_minimize(region: OutageRegionSpec, objective: Expr, epsilons=DEFAULT_EPSILONS):
    """Batch-aware infimum over the open region.

    Returns ``(limit, closed, argmin)``: the eps-limit value, the closed
    (``eps = 0``) minimum, and the witness found at the smallest ``eps``.
    """
    closed, _ = exact_minimize(region, objective, 0.0)
    runs = [exact_minimize(region, objective, e) for e in epsilons]
    lim = epsilon_limit([v for v, _ in runs], epsilons, closed)
    return lim, closed, runs[int(np.argmin(epsilons))][1]


def _solve_exact(region, objective, epsilons):
    closed, arg0 = exact_minimize(region, objective, 0.0)
    if not region.has_strict:
        return ExponentSolution(
            float(closed), _tup(arg0), "exact-polyhedral", 0.0, region.names, float(closed), False
        )
    runs = [exact_minimize(region, objective, e) for e in epsilons]
    lim = float(epsilon_limit([v for v, _ in runs], epsilons, closed))
    smallest = int(np.argmin(epsilons))
    arg = runs[smallest][1]
    closed = float(closed)
    degenerate = not (math.isinf(lim) and math.isinf(closed)) and not abs(lim - closed) <= DEGENERATE_GAP
    return ExponentSolution(
        lim, _tup(arg), "exact-polyhedral", float(min(epsilons)), region.names, closed, degenerate
    )


def _tup(arg):
    arg = np.asarray(arg, dtype=float)
    if np.any(np.isnan(arg)):
        return None
    return tuple(float(v) for v in arg)


def solve_outage_exponent(
    region: OutageRegionSpec,
    objective: Expr,
    method: str = "exact",
    step: float = DEFAULT_STEP,
    epsilons=DEFAULT_EPSILONS,
) -> ExponentSolution:
    """Infimum of an affine ``objective`` over ``region``.

    ``method="exact"`` expands min/max comparisons into a union of
    polyhedra and minimizes at their vertices; ``method="grid"`` scans the
    box at ``step``. An empty region gives ``value = inf`` (no outage).
    """
    affine_objective(objective, region.dim)
    if method == "exact":
        return _solve_exact(region, objective, tuple(epsilons))
    if method == "grid":
        value, arg = grid_minimize(region, objective, step)
        return ExponentSolution(value, arg, "grid", 0.0, region.names, None, False, {"step": step})
    raise ValidationError(f"unknown method {method!r}; use 'exact' or 'grid'")
