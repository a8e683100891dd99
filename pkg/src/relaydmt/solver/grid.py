"""Exhaustive box scans, the brute-force cross-check for the exact solver.

Axes always include both endpoints, so tiny boxes such as ``[0, 1e-9]``
still contribute their bounds. Points are visited in lexicographic order,
which makes "first minimum" the lexicographically smallest argmin.
"""

from __future__ import annotations

import math

import numpy as np

from relaydmt.errors import ValidationError
from relaydmt.solver.expr import Comparison, Expr, OutageRegionSpec, evaluate

__all__ = ["DEFAULT_STEP", "DEFAULT_STEP_4D", "axis", "grid_minimize", "grid_profile"]

DEFAULT_STEP = 1.0 / 400
DEFAULT_STEP_4D = 1.0 / 100
_CHUNK = 1 << 21
_TIE = 1e-12


def axis(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ValidationError(f"grid step must be positive, got {step}")
    if hi == lo:
        return np.array([lo])
    n = max(1, math.ceil((hi - lo) / step - 1e-9))
    return np.linspace(lo, hi, n + 1)


def _chunks(axes):
    """Yield lists of flattened coordinate arrays, in lexicographic order."""
    head, rest = axes[0], axes[1:]
    rest_mesh = np.meshgrid(*rest, indexing="ij") if rest else []
    rest_flat = [m.ravel() for m in rest_mesh]
    rest_size = rest_flat[0].size if rest_flat else 1
    per = max(1, _CHUNK // rest_size)
    for start in range(0, head.size, per):
        h = head[start : start + per]
        cols = [np.repeat(h, rest_size)]
        cols += [np.tile(f, h.size) for f in rest_flat]
        yield cols


def grid_minimize(region: OutageRegionSpec, objective: Expr, step: float):
    """Scan the box at ``step``; return ``(value, argmin)`` or ``(inf, None)``."""
    axes = [axis(v.lo, v.hi, step) for v in region.variables]
    best, arg = math.inf, None
    for cols in _chunks(axes):
        mask = np.ones(cols[0].size, dtype=bool)
        for cmp in region.constraints:
            mask &= np.broadcast_to(cmp.holds(cols), mask.shape)
        if not mask.any():
            continue
        obj = np.broadcast_to(evaluate(objective, cols), mask.shape)
        vals = np.where(mask, obj, np.inf)
        m = vals.min()
        if m < best - _TIE:
            idx = int(np.argmax(vals <= m + _TIE))
            best, arg = float(m), tuple(float(c[idx]) for c in cols)
    return best, arg


def grid_profile(region: OutageRegionSpec, comparison: Comparison, objective: Expr, thresholds, step: float):
    """Grid minimum of ``objective`` over ``region & {comparison.expr <= thr}``, per threshold.

    Evaluates the grid once for the whole threshold list: each point is
    binned at the smallest threshold it satisfies and a running minimum
    over sorted thresholds gives every answer. Only upper comparisons
    (``<=`` and ``<``) are accepted.
    """
    if comparison.op not in ("<=", "<"):
        raise ValidationError("grid_profile needs an upper comparison")
    thr = np.asarray(thresholds, dtype=float)
    order = np.argsort(thr, kind="stable")
    thr_sorted = thr[order]
    bins = np.full(thr.size, np.inf)
    axes = [axis(v.lo, v.hi, step) for v in region.variables]
    for cols in _chunks(axes):
        mask = np.ones(cols[0].size, dtype=bool)
        for cmp in region.constraints:
            mask &= np.broadcast_to(cmp.holds(cols), mask.shape)
        lhs = np.broadcast_to(evaluate(comparison.expr, cols), mask.shape)[mask]
        obj = np.broadcast_to(evaluate(objective, cols), mask.shape)[mask]
        if comparison.strict:
            k = np.searchsorted(thr_sorted, lhs + _TIE, side="right")
        else:
            k = np.searchsorted(thr_sorted, lhs - _TIE, side="left")
        keep = k < thr.size
        np.minimum.at(bins, k[keep], obj[keep])
    out = np.empty(thr.size)
    out[order] = np.minimum.accumulate(bins)
    return out
