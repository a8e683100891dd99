"""Affine minimization over bounded polyhedra by vertex enumeration.

Dimensions here are at most 4, so every candidate vertex is produced by
intersecting ``n`` of the active hyperplanes (constraint rows plus box
facets) and kept if it satisfies all rows within ``FEAS_TOL``. Everything
is vectorized over a leading batch axis.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

__all__ = ["FEAS_TOL", "TIE_TOL", "minimize_over_union", "scaled_tolerance", "vertex_candidates"]

FEAS_TOL = 1e-9
TIE_TOL = 1e-10
_SINGULAR = 1e-12
_BATCH_CHUNK = 1 << 14


@lru_cache(maxsize=None)
def _combos(m: int, n: int) -> np.ndarray:
    """``n``-subsets of ``m`` constraint rows plus ``2n`` box facets that use at least one row.

    Subsets made only of box facets are either singular or a box corner;
    corners are added separately.
    """
    rows = [c for c in itertools.combinations(range(m + 2 * n), n) if c[0] < m]
    return np.array(rows, dtype=np.intp).reshape(-1, n)


def vertex_candidates(A, b, lo, hi, tol=FEAS_TOL):
    """All feasible vertices of ``{A x <= b, lo <= x <= hi}``.

    Parameters
    ----------
    A : array (B, m, n)
    b : array (B, m)
    lo, hi : array (n,)

    Returns
    -------
    x : array (B, K, n)
        Candidate points (garbage where ``ok`` is False).
    ok : bool array (B, K)
    """
    B, m, n = A.shape
    eye = np.eye(n)
    A_full = np.concatenate(
        [A, np.broadcast_to(eye, (B, n, n)), np.broadcast_to(-eye, (B, n, n))], axis=1
    )
    b_full = np.concatenate(
        [b, np.broadcast_to(hi, (B, n)), np.broadcast_to(-np.asarray(lo), (B, n))], axis=1
    )
    combos = _combos(m, n)
    if combos.shape[0] == 0:
        x = np.empty((B, 0, n))
        regular = np.zeros((B, 0), dtype=bool)
    elif n == 2:
        x, regular = _solve_pairs(A_full, b_full, combos)
    else:
        M = A_full[:, combos]  # (B, K, n, n)
        rhs = b_full[:, combos]  # (B, K, n)
        det = M[..., 0, 0] if n == 1 else np.linalg.det(M)
        scale = np.maximum(1.0, np.abs(M).reshape(M.shape[:-2] + (n * n,)).max(axis=-1) ** n)
        regular = np.abs(det) > _SINGULAR * scale
        M_safe = np.where(regular[..., None, None], M, eye)
        x = np.linalg.solve(M_safe, rhs[..., None])[..., 0]
    # box rows reduce to a bounds check; constraint rows are unrolled because
    # reductions over a length-2 trailing axis are slow in numpy
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corners = np.array(list(itertools.product(*zip(lo, hi))), dtype=float).reshape(-1, n)
    x = np.concatenate([x, np.broadcast_to(corners, (B,) + corners.shape)], axis=1)
    regular = np.concatenate([regular, np.ones((B, corners.shape[0]), dtype=bool)], axis=1)
    xs = [x[..., j] for j in range(n)]
    ok = regular.copy()
    for j in range(n):
        ok &= (xs[j] >= lo[j] - tol) & (xs[j] <= hi[j] + tol)
    for k in range(m):
        row = A[:, None, k, 0] * xs[0] - b[:, None, k]
        for j in range(1, n):
            row += A[:, None, k, j] * xs[j]
        ok &= row <= tol
    return x, ok


def _solve_pairs(A_full, b_full, combos):
    """Cramer's rule for every pair of rows at once (the n = 2 case)."""
    i, j = combos[:, 0], combos[:, 1]
    a00, a01 = A_full[:, i, 0], A_full[:, i, 1]
    a10, a11 = A_full[:, j, 0], A_full[:, j, 1]
    r0, r1 = b_full[:, i], b_full[:, j]
    p, q = a00 * a11, a01 * a10
    det = p - q
    # relative to the size of the two products, so cancellation reads as singular
    regular = np.abs(det) > _SINGULAR * np.maximum(1.0, np.abs(p) + np.abs(q))
    safe = np.where(regular, det, 1.0)
    x = np.empty(det.shape + (2,))
    x[..., 0] = (r0 * a11 - r1 * a01) / safe
    x[..., 1] = (a00 * r1 - a10 * r0) / safe
    return x, regular


def scaled_tolerance(lo, hi, tol=FEAS_TOL):
    """Shrink ``tol`` below the narrowest nondegenerate box side.

    A box like ``gamma in [0, 1e-9]`` would otherwise be swallowed whole by
    a 1e-9 feasibility slack.
    """
    widths = np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float)
    widths = widths[widths > 0]
    if widths.size:
        return min(tol, 1e-4 * float(widths.min()))
    return tol


def _lexmin(values, points, ok):
    """Per batch row: min value, then lexicographically smallest point among ties."""
    vals = np.where(ok, values, np.inf)
    best = vals.min(axis=1)
    mask = ok & (vals <= best[:, None] + TIE_TOL * np.maximum(1.0, np.abs(best[:, None])))
    n = points.shape[-1]
    for j in range(n):
        coord = np.where(mask, points[..., j], np.inf)
        cmin = coord.min(axis=1)
        mask &= coord <= cmin[:, None] + TIE_TOL
    idx = np.argmax(mask, axis=1)
    arg = points[np.arange(points.shape[0]), idx]
    empty = ~np.isfinite(best)
    arg = np.where(empty[:, None], np.nan, arg)
    return best, arg


def minimize_over_union(polyhedra, lo, hi, c, c0, tol=FEAS_TOL):
    """Minimize ``c . x + c0`` over a union of polyhedra intersected with a box.

    ``polyhedra`` is a list of ``(A, b)`` pairs, each batch-shaped
    (B, m, n) / (B, m) or unbatched (m, n) / (m,). ``c`` broadcasts to
    (B, n) and ``c0`` to (B,). Returns ``(value, argmin)`` with value
    ``+inf`` and argmin NaN where the union is empty.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.shape[0]
    tol = scaled_tolerance(lo, hi, tol)
    batch = np.broadcast_shapes(
        *(np.shape(b)[:-1] for _, b in polyhedra), np.shape(c)[:-1], np.shape(c0)
    )
    B = int(np.prod(batch)) if batch else 1
    c = np.broadcast_to(np.asarray(c, dtype=float), batch + (n,)).reshape(B, n)
    c0 = np.broadcast_to(np.asarray(c0, dtype=float), batch).reshape(B)
    polys = []
    for A, b in polyhedra:
        m = np.shape(b)[-1]
        polys.append((np.broadcast_to(A, batch + (m, n)).reshape(B, m, n), np.broadcast_to(b, batch + (m,)).reshape(B, m)))
    best = np.empty(B)
    arg = np.empty((B, n))
    for s in range(0, B, _BATCH_CHUNK):
        sl = slice(s, s + _BATCH_CHUNK)
        pts, oks = [], []
        for A, b in polys:
            x, ok = vertex_candidates(A[sl], b[sl], lo, hi, tol)
            pts.append(x)
            oks.append(ok)
        points = np.concatenate(pts, axis=1)
        ok = np.concatenate(oks, axis=1)
        values = (points * c[sl, None, :]).sum(axis=-1) + c0[sl, None]
        best[sl], arg[sl] = _lexmin(values, points, ok)
    return best.reshape(batch), arg.reshape(batch + (n,))
