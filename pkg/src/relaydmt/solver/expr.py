"""Piecewise-affine constraint expressions over exponent variables.

Expressions are small immutable trees built with ordinary arithmetic::

    a, g = Var(0), Var(2)
    rate = 0.5 * maximum(a, g) + 0.5 * g

Weights and constants may be numpy arrays; every array must broadcast to a
common batch shape. That is how the nested solvers evaluate one region
shape for thousands of parameter values at once.

For the exact solver a tree is rewritten into *min-of-max* normal form,
``min_i max_j L_ij(x)`` with affine ``L_ij``. Then ``expr <= thr`` holds
iff some row ``i`` has every ``L_ij <= thr``, i.e. the region is a finite
union of polyhedra.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from relaydmt.errors import ValidationError

__all__ = [
    "Affine",
    "Comparison",
    "Const",
    "Expr",
    "Max",
    "Min",
    "OutageRegionSpec",
    "Var",
    "Variable",
    "WSum",
    "as_expr",
    "evaluate",
    "maximum",
    "minimum",
    "normal_form",
]


class Expr:
    """Base node. Arithmetic builds :class:`WSum` nodes."""

    # make `ndarray * expr` defer to Expr.__rmul__ instead of broadcasting
    __array_ufunc__ = None

    def __add__(self, other):
        return WSum(((1.0, self), (1.0, as_expr(other))))

    def __radd__(self, other):
        return WSum(((1.0, as_expr(other)), (1.0, self)))

    def __sub__(self, other):
        return WSum(((1.0, self), (-1.0, as_expr(other))))

    def __rsub__(self, other):
        return WSum(((1.0, as_expr(other)), (-1.0, self)))

    def __neg__(self):
        return WSum(((-1.0, self),))

    def __mul__(self, weight):
        if isinstance(weight, Expr):
            raise ValidationError("product of two expressions is not piecewise-affine")
        return WSum(((weight, self),))

    __rmul__ = __mul__

    def le(self, threshold):
        return Comparison(self, "<=", threshold)

    def lt(self, threshold):
        return Comparison(self, "<", threshold)

    def ge(self, threshold):
        return Comparison(self, ">=", threshold)

    def gt(self, threshold):
        return Comparison(self, ">", threshold)


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: object


@dataclass(frozen=True, eq=False)
class Var(Expr):
    index: int
    name: str = ""


@dataclass(frozen=True, eq=False)
class WSum(Expr):
    terms: tuple
    offset: object = 0.0


@dataclass(frozen=True, eq=False)
class Min(Expr):
    args: tuple


@dataclass(frozen=True, eq=False)
class Max(Expr):
    args: tuple


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(x)


def minimum(*args) -> Min:
    if not args:
        raise ValidationError("min of no arguments")
    return Min(tuple(as_expr(a) for a in args))


def maximum(*args) -> Max:
    if not args:
        raise ValidationError("max of no arguments")
    return Max(tuple(as_expr(a) for a in args))


def _check_finite(value, what):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} must be finite")
    return arr


def validate(expr: Expr, nvars: int) -> None:
    """Raise :class:`ValidationError` on unknown nodes, bad indices, non-finite weights."""
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Const):
            _check_finite(node.value, "constant")
        elif isinstance(node, Var):
            if not (isinstance(node.index, int) and 0 <= node.index < nvars):
                raise ValidationError(f"variable index {node.index!r} outside 0..{nvars - 1}")
        elif isinstance(node, WSum):
            _check_finite(node.offset, "offset")
            for w, child in node.terms:
                _check_finite(w, "weight")
                stack.append(child)
        elif isinstance(node, (Min, Max)):
            if not node.args:
                raise ValidationError("empty min/max node")
            stack.extend(node.args)
        else:
            raise ValidationError(f"unsupported expression node {type(node).__name__}")


def evaluate(expr: Expr, values: Sequence):
    """Evaluate pointwise; ``values[i]`` is the (array) value of ``Var(i)``."""
    if isinstance(expr, Const):
        return np.asarray(expr.value, dtype=float)
    if isinstance(expr, Var):
        return values[expr.index]
    if isinstance(expr, WSum):
        out = np.asarray(expr.offset, dtype=float)
        for w, child in expr.terms:
            out = out + np.asarray(w, dtype=float) * evaluate(child, values)
        return out
    if isinstance(expr, Min):
        return _reduce(np.minimum, [evaluate(a, values) for a in expr.args])
    if isinstance(expr, Max):
        return _reduce(np.maximum, [evaluate(a, values) for a in expr.args])
    raise ValidationError(f"unsupported expression node {type(expr).__name__}")


def _reduce(op, items):
    out = items[0]
    for it in items[1:]:
        out = op(out, it)
    return out


class Affine:
    """``coef . x + const``; ``coef`` has shape (*batch, n), ``const`` shape (*batch,)."""

    __slots__ = ("coef", "const")

    def __init__(self, coef, const):
        self.coef = np.asarray(coef, dtype=float)
        self.const = np.asarray(const, dtype=float)

    def __add__(self, other: Affine) -> Affine:
        return Affine(self.coef + other.coef, self.const + other.const)

    def scale(self, w) -> Affine:
        w = np.asarray(w, dtype=float)
        return Affine(self.coef * w[..., None], self.const * w)

    def __neg__(self) -> Affine:
        return Affine(-self.coef, -self.const)

    def __repr__(self):
        return f"Affine({self.coef.tolist()}, {self.const.tolist()})"


def _negate(nf):
    # -(min_i max_j A_ij) = max_i min_j (-A_ij) = min_f max_i (-A_{i, f(i)})
    return [[-a for a in choice] for choice in itertools.product(*nf)]


def _add(nf1, nf2):
    return [[a + b for a, b in itertools.product(r1, r2)] for r1, r2 in itertools.product(nf1, nf2)]


def normal_form(expr: Expr, nvars: int) -> list[list[Affine]]:
    """Rewrite ``expr`` as ``min_i max_j L_ij`` (outer list = min, inner = max)."""
    if isinstance(expr, Const):
        return [[Affine(np.zeros(nvars), expr.value)]]
    if isinstance(expr, Var):
        coef = np.zeros(nvars)
        coef[expr.index] = 1.0
        return [[Affine(coef, 0.0)]]
    if isinstance(expr, WSum):
        acc = [[Affine(np.zeros(nvars), expr.offset)]]
        for w, child in expr.terms:
            w = np.asarray(w, dtype=float)
            if np.all(w == 0.0):
                continue
            child_nf = normal_form(child, nvars)
            if np.all(w >= 0.0):
                part = [[a.scale(w) for a in row] for row in child_nf]
            elif np.all(w <= 0.0):
                part = _negate([[a.scale(-w) for a in row] for row in child_nf])
            else:
                raise ValidationError("a weight changes sign across the batch; min/max cannot be distributed")
            acc = _add(acc, part)
        return acc
    if isinstance(expr, Min):
        out = []
        for child in expr.args:
            out.extend(normal_form(child, nvars))
        return out
    if isinstance(expr, Max):
        out = normal_form(expr.args[0], nvars)
        for child in expr.args[1:]:
            nf = normal_form(child, nvars)
            out = [r1 + r2 for r1, r2 in itertools.product(out, nf)]
        return out
    raise ValidationError(f"unsupported expression node {type(expr).__name__}")


_OPS = ("<=", "<", ">=", ">")


@dataclass(frozen=True, eq=False)
class Comparison:
    expr: Expr
    op: str
    threshold: object

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValidationError(f"comparison operator must be one of {_OPS}, got {self.op!r}")
        _check_finite(self.threshold, "threshold")

    @property
    def strict(self) -> bool:
        return self.op in ("<", ">")

    def upper_form(self):
        """Return ``(expr', thr')`` with the comparison rewritten as ``expr' <= thr'``."""
        if self.op in ("<=", "<"):
            return self.expr, np.asarray(self.threshold, dtype=float)
        return -self.expr, -np.asarray(self.threshold, dtype=float)

    def holds(self, values, slack=1e-12):
        """Pointwise truth on arrays; ``slack`` absorbs float noise at grid points."""
        lhs = evaluate(self.expr, values)
        thr = np.asarray(self.threshold, dtype=float)
        if self.op == "<=":
            return lhs <= thr + slack
        if self.op == "<":
            return lhs < thr - slack
        if self.op == ">=":
            return lhs >= thr - slack
        return lhs > thr + slack


@dataclass(frozen=True)
class Variable:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValidationError(f"bounds of {self.name} must be finite")
        if self.lo > self.hi:
            raise ValidationError(f"variable {self.name}: lo={self.lo} > hi={self.hi}")


@dataclass(frozen=True, eq=False)
class OutageRegionSpec:
    """Conjunction of comparisons intersected with a box."""

    variables: tuple
    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.variables:
            raise ValidationError("region needs at least one variable")
        for v in self.variables:
            if not isinstance(v, Variable):
                raise ValidationError(f"expected Variable, got {v!r}")
        for cmp in self.constraints:
            if not isinstance(cmp, Comparison):
                raise ValidationError(f"expected Comparison, got {cmp!r}")
            validate(cmp.expr, self.dim)

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def lo(self) -> np.ndarray:
        return np.array([v.lo for v in self.variables])

    @property
    def hi(self) -> np.ndarray:
        return np.array([v.hi for v in self.variables])

    @property
    def has_strict(self) -> bool:
        return any(c.strict for c in self.constraints)

    def vars(self) -> list[Var]:
        return [Var(i, v.name) for i, v in enumerate(self.variables)]

    def polyhedra(self, eps: float = 0.0):
        """DNF expansion: list of ``(A, b)`` with ``A x <= b`` per polyhedron.

        Strict comparisons are tightened by ``eps``. ``A`` has shape
        (*batch, m, n) and ``b`` shape (*batch, m).
        """
        per_constraint = []
        for cmp in self.constraints:
            expr, thr = cmp.upper_form()
            if cmp.strict:
                thr = thr - eps
            rows_list = []
            for row in normal_form(expr, self.dim):
                rows_list.append([(aff.coef, thr - aff.const) for aff in row])
            per_constraint.append(rows_list)
        out = []
        for combo in itertools.product(*per_constraint):
            rows = [r for part in combo for r in part]
            if not rows:
                continue
            batch = np.broadcast_shapes(*(np.shape(c)[:-1] for c, _ in rows), *(np.shape(b) for _, b in rows))
            A = np.stack([np.broadcast_to(c, batch + (self.dim,)) for c, _ in rows], axis=-2)
            b = np.stack([np.broadcast_to(b, batch) for _, b in rows], axis=-1)
            out.append((A, b))
        if not self.constraints:
            out.append((np.zeros((0, self.dim)), np.zeros(0)))
        return out

    def contains(self, point, tol: float = 1e-9) -> bool:
        x = np.asarray(point, dtype=float)
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            return False
        vals = [x[i] for i in range(self.dim)]
        for cmp in self.constraints:
            lhs = float(evaluate(cmp.expr, vals))
            thr = float(cmp.threshold)
            if cmp.op in ("<=", "<") and lhs > thr + tol:
                return False
            if cmp.op in (">=", ">") and lhs < thr - tol:
                return False
        return True
