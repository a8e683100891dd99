"""Sampled tradeoff curves, their CSV form, and a minimal SVG rendering."""

from __future__ import annotations

import math
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from relaydmt.core import (
    ChannelExponents,
    DMTCurve,
    d_ddf,
    d_full_duplex,
    d_local_csi_bound,
    d_parallel,
    d_static_qmf,
)
from relaydmt.errors import DomainError, ValidationError

__all__ = [
    "CURVE_SCHEMES",
    "FIG3_EXPONENTS",
    "build_curve",
    "envelope_bound",
    "fig3_curves",
    "format_curve_csv",
    "parse_curve_csv",
    "r_grid",
    "render_svg",
    "rows_to_csv",
]

CURVE_SCHEMES = ("fd", "sqmf", "ddf", "lcsi", "gcsi", "parallel", "envelope")
FIG3_EXPONENTS = ChannelExponents(1.0, 1.0, 0.2)


def r_grid(r_min: float, r_max: float, r_step: float) -> np.ndarray:
    """Inclusive grid; values are rounded to 12 places so 0.1 + 0.2 prints as 0.3."""
    if not (math.isfinite(r_min) and math.isfinite(r_max) and math.isfinite(r_step)):
        raise ValidationError("r grid bounds must be finite")
    if r_min < 0 or r_max < r_min or r_step <= 0:
        raise ValidationError(f"invalid r grid: min={r_min}, max={r_max}, step={r_step}")
    n = int(math.floor((r_max - r_min) / r_step + 1e-9))
    return np.round(r_min + r_step * np.arange(n + 1), 12)


def _achievable(x: ChannelExponents, r: float) -> float:
    best = d_static_qmf(x, r)
    if x.c < x.relay_min:
        best = max(best, d_ddf(x, r))
    return best


def envelope_bound(x: ChannelExponents, r: float) -> float:
    """Tightest closed-form upper bound available at ``r``.

    With ``a = b = p > c`` that is the CSIR bound on ``(c, p/2)`` and the
    global-CSI line ``p + c - 2r`` from ``p/2`` on; otherwise full duplex.
    """
    fd = d_full_duplex(x, r)
    if x.a == x.b and x.c < x.a:
        p, c = x.a, x.c
        if c < r < p / 2:
            return min(fd, d_local_csi_bound(p, c, r))
        if r >= p / 2:
            return min(fd, max(p + c - 2.0 * r, 0.0) + 0.0)
    return fd


def build_curve(scheme: str, x: ChannelExponents, rs: Sequence[float], **solver_opts) -> list[DMTCurve]:
    """Curves for one ``curve`` invocation; ``envelope`` also returns its bound."""
    rs = [float(r) for r in rs]
    if scheme == "fd":
        return [DMTCurve.from_function("fd", x, lambda r: d_full_duplex(x, r), rs)]
    if scheme == "sqmf":
        return [DMTCurve.from_function("sqmf", x, lambda r: d_static_qmf(x, r), rs)]
    if scheme == "ddf":
        if not x.c < x.relay_min:
            raise DomainError(f"DDF tradeoff needs c < min(a, b); got (a,b,c)={x.as_tuple()}")
        return [DMTCurve.from_function("ddf", x, lambda r: d_ddf(x, r), rs)]
    if scheme == "parallel":
        if rs and rs[-1] > 1.0:
            raise DomainError("parallel-relay tradeoff is defined for 0 <= r <= 1")
        return [DMTCurve("parallel", None, [(r, d_parallel(r)) for r in rs])]
    if scheme == "envelope":
        return [
            DMTCurve.from_function("envelope", x, lambda r: _achievable(x, r), rs),
            DMTCurve.from_function("envelope-bound", x, lambda r: envelope_bound(x, r), rs),
        ]
    if scheme == "gcsi":
        from relaydmt.solver.bounds import solve_global_csi

        opts = {k: v for k, v in solver_opts.items() if k in ("grid_step",)}
        return [DMTCurve("gcsi", x, [(r, float(solve_global_csi(x, r, **opts).value)) for r in rs])]
    if scheme == "lcsi":
        from relaydmt.solver.bounds import solve_local_csi

        if x.a != x.b:
            raise DomainError(f"CSIR bound is stated for a = b only; got a={x.a}, b={x.b}")
        opts = {k: v for k, v in solver_opts.items() if k in ("alpha_step", "t_step", "epsilons")}
        return [DMTCurve("lcsi", x, [(r, float(solve_local_csi(x.a, x.c, r, **opts))) for r in rs])]
    raise ValidationError(f"unknown scheme {scheme!r}; expected one of {CURVE_SCHEMES}")


def fig3_curves(step: float = 0.005, r_max: float = 0.6) -> list[DMTCurve]:
    """Curves of the (1, 1, 0.2) tradeoff figure."""
    x = FIG3_EXPONENTS
    rs = r_grid(0.0, r_max, step)
    p, c = x.a, x.c
    inner = [r for r in rs if c < r < p / 2]
    return [
        DMTCurve.from_function("fd", x, lambda r: d_full_duplex(x, r), rs),
        DMTCurve.from_function("sqmf", x, lambda r: d_static_qmf(x, r), rs),
        DMTCurve.from_function("ddf", x, lambda r: d_ddf(x, r), rs),
        DMTCurve("lcsi-bound", x, [(r, d_local_csi_bound(p, c, r)) for r in inner]),
        DMTCurve.from_function("envelope", x, lambda r: _achievable(x, r), rs),
    ]


def _num(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def format_curve_csv(curves: Iterable[DMTCurve]) -> str:
    lines = ["r,d,scheme"]
    for curve in curves:
        lines.extend(f"{_num(r)},{_num(d)},{curve.scheme}" for r, d in curve.points)
    return "\n".join(lines) + "\n"


def parse_curve_csv(text: str) -> list[tuple[float, float, str]]:
    lines = text.split("\n")
    if not lines or lines[0] != "r,d,scheme":
        raise ValidationError("curve CSV must start with header 'r,d,scheme'")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValidationError(f"line {i}: expected 3 fields, got {len(parts)}")
        try:
            rows.append((float(parts[0]), float(parts[1]), parts[2]))
        except ValueError as exc:
            raise ValidationError(f"line {i}: {exc}") from None
    return rows


def rows_to_csv(rows: Iterable[tuple[float, float, str]]) -> str:
    return "r,d,scheme\n" + "".join(f"{_num(r)},{_num(d)},{s}\n" for r, d, s in rows)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#000000", "#ff7f0e", "#8c564b")


def render_svg(
    curves: Sequence[DMTCurve],
    r_range=(0.0, 0.65),
    d_range=(0.0, 1.3),
    size=(640, 440),
    title: str = "",
) -> str:
    """Line chart of ``d`` against ``r``: one polyline per curve and a legend."""
    w, h = size
    left, right, top, bottom = 60, 150, 30, 50
    pw, ph = w - left - right, h - top - bottom

    def sx(r):
        return left + (r - r_range[0]) / (r_range[1] - r_range[0]) * pw

    def sy(d):
        return top + (1.0 - (d - d_range[0]) / (d_range[1] - d_range[0])) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for k in range(14):
        r = round(0.05 * k, 2)
        if r > r_range[1] + 1e-9:
            break
        out.append(f'<line x1="{sx(r):.2f}" y1="{top + ph}" x2="{sx(r):.2f}" y2="{top + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{sx(r):.2f}" y="{top + ph + 18}" font-size="10" text-anchor="middle">{r:.2f}</text>')
    for k in range(14):
        d = round(0.1 * k, 1)
        if d > d_range[1] + 1e-9:
            break
        out.append(f'<line x1="{left - 5}" y1="{sy(d):.2f}" x2="{left}" y2="{sy(d):.2f}" stroke="#444"/>')
        out.append(f'<text x="{left - 8}" y="{sy(d) + 3:.2f}" font-size="10" text-anchor="end">{d:.1f}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{h - 12}" font-size="12" text-anchor="middle">r</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" font-size="12" text-anchor="middle">d(r)</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="18" font-size="13" text-anchor="middle">{escape(title)}</text>')
    for i, curve in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{sx(r):.2f},{sy(d):.2f}"
            for r, d in curve.points
            if r_range[0] <= r <= r_range[1] and d_range[0] <= d <= d_range[1]
        )
        width = 2.5 if curve.scheme == "envelope" else 1.5
        dash = ' stroke-dasharray="6,4"' if curve.scheme.endswith("bound") else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{pts}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 36}" y2="{ly}" stroke="{color}" stroke-width="{width}"{dash}/>')
        out.append(f'<text x="{left + pw + 42}" y="{ly + 4}" font-size="11">{escape(curve.scheme)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
