"""Command-line entry point: ``relaydmt {curve,verify,simulate,fit,fig3}``.

Exit codes: 0 success, 1 usage, 2 domain or unsupported configuration,
3 verification or band failure, 4 I/O error.

Options may also come from ``--config file.json`` whose keys are the flag
names (``r-step`` or ``r_step``); explicit flags win over the file, and the
file wins over built-in defaults. ``RELAYDMT_OUT_DIR`` sets the default
output directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from relaydmt import __version__
from relaydmt.core import ChannelExponents, d_ddf, d_full_duplex, d_local_csi_bound, d_parallel, d_static_qmf
from relaydmt.curves import CURVE_SCHEMES, build_curve, fig3_curves, format_curve_csv, r_grid, render_svg
from relaydmt.errors import DomainError, InsufficientDataError, RelayDMTError, UnsupportedConfigurationError
from relaydmt.montecarlo import (
    DEFAULT_FLOOR,
    DEFAULT_LADDER,
    SCHEMES,
    SweepConfig,
    closed_form_diversity,
    estimate_outage,
    fit_diversity,
    read_sweep_csv,
    write_sweep_csv,
)
from relaydmt.solver import (
    ddf_grid_profile,
    exponent_cost,
    full_duplex_region,
    solve_ddf_exponent,
    solve_outage_exponent,
    static_qmf_region,
)
from relaydmt.solver.bounds import (
    dynamic_schedule,
    solve_global_csi,
    solve_local_csi,
    solve_parallel_dynamic,
    static_schedule,
    strictness_gap_at,
)
from relaydmt.solver.expr import OutageRegionSpec, maximum, minimum
from relaydmt.solver.grid import DEFAULT_STEP, grid_profile
from relaydmt.solver.regions import half_duplex_rate, single_relay_vars

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_FAIL, EXIT_IO = 0, 1, 2, 3, 4
ENV_OUT_DIR = "RELAYDMT_OUT_DIR"
VERIFY_TARGETS = ("lemma1", "lemma2", "lemma3", "lemma4", "lemma5", "thm1", "thm2")
EXACT_TOL = 1e-9
GRID_TOL = 1e-3
PARALLEL_TOL = 1e-2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _out_dir() -> Path:
    return Path(os.environ.get(ENV_OUT_DIR) or ".")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(path: Path, command: str, params: dict, outputs, seed=None, wall=0.0) -> Path:
    record = {
        "subcommand": command,
        "parameters": params,
        "version": __version__,
        "seed": seed,
        "wall_time_s": round(wall, 6),
        "outputs": [{"path": str(p), "bytes": p.stat().st_size, "sha256": _digest(p)} for p in outputs],
    }
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


def _params(args) -> dict:
    skip = {"func", "config"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _exponents(args) -> ChannelExponents:
    return ChannelExponents(args.a, args.b, args.c)


# --------------------------------------------------------------------------
# curve
# --------------------------------------------------------------------------


def cmd_curve(args) -> int:
    t0 = time.perf_counter()
    x = _exponents(args)
    rs = r_grid(args.r_min, args.r_max, args.r_step)
    curves = build_curve(args.scheme, x, rs, grid_step=args.grid_step)
    out = Path(args.out) if args.out else _out_dir() / f"curve_{args.scheme}.csv"
    text = format_curve_csv(curves)
    out.write_bytes(text.encode())
    man = write_manifest(Path(str(out) + ".manifest.json"), "curve", _params(args), [out], wall=time.perf_counter() - t0)
    print(f"wrote {out} ({sum(len(c.points) for c in curves)} rows); manifest {man}")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def _report(label, rows, tol):
    worst = 0.0
    for r, got, want in rows:
        dev = abs(got - want)
        worst = max(worst, dev)
        print(f"  {label} r={r:.4f} solver={got:.9f} closed={want:.9f} dev={dev:.3e}")
    ok = worst < tol
    print(f"{label}: max deviation {worst:.3e} (tolerance {tol:g}) {'PASS' if ok else 'FAIL'}")
    return ok


def _single_relay_check(x, rs, region_fn, expr_fn, closed, grid_step, epsilons, label):
    exact = []
    for r in rs:
        s = solve_outage_exponent(region_fn(x, float(r)), exponent_cost(x), epsilons=epsilons)
        exact.append((r, s.value, closed(x, float(r))))
    box = OutageRegionSpec(single_relay_vars(x), ())
    grid = grid_profile(box, expr_fn(*box.vars()).le(0.0), exponent_cost(x), rs, grid_step)
    grid_rows = [(r, g, closed(x, float(r))) for r, g in zip(rs, grid)]
    ok1 = _report(f"{label}/exact", exact, EXACT_TOL)
    ok2 = _report(f"{label}/grid", grid_rows, GRID_TOL)
    return ok1 and ok2


def _need_symmetric(x, target):
    if x.a != x.b:
        raise UnsupportedConfigurationError(f"{target} is stated only for a = b; got a={x.a}, b={x.b}")
    if not x.c < x.a:
        raise UnsupportedConfigurationError(f"{target} needs c < p; got c={x.c}, p={x.a}")


def cmd_verify(args) -> int:
    x = _exponents(args)
    eps = args.epsilons
    step = args.r_step
    top = max(x.relay_min, x.c) if args.target in ("lemma1", "lemma2", "lemma3") else 1.0
    rs = r_grid(0.0, max(top, step), step)
    t = args.target
    if t == "lemma1":
        ok = _single_relay_check(
            x, rs, full_duplex_region, lambda a, b, g: minimum(maximum(a, g), maximum(b, g)), d_full_duplex,
            args.grid_step, eps, "lemma1",
        )
    elif t == "lemma2":
        ok = _single_relay_check(
            x, rs, static_qmf_region, lambda a, b, g: half_duplex_rate(0.5, a, b, g), d_static_qmf,
            args.grid_step, eps, "lemma2",
        )
    elif t == "lemma3":
        if not x.c < x.relay_min:
            raise DomainError(f"lemma3 (DDF) needs c < min(a, b); got (a,b,c)={x.as_tuple()}")
        rows = [(r, solve_ddf_exponent(x, float(r), epsilons=eps).value, d_ddf(x, float(r))) for r in rs]
        grid = ddf_grid_profile(x, rs, args.grid_step)
        ok = _report("lemma3/parametric", rows, EXACT_TOL)
        ok &= _report("lemma3/grid", [(r, g, d_ddf(x, float(r))) for r, g in zip(rs, grid)], GRID_TOL)
    elif t == "lemma4":
        _need_symmetric(x, t)
        p, c = x.a, x.c
        ok = True
        for r in r_grid(0.0, (p + c) / 2, step):
            s = solve_global_csi(x, float(r), grid_step=args.grid_step4)
            d = s.details
            good = d["cross_check_ok"] and s.value <= d_full_duplex(x, float(r)) + 1e-12
            print(
                f"  lemma4 r={r:.4f} direct={s.value:.9f} grid={d['grid_value']:.9f} "
                f"tol={d['grid_tolerance']:.3g} {'ok' if good else 'MISMATCH'}"
            )
            ok &= good
        print(f"lemma4: direct vs grid cross-check {'PASS' if ok else 'FAIL'}")
    elif t == "lemma5":
        _need_symmetric(x, t)
        p, c = x.a, x.c
        rs5 = r_grid(p / 2, (p + c) / 2, step)
        rows = [(r, solve_global_csi(x, float(r), cross_check=False).value, p + c - 2 * r) for r in rs5]
        ok = _report("lemma5", rows, GRID_TOL)
    elif t == "thm1":
        _need_symmetric(x, t)
        p, c = x.a, x.c
        rs1 = [r for r in r_grid(0.0, p / 2, 0.02) if c < r < p / 2]
        rows = [(r, float(solve_local_csi(p, c, float(r))), d_local_csi_bound(p, c, float(r))) for r in rs1]
        ok = _report("thm1", rows, GRID_TOL)
    else:
        rs2 = np.round(np.arange(1, 10) * 0.05, 12)
        dyn = [(r, solve_parallel_dynamic(float(r), dynamic_schedule(float(r)), step=args.grid_step4).value, d_parallel(float(r))) for r in rs2]
        sta = [(r, solve_parallel_dynamic(float(r), static_schedule(0.5), step=args.grid_step4).value, 2 - 2 * r) for r in rs2]
        ok = _report("thm2/dynamic", dyn, PARALLEL_TOL)
        ok &= _report("thm2/static", sta, PARALLEL_TOL)
        gap = strictness_gap_at(1 / 3, None, 0.0, 1.0)
        print(
            f"thm2/strictness at (0,1,1,1), r=1/3: open={gap.open_value:.6f} closed={gap.closed_value:.6f} "
            f"{'flagged' if gap.degenerate else 'NOT flagged'}"
        )
        ok &= gap.degenerate
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# simulate / fit
# --------------------------------------------------------------------------


def _fit_record(scheme, x, r, fit=None, error=None, dropped=()):
    closed = closed_form_diversity(scheme, x, r) if scheme else None
    rec = {
        "scheme": scheme,
        "a": x.a if x else None,
        "b": x.b if x else None,
        "c": x.c if x else None,
        "r": r,
        "d_hat": fit.d_hat if fit else None,
        "d_closed_form": closed,
        "residual": fit.residual if fit else None,
        "points_used": list(fit.points_used) if fit else [],
        "dropped": [list(d) for d in (fit.dropped if fit else dropped)],
    }
    if error:
        rec["error"] = error
    return rec


def _band(rec, band):
    if rec["d_hat"] is None or rec["d_closed_form"] is None:
        return False
    d = rec["d_closed_form"]
    return abs(rec["d_hat"] - d) <= band * abs(d)


def _emit_fit(rec, args, path: Path) -> int:
    path.write_text(json.dumps(rec, indent=2) + "\n")
    if rec["d_hat"] is None:
        print(f"fit: insufficient data ({rec.get('error')})")
    else:
        print(
            f"fit: d_hat={rec['d_hat']:.4f} closed={rec['d_closed_form']} residual={rec['residual']:.3e} "
            f"points={len(rec['points_used'])}"
        )
    if args.assert_band is not None:
        ok = _band(rec, args.assert_band)
        print(f"band +/-{args.assert_band:.0%}: {'PASS' if ok else 'FAIL'}")
        if not ok:
            return EXIT_FAIL
    elif rec["d_hat"] is not None and rec["d_closed_form"] is not None:
        print(f"band +/-25%: {'inside' if _band(rec, 0.25) else 'outside'} (not enforced)")
    return EXIT_OK


def _run_fit(result, scheme, x, r, floor):
    try:
        return _fit_record(scheme, x, r, fit_diversity(result, floor))
    except InsufficientDataError as exc:
        return _fit_record(scheme, x, r, error=str(exc), dropped=exc.dropped)


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    x = _exponents(args)
    cfg = SweepConfig(args.scheme, x, args.r, args.snr, args.samples, args.seed, args.floor)
    result = estimate_outage(cfg, workers=args.workers)
    out = Path(args.out) if args.out else _out_dir() / f"sweep_{args.scheme}.csv"
    write_sweep_csv(result, out)
    fit_path = Path(args.fit_out) if args.fit_out else out.with_suffix(".fit.json")
    rec = _run_fit(result, args.scheme, x, args.r, args.floor)
    code = _emit_fit(rec, args, fit_path)
    man = write_manifest(
        Path(str(out) + ".manifest.json"), "simulate", _params(args), [out, fit_path], args.seed, time.perf_counter() - t0
    )
    print(f"wrote {out}, {fit_path}; manifest {man}")
    return code


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    src = Path(args.input)
    result = read_sweep_csv(src)
    x = ChannelExponents(args.a, args.b, args.c) if args.scheme else None
    rec = _run_fit(result, args.scheme, x, args.r, args.floor)
    out = Path(args.out) if args.out else src.with_suffix(".fit.json")
    code = _emit_fit(rec, args, out)
    write_manifest(Path(str(out) + ".manifest.json"), "fit", _params(args), [out], wall=time.perf_counter() - t0)
    return code


# --------------------------------------------------------------------------
# fig3
# --------------------------------------------------------------------------


def cmd_fig3(args) -> int:
    t0 = time.perf_counter()
    out_dir = Path(args.out_dir) if args.out_dir else _out_dir()
    if not out_dir.is_dir():
        raise OSError(f"output directory {out_dir} does not exist")
    curves = fig3_curves()
    csv_path = out_dir / "fig3.csv"
    svg_path = out_dir / "fig3.svg"
    csv_path.write_bytes(format_curve_csv(curves).encode())
    svg_path.write_text(render_svg(curves, title="DMT for (a,b,c) = (1, 1, 0.2)"))
    man = write_manifest(out_dir / "fig3.manifest.json", "fig3", _params(args), [csv_path, svg_path], wall=time.perf_counter() - t0)
    print(f"wrote {csv_path}, {svg_path}; manifest {man}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_exponents(p, required=False):
    p.add_argument("--a", type=float, default=1.0, help="S-R SNR exponent")
    p.add_argument("--b", type=float, default=1.0, help="R-D SNR exponent")
    p.add_argument("--c", type=float, default=0.2, help="S-D SNR exponent")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relaydmt", description="DMT curves, outage-exponent checks and fading simulations.")
    parser.add_argument("--version", action="version", version=f"relaydmt {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("curve", help="write a sampled tradeoff curve as CSV")
    p.add_argument("--scheme", choices=CURVE_SCHEMES, required=True)
    _add_exponents(p)
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--r-step", type=float, default=0.01)
    p.add_argument("--grid-step", type=float, default=0.01, help="cross-check grid step for gcsi")
    p.add_argument("--out", help="CSV path (default: $RELAYDMT_OUT_DIR/curve_<scheme>.csv)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("verify", help="check the outage-exponent oracle against a closed form")
    p.add_argument(
        "--target",
        choices=VERIFY_TARGETS,
        required=True,
        help="lemma1 full duplex, lemma2 static QMF, lemma3 DDF, lemma4/lemma5 global CSI, "
        "thm1 local CSI, thm2 parallel relays",
    )
    _add_exponents(p)
    p.add_argument("--r-step", type=float, default=0.01)
    p.add_argument("--grid-step", type=float, default=DEFAULT_STEP, help="grid path step (3 variables)")
    p.add_argument("--grid-step4", type=float, default=0.01, help="grid step for 4-variable scans")
    p.add_argument("--epsilons", type=_floats, default=(1e-3, 1e-4, 1e-5), help="strictness schedule")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo outage sweep and slope fit")
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    _add_exponents(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--snr", type=_floats, default=DEFAULT_LADDER, help="comma-separated SNR values (linear)")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--floor", type=int, default=DEFAULT_FLOOR, help="minimum outage count for a fit point")
    p.add_argument("--assert-band", type=float, default=None, help="fail (exit 3) if |d_hat/d - 1| exceeds this")
    p.add_argument("--out", help="sweep CSV path")
    p.add_argument("--fit-out", help="fit record path (JSON)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="re-fit the slope of an existing sweep CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--scheme", choices=SCHEMES)
    _add_exponents(p)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--floor", type=int, default=DEFAULT_FLOOR)
    p.add_argument("--assert-band", type=float, default=None)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("fig3", help="reproduce the (1,1,0.2) tradeoff figure as CSV + SVG")
    p.add_argument("--out-dir")
    p.add_argument("--config")
    p.set_defaults(func=cmd_fig3)
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with a JSON config installed as subcommand defaults."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices
    command = next((tok for tok in argv if tok in subs), None)
    if not known.config or command is None:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {known.config}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config {known.config}: top level must be an object")
    sub = subs[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("help", "config"):
            raise UsageError(f"config {known.config}: unknown option {key!r} for '{command}'")
        act = actions[dest]
        if act.type is _floats and isinstance(value, list):
            value = tuple(float(v) for v in value)
        elif act.type is not None and isinstance(value, str):
            value = act.type(value)
        if act.choices is not None and value not in act.choices:
            raise UsageError(f"config {known.config}: {key}={value!r} not in {list(act.choices)}")
        defaults[dest] = value
        act.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (UnsupportedConfigurationError, DomainError) as exc:
        kind = "unsupported" if isinstance(exc, UnsupportedConfigurationError) else "domain error"
        print(f"relaydmt: {kind}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except RelayDMTError as exc:
        print(f"relaydmt: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"relaydmt: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
