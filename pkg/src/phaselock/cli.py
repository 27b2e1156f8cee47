"""Command-line interface.

Exit codes: 0 ok, 2 usage or parameter error, 3 numeric failure,
4 theorem-level check failed (alarm).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io as pio
from .errors import InvalidParams, PhaselockError, RangeError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_ALARM = 4


class UsageError(Exception):
    pass


def _emit(payload, output: str | None) -> None:
    text = pio.dumps(payload)
    if output:
        try:
            Path(output).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {output}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _params(args):
    from .params import SystemParams

    return SystemParams(args.omega, args.B, args.A)


# ---------------------------------------------------------------------------
# subcommands


def cmd_rho(args) -> int:
    from .monodromy import rho_mobius
    from .torus import rho_a0, rho_direct

    p = _params(args)
    t0 = time.perf_counter()
    if args.method == "Mobius":
        est = rho_mobius(p, args.tol)
    elif args.method == "Direct":
        est = rho_direct(p, args.tol)
    else:
        est = rho_a0(p)
    dt = time.perf_counter() - t0
    pio.log_unit("rho", dt, B=p.B, A=p.A, omega=p.omega)
    _emit({"rho": est.rho, "error_bound": est.error_bound, "method": est.method.value,
           "wall_time": dt}, args.output)
    return EXIT_OK


def cmd_trace(args) -> int:
    from .monodromy import classify_margin, monodromy

    p = _params(args)
    t0 = time.perf_counter()
    res = monodromy(p, args.tol)
    dt = time.perf_counter() - t0
    pio.log_unit("trace", dt, B=p.B, A=p.A, omega=p.omega)
    _emit({"trace": res.trace.real, "trace_imag": res.trace.imag, "margin": res.margin,
           "kind": classify_margin(res.margin, res.trace.real, args.tol_boundary).value,
           "det_residual": res.det_residual, "Mtilde": res.Mtilde, "wall_time": dt}, args.output)
    return EXIT_OK


def _portrait_grid(cfg: pio.RunConfig, use_cache: bool):
    from .atlas import sweep

    key = pio.cache_key("portrait", {"omega": cfg.omega, "grid": dataclasses.asdict(cfg.grid),
                                     "method": cfg.method},
                        {"tol": cfg.tol, "tol_boundary": cfg.tol_boundary})
    cache = pio.GridCache(cfg.resolved_cache_dir())
    grid = cache.get(key, cfg.omega, cfg.grid, cfg.method) if use_cache else None
    hit = grid is not None
    if grid is None:
        t0 = time.perf_counter()
        grid = sweep(cfg.omega, cfg.grid, cfg.method, cfg.tol, cfg.tol_boundary,
                     cfg.resolved_threads())
        pio.log_unit("sweep", time.perf_counter() - t0, cells=grid.rho.size,
                     errors=len(grid.errors), threads=cfg.resolved_threads())
        if use_cache:
            try:
                cache.put(key, grid)
            except OSError as exc:
                logging.getLogger("phaselock").warning("cache not written: %s", exc)
    return grid, key, hit


def cmd_portrait(args) -> int:
    overrides = {k: getattr(args, k) for k in ("omega", "tol", "tol_boundary", "B_min", "B_max",
                                               "A_min", "A_max", "nB", "nA", "method", "threads",
                                               "cache_dir", "output", "format")}
    cfg = pio.load_config(args.config, overrides)
    outdir = Path(cfg.output)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write-test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory {outdir} is not writable: {exc}") from exc
    t0 = time.perf_counter()
    grid, key, hit = _portrait_grid(cfg, not args.no_cache)
    digests = {}
    for f in cfg.format:
        t1 = time.perf_counter()
        digests.update(pio.write_portrait(grid, outdir, (f,)))
        pio.log_unit(f"write-{f}", time.perf_counter() - t1)
    manifest = {"command": "portrait", "config": cfg.as_dict(), "config_hash": key,
                "cache_hit": hit, "cell_errors": len(grid.errors), "artifacts": digests,
                "fallback_cells": int(grid.fallback.sum()), "version": pio.VERSION}
    code = EXIT_OK
    if args.structure is not None:
        from .atlas import structure_counts

        rep = structure_counts(cfg.omega, args.structure, max(abs(cfg.grid.A_min), abs(cfg.grid.A_max)),
                               threads=cfg.resolved_threads())
        pio.log_unit("structure", rep.seconds, ok=int(rep.ok))
        manifest["structure"] = {"band": rep.band, "grid": dataclasses.asdict(rep.spec),
                                 "ok": rep.ok, "edge_clearance": rep.edge_clearance,
                                 "counts": [{"r": c.r, "components": c.components,
                                             "expected": c.expected, "full_window": c.full_window,
                                             "constrictions": c.constrictions} for c in rep.counts]}
        if not rep.ok:
            code = EXIT_ALARM
    manifest["runtime"] = time.perf_counter() - t0
    pio.write_manifest(outdir, manifest)
    if grid.errors:
        code = max(code, EXIT_NUMERIC)
    return code


def cmd_boundary(args) -> int:
    from .atlas import trace_boundary

    t0 = time.perf_counter()
    curve = trace_boundary(args.r, args.side, args.omega, (args.A_min, args.A_max), args.tol,
                           args.n, args.threads or None)
    pio.log_unit("boundary", time.perf_counter() - t0, r=args.r, side=args.side, n=args.n)
    _emit({"r": curve.r, "side": curve.side, "omega": curve.omega, "A": curve.A, "B": curve.B,
           "residuals": curve.residuals, "gaps": curve.gaps}, args.output)
    return EXIT_OK if not curve.gaps else EXIT_NUMERIC


def cmd_catalog(args) -> int:
    from .atlas import build_catalog

    t0 = time.perf_counter()
    cat = build_catalog(args.omega, args.r_max, args.A_max)
    dt = time.perf_counter() - t0
    pio.log_unit("catalog", dt, rows=len(cat.rows), alarms=len(cat.alarms))
    outdir = Path(args.output)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        csv_bytes = pio.catalog_csv(cat).encode()
        json_bytes = pio.catalog_json(cat).encode()
        (outdir / "catalog.csv").write_bytes(csv_bytes)
        (outdir / "catalog.json").write_bytes(json_bytes)
    except OSError as exc:
        raise UsageError(f"cannot write catalog to {outdir}: {exc}") from exc
    import hashlib

    pio.write_manifest(outdir, {
        "command": "catalog", "omega": args.omega, "r_max": args.r_max, "A_max": args.A_max,
        "runtime": dt, "alarms": cat.alarms, "discrepancies": cat.discrepancies,
        "artifacts": {"catalog.csv": hashlib.sha256(csv_bytes).hexdigest(),
                      "catalog.json": hashlib.sha256(json_bytes).hexdigest()},
        "version": pio.VERSION})
    return EXIT_ALARM if cat.alarms else EXIT_OK


def cmd_transition(args) -> int:
    from .connection import stokes_from_frame, canonical_frame, transition_from_frame
    from .params import SystemParams

    p = SystemParams.on_axis(args.omega, args.r, args.A)
    t0 = time.perf_counter()
    fr = canonical_frame(p, args.tol)
    td = transition_from_frame(fr)
    st = stokes_from_frame(fr, td)
    dt = time.perf_counter() - t0
    pio.log_unit("transition", dt, r=args.r, A=args.A, omega=args.omega)
    _emit({"B": p.B, "A": p.A, "omega": p.omega, "a": td.a, "b": td.b, "c": td.c, "Q": td.Q,
           "involution_residual": td.involution_residual,
           "relation1_residual": td.relation1_residual, "route_residual": td.route_residual,
           "c0": st.c0, "c1": st.c1, "relation2_residual": st.relation2_residual,
           "trace_residual": st.trace_residual, "frame_error": fr.frame_error,
           "wall_time": dt}, args.output)
    return EXIT_OK


def _axis_points(omega: float, n: int, l_max: int = 3, A_max: float | None = None):
    """Deterministic axis sample: ``l`` cycles through 0..l_max, ``A`` on a
    golden-ratio sequence in ``(0.05, A_max)``."""
    A_max = 6.0 * omega if A_max is None else A_max
    g = (math.sqrt(5.0) - 1.0) / 2.0
    return [(k % (l_max + 1), 0.05 + (A_max - 0.05) * ((0.5 + k * g) % 1.0)) for k in range(n)]


def suite_identities(omega: float, n: int, tol: float) -> list[dict]:
    from .connection import identity_battery
    from .params import SystemParams

    out = []
    for l, A in _axis_points(omega, n):
        t0 = time.perf_counter()
        rep = identity_battery(SystemParams.on_axis(omega, l, A), tol)
        pio.log_unit("identity-battery", time.perf_counter() - t0, l=l, A=A, passed=int(rep.passed))
        for c in rep.checks:
            out.append({"point": {"l": l, "A": A}, "name": c.name, "passed": c.passed,
                        "residual": c.residual, "threshold": c.threshold, "note": c.note,
                        "level": "theorem"})
    return out


def suite_conjectures(omega: float, r_max: int, A_max: float) -> list[dict]:
    from .atlas import garland_scan
    from .connection import classify_constriction
    from .heun import find_constrictions_on_axis
    from .params import SystemParams

    out = []
    for l in range(r_max + 1):
        for ac in find_constrictions_on_axis(l, omega, (0.05 * omega, A_max)):
            t0 = time.perf_counter()
            rec = classify_constriction(SystemParams.on_axis(omega, l, ac.A))
            pio.log_unit("constriction-sign", time.perf_counter() - t0, l=l, A=ac.A)
            out.append({"name": "constriction_sign_positive", "point": {"l": l, "A": ac.A},
                        "passed": rec.sign.value == "Positive", "cb_ratio": rec.cb_ratio,
                        "agreement": rec.agreement, "level": "conjecture evidence"})
    for r in range(1, r_max + 1):
        t0 = time.perf_counter()
        ev = garland_scan(r, omega, (0.05 * omega, A_max))
        pio.log_unit("garland-scan", time.perf_counter() - t0, r=r)
        out.append({"name": "no_off_axis_constrictions", "point": {"r": r},
                    "passed": not ev.off_axis, "found": [c.A for c in ev.off_axis],
                    "level": "conjecture evidence"})
        out.append({"name": "axis_segments_inside", "point": {"r": r},
                    "passed": all(s[2] for s in ev.segment_checks),
                    "segments": ev.segment_checks, "level": "conjecture evidence"})
    return out


BESSEL_CONSTANT = 0.1


def suite_asymptotics(omega: float, r_max: int, threads: int | None) -> list[dict]:
    from .atlas import bessel_compare, trace_boundary

    out = []
    for r in range(0, r_max + 1):
        for side in ("minus", "plus"):
            t0 = time.perf_counter()
            curve = trace_boundary(r, side, omega, (10 * omega, 30 * omega), 1e-11, 41, threads)
            rep = bessel_compare(curve)
            pio.log_unit("bessel-compare", time.perf_counter() - t0, r=r, side=side)
            out.append({"name": "bessel_deviation_bounded", "point": {"r": r, "side": side},
                        "passed": rep.bounded(BESSEL_CONSTANT), "constant": rep.constant,
                        "trend_ratio": rep.trend_ratio, "threshold": BESSEL_CONSTANT,
                        "level": "theorem"})
    return out


def cmd_check(args) -> int:
    if args.suite == "identities":
        checks = suite_identities(args.omega, args.points, args.tol)
    elif args.suite == "conjectures":
        checks = suite_conjectures(args.omega, args.r_max, args.A_max)
    else:
        checks = suite_asymptotics(args.omega, args.r_max, args.threads or None)
    failed = [c for c in checks if c["level"] == "theorem" and not c["passed"]]
    _emit({"suite": args.suite, "omega": args.omega, "checks": checks,
           "theorem_failures": len(failed),
           "passed": not failed}, args.output)
    return EXIT_ALARM if failed else EXIT_OK


def cmd_bessel(args) -> int:
    from .bessel import besselj

    if args.x is not None:
        t0 = time.perf_counter()
        v = besselj(args.n, args.x)
        pio.log_unit("besselj", time.perf_counter() - t0, n=args.n, x=args.x)
        _emit({"n": args.n, "x": args.x, "J": v}, args.output)
        return EXIT_OK
    if args.omega is None:
        raise UsageError("bessel needs --x, or --omega with --r for a boundary comparison")
    from .atlas import bessel_compare, trace_boundary

    A_min = 10 * args.omega if args.A_min is None else args.A_min
    A_max = 30 * args.omega if args.A_max is None else args.A_max
    t0 = time.perf_counter()
    curve = trace_boundary(args.n, args.side, args.omega, (A_min, A_max), 1e-11, args.samples,
                           args.threads or None)
    rep = bessel_compare(curve)
    pio.log_unit("bessel-compare", time.perf_counter() - t0, r=args.n, side=args.side)
    _emit({"r": rep.r, "side": rep.side, "omega": rep.omega, "A": rep.A, "deviation": rep.deviation,
           "scaled": rep.scaled, "constant": rep.constant, "trend_ratio": rep.trend_ratio,
           "slope": rep.slope, "bounded": rep.bounded(BESSEL_CONSTANT)}, args.output)
    return EXIT_OK if rep.bounded(BESSEL_CONSTANT) else EXIT_ALARM


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="phaselock", description="Phase-lock areas of the overdamped Josephson "
                 "junction equation: rotation numbers, portraits, constrictions.")
    ap.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def point(sp, tol):
        sp.add_argument("--omega", type=float, required=True)
        sp.add_argument("--B", type=float, required=True)
        sp.add_argument("--A", type=float, required=True)
        sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--output", "-o", default=None, help="write JSON here instead of stdout")

    sp = sub.add_parser("rho", help="rotation number at one point")
    point(sp, 1e-9)
    sp.add_argument("--method", default="Mobius", choices=("Mobius", "Direct", "ClosedFormA0"))
    sp.set_defaults(func=cmd_rho)

    sp = sub.add_parser("trace", help="monodromy trace and lock class at one point")
    point(sp, 1e-12)
    sp.add_argument("--tol-boundary", type=float, default=1e-8)
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("portrait", help="grid sweep with CSV/JSON/PPM/SVG output")
    sp.add_argument("--config", default=None, help="flat key=value file; flags override it")
    for k in ("omega", "tol", "tol_boundary", "B_min", "B_max", "A_min", "A_max"):
        sp.add_argument("--" + k.replace("_", "-"), dest=k, type=float, default=None)
    for k in ("nB", "nA", "threads"):
        sp.add_argument("--" + k, dest=k, type=int, default=None)
    sp.add_argument("--method", default=None, choices=("Mobius", "Direct"))
    sp.add_argument("--cache-dir", dest="cache_dir", default=None)
    sp.add_argument("--output", "-o", default=None, help="output directory")
    sp.add_argument("--format", default=None, help="comma list of csv,json,ppm,svg")
    sp.add_argument("--no-cache", action="store_true")
    sp.add_argument("--structure", type=int, default=None, metavar="R_MAX",
                    help="also count connected Inside components of L_r, |r| <= R_MAX")
    sp.set_defaults(func=cmd_portrait)

    sp = sub.add_parser("boundary", help="trace one boundary curve of L_r")
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--side", choices=("minus", "plus"), required=True)
    sp.add_argument("--A-min", dest="A_min", type=float, default=0.0)
    sp.add_argument("--A-max", dest="A_max", type=float, required=True)
    sp.add_argument("--n", type=int, default=101)
    sp.add_argument("--tol", type=float, default=1e-11)
    sp.add_argument("--threads", type=int, default=0)
    sp.add_argument("--output", "-o", default=None)
    sp.set_defaults(func=cmd_boundary)

    sp = sub.add_parser("catalog", help="constrictions and simple intersections")
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--r-max", dest="r_max", type=int, default=3)
    sp.add_argument("--A-max", dest="A_max", type=float, required=True)
    sp.add_argument("--output", "-o", default="catalog", help="output directory")
    sp.set_defaults(func=cmd_catalog)

    sp = sub.add_parser("transition", help="transition matrix and Stokes multipliers on an axis")
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--A", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-13)
    sp.add_argument("--output", "-o", default=None)
    sp.set_defaults(func=cmd_transition)

    sp = sub.add_parser("check", help="identity, conjecture-evidence or asymptotics suites")
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--suite", choices=("identities", "conjectures", "asymptotics"), required=True)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--r-max", dest="r_max", type=int, default=2)
    sp.add_argument("--A-max", dest="A_max", type=float, default=None)
    sp.add_argument("--threads", type=int, default=0)
    sp.add_argument("--output", "-o", default=None)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("bessel", help="J_n(x), or a boundary curve against its Bessel asymptotics")
    sp.add_argument("--n", "--r", dest="n", type=int, required=True)
    sp.add_argument("--x", type=float, default=None)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--side", choices=("minus", "plus"), default="plus")
    sp.add_argument("--A-min", dest="A_min", type=float, default=None)
    sp.add_argument("--A-max", dest="A_max", type=float, default=None)
    sp.add_argument("--samples", type=int, default=41)
    sp.add_argument("--threads", type=int, default=0)
    sp.add_argument("--output", "-o", default=None)
    sp.set_defaults(func=cmd_bessel)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(message)s")
    if getattr(args, "A_max", 0) is None and args.command == "check":
        args.A_max = 6.0 * args.omega
    try:
        return args.func(args)
    except (UsageError, InvalidParams, RangeError, ValueError) as exc:
        sys.stderr.write(f"phaselock: error: {exc}\n")
        return EXIT_USAGE
    except (PhaselockError, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"phaselock: numeric failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
