"""Command-line runner.

Exit codes: 0 pass, 1 usage or config error, 2 a checked tolerance failed,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import SignChangeError, current_law
from .config import ConfigError, RunConfig, load_config, parse_config
from .fpt import commutator_boundary, commutator_elements, convergence_study
from .io import atomic_write_text, dumps_json, format_rows, write_json
from .propagate import (
    FIG1_CASES,
    Grid1D,
    PropagationError,
    crank_nicolson_propagate,
    fig1_curves,
    scaling_report,
    spectral_propagate,
)
from .quadrature import QuadratureError
from .source_wave import WEIGHTS, MassTime, delta_psi, delta_psi_prime, far_field, moments, quad_moment

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE, EXIT_NUMERIC = 0, 1, 2, 3

MOMENT_TOL = 1e-7
FIG1_THRESHOLDS = {"truncated": 0.02, "wall_removed": 0.10}
RESIDUAL_MAX = 1e-3
CONVERGENCE_MIN = 2.0
COMMUTATOR_AGREEMENT = 0.01


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(s: str) -> float:
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _config(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return parse_config("")


def _sidecar(path: Path, args, extra=None) -> None:
    meta = {
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "discoflux": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": list(getattr(args, "_argv", [])),
    }
    if extra:
        meta.update(extra)
    write_json(path.with_name(path.name + ".meta.json"), meta)


# --- subcommands ---------------------------------------------------------------


def cmd_moments(args) -> int:
    mt = MassTime(args.mass, args.time)
    closed = moments(mt)
    names = {
        "one": "int_dpsi", "x": "int_x_dpsi", "x_prime": "int_x_dpsi_prime",
        "abs2": "int_abs2_dpsi", "abs2_prime": "int_abs2_dpsi_prime", "prime": "int_dpsi_prime",
    }
    rows = []
    for w in WEIGHTS:
        name = names[w]
        c = complex(getattr(closed, name))
        q = quad_moment(w, mt, tol=args.tol)
        rows.append({"name": name, "closed": c, "quad": q.value, "quad_error": q.error, "diff": abs(q.value - c)})
    ok = all(r["diff"] <= MOMENT_TOL for r in rows)
    if args.json:
        sys.stdout.write(dumps_json({"mass": args.mass, "time": args.time, "tolerance": MOMENT_TOL, "rows": rows, "pass": ok}))
    else:
        print(f"{'moment':<22}{'closed form':>34}{'quadrature':>34}{'|diff|':>11}")
        for r in rows:
            c, q = r["closed"], r["quad"]
            print(f"{r['name']:<22}{c.real:>16.10f}{c.imag:>+16.10f}i  {q.real:>16.10f}{q.imag:>+16.10f}i{r['diff']:>11.2e}")
        print("PASS" if ok else f"FAIL: a difference exceeds {MOMENT_TOL:g}")
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_kernel(args) -> int:
    if args.x_max <= args.x_min:
        raise UsageError("--x-max must exceed --x-min")
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    mt = MassTime(args.mass, args.time)
    x = np.linspace(args.x_min, args.x_max, args.n)
    x = x[x != 0]
    d = delta_psi(x, mt)
    dp = delta_psi_prime(x, mt)
    ff = far_field(x, mt)
    text = format_rows(
        ["x", "re_dpsi", "im_dpsi", "re_dpsi_prime", "im_dpsi_prime", "re_far", "im_far"],
        [x, d.real, d.imag, dp.real, dp.imag, ff.real, ff.imag],
        comments=[f"source wave, mass={args.mass:g}, time={args.time:g}"],
    )
    out = Path(args.out_dir) if args.out_dir else _config(args).output_dir()
    path = out / "kernel.csv"
    atomic_write_text(path, text)
    _sidecar(path, args)
    print(path)
    return EXIT_OK


def cmd_fig1(args) -> int:
    if not 0 < args.t_over_t0 <= 0.1:
        raise UsageError("--t-over-t0 must lie in (0, 0.1]")
    cfg = _config(args)
    grid = cfg.grid() if args.config else Grid1D(cfg.domain(), args.n_cells)
    curves = fig1_curves(args.case, args.t_over_t0, grid, x0=args.x0)
    out = cfg.output_dir(args.out_dir)
    stem = f"fig1_{args.case}"
    formats = cfg.formats()
    threshold = FIG1_THRESHOLDS[args.case]
    ok = curves.l2_distance <= threshold
    cols = {"x": curves.x}
    for name, arr in [("num", curves.numerical), ("approx", curves.approx)] + list(curves.terms.items()):
        cols[f"re_{name}"] = arr.real
        cols[f"im_{name}"] = arr.imag
    summary = {
        "case": args.case,
        "t_over_t0": args.t_over_t0,
        "t": curves.time,
        "n_cells": grid.n_cells,
        "l2_distance": curves.l2_distance,
        "threshold": threshold,
        "pass": ok,
    }
    if "csv" in formats:
        path = out / f"{stem}.csv"
        atomic_write_text(path, format_rows(list(cols), list(cols.values()), comments=[f"case={args.case} t={curves.time:.17g}"]))
        _sidecar(path, args)
    if "json" in formats:
        write_json(out / f"{stem}.json", summary)
    if "svg" in formats:
        from .plotting import fig1_svg

        fig1_svg(curves, out / f"{stem}.svg")
    sys.stdout.write(dumps_json(summary))
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_scaling(args) -> int:
    cfg = _config(args)
    state, grid, times = cfg.state(), cfg.grid(), cfg.times()
    if not grid.resolves(times[0]):
        print(f"warning: dx = {grid.dx:.3g} exceeds sqrt(t_min/M)/8", file=sys.stderr)
    report, trace = scaling_report(state, grid, times, cfg.potential())
    law = current_law(state)
    out = cfg.output_dir(args.out_dir)
    formats = cfg.formats()
    result = report.as_dict()
    result["marginal"] = law.marginal
    if "csv" in formats:
        path = out / "scaling_trace.csv"
        trace.to_csv(path, comments=[f"state: {state.label}"])
        _sidecar(path, args)
        atomic_write_text(
            out / "scaling_laws.csv",
            format_rows(["t", "J_asym", "J_num"], [trace.times, law(trace.times), trace.current], comments=[f"state: {state.label}"]),
        )
    if "json" in formats:
        write_json(out / "scaling.json", result)
    if "svg" in formats:
        from .plotting import scaling_svg

        scaling_svg(trace.times, trace.current, law, out / "scaling.svg", state.label)
    sys.stdout.write(dumps_json(result))
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def cmd_decompose(args) -> int:
    cfg = _config(args)
    state, grid = cfg.state(), cfg.grid()
    n_quad = args.n_quad or grid.n_cells
    if len(args.theta) > 2:
        raise UsageError("--theta may be given at most twice")
    for th in args.theta:
        if not 0 <= th < math.pi:
            raise UsageError("--theta must lie in [0, pi)")
    study = convergence_study(state, grid, args.time, n_quad, traces=args.traces, potential=cfg.potential())
    # commutator check with two sine test functions vanishing at both walls
    a, L = grid.domain.a, grid.domain.length
    k = math.pi / L
    f = lambda x: np.sin(2 * k * (x - a))  # noqa: E731
    g = lambda x: np.sin(k * (x - a))  # noqa: E731
    angles = list(args.theta) or [0.3, 1.2]
    if len(angles) == 1:
        angles.append(study.theta1)
    values = [commutator_elements(f, g, th, grid, cfg.potential()) for th in angles]
    boundary = commutator_boundary(
        math.sin(-2 * k * a), 2 * k * math.cos(-2 * k * a), math.sin(-k * a), k * math.cos(-k * a), grid.mass
    )
    spread = abs(values[0] - values[1]) / max(abs(values[0]), 1e-300)
    report = study.as_dict()
    report["commutator"] = {
        "thetas": angles,
        "values": values,
        "boundary_formula": boundary,
        "relative_spread": spread,
    }
    ok = (
        study.residual <= RESIDUAL_MAX
        and study.convergence_ratio is not None
        and study.convergence_ratio >= CONVERGENCE_MIN
        and spread <= COMMUTATOR_AGREEMENT
    )
    report["pass"] = ok
    out = cfg.output_dir(args.out_dir)
    if "json" in cfg.formats():
        path = out / "decompose.json"
        write_json(path, report)
        _sidecar(path, args)
    sys.stdout.write(dumps_json(report))
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_evolve(args) -> int:
    cfg = _config(args)
    state, grid = cfg.state(), cfg.grid()
    if args.method == "spectral":
        trace = spectral_propagate(state, grid, cfg.times(), cfg.potential())
    else:
        if args.dt is None or args.steps is None:
            raise UsageError("--method cn needs --dt and --steps")
        trace = crank_nicolson_propagate(state, grid, args.dt, args.steps, args.record_every, cfg.potential())
    out = cfg.output_dir(args.out_dir)
    formats = cfg.formats()
    drift = float(np.max(np.abs(trace.norm - trace.norm[0])))
    if "csv" in formats:
        path = out / f"evolve_{args.method}.csv"
        trace.to_csv(path, comments=[f"state: {state.label}", f"method: {args.method}"])
        _sidecar(path, args)
    if "svg" in formats:
        from .plotting import trace_svg

        trace_svg(trace, out / f"evolve_{args.method}.svg", state.label)
    summary = {"method": args.method, "points": int(trace.times.size), "norm_drift": drift}
    if "json" in formats:
        write_json(out / f"evolve_{args.method}.json", summary)
    sys.stdout.write(dumps_json(summary))
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="discoflux", description="Probability current from wavefunction discontinuities.")
    p.add_argument("--version", action="version", version=f"discoflux {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("moments", help="closed-form source-wave moments against quadrature")
    m.add_argument("--mass", type=_positive, required=True)
    m.add_argument("--time", type=_positive, required=True)
    m.add_argument("--tol", type=float, default=1e-10)
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_moments)

    k = sub.add_parser("kernel", help="tabulate the source wave, its slope and far field")
    k.add_argument("--mass", type=_positive, required=True)
    k.add_argument("--time", type=_positive, required=True)
    k.add_argument("--x-min", type=float, default=-1.0)
    k.add_argument("--x-max", type=float, default=1.0)
    k.add_argument("--n", type=int, default=401)
    k.add_argument("--config")
    k.add_argument("--out-dir")
    k.set_defaults(func=cmd_kernel)

    f = sub.add_parser("fig1", help="propagated field against the short-time form")
    f.add_argument("--case", choices=FIG1_CASES, required=True)
    f.add_argument("--t-over-t0", type=float, required=True)
    f.add_argument("--x0", type=_positive, default=1.0)
    f.add_argument("--n-cells", type=int, default=16384)
    f.add_argument("--config")
    f.add_argument("--out-dir")
    f.set_defaults(func=cmd_fig1)

    s = sub.add_parser("scaling", help="fit the short-time current and compare with the leading law")
    s.add_argument("--config")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_scaling)

    d = sub.add_parser("decompose", help="check the boundary splitting of the evolution")
    d.add_argument("--config")
    d.add_argument("--time", type=_positive, required=True)
    d.add_argument("--n-quad", type=int)
    d.add_argument("--theta", type=float, action="append", default=[])
    d.add_argument("--traces", choices=("extrapolate", "ghost"), default="extrapolate")
    d.add_argument("--out-dir")
    d.set_defaults(func=cmd_decompose)

    e = sub.add_parser("evolve", help="propagate a configured state and record P_R(t)")
    e.add_argument("--config")
    e.add_argument("--method", choices=("spectral", "cn"), default="spectral")
    e.add_argument("--dt", type=_positive)
    e.add_argument("--steps", type=int)
    e.add_argument("--record-every", type=int, default=1)
    e.add_argument("--out-dir")
    e.set_defaults(func=cmd_evolve)
    return p


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args._argv = argv
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PropagationError, QuadratureError, SignChangeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
