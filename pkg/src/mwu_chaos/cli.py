"""Command-line entry point: ``mwu-chaos <subcommand> [flags]``.

Exit status is 0 on success, 1 on a usage or parameter error and 2 when a
numerical precondition of the requested analysis fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .chaos import FEIGENBAUM_A, MAX_CASCADE_LEVEL, estimate_entropy, feigenbaum_cascade, find_period3_witness
from .dynamics import (
    GameEconomics,
    HeteroParams,
    LinearTwoParams,
    MapSpec,
    PolynomialParams,
    SimplexParams,
    normalize_economics,
    reduce_atomic_m,
    reduce_atomic_two,
    simplex_equilibrium,
)
from .errors import DomainError, MWUError
from .metrics import cost_gap_average, hetero_invariant_drift, hetero_mixture_average, metrics_report, simplex_cost_averages
from .orbits import (
    DEFAULT_LYAPUNOV_T,
    DEFAULT_MAX_PERIOD,
    DEFAULT_TOL,
    DEFAULT_TRANSIENT,
    default_start,
    detect_period,
    iterate,
    lyapunov,
)
from .sweep import (
    BIFURCATION_HEADER,
    DEFAULT_RESOLUTION,
    METRICS_HEADER,
    PERIOD_PALETTE,
    OutputError,
    SweepGrid,
    bifurcation_scan,
    emit_csv,
    emit_grid_csv,
    emit_ppm,
    format_value,
    lyapunov_rgb,
    metrics_curve,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PRECONDITION = 2

DEFAULT_HORIZON = 10**6
DEFAULT_STARTS = 5000
EULER_EPS = -math.expm1(-1.0)  # epsilon with ln(1/(1-eps)) = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    pass


# -- argument helpers --------------------------------------------------------


def _range_type(text: str):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected lo:hi or lo:hi:steps, got {text!r}")
    try:
        return tuple(float(p) for p in parts[:2]) + ((int(parts[2]),) if len(parts) == 3 else ())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _resolve_range(r: tuple, res: int) -> tuple[float, float, int]:
    return (r[0], r[1], r[2]) if len(r) == 3 else (r[0], r[1], res)


def _init_rule(text: str):
    if text in ("x_l", "x_r"):
        return text
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("init must be x_l, x_r or a number in (0, 1)") from exc


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_params(p: argparse.ArgumentParser, polynomial: bool = True) -> None:
    g = p.add_argument_group("map parameters (give --a/--b or all of --alpha/--beta/--N/--eps)")
    g.add_argument("--a", type=float, help="normalized demand a = (alpha+beta) N ln(1/(1-eps))")
    g.add_argument("--b", type=float, help="normalized equilibrium b = beta/(alpha+beta)")
    g.add_argument("--alpha", type=float, help="raw cost slope of path 1")
    g.add_argument("--beta", type=float, help="raw cost slope of path 2")
    g.add_argument("--N", type=float, help="raw total demand")
    g.add_argument("--eps", type=float, help="raw learning rate in (0, 1)")
    if polynomial:
        g.add_argument("--degree", type=int, default=1, help="cost degree p; 1 is the linear map")


def _add_engine(p: argparse.ArgumentParser, T_default: int, T_help: str) -> None:
    g = p.add_argument_group("engine")
    g.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT, help="iterations discarded first")
    g.add_argument("--tol", type=float, default=DEFAULT_TOL, help="period closure tolerance")
    g.add_argument("--max-period", type=int, default=DEFAULT_MAX_PERIOD, help="largest period reported")
    g.add_argument("--T", type=int, default=T_default, help=T_help)


def _out(p: argparse.ArgumentParser, flag: str = "--out", help: str = "CSV output path ('-' for stdout)") -> None:
    p.add_argument(flag, default="-", help=help)


def _params(args) -> LinearTwoParams:
    normalized = args.a is not None or args.b is not None
    raw = [args.alpha, args.beta, args.N, args.eps]
    if normalized and any(v is not None for v in raw):
        raise UsageError("give either --a/--b or --alpha/--beta/--N/--eps, not both")
    if normalized:
        if args.a is None or args.b is None:
            raise UsageError("--a and --b must be given together")
        return LinearTwoParams(args.a, args.b)
    if all(v is not None for v in raw):
        return normalize_economics(GameEconomics(args.alpha, args.beta, args.N, args.eps))
    raise UsageError("map parameters missing: give --a/--b or all of --alpha/--beta/--N/--eps")


def _economics(args, p: LinearTwoParams) -> GameEconomics:
    if args.alpha is not None:
        return GameEconomics(args.alpha, args.beta, args.N, args.eps)
    return GameEconomics.normalized(p)


def _spec(args) -> MapSpec:
    p = _params(args)
    degree = getattr(args, "degree", 1)
    if degree == 1:
        return MapSpec.of(p)
    return MapSpec.of(PolynomialParams(p.a, p.b, degree))


def _start(spec: MapSpec, x0) -> float:
    if x0 is None or isinstance(x0, str):
        return default_start(spec, x0 or "x_l")
    return float(x0)


def _write_table(path: str, header: Sequence[str], rows, stdout) -> None:
    if path == "-":
        stdout.write(",".join(header) + "\n")
        for row in rows:
            stdout.write(",".join(format_value(v) for v in row) + "\n")
    else:
        emit_csv(rows, path, header)


def _write_meta(path: Optional[str], meta: dict) -> None:
    if path:
        try:
            Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args, stdout) -> None:
    spec = _spec(args)
    x0 = _start(spec, args.x0)
    orb = iterate(spec, x0, args.transient, args.T)
    per = detect_period(spec, x0, args.max_period, args.tol, args.transient)
    lyap = lyapunov(spec, x0, min(args.T, DEFAULT_LYAPUNOV_T), args.transient)
    p = spec.params
    base = dict(a=p.a, b=p.b, x0=x0, T=args.T, period=per.code, lyapunov=lyap, saturated=int(orb.saturated))
    if isinstance(p, LinearTwoParams):
        r = metrics_report(orb, p, _economics(args, p))
        extra = dict(
            N=r.demand_N, mean=r.cesaro_mean, variance=r.variance, regret_avg=r.regret_avg,
            regret_bound=r.regret_bound, norm_sc=r.norm_social_cost,
        )
    else:
        extra = dict(degree=p.degree_p, mean=float(np.mean(orb.samples)), cost_gap_avg=cost_gap_average(orb, p))
    row = {**base, **extra}
    _write_table(args.out, list(row), [tuple(row.values())], stdout)
    if args.orbit_out:
        emit_csv(((n, x) for n, x in enumerate(orb.samples, start=args.transient + 1)), args.orbit_out, ("n", "x"))


def cmd_bifurcation(args, stdout) -> None:
    rows = bifurcation_scan(args.b, _resolve_range(args.a_range, args.res), args.init, args.transient, args.samples)
    _write_table(args.out, BIFURCATION_HEADER, rows, stdout)


def _grid(args) -> SweepGrid:
    return SweepGrid(
        a_range=_resolve_range(args.a_range, args.res),
        b_range=_resolve_range(args.b_range, args.res),
        transient=args.transient,
        tol=args.tol,
        max_period=args.max_period,
        init_rule=args.init,
        adaptive=not args.no_adaptive,
        T=args.T,
    )


def _grid_outputs(args, grid: SweepGrid, lyap: bool):
    if not (args.csv or args.ppm):
        raise UsageError("nothing to do: give --csv and/or --ppm")
    csv_path = args.csv
    if csv_path is None:
        from tempfile import TemporaryDirectory

        with TemporaryDirectory() as tmp:
            return emit_grid_csv(grid, Path(tmp) / "grid.csv", lyap, args.workers)
    return emit_grid_csv(grid, csv_path, lyap, args.workers)


def cmd_diagram(args, stdout) -> None:
    grid = _grid(args)
    m = _grid_outputs(args, grid, False)
    if args.ppm:
        emit_ppm(m.period_codes, PERIOD_PALETTE, args.ppm)
    _write_meta(args.meta, {"kind": "period_diagram", **grid.metadata()})
    counts = np.bincount(m.period_codes.ravel(), minlength=args.max_period + 1)
    stdout.write("period_code,cells\n")
    for code, n in enumerate(counts):
        stdout.write(f"{code},{n}\n")


def cmd_lyapunov(args, stdout) -> None:
    grid = _grid(args)
    m = _grid_outputs(args, grid, True)
    if args.ppm:
        emit_ppm(lyapunov_rgb(m.lyapunov), None, args.ppm)
    _write_meta(args.meta, {"kind": "lyapunov_heatmap", **grid.metadata()})
    finite = m.lyapunov[np.isfinite(m.lyapunov)]
    stdout.write(f"cells={m.lyapunov.size} positive={int(np.sum(finite > 0))} below_-1.5={int(np.sum(m.lyapunov < -1.5))}\n")


def cmd_metrics(args, stdout) -> None:
    rows = metrics_curve(
        args.b, _resolve_range(args.a_range, args.res), args.T, args.transient, init_rule=args.init
    )
    _write_table(args.out, METRICS_HEADER, rows, stdout)


def cmd_feigenbaum(args, stdout) -> None:
    est = feigenbaum_cascade(args.a_fixed, args.b_start, args.direction, args.n_max)
    rows = []
    for n in range(1, len(est.delta_n) + 1):
        rows.append((n, est.birth_points[n - 1], est.superstable_points[n], est.distances[n - 1],
                     est.delta_n[n - 1], est.alpha_n[n - 1]))
    _write_table(args.out, ("n", "b_n", "B_n", "d_n", "delta_n", "alpha_n"), rows, stdout)
    _write_meta(args.meta, {"kind": "feigenbaum", "a_fixed": est.a_fixed, "direction": est.direction,
                            "n_max": est.n_max, "delta": est.delta, "alpha": est.alpha})


def cmd_chaos_cert(args, stdout) -> None:
    spec = _spec(args)
    w = find_period3_witness(spec, args.grid)
    ent = estimate_entropy(spec, args.word_length, args.init_grid)
    p = spec.params
    row = (p.a, p.b, int(w is not None), w.x0 if w else math.nan, w.x1 if w else math.nan,
           w.x3 if w else math.nan, ent.value)
    _write_table(args.out, ("a", "b", "witness", "x0", "x1", "x3", "entropy"), [row], stdout)


def _kronecker_grid(n: int) -> np.ndarray:
    """First ``n`` points of the 2D additive-recurrence (R2) low-discrepancy sequence."""
    g = 1.32471795724474602596  # plastic number
    k = np.arange(1, n + 1)[:, None]
    pts = np.mod(0.5 + k * np.array([1.0 / g, 1.0 / g**2]), 1.0)
    return np.clip(pts, 1e-6, 1 - 1e-6)


def cmd_hetero(args, stdout) -> None:
    p = HeteroParams(args.a1, args.a2, args.b, args.eta1, args.eta2)
    spec = MapSpec.of(p)
    if args.starts:
        rows = []
        for x, y in _kronecker_grid(args.starts):
            orb = iterate(spec, (x, y), args.transient, 1)
            rows.append((x, y, orb.samples[-1, 0], orb.samples[-1, 1]))
        _write_table(args.out, ("x0", "y0", "x", "y"), rows, stdout)
        return
    orb = iterate(spec, (args.x0, args.y0), args.transient, args.T)
    drift_orb = iterate(spec, (args.x0, args.y0), 0, min(args.T, args.drift_steps))
    row = (args.a1, args.a2, args.b, args.T, hetero_mixture_average(orb, p), hetero_invariant_drift(drift_orb, p))
    _write_table(args.out, ("a1", "a2", "b", "T", "mixture_avg", "log_invariant_drift"), [row], stdout)


def cmd_simplex(args, stdout) -> None:
    p = SimplexParams(args.rates)
    x0 = np.full(p.m, 1.0 / p.m) if args.x0 is None else np.asarray(args.x0)
    if args.x0 is None:
        x0[0] += 0.1
        x0[1:] -= 0.1 / (p.m - 1)
    orb = iterate(MapSpec.of(p), x0, args.transient, args.T)
    avg = simplex_cost_averages(orb, p)
    eq = simplex_equilibrium(p.rates)
    rows = [(i + 1, p.rates[i], avg[i], eq[i]) for i in range(p.m)]
    _write_table(args.out, ("path", "rate", "flow_avg", "equilibrium"), rows, stdout)


def cmd_atomic(args, stdout) -> int:
    if args.m is not None:
        if args.alpha is None:
            raise UsageError("--m needs --alpha (common cost slope)")
        sp = reduce_atomic_m(args.alpha, args.N, args.eps, args.m)
        if args.rest:
            if args.rest[0] != "simplex":
                raise UsageError("an m-path reduction can only feed the simplex subcommand")
            return main(["simplex", "--rates", ",".join(format_value(r) for r in sp.rates), *args.rest[1:]], stdout)
        _write_table(args.out, ("m", "rate"), [(sp.m, sp.rates[0])], stdout)
        return EXIT_OK
    if args.alpha1 is None or args.alpha2 is None:
        raise UsageError("give --alpha1 and --alpha2 (two paths) or --alpha and --m")
    p = reduce_atomic_two(args.alpha1, args.alpha2, args.N, args.eps)
    if not args.rest:
        _write_table(args.out, ("a", "b"), [(p.a, p.b)], stdout)
        return EXIT_OK
    sub = args.rest[0]
    if sub not in SCALAR_SUBCOMMANDS:
        raise UsageError(f"atomic can chain into {', '.join(sorted(SCALAR_SUBCOMMANDS))}, not {sub!r}")
    flags = ["--a", format_value(p.a)]
    if sub in ("simulate", "chaos-cert"):
        flags += ["--b", format_value(p.b)]
    elif sub in ("bifurcation", "metrics"):
        flags = ["--b", format_value(p.b)]
    return main([sub, *flags, *args.rest[1:]], stdout)


SCALAR_SUBCOMMANDS = {"simulate", "chaos-cert", "bifurcation", "metrics"}


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mwu-chaos", description="MWU dynamics in congestion games.", formatter_class=_Formatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)

    def add(name: str, help: str, fn: Callable) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help, description=help, formatter_class=_Formatter)
        sp.set_defaults(func=fn)
        return sp

    sp = add("simulate", "Iterate one map and report orbit metrics as a CSV row.", cmd_simulate)
    _add_params(sp)
    _add_engine(sp, DEFAULT_HORIZON, "recorded iterations after the transient")
    sp.add_argument("--x0", type=_init_rule, default=None, help="initial state, x_l or x_r (default x_l)")
    sp.add_argument("--orbit-out", default=None, help="also write the recorded orbit (n,x) to this CSV")
    _out(sp)

    sp = add("bifurcation", "1D bifurcation scan over a at fixed b.", cmd_bifurcation)
    sp.add_argument("--b", type=float, required=True, help="equilibrium b")
    sp.add_argument("--a-range", type=_range_type, required=True, help="lo:hi or lo:hi:steps")
    sp.add_argument("--res", type=int, default=DEFAULT_RESOLUTION, help="steps when a range omits them")
    sp.add_argument("--init", type=_init_rule, default="x_l", help="x_l, x_r or a fixed x0")
    sp.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT, help="iterations discarded first")
    sp.add_argument("--samples", type=int, default=200, help="samples recorded per a")
    _out(sp)

    for name, help, fn, T_default, T_help in (
        ("diagram", "2D period diagram over (a, b).", cmd_diagram, DEFAULT_LYAPUNOV_T, "unused for periods"),
        ("lyapunov", "2D Lyapunov-exponent heatmap over (a, b).", cmd_lyapunov, DEFAULT_LYAPUNOV_T,
         "steps averaged per Lyapunov estimate"),
    ):
        sp = add(name, help, fn)
        sp.add_argument("--a-range", type=_range_type, required=True, help="lo:hi or lo:hi:steps")
        sp.add_argument("--b-range", type=_range_type, required=True, help="lo:hi or lo:hi:steps")
        sp.add_argument("--res", type=int, default=DEFAULT_RESOLUTION, help="steps when a range omits them")
        sp.add_argument("--init", type=_init_rule, default="x_l", help="x_l, x_r or a fixed x0")
        _add_engine(sp, T_default, T_help)
        sp.add_argument("--no-adaptive", action="store_true", help="always run the full transient")
        sp.add_argument("--workers", type=int, default=1, help="worker threads (output is identical)")
        sp.add_argument("--csv", default=None, help="grid CSV (a,b,period_code,lyapunov); resumable")
        sp.add_argument("--ppm", default=None, help="P6 image, top row = largest b")
        sp.add_argument("--meta", default=None, help="JSON file recording the grid settings")

    sp = add("metrics", "Metric curves versus a at fixed b.", cmd_metrics)
    sp.add_argument("--b", type=float, required=True, help="equilibrium b")
    sp.add_argument("--a-range", type=_range_type, required=True, help="lo:hi or lo:hi:steps")
    sp.add_argument("--res", type=int, default=100, help="steps when a range omits them")
    sp.add_argument("--init", type=_init_rule, default="x_l", help="x_l, x_r or a fixed x0")
    sp.add_argument("--transient", type=int, default=10**5, help="iterations discarded first")
    sp.add_argument("--T", type=int, default=DEFAULT_HORIZON, help="averaging horizon")
    _out(sp)

    sp = add("feigenbaum", "Period-doubling cascade in b at fixed a; delta_n and alpha_n.", cmd_feigenbaum)
    sp.add_argument("--a-fixed", type=float, default=FEIGENBAUM_A, help="fixed a of the cascade path")
    sp.add_argument("--b-start", type=float, default=None, help="start of the path (default x_l, the superstable fixed point)")
    sp.add_argument("--direction", type=int, choices=(1, -1), default=1, help="scan direction in b")
    sp.add_argument("--n-max", type=int, default=MAX_CASCADE_LEVEL, help="deepest ratio level")
    sp.add_argument("--meta", default=None, help="JSON file recording the path and final ratios")
    _out(sp)

    sp = add("chaos-cert", "Period-3 witness and symbolic entropy estimate.", cmd_chaos_cert)
    _add_params(sp)
    sp.add_argument("--grid", type=int, default=100_000, help="witness scan grid size")
    sp.add_argument("--word-length", type=int, default=16, help="longest symbolic word")
    sp.add_argument("--init-grid", type=int, default=1000, help="starting points for word counts")
    _out(sp)

    sp = add("hetero", "Two-population orbit: mixture average and invariant drift.", cmd_hetero)
    sp.add_argument("--a1", type=float, required=True)
    sp.add_argument("--a2", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--eta1", type=float, default=0.5)
    sp.add_argument("--eta2", type=float, default=0.5)
    sp.add_argument("--x0", type=float, default=0.3)
    sp.add_argument("--y0", type=float, default=0.6)
    sp.add_argument("--transient", type=int, default=0, help="iterations discarded first")
    sp.add_argument("--T", type=int, default=DEFAULT_HORIZON, help="averaging horizon")
    sp.add_argument("--drift-steps", type=int, default=10**4, help="steps checked for invariant drift")
    sp.add_argument("--starts", type=int, default=0,
                    help=f"if > 0, report end states from this many grid starts (e.g. {DEFAULT_STARTS})")
    _out(sp)

    sp = add("simplex", "m-path orbit and per-path average flows.", cmd_simplex)
    sp.add_argument("--rates", type=_float_list, required=True, help="comma-separated a_1,...,a_m")
    sp.add_argument("--x0", type=_float_list, default=None, help="initial flows (default: tilted barycenter)")
    sp.add_argument("--transient", type=int, default=0, help="iterations discarded first")
    sp.add_argument("--T", type=int, default=DEFAULT_HORIZON, help="averaging horizon")
    _out(sp)

    sp = add("atomic", "Reduce an atomic game to map parameters, optionally chaining a subcommand.", cmd_atomic)
    sp.add_argument("--alpha1", type=float, help="cost slope of path 1 (two paths)")
    sp.add_argument("--alpha2", type=float, help="cost slope of path 2 (two paths)")
    sp.add_argument("--alpha", type=float, help="common cost slope (m identical paths)")
    sp.add_argument("--m", type=int, help="number of identical paths")
    sp.add_argument("--N", type=int, required=True, help="number of players")
    sp.add_argument("--eps", type=float, default=EULER_EPS, help="learning rate")
    _out(sp)
    sp.add_argument("rest", nargs=argparse.REMAINDER, help="subcommand and flags to run on the reduced map")
    return parser


def main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(stdout)
            return EXIT_USAGE
        status = args.func(args, stdout)
        return EXIT_OK if status is None else status
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, OutputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MWUError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


def run() -> None:
    sys.exit(main())
