"""Parameter sweeps of the two-path map and their file formats.

CSV schemas::

    bifurcation  a,x,mean_running
    metrics      a,mean,variance,regret_avg,regret_bound,norm_sc
    grid         a,b,period_code,lyapunov

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly. PPM images are binary P6 with row 0 at the largest ``b``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from . import _kernels as K
from .dynamics import GameEconomics, LinearTwoParams, MapSpec
from .errors import DomainError, MWUError
from .metrics import metrics_report
from .orbits import DEFAULT_LYAPUNOV_T, DEFAULT_MAX_PERIOD, DEFAULT_TOL, DEFAULT_TRANSIENT, default_start, iterate

BIFURCATION_HEADER = ("a", "x", "mean_running")
METRICS_HEADER = ("a", "mean", "variance", "regret_avg", "regret_bound", "norm_sc")
GRID_HEADER = ("a", "b", "period_code", "lyapunov")

# index = period code; 0 means aperiodic or period > 8
PERIOD_PALETTE = (
    (255, 255, 255),  # white
    (255, 255, 0),  # 1 yellow
    (255, 0, 0),  # 2 red
    (0, 0, 255),  # 3 blue
    (0, 255, 0),  # 4 green
    (150, 75, 0),  # 5 brown
    (0, 255, 255),  # 6 cyan
    (90, 90, 90),  # 7 darkgray
    (255, 0, 255),  # 8 magenta
)

DEFAULT_RESOLUTION = 800

Range = tuple[float, float, int]
InitRule = Union[str, float]


class OutputError(MWUError, OSError):
    """Destination for a sweep result cannot be written."""


def _axis(r: Range) -> np.ndarray:
    lo, hi, steps = r
    if steps < 1:
        raise DomainError("range steps must be >= 1")
    if hi < lo:
        raise DomainError(f"range is not ordered: {lo} > {hi}")
    return np.linspace(float(lo), float(hi), int(steps))


def _rule(init_rule: InitRule) -> tuple[int, float]:
    if init_rule == "x_l":
        return K.INIT_XL, 0.5
    if init_rule == "x_r":
        return K.INIT_XR, 0.5
    x = float(init_rule)
    if not 0.0 < x < 1.0:
        raise DomainError(f"fixed initial value must lie in (0, 1), got {x}")
    return K.INIT_FIXED, x


@dataclass(frozen=True)
class SweepGrid:
    a_range: Range
    b_range: Union[Range, float]
    transient: int = DEFAULT_TRANSIENT
    tol: float = DEFAULT_TOL
    max_period: int = DEFAULT_MAX_PERIOD
    init_rule: InitRule = "x_l"
    adaptive: bool = True
    T: int = DEFAULT_LYAPUNOV_T

    def __post_init__(self) -> None:
        _axis(self.a_range)
        if not isinstance(self.b_range, (int, float)):
            _axis(self.b_range)
        _rule(self.init_rule)
        if self.max_period < 1 or self.transient < 0 or self.T < 1:
            raise DomainError("max_period and T must be >= 1, transient >= 0")

    @property
    def a_values(self) -> np.ndarray:
        return _axis(self.a_range)

    @property
    def b_values(self) -> np.ndarray:
        if isinstance(self.b_range, (int, float)):
            return np.array([float(self.b_range)])
        return _axis(self.b_range)

    def metadata(self) -> dict:
        return {
            "a_range": list(self.a_range),
            "b_range": self.b_range if isinstance(self.b_range, (int, float)) else list(self.b_range),
            "transient": self.transient,
            "tol": self.tol,
            "max_period": self.max_period,
            "init_rule": self.init_rule,
            "adaptive": self.adaptive,
            "T": self.T,
        }


@dataclass(frozen=True)
class SweepCell:
    a: float
    b: float
    period_code: int
    lyapunov: float


@dataclass(frozen=True)
class SweepMatrix:
    """Results indexed ``[i_b, j_a]`` with ``b`` ascending."""

    a_values: np.ndarray
    b_values: np.ndarray
    period_codes: Optional[np.ndarray]
    lyapunov: Optional[np.ndarray]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.b_values), len(self.a_values)

    def cell(self, i: int, j: int) -> SweepCell:
        code = -1 if self.period_codes is None else int(self.period_codes[i, j])
        lyap = math.nan if self.lyapunov is None else float(self.lyapunov[i, j])
        return SweepCell(float(self.a_values[j]), float(self.b_values[i]), code, lyap)

    def cells(self) -> Iterator[SweepCell]:
        for i in range(len(self.b_values)):
            for j in range(len(self.a_values)):
                yield self.cell(i, j)

    def rows(self) -> Iterator[tuple]:
        """CSV rows (a, b, period_code, lyapunov) in grid order."""
        for c in self.cells():
            yield (c.a, c.b, c.period_code, c.lyapunov)


def _run_grid(grid: SweepGrid, want_codes: bool, want_lyap: bool, workers: int) -> SweepMatrix:
    return _run_rows(grid, grid.b_values, want_codes, want_lyap, workers)


def period_diagram(grid: SweepGrid, workers: int = 1) -> SweepMatrix:
    """Period codes (1..max_period, 0 for aperiodic) per (a, b) cell."""
    return _run_grid(grid, True, False, workers)


def lyapunov_heatmap(grid: SweepGrid, T: Optional[int] = None, workers: int = 1) -> SweepMatrix:
    """Lyapunov exponent and period code per cell, averaged over ``T`` steps after the transient."""
    if T is not None and T != grid.T:
        grid = SweepGrid(**{**grid.__dict__, "T": T})
    return _run_grid(grid, True, True, workers)


def bifurcation_scan(
    b: float,
    a_range: Range,
    init_rule: InitRule = "x_l",
    transient: int = DEFAULT_TRANSIENT,
    samples: int = 200,
) -> list[tuple[float, float, float]]:
    """Rows (a, x, mean_running): post-transient samples per ``a``.

    ``mean_running`` is the Cesaro mean of the whole trajectory from ``x0``
    up to and including the sample.
    """
    rule, x_fixed = _rule(init_rule)
    rows = []
    for a in _axis(a_range):
        a = float(a)
        LinearTwoParams(a, b)
        x0 = K.start_point(a, rule, x_fixed)
        xs, _sat = K.orbit(x0, K.LINEAR, a, b, 1.0, 0, transient + samples)
        running = np.cumsum(xs) / np.arange(1, len(xs) + 1)
        for k in range(transient, transient + samples):
            rows.append((a, float(xs[k]), float(running[k])))
    return rows


def metrics_curve(
    b: float,
    a_range: Range,
    T: int = 10**6,
    transient: int = 10**5,
    econ_scale: Optional[tuple[float, float]] = None,
    init_rule: InitRule = "x_l",
) -> list[tuple[float, float, float, float, float, float]]:
    """Rows (a, mean, variance, regret_avg, regret_bound, norm_sc) per ``a``.

    ``econ_scale=(alpha+beta, ln(1/(1-eps)))`` converts ``a`` back to a demand;
    by default ``alpha+beta = 1`` and ``eps = 1 - 1/e`` so ``N = a``.
    """
    s, lr = econ_scale if econ_scale is not None else (1.0, 1.0)
    rows = []
    for a in _axis(a_range):
        p = LinearTwoParams(float(a), b)
        spec = MapSpec.of(p)
        x0 = default_start(spec, init_rule) if isinstance(init_rule, str) else float(init_rule)
        orb = iterate(spec, x0, transient, T)
        N = p.a / (s * lr)
        econ = GameEconomics(alpha=s * (1.0 - b), beta=s * b, demand_N=N, epsilon=-math.expm1(-lr))
        r = metrics_report(orb, p, econ)
        rows.append((p.a, r.cesaro_mean, r.variance, r.regret_avg, r.regret_bound, r.norm_social_cost))
    return rows


# -- emitters ----------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _open_for_write(path: Union[str, Path], mode: str):
    try:
        return open(path, mode, encoding=None if "b" in mode else "utf-8", newline=None if "b" in mode else "")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(rows: Iterable[Sequence], path: Union[str, Path], header: Sequence[str]) -> None:
    """Write rows with a header; each row is flushed as one write."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    with _open_for_write(tmp, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    os.replace(tmp, path)


def read_csv(path: Union[str, Path]) -> tuple[list[str], list[tuple]]:
    """Parse a file written by :func:`emit_csv`; integer-looking fields come back as int."""
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [tuple(_parse(v) for v in rec) for rec in r]
    return header, rows


def _parse(v: str):
    try:
        return int(v)
    except ValueError:
        return float(v)


def emit_grid_csv(
    grid: SweepGrid,
    path: Union[str, Path],
    with_lyapunov: bool = False,
    workers: int = 1,
) -> SweepMatrix:
    """Stream a 2D sweep to CSV one b-row at a time; resumes an interrupted ``.partial`` file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    na = len(grid.a_values)
    b_vals = grid.b_values
    done_rows = 0
    header_line = ",".join(GRID_HEADER)
    lines = tmp.read_text(encoding="utf-8").split("\n") if tmp.exists() else []
    if lines and lines[0] == header_line:
        # the last element is whatever followed the final newline: an unfinished record
        done_rows = min((len(lines) - 2) // na, len(b_vals))
        keep = lines[: 1 + done_rows * na]
        with _open_for_write(tmp, "w") as fh:
            fh.write("\n".join(keep) + "\n")
    else:
        with _open_for_write(tmp, "w") as fh:
            fh.write(header_line + "\n")
    codes_all = np.zeros((len(b_vals), na), dtype=np.int64)
    lyap_all = np.full((len(b_vals), na), math.nan) if with_lyapunov else None
    if done_rows:
        _h, prev = read_csv(tmp)
        for k, rec in enumerate(prev):
            i, j = divmod(k, na)
            codes_all[i, j] = rec[2]
            if lyap_all is not None:
                lyap_all[i, j] = rec[3]
    todo = list(range(done_rows, len(b_vals)))
    chunk = max(1, workers)
    with _open_for_write(tmp, "a") as fh:
        for start in range(0, len(todo), chunk):
            idx = todo[start : start + chunk]
            m = _run_rows(grid, b_vals[idx], True, with_lyapunov, workers)
            for k, i in enumerate(idx):
                codes_all[i] = m.period_codes[k]
                if lyap_all is not None:
                    lyap_all[i] = m.lyapunov[k]
                lines = []
                for j in range(na):
                    ly = m.lyapunov[k, j] if with_lyapunov else math.nan
                    lines.append(
                        ",".join(
                            format_value(v)
                            for v in (grid.a_values[j], b_vals[i], int(m.period_codes[k, j]), ly)
                        )
                    )
                fh.write("\n".join(lines) + "\n")
                fh.flush()
    os.replace(tmp, path)
    return SweepMatrix(grid.a_values, b_vals, codes_all, lyap_all)


def _run_rows(
    grid: SweepGrid, b_vals: np.ndarray, want_codes: bool, want_lyap: bool, workers: int
) -> SweepMatrix:
    """Evaluate whole b-rows, possibly on a thread pool; output keeps the order of ``b_vals``."""
    a_vals = grid.a_values
    rule, x_fixed = _rule(grid.init_rule)
    na = len(a_vals)

    def row(b: float) -> tuple[np.ndarray, np.ndarray]:
        codes = np.zeros(na if want_codes else 0, dtype=np.int64)
        lyap = np.zeros(na if want_lyap else 0)
        K.grid_row(
            a_vals, float(b), rule, x_fixed, grid.transient, grid.max_period, grid.tol,
            grid.adaptive, grid.T, codes, lyap,
        )
        return codes, lyap

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(row, b_vals))
    else:
        results = [row(b) for b in b_vals]
    codes = np.array([r[0] for r in results]).reshape(len(b_vals), -1) if want_codes else None
    lyap = np.array([r[1] for r in results]).reshape(len(b_vals), -1) if want_lyap else None
    return SweepMatrix(a_vals, np.asarray(b_vals), codes, lyap)


def period_rgb(codes: np.ndarray, palette: Sequence[tuple[int, int, int]] = PERIOD_PALETTE) -> np.ndarray:
    """Map period codes to RGB; codes outside the palette use entry 0 (white)."""
    pal = np.asarray(palette, dtype=np.uint8)
    idx = np.where((codes >= 0) & (codes < len(pal)), codes, 0)
    return pal[idx]


def lyapunov_rgb(lyap: np.ndarray, low: float = -1.5, high: float = 0.0) -> np.ndarray:
    """Gray scale: ``<= low`` white, ``>= high`` black, linear in between; -inf is white."""
    v = np.where(np.isnan(lyap), high, lyap)
    t = np.clip((v - low) / (high - low), 0.0, 1.0)
    g = np.round(255.0 * (1.0 - t)).astype(np.uint8)
    return np.stack([g, g, g], axis=-1)


def emit_ppm(
    matrix: np.ndarray,
    palette: Optional[Sequence[tuple[int, int, int]]],
    path: Union[str, Path],
    flip: bool = True,
) -> None:
    """Binary P6 image. ``matrix`` is either period codes (with ``palette``) or an RGB array.

    With ``flip`` the last matrix row (largest b) becomes the top image row.
    """
    m = np.asarray(matrix)
    if palette is not None:
        rgb = period_rgb(m.astype(np.int64), palette)
    else:
        if m.ndim != 3 or m.shape[2] != 3:
            raise DomainError("without a palette the matrix must be an (h, w, 3) RGB array")
        rgb = m.astype(np.uint8)
    if flip:
        rgb = rgb[::-1]
    h, w = rgb.shape[:2]
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    with _open_for_write(tmp, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(rgb).tobytes())
    os.replace(tmp, path)


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise DomainError("not a binary P6 file")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise DomainError("only 8-bit PPM is supported")
    pixels = parts[4]
    return np.frombuffer(pixels[: w * h * 3], dtype=np.uint8).reshape(h, w, 3)
