"""File outputs: CSVs with pinned headers, minimal SVG plots, run records.

All CSVs use '.' decimals, LF line endings, a mandatory header row, and
17 significant digits so written floats round-trip exactly. Plots are
generated directly as SVG markup; there is no plotting dependency.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ScanCurve
from .grid import Grid
from .integrator import Trajectory
from .model import State


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_rows(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return path


def write_snapshot_csv(path, grid: Grid, state: State) -> Path:
    x = grid.cell_centers()
    rows = (
        [_fmt(xi), _fmt(ui), _fmt(vi), _fmt(pi), _fmt(yi)]
        for xi, ui, vi, pi, yi in zip(x, state.u, state.v, state.p, state.y)
    )
    return _write_rows(path, ["x", "u", "v", "p", "y"], rows)


def read_snapshot_csv(path) -> tuple[np.ndarray, State]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.atleast_1d(data["x"]), State(
        np.atleast_1d(data["u"]), np.atleast_1d(data["v"]),
        np.atleast_1d(data["p"]), np.atleast_1d(data["y"]),
    )


TRAJECTORY_HEADER = ["t", "amp_u", "amp_v", "u_probe", "v_probe",
                     "mass_u", "mass_v", "total_mass", "free_energy"]


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    cols = [traj.times, traj.amp_u, traj.amp_v, traj.u_probe, traj.v_probe,
            traj.mass_u, traj.mass_v, traj.total_mass, traj.free_energy]
    rows = ([_fmt(c[i]) for c in cols] for i in range(traj.times.size))
    return _write_rows(path, TRAJECTORY_HEADER, rows)


def write_scan_csv(path, curve: ScanCurve) -> Path:
    rows = (
        [_fmt(d), _fmt(e), _fmt(g), _fmt(h), str(int(ok))]
        for d, e, g, h, ok in zip(curve.deltas, curve.energy, curve.first_deriv,
                                  curve.second_deriv, curve.feasible)
    )
    return _write_rows(path, ["delta", "energy", "dE", "d2E", "feasible"], rows)


def write_sweep_csv(path, rows_in) -> Path:
    """rows_in: iterable of (eps, PersistenceResult)."""
    rows = (
        [_fmt(eps), _fmt(res.time), str(int(res.censored))]
        for eps, res in rows_in
    )
    return _write_rows(path, ["eps", "T", "censored"], rows)


# ---------------------------------------------------------------------------
# minimal SVG line plots


_PALETTE = ("#1f6f8b", "#c14a09", "#3a7d44", "#7b4b94", "#b3003b", "#5c5c5c")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or lo == hi:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def svg_line_plot(path, x, series, title: str = "", xlabel: str = "",
                  ylabel: str = "", logy: bool = False) -> Path:
    """Write a single-panel line plot.

    series: list of (label, y-array). Non-finite samples break the line.
    """
    width, height = 640, 420
    ml, mr, mt, mb = 70, 20, 34, 48
    pw, ph = width - ml - mr, height - mt - mb

    x = np.asarray(x, dtype=float)
    ys = [(label, np.asarray(y, dtype=float)) for label, y in series]
    if logy:
        ys = [(label, np.where(y > 0, np.log10(np.maximum(y, 1e-300)), np.nan))
              for label, y in ys]

    finite_y = np.concatenate([y[np.isfinite(y)] for _, y in ys if np.isfinite(y).any()]
                              or [np.array([0.0, 1.0])])
    x_lo, x_hi = float(np.min(x)), float(np.max(x))
    y_lo, y_hi = float(np.min(finite_y)), float(np.max(finite_y))
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{mt+ph}" x2="{ml+pw}" y2="{mt+ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt+ph}" stroke="black"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(tx):.1f}" y1="{mt+ph}" x2="{sx(tx):.1f}" '
                     f'y2="{mt+ph+5}" stroke="black"/>')
        parts.append(f'<text x="{sx(tx):.1f}" y="{mt+ph+18}" text-anchor="middle">'
                     f'{tx:.4g}</text>')
    for ty in _ticks(y_lo, y_hi):
        label = f"1e{ty:.2g}" if logy else f"{ty:.4g}"
        parts.append(f'<line x1="{ml-5}" y1="{sy(ty):.1f}" x2="{ml}" '
                     f'y2="{sy(ty):.1f}" stroke="black"/>')
        parts.append(f'<text x="{ml-8}" y="{sy(ty)+4:.1f}" text-anchor="end">{label}</text>')
    parts.append(f'<text x="{ml+pw/2:.0f}" y="{height-10}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{mt+ph/2:.0f}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {mt+ph/2:.0f})">{ylabel}</text>')

    for idx, (label, y) in enumerate(ys):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = []
        chunks = []
        for xi, yi in zip(x, y):
            if np.isfinite(yi):
                coords.append(f"{sx(xi):.2f},{sy(yi):.2f}")
            elif coords:
                chunks.append(coords)
                coords = []
        if coords:
            chunks.append(coords)
        for chunk in chunks:
            if len(chunk) == 1:
                cx, cy = chunk[0].split(",")
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="2" fill="{color}"/>')
            else:
                parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                             f'points="{" ".join(chunk)}"/>')
        parts.append(f'<text x="{ml+pw-6}" y="{mt+16+14*idx}" text-anchor="end" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")
    return path


# ---------------------------------------------------------------------------
# run records


@dataclass
class RunRecord:
    command: str
    config_hash: str
    seed: int | None
    started_utc: str
    wall_seconds: float = 0.0
    version: str = __version__
    outputs: list = field(default_factory=list)
    failed: bool = False
    detail: str = ""


def config_hash(serialized: str) -> str:
    return hashlib.sha256(serialized.encode()).hexdigest()


def utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def write_run_record(directory, record: RunRecord) -> Path:
    """Atomic write (temp file + rename), so readers never see a torn record."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / "run_record.json"
    payload = json.dumps(asdict(record), indent=2) + "\n"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".run_record_")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target
