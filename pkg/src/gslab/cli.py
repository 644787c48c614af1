"""Command-line entry points.

Subcommands: simulate, steady, landscape, limit-check, sweep-persistence,
make-library. Every run writes its outputs plus a config echo and a JSON
run record into the output directory.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 partial results (some outputs written, some runs failed or a
fit could not be formed).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    PersistenceResult,
    fit_scaling,
    landscape_scan,
    named_direction,
    persistence_time,
)
from .config import ConfigError, ScenarioConfig, parse_config, parse_config_text, serialize_config
from .grid import Grid
from .integrator import DivergenceError, StepperConfig, simulate, simulate_classical
from .model import State, total_mass
from .outputs import (
    RunRecord,
    config_hash,
    svg_line_plot,
    utc_now,
    write_run_record,
    write_scan_csv,
    write_snapshot_csv,
    write_sweep_csv,
    write_trajectory_csv,
)
from .steady import (
    NewtonError,
    generate_pattern_library,
    save_library,
    uniform_steady_states,
)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gslab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario configuration file")
    common.add_argument("--out", default=None,
                        help="output directory (overrides output.directory)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[common],
                       help="march one scenario and record its time series")
    p.add_argument("--seed", type=int, default=None, help="override ic.bump_seed")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("steady", parents=[common],
                       help="report both uniform steady states for the scenario's mass")
    p.set_defaults(handler=_cmd_steady)

    p = sub.add_parser("landscape", parents=[common],
                       help="scan the energy along the three reaction directions")
    p.add_argument("--delta-max", type=float, default=0.5,
                   help="half-width of the scan window (default 0.5)")
    p.add_argument("--samples", type=int, default=201,
                   help="scan points per direction (default 201)")
    p.set_defaults(handler=_cmd_landscape)

    p = sub.add_parser("limit-check", parents=[common],
                       help="compare against the classical system over limit.eps_values")
    p.set_defaults(handler=_cmd_limit_check)

    p = sub.add_parser("sweep-persistence", parents=[common],
                       help="pattern lifetime versus eps over sweep.eps_values")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("make-library", parents=[common],
                       help="collect steady classical profiles from random seeds")
    p.add_argument("--count", type=int, default=64,
                   help="number of random initial conditions (default 64)")
    p.add_argument("--seed", type=int, default=1, help="generator seed (default 1)")
    p.add_argument("--march-time", type=float, default=2000.0,
                   help="settling horizon per candidate (default 2000)")
    p.set_defaults(handler=_cmd_make_library)

    return parser


# ---------------------------------------------------------------------------
# shared run bookkeeping


class _Run:
    """Output directory plus the run record accumulated along the way."""

    def __init__(self, command: str, cfg: ScenarioConfig, out_override: str | None,
                 seed: int | None = None):
        self.cfg = cfg
        self.dir = Path(out_override if out_override is not None else cfg.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.t0 = time.perf_counter()
        echo = serialize_config(cfg)
        (self.dir / "config_echo.txt").write_text(echo)
        self.record = RunRecord(
            command=command, config_hash=config_hash(echo), seed=seed,
            started_utc=utc_now(), outputs=["config_echo.txt"],
        )

    @property
    def svg(self) -> bool:
        return "svg" in self.cfg.formats

    def add(self, path: Path):
        self.record.outputs.append(str(Path(path).relative_to(self.dir)))

    def finish(self, failed: bool = False, detail: str = "") -> None:
        self.record.wall_seconds = time.perf_counter() - self.t0
        self.record.failed = failed
        self.record.detail = detail
        write_run_record(self.dir, self.record)


# ---------------------------------------------------------------------------
# simulate


def run_simulate(cfg: ScenarioConfig, out_dir: str | None = None) -> dict:
    """One forward run; returns a result summary. Partial outputs survive
    a divergence (the summary then carries failed=True)."""
    run = _Run("simulate", cfg, out_dir)
    grid = cfg.to_grid()
    stepper = cfg.to_stepper()
    state0 = cfg.initial_state(grid)
    params = cfg.to_params()

    failed = False
    detail = ""
    try:
        if params.eps > 0.0:
            traj = simulate(state0, params, grid, stepper, cfg.horizon)
        else:
            traj = simulate_classical(state0.u, state0.v, params, grid,
                                      stepper, cfg.horizon)
    except DivergenceError as err:
        traj = err.trajectory
        failed = True
        detail = str(err)

    if traj is not None:
        run.add(write_trajectory_csv(run.dir / "trajectory.csv", traj))
        for t, snap in traj.snapshots:
            run.add(write_snapshot_csv(run.dir / f"snapshot_t{t:g}.csv", grid, snap))
        if run.svg:
            run.add(svg_line_plot(
                run.dir / "amplitudes.svg", traj.times,
                [("amp_u", traj.amp_u), ("amp_v", traj.amp_v)],
                title="pattern amplitude", xlabel="t", ylabel="max - min",
            ))
            if params.eps > 0.0:
                run.add(svg_line_plot(
                    run.dir / "energy.svg", traj.times,
                    [("free energy", traj.free_energy)],
                    title="free energy", xlabel="t", ylabel="F",
                ))
            if traj.snapshots:
                t_last, snap = traj.snapshots[-1]
                run.add(svg_line_plot(
                    run.dir / "profile_final.svg", grid.cell_centers(),
                    [("u", snap.u), ("v", snap.v)],
                    title=f"profile at t = {t_last:g}", xlabel="x", ylabel="concentration",
                ))
    if not failed:
        amp = traj.amplitude()
        detail = (f"final amplitude {amp[-1]:.6g}, floor events {traj.floor_events}, "
                  f"energy increases {traj.energy_increases}")
    run.finish(failed=failed, detail=detail)
    return {"trajectory": traj, "failed": failed, "out_dir": run.dir}


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.bump_seed = args.seed
    result = run_simulate(cfg, args.out)
    if result["failed"]:
        print("simulate: run diverged; partial outputs written", file=sys.stderr)
        return 2
    traj = result["trajectory"]
    print(f"simulate: t = {traj.times[-1]:g}, amplitude = {traj.amplitude()[-1]:.6g}, "
          f"floor events = {traj.floor_events}, "
          f"energy increases = {traj.energy_increases}")
    print(f"outputs in {result['out_dir']}")
    return 0


# ---------------------------------------------------------------------------
# steady


def _uniform_pair(cfg: ScenarioConfig, grid: Grid):
    params = cfg.to_params()
    state0 = cfg.initial_state(grid)
    mass = total_mass(state0, params, grid)
    return uniform_steady_states(params, mass, domain_measure=grid.length), mass


def run_steady(cfg: ScenarioConfig, out_dir: str | None = None) -> dict:
    run = _Run("steady", cfg, out_dir)
    grid = cfg.to_grid()
    (boundary, interior), mass = _uniform_pair(cfg, grid)
    params = cfg.to_params()

    path = run.dir / "steady_states.csv"
    with open(path, "w", newline="") as fh:
        fh.write("kind,u,v,p,y,ytilde\n")
        for st in (boundary, interior):
            fh.write(",".join([st.kind] + [f"{x:.17g}" for x in
                     (st.u, st.v, st.p, st.y, st.ytilde(params))]) + "\n")
    run.add(path)
    run.finish(detail=f"conserved mass {mass:.17g}")
    return {"boundary": boundary, "interior": interior, "mass": mass, "out_dir": run.dir}


def _cmd_steady(args) -> int:
    cfg = parse_config(args.config)
    result = run_steady(cfg, args.out)
    params = cfg.to_params()
    lam = params.eps + 1.0 + (params.k + params.f) / params.eps + params.f
    print(f"conserved mass: {result['mass']:.10g}")
    print(f"interior ratio constant lambda: {lam:.10g}")
    for key in ("boundary", "interior"):
        st = result[key]
        print(f"{st.kind:8s} u = {st.u:.10g}  v = {st.v:.10g}  p = {st.p:.10g}  "
              f"y = {st.y:.10g}  y/eps = {st.ytilde(params):.10g}")
    print(f"outputs in {result['out_dir']}")
    return 0


# ---------------------------------------------------------------------------
# landscape


def run_landscape(cfg: ScenarioConfig, out_dir: str | None = None,
                  delta_max: float = 0.5, n_samples: int = 201) -> dict:
    run = _Run("landscape", cfg, out_dir)
    grid = cfg.to_grid()
    (boundary, interior), _ = _uniform_pair(cfg, grid)
    params = cfg.to_params()

    curves = {}
    for base in (boundary, interior):
        for name in ("s1", "s2", "s3"):
            direction = named_direction(name, params)
            curve = landscape_scan(base, direction, params,
                                   -delta_max, delta_max, n_samples=n_samples)
            stem = f"landscape_{base.kind}_{name}"
            run.add(write_scan_csv(run.dir / f"{stem}.csv", curve))
            if run.svg:
                run.add(svg_line_plot(
                    run.dir / f"{stem}.svg", curve.deltas,
                    [("energy", curve.energy)],
                    title=f"{base.kind} state, {direction.name}",
                    xlabel="delta", ylabel="F",
                ))
            curves[(base.kind, name)] = curve
    run.finish()
    return {"curves": curves, "boundary": boundary, "interior": interior,
            "out_dir": run.dir}


def _cmd_landscape(args) -> int:
    cfg = parse_config(args.config)
    if not args.delta_max > 0.0:
        raise ConfigError(f"--delta-max must be positive, got {args.delta_max}")
    if args.samples < 5:
        raise ConfigError(f"--samples must be at least 5, got {args.samples}")
    result = run_landscape(cfg, args.out, args.delta_max, args.samples)
    for (kind, name), curve in result["curves"].items():
        n_ok = int(np.count_nonzero(curve.feasible))
        print(f"{kind:8s} {name}: {n_ok}/{curve.deltas.size} feasible points")
    print(f"outputs in {result['out_dir']}")
    return 0


# ---------------------------------------------------------------------------
# limit check


def _product_prediction(traj, eps: float, kf: float, p0: float) -> float:
    """Closed-form product at the probe from the recorded activator series.

    p(t) solves a linear balance driven by (k+f) v at the same point, so
    it is fixed by v's history alone; the quadrature is trapezoidal on
    the recorded samples, with the decay folded into the weights to
    avoid large exponentials.
    """
    t = traj.times
    weights = kf * traj.v_probe * np.exp(eps * (t - t[-1]))
    return p0 * math.exp(-eps * t[-1]) + float(_trapezoid(weights, t))


def run_limit_check(cfg: ScenarioConfig, out_dir: str | None = None) -> dict:
    run = _Run("limit-check", cfg, out_dir)
    grid = cfg.to_grid()
    state0 = cfg.initial_state(grid)
    probe = grid.cell_index(cfg.probe_x)
    stepper = StepperConfig(dt=cfg.dt, theta=cfg.theta,
                            record_every=cfg.record_every,
                            snapshot_times=(cfg.horizon,), probe_x=cfg.probe_x)

    cls_traj = simulate_classical(state0.u, state0.v, cfg.to_params(eps=0.0),
                                  grid, stepper, cfg.horizon)
    cls_final = cls_traj.final_state

    rows = []
    for eps in cfg.limit_eps:
        traj = simulate(state0, cfg.to_params(eps), grid, stepper, cfg.horizon)
        final = traj.final_state
        sup_u = float(np.abs(final.u - cls_final.u).max())
        sup_v = float(np.abs(final.v - cls_final.v).max())
        predicted = _product_prediction(traj, eps, cfg.k + cfg.f, float(state0.p[probe]))
        actual = float(final.p[probe])
        p_rel_err = abs(actual - predicted) / max(abs(actual), 1e-300)
        rows.append({"eps": eps, "sup_diff_u": sup_u, "sup_diff_v": sup_v,
                     "p_rel_err": p_rel_err})

    for i, row in enumerate(rows):
        if i == 0:
            row["order_u"] = math.nan
            row["order_v"] = math.nan
        else:
            prev = rows[i - 1]
            span = math.log(prev["eps"] / row["eps"])
            for c in ("u", "v"):
                a, b = prev[f"sup_diff_{c}"], row[f"sup_diff_{c}"]
                row[f"order_{c}"] = math.log(a / b) / span if a > 0 and b > 0 else math.nan

    header = ["eps", "sup_diff_u", "sup_diff_v", "order_u", "order_v", "p_rel_err"]
    path = run.dir / "limit_check.csv"
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{row[h]:.17g}" for h in header) + "\n")
    run.add(path)
    if run.svg:
        eps_arr = np.array([r["eps"] for r in rows])
        run.add(svg_line_plot(
            run.dir / "limit_check.svg", np.log10(eps_arr),
            [("sup |u - u_cls|", np.log10(np.maximum([r["sup_diff_u"] for r in rows], 1e-300))),
             ("sup |v - v_cls|", np.log10(np.maximum([r["sup_diff_v"] for r in rows], 1e-300)))],
            title="distance to the classical run", xlabel="log10 eps", ylabel="log10 sup diff",
        ))
    run.finish()
    return {"rows": rows, "out_dir": run.dir}


def _cmd_limit_check(args) -> int:
    cfg = parse_config(args.config)
    result = run_limit_check(cfg, args.out)
    for row in result["rows"]:
        print(f"eps = {row['eps']:.3g}: sup|du| = {row['sup_diff_u']:.3e}, "
              f"sup|dv| = {row['sup_diff_v']:.3e}, "
              f"order_u = {row['order_u']:.3g}, order_v = {row['order_v']:.3g}, "
              f"p rel err = {row['p_rel_err']:.3e}")
    print(f"outputs in {result['out_dir']}")
    return 0


# ---------------------------------------------------------------------------
# persistence sweep


def _persistence_single(cfg: ScenarioConfig, eps: float) -> PersistenceResult:
    grid = cfg.to_grid()
    stepper = StepperConfig(dt=cfg.dt, theta=cfg.theta,
                            record_every=cfg.record_every, probe_x=cfg.probe_x)
    state0 = cfg.initial_state(grid)
    traj = simulate(state0, cfg.to_params(eps), grid, stepper, cfg.horizon,
                    stop_below_amplitude=cfg.threshold)
    return persistence_time(traj, cfg.threshold)


def _sweep_worker(payload: tuple[str, str, float]):
    """Top-level so it pickles; recreates the scenario inside the worker."""
    text, base_dir, eps = payload
    cfg = parse_config_text(text, base_dir)
    try:
        res = _persistence_single(cfg, eps)
        return eps, res.time, res.censored, ""
    except DivergenceError as err:
        return eps, math.nan, True, str(err)


def run_sweep(cfg: ScenarioConfig, out_dir: str | None = None, jobs: int = 1,
              base_dir: str = ".") -> dict:
    run = _Run("sweep-persistence", cfg, out_dir)
    payloads = [(serialize_config(cfg), base_dir, eps) for eps in cfg.sweep_eps]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(_sweep_worker, payloads))
    else:
        raw = [_sweep_worker(p) for p in payloads]
    raw.sort(key=lambda r: -r[0])

    errors = [f"eps={eps:g}: {msg}" for eps, _, _, msg in raw if msg]
    results = [
        (eps, PersistenceResult(time=t, censored=censored,
                                threshold=cfg.threshold, horizon=cfg.horizon))
        for eps, t, censored, msg in raw if not msg
    ]
    run.add(write_sweep_csv(run.dir / "sweep.csv", results))

    fit = None
    n_usable = sum(1 for _, r in results if not r.censored)
    if n_usable >= 3:
        eps_vals = [eps for eps, r in results if not r.censored]
        fit = fit_scaling(eps_vals, [r for _, r in results if not r.censored])
    if run.svg and n_usable >= 2:
        pts = [(eps, r.time) for eps, r in results if not r.censored]
        x = np.log10([p[0] for p in pts])
        series = [("T", np.log10([p[1] for p in pts]))]
        if fit is not None:
            slope, intercept, _ = fit
            series.append(("fit", (slope * np.log(10 ** x) + intercept) / math.log(10)))
        run.add(svg_line_plot(run.dir / "sweep.svg", x, series,
                              title="pattern lifetime", xlabel="log10 eps",
                              ylabel="log10 T"))

    detail_parts = []
    if fit is not None:
        detail_parts.append(f"slope {fit[0]:.4f}, r2 {fit[2]:.4f}")
    else:
        detail_parts.append(f"no fit ({n_usable} usable runs)")
    if errors:
        detail_parts.append("failed: " + "; ".join(errors))
    n_censored = sum(1 for _, r in results if r.censored)
    partial = bool(errors) or fit is None or 2 * n_censored > len(results)
    run.finish(failed=not results, detail="; ".join(detail_parts))
    return {"results": results, "fit": fit, "errors": errors,
            "partial": partial, "out_dir": run.dir}


def _cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be at least 1, got {args.jobs}")
    result = run_sweep(cfg, args.out, jobs=args.jobs,
                       base_dir=str(Path(args.config).parent))
    for eps, res in result["results"]:
        mark = " (censored)" if res.censored else ""
        print(f"eps = {eps:.3g}: T = {res.time:g}{mark}")
    for msg in result["errors"]:
        print(f"failed run: {msg}", file=sys.stderr)
    if result["fit"] is not None:
        slope, intercept, r2 = result["fit"]
        print(f"fit: ln T = {slope:.4f} ln eps + {intercept:.4f}  (r2 = {r2:.4f})")
    print(f"outputs in {result['out_dir']}")
    if not result["results"]:
        return 2
    return 3 if result["partial"] else 0


# ---------------------------------------------------------------------------
# pattern library


def run_make_library(cfg: ScenarioConfig, out_dir: str | None = None,
                     count: int = 64, seed: int = 1,
                     march_time: float = 2000.0) -> dict:
    run = _Run("make-library", cfg, out_dir, seed=seed)
    grid = cfg.to_grid()
    stepper = cfg.to_stepper()
    library = generate_pattern_library(cfg.to_params(), grid, stepper,
                                       seed_count=count, rng_seed=seed,
                                       march_time=march_time)
    lib_dir = save_library(library, grid, run.dir / "library")
    run.record.outputs.append("library/index.csv")
    for entry in library:
        run.record.outputs.append(f"library/{entry.profile_id}.csv")
    if run.svg and library:
        run.add(svg_line_plot(
            run.dir / "library.svg", grid.cell_centers(),
            [(f"{e.profile_id} ({e.stability})", e.v) for e in library],
            title="steady activator profiles", xlabel="x", ylabel="v",
        ))
    run.finish(failed=not library,
               detail=f"{len(library)} distinct profiles from {count} seeds")
    return {"library": library, "lib_dir": lib_dir, "out_dir": run.dir}


def _cmd_make_library(args) -> int:
    cfg = parse_config(args.config)
    if args.count < 1:
        raise ConfigError(f"--count must be at least 1, got {args.count}")
    result = run_make_library(cfg, args.out, count=args.count, seed=args.seed,
                              march_time=args.march_time)
    library = result["library"]
    for entry in library:
        print(f"{entry.profile_id}: pulses = {entry.pulse_count}, "
              f"stability = {entry.stability}, residual = {entry.residual:.3e} "
              f"[{entry.provenance}]")
    print(f"library in {result['lib_dir']}")
    if not library:
        print("no steady profiles found", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "handler"):
        parser.print_help()
        return 1
    try:
        return args.handler(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    except (NewtonError, DivergenceError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
