"""Command-line runner: execute one experiment or sweep a parameter axis,
writing deterministic CSV artifacts plus a JSON summary and manifest echo."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import problems
from .analysis import Trajectory, error_series
from .brownian import TimeBasis, sample_driver
from .chaos import TruncationScheme, wick_eval
from .oracles import (
    DomainExhaustedError,
    LangevinParams,
    carrier,
    langevin_semianalytic,
    moving_frame_solve,
)
from .propagator import PropagatorSystem, initial_field
from .stepping import DivergenceError, march_stream

CSV_SCHEMA = "wceks-csv/1"
ENV_OUT = "WCEKS_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_DOMAIN = 4

ORACLE_CHOICES = ("analytic", "moving-frame", "none")

_DEFAULT_PROBE = {"linear_test": 1.5, "tp1": 0.0, "tp3": 0.0, "tp2": 10.0, "tp4": 10.0}


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Everything that determines one run; echoed into every artifact header."""

    problem: str
    config: str | None
    seed: int
    gaussian_count: int
    total_count: int
    cap: int
    dt: float | None
    dx: float | None
    out: str
    snapshots: tuple[float, ...]
    probe_x: float | None
    oracle: str

    def to_json(self) -> str:
        rec = dataclasses.asdict(self)
        rec["snapshots"] = list(rec["snapshots"])
        return json.dumps(rec, sort_keys=True)


@dataclasses.dataclass
class RunResult:
    manifest: RunManifest
    max_rel: float | None
    slope: float | None
    slope_r2: float | None
    terminal_abs: float | None
    flagged: bool


class ConfigError(ValueError):
    pass


def _resolve_spec(manifest: RunManifest) -> problems.ProblemSpec:
    if manifest.config is not None:
        cfg = problems.load_config(manifest.config)
        spec = problems.spec_from_mapping(cfg)
    else:
        spec = problems.builtin_problem(manifest.problem)
    return problems.with_grid_overrides(spec, manifest.dt, manifest.dx)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def _write_csv(path: str, manifest: RunManifest, header: list[str], rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {CSV_SCHEMA}\n")
        fh.write(f"# manifest: {manifest.to_json()}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _snapshot_steps(snapshots, grid) -> list[int]:
    steps = set()
    for t in snapshots:
        if not 0.0 <= t <= grid.T + 1e-9:
            continue
        steps.add(min(grid.N, max(0, int(round(t / grid.dt)))))
    return sorted(steps)


def execute(manifest: RunManifest) -> RunResult:
    """Run one experiment and write its artifacts. Raises typed errors;
    callers map them to exit codes."""
    try:
        spec = _resolve_spec(manifest)
    except (KeyError, ValueError, OSError) as e:
        raise ConfigError(str(e)) from e

    diags = problems.validate(spec, manifest.oracle)
    for d in diags:
        if d.severity == "warning":
            print(f"warning: {d.message}", file=sys.stderr)
    bad = problems.violations(diags)
    if bad:
        raise ConfigError("; ".join(d.message for d in bad))

    grid = spec.grid
    scheme = TruncationScheme(manifest.gaussian_count, manifest.total_count, manifest.cap)
    basis = TimeBasis(grid.T, manifest.total_count)
    driver = sample_driver(manifest.seed, basis)

    system = PropagatorSystem(spec, scheme, basis)
    field0 = initial_field(spec, scheme)
    weights = np.array([wick_eval(a, driver.xi) for a in system.indices])

    times = grid.times()
    x = grid.x()
    traj = np.empty((grid.N + 1, grid.K + 1), dtype=system.dtype)
    for n, _, U in march_stream(system, field0, grid.N):
        traj[n] = weights @ U

    reference = None
    if manifest.oracle == "analytic":
        params = LangevinParams.from_problem(spec)
        V = langevin_semianalytic(params, driver, grid.dt)
        reference = np.multiply.outer(V, carrier(params, x))
    elif manifest.oracle == "moving-frame":
        reference = moving_frame_solve(spec, driver).values

    series = None
    if reference is not None:
        series = error_series(Trajectory(times, traj), Trajectory(times, reference))

    os.makedirs(manifest.out, exist_ok=True)
    snap_steps = _snapshot_steps(manifest.snapshots, grid)

    def space_rows(values):
        for n in snap_steps:
            t = times[n]
            for k in range(grid.K + 1):
                v = values[n, k]
                yield (t, x[k], float(np.real(v)), float(np.imag(v)))

    _write_csv(
        os.path.join(manifest.out, "snapshots.csv"),
        manifest,
        ["t", "x", "re", "im"],
        space_rows(traj),
    )

    probe = manifest.probe_x
    if probe is None:
        probe = _DEFAULT_PROBE.get(spec.name, 0.5 * (grid.a + grid.b))
    k_probe = int(np.argmin(np.abs(x - probe)))
    if reference is None:
        header = ["t", "wce_re", "wce_im"]
        rows = (
            (times[n], float(np.real(traj[n, k_probe])), float(np.imag(traj[n, k_probe])))
            for n in range(grid.N + 1)
        )
    else:
        header = ["t", "wce_re", "wce_im", "oracle_re", "oracle_im"]
        rows = (
            (
                times[n],
                float(np.real(traj[n, k_probe])),
                float(np.imag(traj[n, k_probe])),
                float(np.real(reference[n, k_probe])),
                float(np.imag(reference[n, k_probe])),
            )
            for n in range(grid.N + 1)
        )
    _write_csv(os.path.join(manifest.out, "timeseries.csv"), manifest, header, rows)

    if reference is not None:
        _write_csv(
            os.path.join(manifest.out, "oracle.csv"),
            manifest,
            ["t", "x", "re", "im"],
            space_rows(reference),
        )
        _write_csv(
            os.path.join(manifest.out, "errors.csv"),
            manifest,
            ["t", "abs", "rel"],
            (
                (times[n], float(series.abs_diff[n]), float(series.rel_diff[n]))
                for n in range(grid.N + 1)
            ),
        )
        with open(os.path.join(manifest.out, "summary.json"), "w") as fh:
            json.dump(series.summary(), fh, sort_keys=True)
            fh.write("\n")

    with open(os.path.join(manifest.out, "manifest.json"), "w") as fh:
        fh.write(manifest.to_json())
        fh.write("\n")

    if series is None:
        return RunResult(manifest, None, None, None, None, False)
    summary = series.summary()
    return RunResult(
        manifest,
        summary["max_rel"],
        series.slope_fit,
        series.slope_r2,
        float(series.abs_diff[-1]),
        summary["flagged"],
    )


def run(manifest: RunManifest) -> int:
    try:
        result = execute(manifest)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as e:
        print(f"divergence: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except DomainExhaustedError as e:
        print(f"oracle domain exhausted: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    if result.max_rel is None:
        print(f"{manifest.problem} seed={manifest.seed}: done (no oracle); artifacts in {manifest.out}")
    else:
        print(
            f"{manifest.problem} seed={manifest.seed}: max_rel={result.max_rel:.6g} "
            f"slope={result.slope:.6g}; artifacts in {manifest.out}"
        )
    return EXIT_OK


def _stability_ratio(manifest: RunManifest) -> float:
    spec = _resolve_spec(manifest)
    return spec.nu * spec.grid.dt / spec.grid.dx**4


def sweep(base: RunManifest, axis: str, values: list[float], force: bool = False) -> int:
    """Run the base manifest once per axis value and tabulate the error metrics."""
    if axis not in ("dt", "dx", "I"):
        print(f"config error: unknown sweep axis {axis!r}", file=sys.stderr)
        return EXIT_CONFIG
    if not values:
        print("config error: sweep needs at least one value", file=sys.stderr)
        return EXIT_CONFIG

    rows = []
    for v in values:
        if axis == "dt":
            sub = dataclasses.replace(base, dt=float(v))
        elif axis == "dx":
            sub = dataclasses.replace(base, dx=float(v))
        else:
            count = int(v)
            sub = dataclasses.replace(
                base,
                total_count=count,
                gaussian_count=min(base.gaussian_count, count),
            )
        sub = dataclasses.replace(sub, out=os.path.join(base.out, f"{axis}_{_fmt(float(v))}"))
        try:
            ratio = _stability_ratio(sub)
        except (KeyError, ValueError, OSError) as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        if ratio > problems.STABILITY_RATIO and not force:
            print(
                f"config error: {axis}={v} gives nu*dt/dx^4 = {ratio:.3g} beyond the "
                f"stability threshold {problems.STABILITY_RATIO}; use --force to run anyway",
                file=sys.stderr,
            )
            return EXIT_CONFIG
        try:
            res = execute(sub)
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        except DivergenceError as e:
            print(f"divergence: {e}", file=sys.stderr)
            return EXIT_DIVERGENCE
        except DomainExhaustedError as e:
            print(f"oracle domain exhausted: {e}", file=sys.stderr)
            return EXIT_DOMAIN
        rows.append(
            (
                axis,
                float(v),
                res.terminal_abs if res.terminal_abs is not None else float("nan"),
                res.max_rel if res.max_rel is not None else float("nan"),
                res.slope if res.slope is not None else float("nan"),
            )
        )

    os.makedirs(base.out, exist_ok=True)
    _write_csv(
        os.path.join(base.out, "sweep.csv"),
        base,
        ["axis", "value", "terminal_abs", "max_rel", "slope"],
        rows,
    )
    print(f"sweep over {axis} complete; table in {os.path.join(base.out, 'sweep.csv')}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--problem", default=None, help="builtin problem name")
    p.add_argument("--config", default=None, help="config file path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--I", dest="total_count", type=int, default=None, help="truncation size")
    p.add_argument("--Itilde", dest="gaussian_count", type=int, default=None,
                   help="first-order block size")
    p.add_argument("--cap", type=int, default=None, help="higher-order Hermite cap")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--dx", type=float, default=None)
    p.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUT} or ./wceks-out)")
    p.add_argument("--snapshots", default=None, help="comma-separated snapshot times")
    p.add_argument("--probe-x", type=float, default=None, help="time-series probe position")
    p.add_argument("--oracle", choices=ORACLE_CHOICES, default=None)
    p.add_argument("--force", action="store_true", help="run past the stability threshold")


def _manifest_from_args(args) -> RunManifest:
    cfg = {}
    if args.config is not None:
        try:
            cfg = problems.load_config(args.config)
        except (OSError, ValueError) as e:
            raise ConfigError(str(e)) from e
    problem = args.problem or cfg.get("problem")
    if problem is None and args.config is None:
        raise ConfigError("either --problem or --config is required")

    def setting(flag, key, fallback):
        if flag is not None:
            return flag
        if key in cfg:
            return cfg[key]
        return fallback

    nonlinear_builtin = problem in ("tp1", "tp2", "tp3", "tp4")
    total = int(setting(args.total_count, "total_count", 60))
    gaussian_default = 40 if nonlinear_builtin else total
    gaussian = int(setting(args.gaussian_count, "gaussian_count", gaussian_default))
    oracle_default = "analytic" if problem == "linear_test" else "moving-frame"

    out_root = args.out or os.environ.get(ENV_OUT) or "wceks-out"
    seed = int(setting(args.seed, "seed", 0))
    if args.snapshots is not None:
        snapshots = tuple(float(s) for s in args.snapshots.split(",") if s.strip())
    else:
        snapshots = (1.0, 2.0, 3.0)

    manifest = RunManifest(
        problem=str(problem) if problem else "custom",
        config=args.config,
        seed=seed,
        gaussian_count=min(gaussian, total),
        total_count=total,
        cap=int(setting(args.cap, "cap", 1)),
        dt=args.dt,
        dx=args.dx,
        out=os.path.join(out_root, f"{problem or 'custom'}_seed{seed}"),
        snapshots=snapshots,
        probe_x=setting(args.probe_x, "probe_x", None),
        oracle=str(setting(args.oracle, "oracle", oracle_default)),
    )
    # echo the resolved step sizes so the manifest pins the grid explicitly
    try:
        spec = _resolve_spec(manifest)
    except (KeyError, ValueError, OSError) as e:
        raise ConfigError(str(e)) from e
    return dataclasses.replace(manifest, dt=spec.grid.dt, dx=spec.grid.dx)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wceks",
        description="Chaos-expansion solver for stochastically forced "
        "Kuramoto-Sivashinsky dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment")
    _add_common(p_run)
    p_sweep = sub.add_parser("sweep", help="run a one-axis parameter sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", choices=("dt", "dx", "I"), required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")

    args = parser.parse_args(argv)
    try:
        manifest = _manifest_from_args(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        return run(manifest)
    values = [float(s) for s in args.values.split(",") if s.strip()]
    root = os.path.dirname(manifest.out) or "."
    manifest = dataclasses.replace(
        manifest, out=os.path.join(root, f"{manifest.problem}_sweep_{args.axis}")
    )
    return sweep(manifest, args.axis, values, force=args.force)


if __name__ == "__main__":
    sys.exit(main())
