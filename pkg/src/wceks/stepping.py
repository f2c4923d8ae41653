"""Spatial stencils and the explicit predictor-corrector time march.

The march starts with an Euler-predicted, trapezoid-corrected step, then runs
Adams-Bashforth-2 prediction with a single Adams-Moulton-3 correction per
step, re-evaluating the right-hand side at the corrected state for the next
step's history. On the scalar test equation the scheme is stable for
z = lambda*dt in about (-2.4, 0) on the real axis.
"""
from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from ._stencils import diff1, diff2, diff3, diff4  # noqa: F401  (public API)
from .brownian import TimeBasis
from .chaos import TruncationScheme
from .problems import ProblemSpec
from .propagator import ChaosField, PropagatorSystem


class DivergenceError(RuntimeError):
    """The march produced a non-finite or absurdly large value."""


# Magnitudes beyond this are treated as divergence even while still finite;
# a blowup can take hundreds of steps to reach inf from a growth factor of
# a few per step.
DIVERGENCE_LIMIT = 1e100


def _default_check(y: np.ndarray, n: int, t: float):
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > DIVERGENCE_LIMIT:
        raise DivergenceError(f"non-finite or runaway state at step {n} (t={t:.6g})")


def step_stream(
    rhs: Callable[[np.ndarray, float], np.ndarray],
    y0: np.ndarray,
    dt: float,
    steps: int,
    t0: float = 0.0,
    post_stage: Callable[[np.ndarray, int, float], np.ndarray] | None = None,
    check: Callable[[np.ndarray, int, float], None] | None = None,
) -> Iterator[tuple[int, float, np.ndarray]]:
    """Advance y' = rhs(y, t) and yield (n, t_n, y_n) for n = 0..steps.

    post_stage is applied to every stage result (predictor and corrector),
    which is where boundary overwrites hook in. The yielded arrays are fresh
    copies.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    post = post_stage if post_stage is not None else (lambda y, n, t: y)
    guard = check if check is not None else _default_check

    y = np.array(y0, copy=True)
    guard(y, 0, t0)
    yield 0, t0, y.copy()

    # First step: Euler predictor, trapezoid corrector. A plain Euler start
    # costs one order of global accuracy.
    t1 = t0 + dt
    h0 = rhs(y, t0)
    p = post(y + dt * h0, 1, t1)
    y1 = post(y + 0.5 * dt * (h0 + rhs(p, t1)), 1, t1)
    guard(y1, 1, t1)
    yield 1, t1, y1.copy()

    h_prev, h_cur = h0, rhs(y1, t1)
    for n in range(2, steps + 1):
        tn = t0 + n * dt
        p = post(y1 + dt * (1.5 * h_cur - 0.5 * h_prev), n, tn)
        h_star = rhs(p, tn)
        y2 = post(
            y1 + dt * ((5.0 / 12.0) * h_star + (2.0 / 3.0) * h_cur - (1.0 / 12.0) * h_prev),
            n,
            tn,
        )
        guard(y2, n, tn)
        yield n, tn, y2.copy()
        h_prev, h_cur = h_cur, rhs(y2, tn)
        y1 = y2


def integrate(
    rhs: Callable,
    y0,
    dt: float,
    steps: int,
    t0: float = 0.0,
    post_stage=None,
) -> np.ndarray:
    """Final state after `steps` steps of the predictor-corrector march."""
    y = None
    for _, _, y in step_stream(rhs, np.asarray(y0), dt, steps, t0, post_stage):
        pass
    return y


def march_stream(
    system: PropagatorSystem, field: ChaosField, steps: int
) -> Iterator[tuple[int, float, np.ndarray]]:
    """Yield (n, t_n, coefficient matrix) while marching a chaos field."""
    dt = system.spec.grid.dt

    def guard(U, n, t):
        bad = ~np.isfinite(U) | (np.abs(U) > DIVERGENCE_LIMIT)
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            raise DivergenceError(
                f"divergent coefficient for index {system.indices[row]} "
                f"at step {n} (t={t:.6g})"
            )

    yield from step_stream(
        system.rhs_array,
        field.data.astype(system.dtype),
        dt,
        steps,
        t0=field.time,
        post_stage=lambda U, n, t: system.apply_boundaries(U, t),
        check=guard,
    )


def march(
    field: ChaosField,
    spec: ProblemSpec,
    scheme: TruncationScheme,
    basis: TimeBasis,
    steps: int,
    snapshot_every: int = 1,
) -> list[ChaosField]:
    """March the chaos coefficients and return snapshots every `snapshot_every` steps.

    The final step is always included.
    """
    system = PropagatorSystem(spec, scheme, basis)
    out = []
    for n, t, U in march_stream(system, field, steps):
        if n % snapshot_every == 0 or n == steps:
            out.append(ChaosField(indices=system.indices, data=U, time=t))
    return out
