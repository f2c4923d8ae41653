"""Reference solutions: the single-mode Langevin closed form for the linear
problem, its chaos-coefficient form, and the moving-frame change of variables
that turns the constant-amplitude stochastic problem into a deterministic
solve on a shifted grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .brownian import BrownianDriver, TimeBasis, brownian_at, increments, integrated_brownian
from .chaos import TruncationScheme
from .problems import GridSpec, ProblemSpec
from .propagator import PropagatorSystem
from .stepping import step_stream


class DomainExhaustedError(RuntimeError):
    """The realized frame shift left the allocated transformed grid."""


@dataclass(frozen=True)
class LangevinParams:
    """Single-mode amplitude equation dV = rate*V dt + dW for u = V exp(i k x)."""

    kappa: float
    eta: float
    nu: float
    wavenumber: int
    v0: complex = 1.0

    @property
    def rate(self) -> complex:
        k = self.wavenumber
        return self.kappa * k**2 + 1j * self.eta * k**3 - self.nu * k**4

    @classmethod
    def from_problem(cls, spec: ProblemSpec) -> "LangevinParams":
        if spec.wavenumber is None:
            raise ValueError(f"problem {spec.name!r} is not a single-mode setup")
        v0 = spec.initial_amplitude if spec.initial_amplitude is not None else 1.0
        return cls(spec.kappa, spec.eta, spec.nu, spec.wavenumber, complex(v0))


def carrier(params: LangevinParams, x) -> np.ndarray:
    """Spatial factor exp(i k x) of the single-mode solution."""
    return np.exp(1j * params.wavenumber * np.asarray(x, dtype=float))


def _step_count(T: float, dt: float) -> int:
    n_float = T / dt
    n = round(n_float)
    if n < 1 or abs(n_float - n) > 1e-9 * max(1.0, n_float):
        raise ValueError(f"dt={dt} does not divide the horizon {T}")
    return n


def langevin_semianalytic(params: LangevinParams, driver: BrownianDriver, dt: float) -> np.ndarray:
    """Amplitude series V(t_n) = exp(rate*t_n) (V0 + int_0^t_n exp(-rate*s) dW).

    The stochastic integral is accumulated stepwise, each increment evaluated
    by the trapezoidal rule on the integrand against the path increments, so
    the running value over [0, t_{n-1}] is carried forward unchanged.
    """
    lam = params.rate
    T = driver.basis.horizon
    n = _step_count(T, dt)
    times = dt * np.arange(n + 1)
    times[-1] = min(times[-1], T)
    dW = increments(driver, dt)
    f = np.exp(-lam * times)
    contributions = 0.5 * (f[:-1] + f[1:]) * dW
    integral = np.concatenate([[0.0], np.cumsum(contributions)])
    return np.exp(lam * times) * (params.v0 + integral)


def langevin_wce(params: LangevinParams, basis: TimeBasis, dt: float) -> np.ndarray:
    """Chaos coefficients of the amplitude, marched with the same predictor-corrector.

    Row 0 solves dV/dt = rate*V from V0; row i >= 1 solves
    dV_i/dt = rate*V_i + m_i(t) from zero. Shape (count+1, steps+1).
    """
    lam = params.rate
    steps = _step_count(basis.horizon, dt)

    def rhs(y, t):
        out = lam * y
        out[1:] += basis.values(t)
        return out

    y0 = np.zeros(basis.count + 1, dtype=complex)
    y0[0] = params.v0
    V = np.empty((basis.count + 1, steps + 1), dtype=complex)
    for n, _, y in step_stream(rhs, y0, dt, steps):
        V[:, n] = y
    return V


@dataclass(frozen=True)
class TransformedProblem:
    """Deterministic problem produced by the moving-frame substitution.

    chi_grid extends the original grid by `margin` cells per side; shift and
    lift are the realized frame displacement and data offset at each time
    level; v is the transformed field trajectory on chi_grid.
    """

    chi_grid: np.ndarray
    v: np.ndarray  # (N+1, len(chi_grid))
    shift: np.ndarray
    lift: np.ndarray
    margin: int


@dataclass(frozen=True)
class MovingFrameResult:
    times: np.ndarray
    values: np.ndarray  # u on the original grid, (N+1, K+1)
    transformed: TransformedProblem


def _moving_bc_value(bc, lift_n: float, t: float) -> float:
    # Dirichlet data for the transformed field: g/u_weight minus the lift.
    if bc.is_stochastic:
        return lift_n / bc.u_weight - lift_n
    return bc.data(t) / bc.u_weight - lift_n


def moving_frame_solve(
    spec: ProblemSpec,
    driver: BrownianDriver,
    boundary_mode: str = "clamp",
    margin_cells: int | None = None,
) -> MovingFrameResult:
    """Solve the constant-amplitude problem through the moving-frame substitution.

    The deterministic equation for v is marched on a grid extended by
    margin_cells per side (by default 1.5x the realized peak displacement,
    rounded up to whole cells), with the Dirichlet data for v enforced at the
    grid node nearest each moving endpoint (`clamp`) or by sub-cell linear
    interpolation (`interp`). The returned values are
    u(x, t) = v(x - shift(t), t) + lift(t) on the original grid.
    """
    if spec.sigma_const is None:
        raise ValueError("moving-frame solve requires a constant forcing amplitude")
    if boundary_mode not in ("clamp", "interp"):
        raise ValueError(f"unknown boundary mode {boundary_mode!r}")
    sig = float(spec.sigma_const)
    grid = spec.grid
    K, N, dx, dt = grid.K, grid.N, grid.dx, grid.dt
    times = grid.times()
    shift = sig * integrated_brownian(driver, times)
    lift = sig * brownian_at(driver, times)

    if margin_cells is None:
        margin_cells = int(math.ceil(1.5 * float(np.max(np.abs(shift))) / dx))
    max_shift = float(np.max(np.abs(shift)))
    if max_shift > margin_cells * dx * (1.0 + 1e-12):
        raise DomainExhaustedError(
            f"realized frame shift {max_shift:.6g} exceeds the allocated margin "
            f"of {margin_cells} cells ({margin_cells * dx:.6g})"
        )

    n_ext = K + 2 * margin_cells + 1
    ext_grid = GridSpec(
        a=grid.a - margin_cells * dx,
        b=grid.b + margin_cells * dx,
        dx=dx,
        T=grid.T,
        dt=dt,
    )
    ext_spec = replace(spec, grid=ext_grid)
    # Degenerate truncation: the transformed equation is deterministic, and the
    # zero-index right-hand side is exactly the unforced operator.
    system = PropagatorSystem(ext_spec, TruncationScheme(0, 0), TimeBasis(grid.T, 1))
    # Node coordinates are built from the original origin so that the inner
    # nodes coincide bitwise with the original grid.
    chi = grid.a + dx * (np.arange(n_ext) - margin_cells)
    v0 = np.asarray(spec.f(chi), dtype=float)[None, :]

    enforced = [bc for bc in spec.bcs if not bc.is_periodic]
    for bc in enforced:
        if bc.ux_weight != 0.0:
            raise ValueError("moving-frame solve supports Dirichlet data only")

    def post(V, n, t):
        frac = shift[n] / dx
        off = int(np.rint(frac))
        for bc in enforced:
            val = _moving_bc_value(bc, lift[n], t)
            base = margin_cells if bc.side == "left" else margin_cells + K
            if boundary_mode == "clamp":
                V[:, base - off] = val
            else:
                _interp_pin(V, base - frac, val)
        return V

    x = grid.x()
    u = np.empty((N + 1, K + 1))
    v_traj = np.empty((N + 1, n_ext))
    for n, _, V in step_stream(system.rhs_array, v0, dt, N, post_stage=post):
        v_traj[n] = V[0]
        u[n] = np.interp(x - shift[n], chi, V[0]) + lift[n]

    transformed = TransformedProblem(
        chi_grid=chi, v=v_traj, shift=shift, lift=lift, margin=margin_cells
    )
    return MovingFrameResult(times=times, values=u, transformed=transformed)


def _interp_pin(V, pos: float, val: float):
    """Pin a boundary value at fractional grid position `pos` by adjusting the
    nearer bracketing node so the linear interpolant matches `val` there.

    Solving for the nearer node keeps the denominator at least 1/2.
    """
    j0 = int(np.floor(pos))
    th = pos - j0
    if th < 1e-9:
        V[:, j0] = val
    elif th <= 0.5:
        V[:, j0] = (val - th * V[:, j0 + 1]) / (1.0 - th)
    else:
        V[:, j0 + 1] = (val - (1.0 - th) * V[:, j0]) / th
