"""Deterministic coupled system satisfied by the chaos coefficients:
right-hand sides, initial data, and per-index boundary data.

For each retained index alpha the coefficient equation is

    du_a/dt = - sum_(left,right) C * u_left * d/dx u_right
              - kappa u_a'' - eta u_a''' - nu u_a''''
              + sigma(x) * m_i(t) * [alpha is the first-order index of mode i]

with the bilinear sum supplied by the truncation's convolution triples. The
noise projects only onto first-order indices, and stochastic Dirichlet data
projects to the time integrals of the basis functions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._stencils import diff1, diff2
from .brownian import TimeBasis
from .chaos import MultiIndex, TruncationScheme, _conv_table
from .problems import ProblemSpec, RobinBC


@dataclass(frozen=True)
class ChaosField:
    """Spatial coefficient arrays, one row per enumerated index, at one time level."""

    indices: tuple[MultiIndex, ...]
    data: np.ndarray  # (len(indices), K+1)
    time: float

    def __post_init__(self):
        data = np.array(self.data)
        if data.ndim != 2 or data.shape[0] != len(self.indices):
            raise ValueError(
                f"coefficient matrix must be (len(indices), K+1), got {data.shape}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def coefficient(self, alpha: MultiIndex) -> np.ndarray:
        try:
            row = self.indices.index(alpha)
        except ValueError:
            raise KeyError(f"index {alpha} not in field") from None
        return self.data[row]

    def as_dict(self) -> dict[MultiIndex, np.ndarray]:
        return {a: self.data[i] for i, a in enumerate(self.indices)}


def _boundary_sigma(spec: ProblemSpec, side: str) -> complex:
    if spec.sigma_const is not None:
        return spec.sigma_const
    x = spec.grid.a if side == "left" else spec.grid.b
    return complex(np.asarray(spec.sigma(np.asarray(x)), dtype=complex))


def _bc_values(
    spec: ProblemSpec,
    indices: tuple[MultiIndex, ...],
    scheme: TruncationScheme,
    basis: TimeBasis,
    bc: RobinBC,
    t: float,
) -> np.ndarray:
    """Per-index projection of the boundary data g under the chaos expansion.

    Deterministic g projects onto the zero index only. g = sigma*W projects to
    sigma * int_0^t m_i for the first-order index of mode i and vanishes
    elsewhere (including the zero index, since W has zero mean).
    """
    dtype = complex if spec.field_kind == "complex" else float
    out = np.zeros(len(indices), dtype=dtype)
    if bc.is_periodic:
        return out
    if bc.is_stochastic:
        sig = _boundary_sigma(spec, bc.side)
        if spec.field_kind != "complex":
            sig = float(np.real(sig))
        ints = basis.integrals(t)
        for row, alpha in enumerate(indices):
            mode = scheme.forcing_mode(alpha)
            if mode is not None and mode <= basis.count:
                out[row] = sig * ints[mode - 1]
        return out
    zero_row = indices.index(MultiIndex.zero())
    out[zero_row] = bc.data(t)
    return out


def boundary_data(
    spec: ProblemSpec,
    scheme: TruncationScheme,
    driver_basis: TimeBasis,
    t: float,
) -> list[tuple[RobinBC, np.ndarray]]:
    """Boundary data values per enforced condition, one entry per index.

    Periodic markers carry no data and are omitted.
    """
    driver_basis._check_time(t)
    indices = scheme.enumerate()
    return [
        (bc, _bc_values(spec, indices, scheme, driver_basis, bc, t))
        for bc in spec.bcs
        if not bc.is_periodic
    ]


class PropagatorSystem:
    """Precomputed assembly of the coefficient equations for one problem.

    Bundles the convolution triples (as row-index arrays), the forcing row
    map, the sampled forcing amplitude, and boundary enforcement. rhs_array is
    pure; apply_boundaries mutates its argument in place and returns it.
    """

    def __init__(self, spec: ProblemSpec, scheme: TruncationScheme, basis: TimeBasis):
        self.spec = spec
        self.scheme = scheme
        self.basis = basis
        self.indices = scheme.enumerate()
        self.dtype = complex if spec.field_kind == "complex" else float
        self.closure = "periodic"

        grid = spec.grid
        self._dx = grid.dx
        self._x = grid.x()
        self._nodes = grid.K + 1
        sig = np.asarray(spec.sigma_values(self._x))
        self._sigma_x = sig.astype(self.dtype)

        table = _conv_table(scheme)
        self._conv = [table[alpha] for alpha in self.indices]

        # rows forced by the noise: first-order single-mode indices with a
        # basis function available
        self._forced: list[tuple[int, int]] = []
        for row, alpha in enumerate(self.indices):
            mode = scheme.forcing_mode(alpha)
            if mode is not None and mode <= basis.count:
                self._forced.append((row, mode))
        self._sigma_is_zero = spec.sigma_const == 0.0

        self._enforced = [bc for bc in spec.bcs if not bc.is_periodic]

    def initial_array(self) -> np.ndarray:
        U = np.zeros((len(self.indices), self._nodes), dtype=self.dtype)
        zero_row = self.indices.index(MultiIndex.zero())
        U[zero_row] = np.asarray(self.spec.f(self._x), dtype=self.dtype)
        return U

    def rhs_array(self, U: np.ndarray, t: float) -> np.ndarray:
        spec = self.spec
        dx, pol = self._dx, self.closure
        d2 = diff2(U, dx, pol)
        out = -spec.kappa * d2 - spec.eta * diff1(d2, dx, pol) - spec.nu * diff2(d2, dx, pol)
        if spec.nonlinear:
            ux = diff1(U, dx, pol)
            for row, (lidx, ridx, coef) in enumerate(self._conv):
                out[row] -= (coef[:, None] * U[lidx] * ux[ridx]).sum(axis=0)
        if self._forced and not self._sigma_is_zero:
            m = self.basis.values(t)
            for row, mode in self._forced:
                out[row] += self._sigma_x * m[mode - 1]
        return out

    def boundary_rhs(self, t: float) -> list[tuple[RobinBC, np.ndarray]]:
        return [
            (bc, _bc_values(self.spec, self.indices, self.scheme, self.basis, bc, t))
            for bc in self._enforced
        ]

    def apply_boundaries(self, U: np.ndarray, t: float) -> np.ndarray:
        """Overwrite boundary nodes from the per-index boundary data.

        Dirichlet rows pin the endpoint node; mixed rows eliminate the
        endpoint using a one-sided second-order difference for the slope.
        """
        dx = self._dx
        for bc, vals in self.boundary_rhs(t):
            a1, a2 = bc.u_weight, bc.ux_weight
            if bc.side == "left":
                if a2 == 0.0:
                    U[:, 0] = vals / a1
                else:
                    # u_x(a) ~ (-3 u0 + 4 u1 - u2) / (2 dx)
                    denom = a1 - 3.0 * a2 / (2.0 * dx)
                    U[:, 0] = (vals - a2 * (4.0 * U[:, 1] - U[:, 2]) / (2.0 * dx)) / denom
            else:
                if a2 == 0.0:
                    U[:, -1] = vals / a1
                else:
                    # u_x(b) ~ (3 uK - 4 u_{K-1} + u_{K-2}) / (2 dx)
                    denom = a1 + 3.0 * a2 / (2.0 * dx)
                    U[:, -1] = (vals - a2 * (-4.0 * U[:, -2] + U[:, -3]) / (2.0 * dx)) / denom
        return U


def _check_structure(field: ChaosField, scheme: TruncationScheme):
    if field.indices != scheme.enumerate():
        raise ValueError("field indices do not match the truncation scheme")


def initial_field(spec: ProblemSpec, scheme: TruncationScheme) -> ChaosField:
    """Chaos coefficients at t = 0: the mean carries f, every other index is zero."""
    indices = scheme.enumerate()
    dtype = complex if spec.field_kind == "complex" else float
    U = np.zeros((len(indices), spec.grid.K + 1), dtype=dtype)
    U[indices.index(MultiIndex.zero())] = np.asarray(spec.f(spec.grid.x()), dtype=dtype)
    return ChaosField(indices=indices, data=U, time=0.0)


def rhs(
    field: ChaosField,
    spec: ProblemSpec,
    scheme: TruncationScheme,
    basis: TimeBasis,
    t: float | None = None,
) -> ChaosField:
    """Time derivative of every coefficient, as a field-shaped increment."""
    _check_structure(field, scheme)
    system = PropagatorSystem(spec, scheme, basis)
    when = field.time if t is None else t
    dU = system.rhs_array(field.data.astype(system.dtype), when)
    return ChaosField(indices=field.indices, data=dU, time=when)
