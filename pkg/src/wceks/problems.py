"""Declarative problem descriptions: operator coefficients, forcing, grid,
boundary conditions, and the canonical builtin setups."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

# Boundary data markers; any other data is a callable of time.
PERIODIC = "periodic"
SIGMA_W = "sigma*W"

BCData = Union[Callable[[float], float], str]


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid on [a, b] x [0, T] with steps dx, dt."""

    a: float
    b: float
    dx: float
    T: float
    dt: float

    def _cells(self, span: float, step: float, what: str) -> int:
        n_float = span / step
        n = round(n_float)
        if n < 1 or abs(n_float - n) > 1e-9 * max(1.0, abs(n_float)):
            raise ValueError(f"{what} step {step} does not divide the span {span}")
        return n

    @property
    def K(self) -> int:
        return self._cells(self.b - self.a, self.dx, "spatial")

    @property
    def N(self) -> int:
        return self._cells(self.T, self.dt, "time")

    def x(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.K + 1)

    def times(self) -> np.ndarray:
        t = self.dt * np.arange(self.N + 1)
        t[-1] = min(t[-1], self.T)
        return t


@dataclass(frozen=True)
class RobinBC:
    """Mixed condition u_weight*u + ux_weight*u_x = data(t) at one endpoint.

    data may be a callable of t, the SIGMA_W marker (value sigma*W(t)), or the
    PERIODIC marker (no enforced row; the stencil closure wraps around).
    Degenerate weights are reported by validate(), not rejected here.
    """

    u_weight: float
    ux_weight: float
    side: str
    data: BCData

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")

    @property
    def is_periodic(self) -> bool:
        return isinstance(self.data, str) and self.data == PERIODIC

    @property
    def is_stochastic(self) -> bool:
        return isinstance(self.data, str) and self.data == SIGMA_W


@dataclass(frozen=True)
class ProblemSpec:
    """One experiment: u_t = -nonlinear u u_x - kappa u_xx - eta u_xxx - nu u_xxxx + sigma(x) dW/dt."""

    name: str
    kappa: float
    eta: float
    nu: float
    sigma: Callable[[np.ndarray], np.ndarray]
    sigma_const: float | None
    f: Callable[[np.ndarray], np.ndarray]
    bcs: tuple[RobinBC, RobinBC, RobinBC, RobinBC]
    grid: GridSpec
    field_kind: str = "real"
    nonlinear: bool = True
    wavenumber: int | None = None
    initial_amplitude: complex | None = None

    def sigma_values(self, x: np.ndarray) -> np.ndarray:
        if self.sigma_const is not None:
            return np.full_like(np.asarray(x, dtype=float), self.sigma_const)
        return np.asarray(self.sigma(x))


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str


BUILTIN_NAMES = ("linear_test", "tp1", "tp2", "tp3", "tp4")

# Warn above this explicit-step ratio nu*dt/dx^4; the march itself still runs
# and relies on the divergence guard.
STABILITY_RATIO = 0.3


def _f_tp1(x):
    x = np.asarray(x, dtype=float)
    return np.cos(np.pi * x / 20.0) / (3.5 + np.sin(np.pi * x / 20.0))


def _f_tp2(x):
    x = np.asarray(x, dtype=float)
    return (np.sin(np.pi * x / 20.0) - np.sin(np.pi * x / 10.0)) / (
        7.5 - np.cos(np.pi * x / 20.0) + 0.5 * np.cos(np.pi * x / 10.0)
    )


def _periodic_pair(side: str) -> tuple[RobinBC, RobinBC]:
    return (
        RobinBC(1.0, 0.0, side, PERIODIC),
        RobinBC(0.0, 1.0, side, PERIODIC),
    )


def builtin_problem(name: str) -> ProblemSpec:
    """The canonical experiment configurations, by name.

    linear_test uses the dispersion-free single-mode setup on [0, 2pi] with a
    complex exponential forcing amplitude; tp1..tp4 are the nonlinear runs on
    20-unit domains with unit-amplitude Brownian Dirichlet data at both
    endpoints and periodic stencil closure.
    """
    if name == "linear_test":
        k = 1
        # 50 cells keeps the explicit fourth-derivative step ratio inside the
        # corrector's stability interval at dt = 0.005 (see stepping module).
        grid = GridSpec(a=0.0, b=2.0 * math.pi, dx=2.0 * math.pi / 50.0, T=3.0, dt=0.005)
        bcs = _periodic_pair("left") + _periodic_pair("right")
        return ProblemSpec(
            name=name,
            kappa=0.002,
            eta=0.002,
            nu=0.005,
            sigma=lambda x: np.exp(1j * k * np.asarray(x, dtype=float)),
            sigma_const=None,
            f=lambda x: np.exp(1j * k * np.asarray(x, dtype=float)),
            bcs=bcs,
            grid=grid,
            field_kind="complex",
            nonlinear=False,
            wavenumber=k,
            initial_amplitude=1.0 + 0.0j,
        )

    if name in ("tp1", "tp3"):
        grid = GridSpec(a=-10.0, b=10.0, dx=0.2, T=3.0, dt=0.005)
        f = _f_tp1
    elif name in ("tp2", "tp4"):
        grid = GridSpec(a=0.0, b=20.0, dx=0.2, T=3.0, dt=0.005)
        f = _f_tp2
    else:
        raise ValueError(f"unknown builtin problem {name!r}; choose from {BUILTIN_NAMES}")

    bcs = (
        RobinBC(1.0, 0.0, "left", SIGMA_W),
        RobinBC(1.0, 0.0, "right", SIGMA_W),
        RobinBC(1.0, 0.0, "left", PERIODIC),
        RobinBC(1.0, 0.0, "right", PERIODIC),
    )
    return ProblemSpec(
        name=name,
        kappa=0.1,
        eta=0.05 if name in ("tp3", "tp4") else 0.0,
        nu=0.02,
        sigma=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        sigma_const=1.0,
        f=f,
        bcs=bcs,
        grid=grid,
        field_kind="real",
        nonlinear=True,
    )


def validate(spec: ProblemSpec, oracle: str | None = None) -> list[Diagnostic]:
    """Structured diagnostics; an empty list (or warnings only) means runnable."""
    out: list[Diagnostic] = []

    def err(msg):
        out.append(Diagnostic("error", msg))

    try:
        K = spec.grid.K
    except ValueError as e:
        err(str(e))
        K = None
    try:
        spec.grid.N
    except ValueError as e:
        err(str(e))
    if spec.grid.b <= spec.grid.a:
        err("domain must have b > a")
    if spec.grid.dx <= 0 or spec.grid.dt <= 0:
        err("grid steps must be positive")
    if K is not None and K < 3:
        err("grid must have at least 3 nodes")

    if spec.nu <= 0:
        err("dissipation coefficient must be positive")

    if spec.field_kind not in ("real", "complex"):
        err(f"unknown field kind {spec.field_kind!r}")

    if len(spec.bcs) != 4:
        err(f"exactly four boundary conditions required, got {len(spec.bcs)}")
    else:
        for side in ("left", "right"):
            n = sum(1 for bc in spec.bcs if bc.side == side)
            if n != 2:
                err(f"exactly two boundary conditions per side required, {side} has {n}")
        for bc in spec.bcs:
            if not bc.is_periodic and bc.u_weight == 0.0 and bc.ux_weight == 0.0:
                err(f"degenerate boundary weights (0, 0) on the {bc.side} side")
        for side in ("left", "right"):
            enforced = [bc for bc in spec.bcs if bc.side == side and not bc.is_periodic]
            if len(enforced) > 1:
                err(f"at most one enforced (non-periodic) condition per side, {side} has {len(enforced)}")

    if oracle in ("moving-frame", "moving_frame"):
        if spec.sigma_const is None:
            err("moving-frame oracle requires a constant forcing amplitude sigma")
        if spec.field_kind != "real":
            err("moving-frame oracle requires a real field")
        for bc in spec.bcs:
            if not bc.is_periodic and not (bc.is_stochastic and bc.ux_weight == 0.0):
                err("moving-frame oracle requires pure Dirichlet sigma*W boundary data")
    if oracle == "analytic" and spec.wavenumber is None:
        err("analytic oracle requires a single-mode problem with a wavenumber")

    try:
        ratio = spec.nu * spec.grid.dt / spec.grid.dx**4
        if ratio > STABILITY_RATIO:
            out.append(
                Diagnostic(
                    "warning",
                    f"explicit step ratio nu*dt/dx^4 = {ratio:.3g} exceeds "
                    f"{STABILITY_RATIO}; the march is likely unstable",
                )
            )
    except (ZeroDivisionError, ValueError):
        pass

    return out


def violations(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


# -- config files -------------------------------------------------------------

_EXPR_NAMES = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "log": np.log,
    "abs": np.abs,
    "pi": math.pi,
    "e": math.e,
}


def expression_function(expr: str, var: str) -> Callable:
    """Compile a config expression of one variable over a numpy namespace."""
    code = compile(expr, "<config>", "eval")
    names = set(code.co_names) - set(_EXPR_NAMES) - {var}
    if names:
        raise ValueError(f"unknown names in expression {expr!r}: {sorted(names)}")

    def fn(v):
        return eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, var: v})

    return fn


def load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _bc_from_key(value, side: str) -> RobinBC:
    if value == PERIODIC:
        return RobinBC(1.0, 0.0, side, PERIODIC)
    if value in (SIGMA_W, "sigma_w"):
        return RobinBC(1.0, 0.0, side, SIGMA_W)
    return RobinBC(1.0, 0.0, side, expression_function(str(value), "t"))


def spec_from_mapping(cfg: dict) -> ProblemSpec:
    """Build a ProblemSpec from a flat config mapping.

    A `problem` key names a builtin used as the base; any other recognized key
    overrides that field. Without a base, kappa/eta/nu, the grid and `f` are
    required. See the README for the full key list.
    """
    base = builtin_problem(cfg["problem"]) if "problem" in cfg else None

    def pick(key, fallback):
        return cfg[key] if key in cfg else fallback

    if base is None and not {"kappa", "nu", "a", "b", "dx", "T", "dt", "f"} <= set(cfg):
        missing = {"kappa", "nu", "a", "b", "dx", "T", "dt", "f"} - set(cfg)
        raise ValueError(f"config without a builtin base is missing keys: {sorted(missing)}")

    grid = GridSpec(
        a=float(pick("a", base.grid.a if base else None)),
        b=float(pick("b", base.grid.b if base else None)),
        dx=float(pick("dx", base.grid.dx if base else None)),
        T=float(pick("T", base.grid.T if base else None)),
        dt=float(pick("dt", base.grid.dt if base else None)),
    )

    if "f" in cfg:
        f = expression_function(str(cfg["f"]), "x")
    else:
        f = base.f

    if "sigma" in cfg:
        sv = cfg["sigma"]
        if isinstance(sv, (int, float)):
            sigma_const = float(sv)
            sigma = lambda x: np.full_like(np.asarray(x, dtype=float), sigma_const)
        else:
            sigma_const = None
            sigma = expression_function(str(sv), "x")
    else:
        sigma, sigma_const = (base.sigma, base.sigma_const) if base else (None, None)
        if sigma is None:
            sigma_const = 1.0
            sigma = lambda x: np.ones_like(np.asarray(x, dtype=float))

    if "bc_left" in cfg or "bc_right" in cfg or base is None:
        bcs = (
            _bc_from_key(pick("bc_left", SIGMA_W), "left"),
            _bc_from_key(pick("bc_right", SIGMA_W), "right"),
            RobinBC(1.0, 0.0, "left", PERIODIC),
            RobinBC(1.0, 0.0, "right", PERIODIC),
        )
    else:
        bcs = base.bcs

    return ProblemSpec(
        name=str(pick("name", cfg.get("problem", "custom"))),
        kappa=float(pick("kappa", base.kappa if base else None)),
        eta=float(pick("eta", base.eta if base else 0.0)),
        nu=float(pick("nu", base.nu if base else None)),
        sigma=sigma,
        sigma_const=sigma_const,
        f=f,
        bcs=bcs,
        grid=grid,
        field_kind=str(pick("field", base.field_kind if base else "real")),
        nonlinear=bool(pick("nonlinear", base.nonlinear if base else True)),
        wavenumber=base.wavenumber if base else None,
        initial_amplitude=base.initial_amplitude if base else None,
    )


def with_grid_overrides(spec: ProblemSpec, dt: float | None = None, dx: float | None = None) -> ProblemSpec:
    grid = spec.grid
    if dt is not None:
        grid = replace(grid, dt=float(dt))
    if dx is not None:
        grid = replace(grid, dx=float(dx))
    return replace(spec, grid=grid)
