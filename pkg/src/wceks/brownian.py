"""Spectral synthesis of scalar Brownian paths over an orthonormal cosine
time basis, with closed-form pathwise integrals.

The path and every derived quantity (time integral, grid increments) are
exact functionals of the truncated series, so a solver driven by the mode
amplitudes and a reference solution driven by the reconstructed path see the
same realization.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimeBasis:
    """Orthonormal basis of L2[0, T]: m_1 = 1/sqrt(T), m_i = sqrt(2/T) cos((i-1) pi t / T)."""

    horizon: float
    count: int

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.count < 1:
            raise ValueError("count must be at least 1")

    def _check_time(self, t):
        tt = np.asarray(t, dtype=float)
        tol = 1e-9 * max(1.0, self.horizon)
        if np.any(tt < -tol) or np.any(tt > self.horizon + tol):
            raise ValueError(f"time outside [0, {self.horizon}]")
        return tt

    def values(self, t: float) -> np.ndarray:
        """All m_i(t), i = 1..count, as a vector."""
        t = float(self._check_time(t))
        T = self.horizon
        out = np.empty(self.count)
        out[0] = 1.0 / math.sqrt(T)
        if self.count > 1:
            i = np.arange(2, self.count + 1)
            out[1:] = math.sqrt(2.0 / T) * np.cos((i - 1) * math.pi * t / T)
        return out

    def value(self, i: int, t: float) -> float:
        if not 1 <= i <= self.count:
            raise ValueError(f"mode {i} outside 1..{self.count}")
        return float(self.values(t)[i - 1])

    def integrals(self, t: float) -> np.ndarray:
        """All int_0^t m_i(s) ds in closed form."""
        t = float(self._check_time(t))
        T = self.horizon
        out = np.empty(self.count)
        out[0] = t / math.sqrt(T)
        if self.count > 1:
            i = np.arange(2, self.count + 1)
            out[1:] = math.sqrt(2.0 * T) / ((i - 1) * math.pi) * np.sin(
                (i - 1) * math.pi * t / T
            )
        return out

    def integral(self, i: int, t: float) -> float:
        if not 1 <= i <= self.count:
            raise ValueError(f"mode {i} outside 1..{self.count}")
        return float(self.integrals(t)[i - 1])


@dataclass(frozen=True)
class BrownianDriver:
    """One truncated Brownian realization: basis plus i.i.d. standard normal amplitudes."""

    basis: TimeBasis
    xi: np.ndarray
    seed: int

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        if xi.shape != (self.basis.count,):
            raise ValueError(
                f"xi must have exactly {self.basis.count} entries, got {xi.shape}"
            )
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)


def sample_driver(seed: int, basis: TimeBasis) -> BrownianDriver:
    """Draw the mode amplitudes from numpy's default generator (PCG64) for the seed.

    Identical (seed, basis) pairs produce bitwise-identical drivers; shorter
    bases are prefixes of longer ones for the same seed.
    """
    rng = np.random.default_rng(seed)
    return BrownianDriver(basis=basis, xi=rng.standard_normal(basis.count), seed=seed)


def brownian_at(driver: BrownianDriver, t):
    """Truncated path value W(t) = xi_1 t/sqrt(T) + sqrt(2T)/pi sum xi_i sin((i-1) pi t/T)/(i-1).

    `t` may be a scalar or an ndarray in [0, T]; the return type matches.
    """
    tt = driver.basis._check_time(t)
    T = driver.basis.horizon
    xi = driver.xi
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    out = xi[0] * tt / math.sqrt(T)
    if xi.size > 1:
        k = np.arange(1, xi.size)
        out = out + (math.sqrt(2.0 * T) / math.pi) * (
            np.sin(np.multiply.outer(tt, k) * (math.pi / T)) @ (xi[1:] / k)
        )
    return float(out[0]) if scalar else out


def integrated_brownian(driver: BrownianDriver, t):
    """Exact termwise antiderivative int_0^t W(s) ds of the truncated path."""
    tt = driver.basis._check_time(t)
    T = driver.basis.horizon
    xi = driver.xi
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    out = xi[0] * tt**2 / (2.0 * math.sqrt(T))
    if xi.size > 1:
        k = np.arange(1, xi.size)
        out = out + (math.sqrt(2.0 * T) * T / math.pi**2) * (
            (1.0 - np.cos(np.multiply.outer(tt, k) * (math.pi / T))) @ (xi[1:] / k**2)
        )
    return float(out[0]) if scalar else out


def increments(driver: BrownianDriver, dt: float) -> np.ndarray:
    """Differences of the reconstructed path over the uniform grid of step dt.

    Entry n is W(t_{n+1}) - W(t_n); the increments telescope to W(T) exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    T = driver.basis.horizon
    n_float = T / dt
    n = round(n_float)
    if n < 1 or abs(n_float - n) > 1e-9 * max(1.0, n_float):
        raise ValueError(f"dt={dt} does not divide the horizon {T}")
    times = dt * np.arange(n + 1)
    times[-1] = min(times[-1], T)
    return np.diff(brownian_at(driver, times))


def driver_to_json(driver: BrownianDriver) -> str:
    """Serialize a driver to the replay record {seed, T, I, xi[]}."""
    return json.dumps(
        {
            "seed": driver.seed,
            "T": driver.basis.horizon,
            "I": driver.basis.count,
            "xi": [float(v) for v in driver.xi],
        },
        sort_keys=True,
    )


def driver_from_json(text: str) -> BrownianDriver:
    rec = json.loads(text)
    basis = TimeBasis(horizon=float(rec["T"]), count=int(rec["I"]))
    return BrownianDriver(basis=basis, xi=np.array(rec["xi"], dtype=float), seed=int(rec["seed"]))
