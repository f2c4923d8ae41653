"""Realization reconstruction, chaos moments, and the error and convergence
diagnostics used to compare solver output against reference trajectories."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .brownian import TimeBasis, sample_driver
from .chaos import MultiIndex, wick_eval
from .oracles import LangevinParams, carrier, langevin_semianalytic, langevin_wce
from .propagator import ChaosField


class Trajectory(NamedTuple):
    """Solution values on a shared space-time grid: values[n, k] = u(x_k, t_n)."""

    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class ErrorSeries:
    """Per-time absolute and relative differences between two trajectories.

    abs_diff uses the 1/K prefactor over the K+1 nodes. rel_flagged marks
    times where the relative difference is undefined (zero denominator);
    rel_diff is NaN there. slope_fit is the through-origin least-squares
    slope of abs_diff against t over the fit window, slope_r2 the fraction of
    variance it explains there.
    """

    times: np.ndarray
    abs_diff: np.ndarray
    rel_diff: np.ndarray
    rel_flagged: np.ndarray
    slope_fit: float
    slope_r2: float

    def summary(self) -> dict:
        finite = self.rel_diff[~self.rel_flagged]
        return {
            "max_rel": float(np.max(finite)) if finite.size else None,
            "slope": self.slope_fit,
            "flagged": bool(self.rel_flagged.any()),
        }


def reconstruct(field: ChaosField, xi) -> np.ndarray:
    """Pointwise realization sum_alpha u_alpha(x) T_alpha(xi)."""
    weights = np.array([wick_eval(alpha, xi) for alpha in field.indices])
    return weights @ field.data


def moments(field: ChaosField) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance arrays: the zero-index row, and the sum of squared
    moduli of every other row."""
    zero_row = field.indices.index(MultiIndex.zero())
    mean = field.data[zero_row].copy()
    rest = np.delete(field.data, zero_row, axis=0)
    variance = np.sum(np.abs(rest) ** 2, axis=0)
    return mean, variance


def error_series(
    numeric: Trajectory, reference: Trajectory, fit_start_fraction: float = 0.1
) -> ErrorSeries:
    """Absolute and relative differences, with a linear growth fit.

    Complex trajectories are compared through the modulus. The fit window is
    t >= fit_start_fraction * horizon, skipping the early transient.
    """
    tn, tr = np.asarray(numeric.times), np.asarray(reference.times)
    if tn.shape != tr.shape or not np.allclose(tn, tr, rtol=0.0, atol=1e-12):
        raise ValueError("trajectories do not share time levels")
    un, ur = np.asarray(numeric.values), np.asarray(reference.values)
    if un.shape != ur.shape:
        raise ValueError(f"trajectory shapes differ: {un.shape} vs {ur.shape}")
    if un.shape[0] != tn.size:
        raise ValueError("values and times are inconsistent")

    K = un.shape[1] - 1
    diff = np.sum(np.abs(un - ur), axis=1)
    abs_diff = diff / K
    denom = np.sum(np.abs(ur), axis=1)
    flagged = denom == 0.0
    rel_diff = np.where(flagged, np.nan, diff / np.where(flagged, 1.0, denom))

    window = tn >= fit_start_fraction * tn[-1]
    tw, aw = tn[window], abs_diff[window]
    tt = float(np.dot(tw, tw))
    slope = float(np.dot(tw, aw) / tt) if tt > 0.0 else 0.0
    ss_res = float(np.sum((aw - slope * tw) ** 2))
    ss_tot = float(np.sum((aw - np.mean(aw)) ** 2)) if aw.size else 0.0
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else (
        0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    )
    return ErrorSeries(
        times=tn,
        abs_diff=abs_diff,
        rel_diff=rel_diff,
        rel_flagged=flagged,
        slope_fit=slope,
        slope_r2=r2,
    )


def truncation_decay(
    params: LangevinParams,
    x: np.ndarray,
    seed: int,
    orders: Sequence[int],
    dt: float,
    horizon: float,
    reference_count: int | None = None,
) -> np.ndarray:
    """Terminal absolute error of the truncated chaos reconstruction per order.

    One realization is fixed by (seed, reference_count); each entry is the
    terminal abs_diff metric between the single-mode chaos solution using the
    first I modes and the semianalytic amplitude driven by the full reference
    path. With I equal to the reference count, only time-integration error
    remains.
    """
    if len(orders) == 0:
        raise ValueError("orders must be non-empty")
    i_ref = reference_count if reference_count is not None else max(orders)
    driver = sample_driver(seed, TimeBasis(horizon, i_ref))
    v_ref = langevin_semianalytic(params, driver, dt)[-1]
    wave = np.abs(carrier(params, x))
    K = len(x) - 1
    out = []
    for count in orders:
        V = langevin_wce(params, TimeBasis(horizon, count), dt)
        v_w = V[0, -1] + V[1:, -1] @ driver.xi[:count]
        out.append(float(np.sum(np.abs(v_w - v_ref) * wave) / K))
    return np.array(out)
