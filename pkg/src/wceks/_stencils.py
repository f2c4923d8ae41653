"""Centered finite-difference stencils shared by the march and the propagator
assembly. Public API lives in the stepping module."""
from __future__ import annotations

import numpy as np


def _ghosts(v: np.ndarray, policy: str):
    # Grid convention: node 0 and node n-1 duplicate under periodicity, so the
    # wraparound neighbors are v[n-2] on the left and v[1] on the right.
    if policy == "periodic":
        return v[..., -2], v[..., 1]
    if policy == "reflect":
        return v[..., 1], v[..., -2]
    raise ValueError(f"unknown ghost policy {policy!r}")


def _require_width(v: np.ndarray):
    if v.shape[-1] < 3:
        raise ValueError(f"stencil needs at least 3 nodes, got {v.shape[-1]}")


def diff1(v, dx: float, policy: str = "periodic") -> np.ndarray:
    """Centered first difference (v[k+1] - v[k-1]) / (2 dx), ghosts per policy."""
    v = np.asarray(v)
    _require_width(v)
    gl, gr = _ghosts(v, policy)
    out = np.empty_like(v)
    out[..., 1:-1] = v[..., 2:] - v[..., :-2]
    out[..., 0] = v[..., 1] - gl
    out[..., -1] = gr - v[..., -2]
    out /= 2.0 * dx
    return out


def diff2(v, dx: float, policy: str = "periodic") -> np.ndarray:
    """Centered second difference (v[k+1] - 2 v[k] + v[k-1]) / dx^2."""
    v = np.asarray(v)
    _require_width(v)
    gl, gr = _ghosts(v, policy)
    out = np.empty_like(v)
    out[..., 1:-1] = v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]
    out[..., 0] = v[..., 1] - 2.0 * v[..., 0] + gl
    out[..., -1] = gr - 2.0 * v[..., -1] + v[..., -2]
    out /= dx * dx
    return out


def diff3(v, dx: float, policy: str = "periodic") -> np.ndarray:
    """Third derivative as the first difference of the second difference."""
    return diff1(diff2(v, dx, policy), dx, policy)


def diff4(v, dx: float, policy: str = "periodic") -> np.ndarray:
    """Fourth derivative as the second difference applied twice."""
    return diff2(diff2(v, dx, policy), dx, policy)
