"""Quadrature oracles shared by the test modules.

These stay independent of the package's own polynomial evaluation paths:
nodes and weights come straight from numpy's Gaussian quadrature rules, and
expectations are tensorized sums.
"""
import numpy as np

from wceks import MultiIndex, hermite_normalized


def gauss_hermite_prob(n):
    """Nodes and probability weights for expectations under N(0, 1)."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / w.sum()


def wick_on_grid(index: MultiIndex, modes, grids):
    """Evaluate a Wick polynomial on a tensor grid, one array per mode."""
    out = np.ones_like(grids[0])
    for mode, order in index.orders:
        out = out * hermite_normalized(order, grids[modes.index(mode)])
    return out


def expect_wick_product(indices, modes, nodes=24, extra=None):
    """E[prod_j T_{indices[j]}] (times `extra` evaluated on the grid) by
    tensorized Gauss-Hermite quadrature over the given modes."""
    x, w = gauss_hermite_prob(nodes)
    grids = np.meshgrid(*([x] * len(modes)), indexing="ij")
    weight = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * len(modes)), indexing="ij"):
        weight = weight * g
    vals = np.ones_like(grids[0])
    for idx in indices:
        vals = vals * wick_on_grid(idx, modes, grids)
    if extra is not None:
        vals = vals * extra(grids)
    return float(np.sum(weight * vals))
