import math
from dataclasses import replace

import numpy as np
import pytest

from wceks import (
    DivergenceError,
    GridSpec,
    PERIODIC,
    TimeBasis,
    TruncationScheme,
    builtin_problem,
    initial_field,
    integrate,
    march,
)
from wceks.problems import RobinBC
from wceks.propagator import boundary_data
from wceks.stepping import diff1, diff2, diff3, diff4, step_stream


def test_diff1():
    dx = 0.1
    assert np.all(diff1(np.full(9, 4.2), dx) == 0.0)
    x = dx * np.arange(9)
    d = diff1(x, dx)
    np.testing.assert_allclose(d[1:-1], 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        diff1(np.ones(2), dx)


def test_diff1_periodic_symbol():
    K = 32
    dx = 2.0 * math.pi / K
    x = dx * np.arange(K + 1)
    d = diff1(np.sin(x), dx)
    np.testing.assert_allclose(d, np.cos(x) * math.sin(dx) / dx, atol=1e-12)


def test_diff2():
    dx = 0.25
    x = dx * np.arange(11)
    assert np.all(diff2(x, dx)[1:-1] == 0.0)
    d = diff2(x * x, dx)
    np.testing.assert_allclose(d[1:-1], 2.0, atol=1e-10)
    assert np.all(diff2(np.full(5, 1.3), dx) == 0.0)


def test_diff3_diff4():
    dx = 0.2
    x = dx * np.arange(21)
    d3 = diff3(x**3, dx)
    np.testing.assert_allclose(d3[2:-2], 6.0, atol=1e-9)
    d4 = diff4(x * x, dx)
    np.testing.assert_allclose(d4[2:-2], 0.0, atol=1e-9)

    K = 40
    dxp = 2.0 * math.pi / K
    xp = dxp * np.arange(K + 1)
    s = np.sin(xp)
    symbol = (2.0 - 2.0 * math.cos(dxp)) ** 2 / dxp**4
    np.testing.assert_allclose(diff4(s, dxp), s * symbol, atol=1e-10)


def test_ghost_policies():
    v = np.array([1.0, 2.0, 4.0, 7.0, 11.0])
    dx = 1.0
    per = diff1(v, dx, "periodic")
    assert per[0] == (v[1] - v[-2]) / 2.0
    assert per[-1] == (v[1] - v[-2]) / 2.0
    ref = diff1(v, dx, "reflect")
    assert ref[0] == 0.0 and ref[-1] == 0.0
    with pytest.raises(ValueError):
        diff1(v, dx, "clamped")


def test_stencils_vectorize_over_rows():
    rng = np.random.default_rng(2)
    V = rng.normal(size=(4, 12))
    stacked = diff2(V, 0.3)
    for row in range(4):
        np.testing.assert_array_equal(stacked[row], diff2(V[row], 0.3))


def test_integrate_constant_rhs():
    y = integrate(lambda y, t: np.ones_like(y), np.zeros(1), 0.01, 250)
    assert float(y[0]) == pytest.approx(2.5, abs=1e-13)


def test_integrate_zero_rhs():
    y0 = np.array([1.5, -2.0])
    y = integrate(lambda y, t: np.zeros_like(y), y0, 0.05, 40)
    np.testing.assert_array_equal(y, y0)


def test_integrate_exponential():
    y = integrate(lambda y, t: -y, np.ones(1), 0.01, 100)
    assert abs(float(y[0]) - math.exp(-1.0)) < 1e-5


def test_temporal_order():
    errs = []
    dts = (0.02, 0.01, 0.005, 0.0025)
    for dt in dts:
        y = integrate(lambda y, t: -y, np.ones(1), dt, round(1.0 / dt))
        errs.append(abs(float(y[0]) - math.exp(-1.0)))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert 2.5 <= slope <= 3.5


def test_step_stream_yields_all_levels():
    seen = list(step_stream(lambda y, t: -y, np.ones(1), 0.1, 5))
    assert [n for n, _, _ in seen] == list(range(6))
    assert seen[0][1] == 0.0 and seen[-1][1] == pytest.approx(0.5)


def test_step_stream_argument_checks():
    with pytest.raises(ValueError):
        list(step_stream(lambda y, t: y, np.ones(1), 0.1, 0))
    with pytest.raises(ValueError):
        list(step_stream(lambda y, t: y, np.ones(1), -0.1, 3))


def test_march_snapshot_selection():
    spec = builtin_problem("tp1")
    scheme = TruncationScheme(2, 2)
    basis = TimeBasis(spec.grid.T, 2)
    snaps = march(initial_field(spec, scheme), spec, scheme, basis, steps=10, snapshot_every=5)
    assert [s.time for s in snaps] == [0.0, pytest.approx(0.025), pytest.approx(0.05)]
    assert snaps[-1].indices == scheme.enumerate()


def test_march_boundary_enforcement_exact():
    spec = builtin_problem("tp1")
    scheme = TruncationScheme(6, 6)
    basis = TimeBasis(spec.grid.T, 6)
    snaps = march(initial_field(spec, scheme), spec, scheme, basis, steps=40, snapshot_every=8)
    for field in snaps[1:]:
        entries = boundary_data(spec, scheme, basis, field.time)
        for bc, values in entries:
            col = 0 if bc.side == "left" else -1
            np.testing.assert_array_equal(field.data[:, col], values)


def test_march_mean_conservation_periodic():
    # fully periodic deterministic equation: the discrete mean over the
    # K unique nodes telescopes for every term
    K = 32
    grid = GridSpec(a=0.0, b=2.0 * math.pi, dx=2.0 * math.pi / K, T=1.0, dt=0.005)
    bcs = (
        RobinBC(1.0, 0.0, "left", PERIODIC),
        RobinBC(0.0, 1.0, "left", PERIODIC),
        RobinBC(1.0, 0.0, "right", PERIODIC),
        RobinBC(0.0, 1.0, "right", PERIODIC),
    )
    spec = replace(
        builtin_problem("tp1"), grid=grid, bcs=bcs, sigma_const=0.0,
        f=lambda x: np.sin(np.asarray(x, dtype=float)) + 0.1,
    )
    scheme = TruncationScheme(0, 0)
    basis = TimeBasis(grid.T, 1)
    snaps = march(initial_field(spec, scheme), spec, scheme, basis, steps=grid.N, snapshot_every=grid.N)
    mean0 = snaps[0].data[0][:-1].mean()
    mean1 = snaps[-1].data[0][:-1].mean()
    assert abs(mean1 - mean0) < 1e-8 * grid.T


def test_march_divergence_guard():
    # ratio nu*dt/dx^4 far beyond the stability interval blows up quickly
    spec = replace(builtin_problem("tp1"), grid=GridSpec(-10.0, 10.0, 0.05, 3.0, 0.01))
    scheme = TruncationScheme(1, 1)
    basis = TimeBasis(3.0, 1)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergenceError, match="step"):
            march(initial_field(spec, scheme), spec, scheme, basis, steps=200)


def test_march_preserves_duplicated_endpoint():
    # periodic problems keep the duplicated endpoint nodes equal
    spec = builtin_problem("linear_test")
    scheme = TruncationScheme(4, 4)
    basis = TimeBasis(spec.grid.T, 4)
    snaps = march(initial_field(spec, scheme), spec, scheme, basis, steps=50, snapshot_every=50)
    end = snaps[-1]
    np.testing.assert_allclose(end.data[:, 0], end.data[:, -1], rtol=1e-12)
