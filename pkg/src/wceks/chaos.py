"""Multi-index bookkeeping, normalized Hermite/Wick polynomials, and the
coefficients of the chaos product expansion.

All quantities here are exact combinatorial objects evaluated in float64;
factorials and binomials stay below 2**53 for the supported orders, so no
big-integer arithmetic is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Largest Hermite order with exact float64 factorials (12! = 479001600).
MAX_HERMITE_ORDER = 12


class HermiteOrderError(ValueError):
    """Requested Hermite order above the supported maximum."""


def hermite_normalized(order: int, point):
    """Probabilists' Hermite polynomial of the given order, scaled by 1/sqrt(order!).

    With this normalization E[H_m(Z) H_n(Z)] = delta_mn for Z standard normal.
    Uses the recurrence He_{n+1}(x) = x He_n(x) - n He_{n-1}(x).

    `point` may be a scalar or an ndarray; the return type matches.
    """
    if order < 0 or order > MAX_HERMITE_ORDER:
        raise HermiteOrderError(
            f"Hermite order {order} outside supported range 0..{MAX_HERMITE_ORDER}"
        )
    x = np.asarray(point, dtype=float)
    prev = np.ones_like(x)
    if order == 0:
        out = prev
    else:
        cur = x.copy()
        for n in range(1, order):
            prev, cur = cur, x * cur - n * prev
        out = cur / math.sqrt(math.factorial(order))
    if np.ndim(point) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MultiIndex:
    """Sparse vector of positive integer orders over 1-based Gaussian modes.

    Zero orders are never stored, so the empty tuple is the unique
    representation of the zero index and equality is structural.
    """

    orders: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        pairs = tuple(sorted((int(m), int(o)) for m, o in self.orders if o))
        for m, o in pairs:
            if m < 1 or o < 1:
                raise ValueError(f"invalid (mode, order) pair ({m}, {o})")
        if len({m for m, _ in pairs}) != len(pairs):
            raise ValueError("duplicate mode in multi-index")
        object.__setattr__(self, "orders", pairs)

    @classmethod
    def zero(cls) -> "MultiIndex":
        return cls()

    @classmethod
    def single(cls, mode: int, order: int = 1) -> "MultiIndex":
        return cls(((mode, order),))

    @classmethod
    def from_dict(cls, orders: dict[int, int]) -> "MultiIndex":
        return cls(tuple(orders.items()))

    @property
    def total_order(self) -> int:
        return sum(o for _, o in self.orders)

    @property
    def is_zero(self) -> bool:
        return not self.orders

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.orders)

    def order_of(self, mode: int) -> int:
        for m, o in self.orders:
            if m == mode:
                return o
        return 0

    def as_dict(self) -> dict[int, int]:
        return dict(self.orders)

    def leq(self, other: "MultiIndex") -> bool:
        """Componentwise order comparison (partial order on the index set)."""
        return all(o <= other.order_of(m) for m, o in self.orders)

    def sort_key(self) -> tuple:
        return (self.total_order, self.orders)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        return "+".join(
            f"d{m}" if o == 1 else f"{o}*d{m}" for m, o in self.orders
        )


def wick_eval(index: MultiIndex, xi) -> float:
    """Evaluate the Wick polynomial T_index at the Gaussian sample xi.

    T is the product of normalized Hermite factors, one per stored mode; the
    empty index gives the constant 1. xi supplies mode i at position i-1.
    """
    xi = np.asarray(xi, dtype=float)
    out = 1.0
    for mode, order in index.orders:
        if mode > xi.size:
            raise IndexError(
                f"mode {mode} missing from sample of length {xi.size}"
            )
        out *= hermite_normalized(order, float(xi[mode - 1]))
    return out


def product_coeff(theta: MultiIndex, beta: MultiIndex, p: MultiIndex) -> float:
    """Square-rooted triple-binomial coefficient of the chaos product formula.

    Componentwise over modes: sqrt(C(theta,beta) * C(theta-beta+p,p) * C(beta+p,p))
    with C(n,k) the binomial coefficient. Returns 0 when beta exceeds theta in
    any mode, matching the convention C(n,k) = 0 for k > n.
    """
    acc = 1
    for mode in set(theta.modes) | set(beta.modes) | set(p.modes):
        t = theta.order_of(mode)
        b = beta.order_of(mode)
        q = p.order_of(mode)
        if b > t:
            return 0.0
        acc *= math.comb(t, b) * math.comb(t - b + q, q) * math.comb(b + q, q)
    return math.sqrt(acc)


@dataclass(frozen=True)
class TruncationScheme:
    """Diagonal truncation of the multi-index set.

    Enumerates the zero index, one first-order index per mode up to
    gaussian_count, then one single-mode index per remaining mode up to
    total_count at order min(mode, higher_order_cap). The default cap of 1
    keeps the truncation purely Gaussian.

    gaussian_count = total_count = 0 is the degenerate deterministic scheme
    containing only the zero index.
    """

    gaussian_count: int
    total_count: int
    higher_order_cap: int = 1

    def __post_init__(self):
        if not 0 <= self.gaussian_count <= self.total_count:
            raise ValueError(
                f"need 0 <= gaussian_count <= total_count, got "
                f"({self.gaussian_count}, {self.total_count})"
            )
        if not 1 <= self.higher_order_cap <= MAX_HERMITE_ORDER:
            raise ValueError(
                f"higher_order_cap must lie in 1..{MAX_HERMITE_ORDER}"
            )

    @property
    def size(self) -> int:
        return 1 + self.total_count

    def enumerate(self) -> tuple[MultiIndex, ...]:
        out = [MultiIndex.zero()]
        out += [MultiIndex.single(i) for i in range(1, self.gaussian_count + 1)]
        out += [
            MultiIndex.single(i, min(i, self.higher_order_cap))
            for i in range(self.gaussian_count + 1, self.total_count + 1)
        ]
        return tuple(out)

    def forcing_mode(self, alpha: MultiIndex) -> int | None:
        """Mode i when alpha is exactly the first-order index of mode i, else None."""
        if len(alpha.orders) == 1 and alpha.orders[0][1] == 1:
            return alpha.orders[0][0]
        return None


def _pair_decomposition(alpha: MultiIndex, left: MultiIndex, right: MultiIndex):
    """Solve left = alpha - beta + p, right = beta + p for (beta, p), or None."""
    av, lv, rv = alpha.as_dict(), left.as_dict(), right.as_dict()
    p: dict[int, int] = {}
    beta: dict[int, int] = {}
    for m in set(av) | set(lv) | set(rv):
        s = lv.get(m, 0) + rv.get(m, 0) - av.get(m, 0)
        if s < 0 or s % 2:
            return None
        pm = s // 2
        bm = rv.get(m, 0) - pm
        if bm < 0 or bm > av.get(m, 0):
            return None
        if pm:
            p[m] = pm
        if bm:
            beta[m] = bm
    return MultiIndex.from_dict(beta), MultiIndex.from_dict(p)


@lru_cache(maxsize=8)
def _conv_table(scheme: TruncationScheme):
    """Per-index convolution triples, as row-index arrays into scheme.enumerate().

    Built once per scheme; the (beta, p) double sum of the product expansion is
    re-parameterized by the (left, right) member pair it produces, which is a
    bijection, so each admissible pair appears exactly once.
    """
    members = scheme.enumerate()
    pos = {a: i for i, a in enumerate(members)}
    table = {}
    for alpha in members:
        triples = []
        for left in members:
            for right in members:
                dec = _pair_decomposition(alpha, left, right)
                if dec is None:
                    continue
                beta, p = dec
                c = product_coeff(alpha, beta, p)
                if c > 0.0:
                    triples.append((left, right, c))
        triples.sort(key=lambda t: (t[0].sort_key(), t[1].sort_key()))
        table[alpha] = (
            np.array([pos[l] for l, _, _ in triples], dtype=np.intp),
            np.array([pos[r] for _, r, _ in triples], dtype=np.intp),
            np.array([c for _, _, c in triples], dtype=float),
        )
    return table


def convolution_terms(
    alpha: MultiIndex, scheme: TruncationScheme
) -> list[tuple[MultiIndex, MultiIndex, float]]:
    """All (left, right, coeff) triples of the truncated bilinear product sum.

    The assembled projection of a product u*v onto index alpha is
    sum coeff * u_left * v_right over the returned triples, with both members
    inside the truncation. Deterministically sorted by (left, right).
    """
    table = _conv_table(scheme)
    if alpha not in table:
        raise ValueError(f"index {alpha} outside the truncation")
    members = scheme.enumerate()
    lidx, ridx, coef = table[alpha]
    return [
        (members[l], members[r], float(c))
        for l, r, c in zip(lidx, ridx, coef)
    ]
