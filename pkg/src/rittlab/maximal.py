"""Maximal functions over convolution powers and related spatial checks.

All operators here sweep ``s_n = (delta_0 - mu)^{*m} * mu^{*n} * f`` for
``n = 1..N`` by repeated convolution with ``mu`` and reduce the sweep
pointwise: a running maximum of ``n**m |s_n|`` (maximal function), a running
sum of ``n (s_n - s_{n+1})**2`` (square function) or a running supremum of a
difference quotient (Bellow-Calderon check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .lattice import (
    BOUNDED_SLOPE,
    DEFAULT_TRIM,
    LatticeMeasure,
    convolve,
    delta,
    from_coeffs,
    loglog_slope,
)

DEFAULT_SEED = 20240229
DEFAULT_SCHEDULE = tuple(2**j for j in range(5, 13))


class _Field:
    """Dense nonnegative buffer on a growing index window."""

    def __init__(self) -> None:
        self.offset = 0
        self.values = np.zeros(0)

    def _cover(self, lo: int, hi: int) -> None:
        if self.values.size == 0:
            self.offset, self.values = lo, np.zeros(hi - lo + 1)
            return
        cur_hi = self.offset + self.values.size - 1
        left, right = max(0, self.offset - lo), max(0, hi - cur_hi)
        if left or right:
            self.values = np.pad(self.values, (left, right))
            self.offset -= left

    def _slot(self, mu: LatticeMeasure) -> slice:
        self._cover(mu.lo, mu.hi)
        i = mu.lo - self.offset
        return slice(i, i + mu.size)

    def maximum(self, mu: LatticeMeasure, scale: float) -> None:
        sl = self._slot(mu)
        np.maximum(self.values[sl], scale * np.abs(mu.coeffs), out=self.values[sl])

    def add_square(self, lo: int, c: np.ndarray, scale: float) -> None:
        self._cover(lo, lo + c.size - 1)
        i = lo - self.offset
        self.values[i : i + c.size] += scale * c * c

    def snapshot(self) -> tuple[int, np.ndarray]:
        return self.offset, self.values.copy()


def _check_input(f: LatticeMeasure, N: int, m: int) -> None:
    if f.is_zero():
        raise ValueError("zero input function")
    if N < 1:
        raise ValueError("N must be at least 1")
    if m < 0:
        raise ValueError("m must be nonnegative")


def difference_power(mu: LatticeMeasure, m: int) -> LatticeMeasure:
    """``(delta_0 - mu)^{*m}`` with the convention that the zeroth power is ``delta_0``."""
    lo, hi = min(0, mu.lo), max(0, mu.hi)
    one_minus = from_coeffs(lo, delta(0).dense(lo, hi) - mu.dense(lo, hi), mu.tail_bound)
    out = delta(0)
    for _ in range(m):
        out = convolve(out, one_minus)
    return out


def sigma_sweep(
    mu: LatticeMeasure,
    f: LatticeMeasure,
    m: int,
    N: int,
    trim: float = DEFAULT_TRIM,
    max_index: int | None = None,
) -> Iterator[tuple[int, LatticeMeasure]]:
    """Yield ``(n, (delta_0 - mu)^{*m} * mu^{*n} * f)`` for ``n = 1..N`` (unscaled).

    Each step may trim ``trim / N`` of l1 mass; the propagated tail bound of
    every yielded measure covers trimming, truncation and input tails.
    """
    step = trim / N
    s = convolve(convolve(difference_power(mu, m), f), mu, step, max_index=max_index)
    yield 1, s
    for n in range(2, N + 1):
        s = convolve(s, mu, step, max_index=max_index)
        yield n, s


@dataclass(frozen=True)
class MaximalField:
    """``values[k - offset] = max_{1<=n<=N} n**m |s_n(k)|`` on a finite window."""

    offset: int
    values: np.ndarray = field(repr=False)
    N: int
    m: int
    input_norm: float
    error_bound: float

    @property
    def window(self) -> tuple[int, int]:
        return self.offset, self.offset + self.values.size - 1

    def at(self, k: int) -> float:
        i = k - self.offset
        return float(self.values[i]) if 0 <= i < self.values.size else 0.0

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2)))


def _maximal_snapshots(
    mu: LatticeMeasure,
    f: LatticeMeasure,
    m: int,
    Ns: Sequence[int],
    trim: float,
    max_index: int | None,
) -> list[MaximalField]:
    Ns = sorted(set(int(n) for n in Ns))
    _check_input(f, Ns[0], m)
    buf, err, out = _Field(), 0.0, []
    want = iter(Ns)
    nxt = next(want)
    for n, s in sigma_sweep(mu, f, m, Ns[-1], trim, max_index):
        scale = float(n) ** m
        buf.maximum(s, scale)
        err = max(err, scale * s.tail_bound)
        if n == nxt:
            off, vals = buf.snapshot()
            out.append(MaximalField(off, vals, n, m, f.norm1, err))
            nxt = next(want, -1)
    return out


def maximal_function(
    mu: LatticeMeasure,
    f: LatticeMeasure,
    m: int = 0,
    N: int = 1,
    trim: float = DEFAULT_TRIM,
    max_index: int | None = None,
) -> MaximalField:
    """Truncated maximal function ``max_{1<=n<=N} n**m |(delta_0 - mu)^{*m} * mu^{*n} * f|``.

    ``error_bound`` bounds the pointwise error by ``max_n n**m tail(s_n)``.
    """
    return _maximal_snapshots(mu, f, m, [N], trim, max_index)[0]


class WeakTypeConstant(tuple):
    """``(constant, level, index)``; ``index`` counts field values at or above ``level``."""

    __slots__ = ()

    def __new__(cls, constant: float, level: float, index: int) -> WeakTypeConstant:
        return super().__new__(cls, (constant, level, index))

    constant = property(lambda self: self[0])
    level = property(lambda self: self[1])
    index = property(lambda self: self[2])


def weak_type_constant(fld: MaximalField) -> WeakTypeConstant:
    """Best constant in ``lambda #{k : Mf(k) >= lambda} <= C |f|_1`` for this field.

    With values sorted descending, the supremum over ``lambda`` is
    ``max_i i v_i``; a zero field gives ``(0, 0, 0)``.
    """
    v = np.sort(fld.values[fld.values > 0])[::-1]
    if v.size == 0:
        return WeakTypeConstant(0.0, 0.0, 0)
    prod = np.arange(1, v.size + 1) * v
    i = int(np.argmax(prod))
    return WeakTypeConstant(float(prod[i] / fld.input_norm), float(v[i]), i + 1)


def default_batch(seed: int = DEFAULT_SEED) -> list[tuple[str, LatticeMeasure]]:
    """``delta_0``, random signs on widths 2..64, and a two-bump signed function."""
    rng = np.random.default_rng(seed)
    out = [("delta0", delta(0))]
    for j in range(1, 7):
        w = 2**j
        out.append((f"signs w={w}", from_coeffs(0, rng.choice([-1.0, 1.0], size=w))))
    bump = np.zeros(36)
    bump[:4], bump[32:] = 1.0, -1.0
    out.append(("two-bump", from_coeffs(0, bump)))
    return out


@dataclass(frozen=True)
class WeakTypeStudy:
    """Weak-type constants (rows: inputs, columns: horizons) and the l2 maximal ratios."""

    Ns: np.ndarray
    labels: tuple[str, ...]
    constants: np.ndarray = field(repr=False)
    l2_ratios: np.ndarray = field(repr=False)
    error_bounds: np.ndarray = field(repr=False)

    def growth_exponents(self, table: np.ndarray | None = None) -> np.ndarray:
        """Per-input log-log slope in ``N`` over the upper half of the schedule (log scale)."""
        table = self.constants if table is None else table
        sel = self.Ns >= math.sqrt(self.Ns[-1])
        if sel.sum() < 2:
            sel[-2:] = True
        return np.array([loglog_slope(self.Ns[sel], row[sel]) for row in table])

    @property
    def sup(self) -> float:
        return float(self.constants.max())

    @property
    def stabilizes(self) -> bool:
        return bool(np.all(self.growth_exponents() <= BOUNDED_SLOPE))

    @property
    def l2_stabilizes(self) -> bool:
        return bool(np.all(self.growth_exponents(self.l2_ratios) <= BOUNDED_SLOPE))


def weak_type_study(
    mu: LatticeMeasure,
    m: int = 0,
    batch: Sequence[tuple[str, LatticeMeasure]] | None = None,
    Ns: Sequence[int] = DEFAULT_SCHEDULE,
    trim: float = DEFAULT_TRIM,
    max_index: int | None = None,
) -> WeakTypeStudy:
    """Empirical weak (1,1) constants over a batch of inputs and horizons.

    Each input is swept once up to ``max(Ns)`` with snapshots at every
    horizon in ``Ns``.
    """
    batch = default_batch() if batch is None else list(batch)
    if not batch:
        raise ValueError("empty batch")
    Ns = np.array(sorted(set(int(n) for n in Ns)))
    consts = np.zeros((len(batch), Ns.size))
    l2 = np.zeros_like(consts)
    errs = np.zeros_like(consts)
    for r, (_, f) in enumerate(batch):
        f2 = float(np.sqrt(np.sum(f.coeffs**2)))
        for c, fld in enumerate(_maximal_snapshots(mu, f, m, Ns, trim, max_index)):
            consts[r, c] = weak_type_constant(fld).constant
            l2[r, c] = fld.l2_norm / f2
            errs[r, c] = fld.error_bound
    return WeakTypeStudy(Ns.astype(np.float64), tuple(lbl for lbl, _ in batch), consts, l2, errs)


@dataclass(frozen=True)
class SquareField:
    """``values[k - offset] = s_N(f)(k)`` and the l1 ratio ``|s_N f|_1 / |f|_1``."""

    offset: int
    values: np.ndarray = field(repr=False)
    N: int
    input_norm: float

    @property
    def l1_ratio(self) -> float:
        return float(math.fsum(self.values) / self.input_norm)

    def at(self, k: int) -> float:
        i = k - self.offset
        return float(self.values[i]) if 0 <= i < self.values.size else 0.0


def square_function_study(
    mu: LatticeMeasure,
    f: LatticeMeasure,
    Ns: Sequence[int],
    trim: float = DEFAULT_TRIM,
    max_index: int | None = None,
) -> list[SquareField]:
    """``s_N(f) = (sum_{n=1}^N n ((mu^{*n} - mu^{*(n+1)}) * f)**2)**(1/2)`` at every ``N`` in ``Ns``."""
    Ns = sorted(set(int(n) for n in Ns))
    _check_input(f, Ns[0], 0)
    buf, out = _Field(), []
    want = iter(Ns)
    nxt = next(want)
    prev: LatticeMeasure | None = None
    for n, s in sigma_sweep(mu, f, 0, Ns[-1] + 1, trim, max_index):
        if prev is not None:
            lo, hi = min(prev.lo, s.lo), max(prev.hi, s.hi)
            buf.add_square(lo, prev.dense(lo, hi) - s.dense(lo, hi), float(n - 1))
            if n - 1 == nxt:
                off, vals = buf.snapshot()
                if vals.size == 0:
                    off, vals = 0, np.zeros(1)
                out.append(SquareField(off, np.sqrt(vals), n - 1, f.norm1))
                nxt = next(want, -1)
        prev = s
    return out


def square_function(
    mu: LatticeMeasure,
    f: LatticeMeasure,
    N: int,
    trim: float = DEFAULT_TRIM,
    max_index: int | None = None,
) -> SquareField:
    return square_function_study(mu, f, [N], trim, max_index)[0]


@dataclass(frozen=True)
class BCReport:
    """Running supremum of ``l**2 |sigma_n(k + l) - sigma_n(l)| / |k|`` over ``n <= N``.

    The scan covers ``1 <= |k| <= k_max`` and ``2|k| <= |l| <= l_max``.
    """

    Ns: np.ndarray
    running_sup: np.ndarray = field(repr=False)
    sup: float
    argmax: tuple[int, int, int]  # (n, k, l)
    error_bound: float

    def growth_exponent(self) -> float:
        sel = (self.Ns >= math.sqrt(self.Ns[-1])) & (self.running_sup > 0)
        if sel.sum() < 2:
            return -math.inf
        return loglog_slope(self.Ns[sel], self.running_sup[sel])

    @property
    def stabilizes(self) -> bool:
        return self.growth_exponent() <= BOUNDED_SLOPE


def _bc_table(k_max: int, l_max: int) -> list[tuple[int, np.ndarray]]:
    rows = []
    for k in range(-k_max, k_max + 1):
        if k == 0 or 2 * abs(k) > l_max:
            continue
        ls = np.arange(2 * abs(k), l_max + 1)
        rows.append((k, np.concatenate([-ls[::-1], ls])))
    return rows


def bc_spatial_check(
    mu: LatticeMeasure,
    m: int,
    N: int,
    k_max: int,
    l_max: int,
    trim: float = DEFAULT_TRIM,
    max_index: int | None = None,
) -> BCReport:
    """Empirical constant in ``|sigma_n(k + l) - sigma_n(l)| <= C |k| / l**2`` with
    ``sigma_n = n**m (delta_0 - mu)^{*m} * mu^{*n}``.

    ``running_sup[i]`` is the supremum over ``n <= i + 1``.
    """
    if k_max < 1 or l_max < 2:
        raise ValueError("need k_max >= 1 and l_max >= 2")
    rows = _bc_table(k_max, l_max)
    reach = l_max + k_max
    best, arg, err = 0.0, (0, 0, 0), 0.0
    run = np.zeros(N)
    for n, s in sigma_sweep(mu, delta(0), m, N, trim, max_index):
        scale = float(n) ** m
        sig = scale * s.dense(-reach, reach)
        err = max(err, scale * s.tail_bound)
        for k, ls in rows:
            q = ls.astype(np.float64) ** 2 * np.abs(sig[ls + k + reach] - sig[ls + reach]) / abs(k)
            i = int(np.argmax(q))
            if q[i] > best:
                best, arg = float(q[i]), (n, k, int(ls[i]))
        run[n - 1] = best
    return BCReport(np.arange(1, N + 1, dtype=np.float64), run, best, arg, 2.0 * err * l_max**2)
