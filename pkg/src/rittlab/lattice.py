"""Finitely supported signed measures on the integers.

A measure is stored as an integer offset plus a dense window of coefficients,
together with a bound on the l1 mass that has been discarded (by trimming or
truncation) since construction.  Every l1 quantity derived from a measure can
therefore be reported as a certified interval.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import signal

DEFAULT_TRIM = 1e-12
BOUNDED_SLOPE = 0.1
SUPPORT_FLOOR = 1e-15

# below this size the direct sum is both faster and exact in summation order
_DIRECT_MAX_SHORT = 32
_DIRECT_MAX_PRODUCT = 1 << 17


@dataclass(frozen=True, eq=False)
class LatticeMeasure:
    """Signed measure ``sum_k coeffs[k - offset] * delta_k`` on the integers.

    Attributes:
        offset: lattice index of ``coeffs[0]``.
        coeffs: dense coefficient window (read-only float64 array).
        tail_bound: l1 mass known to be missing from the window.
        meta: free-form provenance set by builders (not propagated).
    """

    offset: int
    coeffs: np.ndarray
    tail_bound: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=np.float64, copy=True).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "tail_bound", float(self.tail_bound))
        if c.size == 0:
            raise ValueError("empty measure")
        if self.tail_bound < 0 or not math.isfinite(self.tail_bound):
            raise ValueError("tail_bound must be a finite nonnegative number")

    @property
    def size(self) -> int:
        return int(self.coeffs.size)

    @property
    def lo(self) -> int:
        """Smallest stored lattice index."""
        return self.offset

    @property
    def hi(self) -> int:
        """Largest stored lattice index."""
        return self.offset + self.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    @property
    def mass(self) -> float:
        return float(math.fsum(self.coeffs))

    @property
    def norm1(self) -> float:
        return float(math.fsum(np.abs(self.coeffs)))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def at(self, k: int) -> float:
        """Coefficient at lattice point ``k`` (zero outside the window)."""
        i = k - self.offset
        if 0 <= i < self.size:
            return float(self.coeffs[i])
        return 0.0

    def dense(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients on the closed index range ``[lo, hi]``, zero padded."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a <= b:
            out[a - lo : b - lo + 1] = self.coeffs[a - self.lo : b - self.lo + 1]
        return out

    def shift(self, k: int) -> LatticeMeasure:
        return LatticeMeasure(self.offset + k, self.coeffs, self.tail_bound)

    def scale(self, c: float) -> LatticeMeasure:
        return LatticeMeasure(self.offset, c * self.coeffs, abs(c) * self.tail_bound)

    def __repr__(self) -> str:
        return (
            f"LatticeMeasure(offset={self.offset}, size={self.size}, "
            f"mass={self.mass:.6g}, tail_bound={self.tail_bound:.3g})"
        )


def _strip(offset: int, c: np.ndarray) -> tuple[int, np.ndarray]:
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return 0, np.zeros(1)
    return offset + int(nz[0]), c[nz[0] : nz[-1] + 1]


def from_coeffs(offset: int, coeffs: Sequence[float], tail_bound: float = 0.0) -> LatticeMeasure:
    """Build a measure from a coefficient list, stripping zeros at both ends."""
    c = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if c.size == 0:
        raise ValueError("empty measure")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    off, c = _strip(int(offset), c)
    return LatticeMeasure(off, c, tail_bound)


def delta(k: int = 0) -> LatticeMeasure:
    """Unit point mass at ``k``."""
    return LatticeMeasure(k, np.ones(1))


def zero_measure() -> LatticeMeasure:
    return LatticeMeasure(0, np.zeros(1))


def _trim_ends(c: np.ndarray, budget: float) -> tuple[int, int, float]:
    """Greedy removal of the smaller end entry while the removed mass fits.

    Returns ``(i, j, removed)``: keep ``c[i:len(c) - j]``.
    """
    n = c.size
    if budget <= 0 or n <= 1:
        return 0, 0, 0.0
    a = np.abs(c)
    # only entries inside these prefix/suffix ranges can ever be removed
    i_max = int(np.searchsorted(np.cumsum(a), budget, side="right"))
    j_max = int(np.searchsorted(np.cumsum(a[::-1]), budget, side="right"))
    i = j = 0
    removed = 0.0
    while i + j < n - 1:
        left = a[i] if i < i_max else math.inf
        right = a[n - 1 - j] if j < j_max else math.inf
        if left <= right:
            if removed + left > budget:
                break
            removed += left
            i += 1
        else:
            if removed + right > budget:
                break
            removed += right
            j += 1
    return i, j, removed


def _conv_direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)


def _conv_fft(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return signal.fftconvolve(a, b)


def convolve(
    a: LatticeMeasure,
    b: LatticeMeasure,
    trim_eps: float = 0.0,
    *,
    method: str = "auto",
    max_index: int | None = None,
) -> LatticeMeasure:
    """Convolution ``a * b`` with optional end trimming.

    Entries are removed from the two window ends, smallest first, while the
    removed l1 mass stays within ``trim_eps``.  Entries above ``max_index``
    (if given) are dropped as well and their mass is added to the tail bound.
    The propagated bound is
    ``|a| tail(b) + |b| tail(a) + tail(a) tail(b) + removed``.

    Args:
        method: ``"direct"``, ``"fft"`` or ``"auto"``.
    """
    if trim_eps < 0:
        raise ValueError("trim_eps must be nonnegative")
    la, lb = a.size, b.size
    if method == "auto":
        short = min(la, lb)
        method = "direct" if short <= _DIRECT_MAX_SHORT or la * lb <= _DIRECT_MAX_PRODUCT else "fft"
    if method == "direct":
        c = _conv_direct(a.coeffs, b.coeffs)
    elif method == "fft":
        c = _conv_fft(a.coeffs, b.coeffs)
    else:
        raise ValueError(f"unknown method {method!r}")
    offset = a.offset + b.offset
    removed = 0.0
    if max_index is not None and offset + c.size - 1 > max_index:
        keep = max(1, max_index - offset + 1)
        removed += float(np.abs(c[keep:]).sum())
        c = c[:keep]
    i, j, trimmed = _trim_ends(c, trim_eps)
    c = c[i : c.size - j]
    offset += i
    tail = (
        a.norm1 * b.tail_bound
        + b.norm1 * a.tail_bound
        + a.tail_bound * b.tail_bound
        + removed
        + trimmed
    )
    offset, c = _strip(offset, c)
    return LatticeMeasure(offset, c, tail)


def power_sweep(
    mu: LatticeMeasure,
    n_max: int,
    trim_eps: float = DEFAULT_TRIM,
    *,
    max_index: int | None = None,
) -> Iterator[tuple[int, LatticeMeasure]]:
    """Yield ``(n, mu^{*n})`` for ``n = 1..n_max`` by repeated convolution.

    Each step may trim at most ``trim_eps / n_max`` of l1 mass, so the total
    trimmed mass over the sweep is at most ``trim_eps``.
    """
    if n_max <= 0:
        raise ValueError("n_max must be positive")
    step = trim_eps / n_max
    p = mu
    yield 1, p
    for n in range(2, n_max + 1):
        p = convolve(p, mu, step, max_index=max_index)
        yield n, p


def mass_sweep(mu: LatticeMeasure, n_max: int, trim_eps: float = DEFAULT_TRIM) -> np.ndarray:
    """Masses of ``mu^{*n}`` for ``n = 1..n_max``."""
    return np.array([p.mass for _, p in power_sweep(mu, n_max, trim_eps)])


@dataclass(frozen=True)
class RittSweep:
    """Kernel norms ``n^m ||(delta_0 - mu)^{*m} * mu^{*n}||_1`` along ``ns``.

    ``values`` is a lower bound for the true norm (up to floating error and,
    on the convolution path, up to ``tail_error``); ``values + tail_error``
    is an upper bound.
    """

    m: int
    ns: np.ndarray
    values: np.ndarray
    tail_error: np.ndarray
    method: str = "convolve"

    def value(self, n: int) -> float:
        i = int(np.searchsorted(self.ns, n))
        if i >= self.ns.size or self.ns[i] != n:
            raise KeyError(n)
        return float(self.values[i])

    @property
    def n_max(self) -> int:
        return int(self.ns[-1])

    @property
    def sup(self) -> float:
        return float(self.values.max())

    def growth_exponent(self, n_lo: int | None = None, n_hi: int | None = None) -> float:
        """Log-log slope on ``[n_lo, n_hi]`` (default: top half of the sweep)."""
        n_hi = self.n_max if n_hi is None else n_hi
        n_lo = max(1, n_hi // 2) if n_lo is None else n_lo
        sel = (self.ns >= n_lo) & (self.ns <= n_hi)
        v = self.values[sel]
        if v.size and np.all(v == 0):
            return 0.0
        return growth_exponent_fit(v, n_lo, n_hi, ns=self.ns[sel])

    def bounded(self, n_lo: int | None = None, n_hi: int | None = None) -> bool:
        return self.growth_exponent(n_lo, n_hi) <= BOUNDED_SLOPE


def _kernel_value(window: np.ndarray, total: float) -> float:
    # The part of the kernel outside the window carries mass total - sum(window),
    # so its l1 norm is at least the absolute value of that number.
    s = math.fsum(window)
    return math.fsum(np.abs(window)) + abs(total - s)


def _ritt_convolve(mu: LatticeMeasure, m: int, n_max: int, trim_eps: float) -> RittSweep:
    binom = [math.comb(m, j) * (-1) ** j for j in range(m + 1)]
    total = 1.0 if m == 0 else 0.0
    buf: deque[LatticeMeasure] = deque(maxlen=m + 1)
    values = np.empty(n_max)
    errs = np.empty(n_max)
    for k, p in power_sweep(mu, n_max + m, trim_eps * (n_max + m) / max(n_max, 1)):
        buf.append(p)
        if len(buf) < m + 1:
            continue
        n = k - m
        lo = min(q.lo for q in buf)
        hi = max(q.hi for q in buf)
        ker = np.zeros(hi - lo + 1)
        err = 0.0
        for cj, q in zip(binom, buf):
            ker[q.lo - lo : q.hi - lo + 1] += cj * q.coeffs
            err += abs(cj) * q.tail_bound
        scale = float(n) ** m
        values[n - 1] = scale * _kernel_value(ker, total)
        errs[n - 1] = scale * err
    errs = np.maximum.accumulate(errs)
    return RittSweep(m, np.arange(1, n_max + 1), values, errs, "convolve")


def _ritt_transform(mu: LatticeMeasure, m: int, ns: np.ndarray, window: int, eta: float) -> RittSweep:
    """Kernel norms from a damped discrete transform on a fixed window.

    The kernel generating function is sampled on the circle of radius
    ``r = eta**(1/P)``, ``P = 2 * window``.  Coefficients at index ``i`` come
    back multiplied by ``r**i`` and aliased with weight ``r**P = eta``, so the
    first ``window`` coefficients are accurate for measures that are bounded
    on the left.  No sequential sweep over ``n`` is needed.
    """
    P = 2 * window
    if mu.size > P:
        raise ValueError("measure window exceeds transform length; increase window")
    r = eta ** (1.0 / P)
    rk = r ** np.arange(mu.size)
    G = sfft.fft(mu.coeffs * rk, P)
    # scipy.fft samples at z_j = r exp(-2 pi i j / P)
    phase = np.exp(-2j * np.pi * np.arange(P) / P)
    undamp = r ** (-np.arange(window, dtype=np.float64))
    o = mu.offset
    total = 1.0 if m == 0 else 0.0

    # mass of mu beyond distance x from its left edge, for the outside bound
    tail_from = np.concatenate([np.cumsum(np.abs(mu.coeffs)[::-1])[::-1], [0.0]]) + mu.tail_bound

    def outside(k: int) -> float:
        reach = (window - m * abs(o)) // k
        if reach <= 0:
            return 1.0
        return min(1.0, k * float(tail_from[min(reach, mu.size)]))

    values = np.empty(ns.size)
    errs = np.empty(ns.size)
    for idx, n in enumerate(ns):
        n = int(n)
        low = n * o + min(0, m * o)
        K = np.zeros(P, dtype=np.complex128)
        Gn = G**n
        Gj = Gn
        err = 0.0
        for j in range(m + 1):
            e = o * (n + j) - low
            K += (math.comb(m, j) * (-1) ** j * r**e) * phase**e * Gj
            err += math.comb(m, j) * outside(n + j)
            Gj = Gj * G
        ker = sfft.ifft(K)[:window].real * undamp
        scale = float(n) ** m
        values[idx] = scale * _kernel_value(ker, total)
        errs[idx] = scale * err
    errs = np.maximum.accumulate(errs)
    return RittSweep(m, ns.copy(), values, errs, "transform")


def ritt_sweep(
    mu: LatticeMeasure,
    m: int,
    n_max: int,
    trim_eps: float = DEFAULT_TRIM,
    *,
    ns: Sequence[int] | None = None,
    window: int | None = None,
    eta: float = 1e-10,
) -> RittSweep:
    """Norms ``n^m ||(delta_0 - mu)^{*m} * mu^{*n}||_1``.

    Without ``ns`` the powers are swept sequentially for every
    ``n = 1..n_max``.  With ``ns`` (a sorted schedule of ``n <= n_max``) the
    kernels are evaluated independently by a damped transform on a window of
    ``window`` coefficients (default ``2**20``); this is the practical route
    for heavy-tailed measures whose powers spread faster than ``n``.

    The measure must be a probability measure.  Each value adds the mass
    defect ``|total - sum(window)|`` to the windowed l1 norm, which keeps it
    a lower bound for the norm of the untruncated kernel.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if n_max <= 0:
        raise ValueError("n_max must be positive")
    if ns is None:
        return _ritt_convolve(mu, m, n_max, trim_eps)
    sched = np.unique(np.asarray(ns, dtype=np.int64))
    if sched.size == 0 or sched[0] < 1 or sched[-1] > n_max:
        raise ValueError("schedule must lie in [1, n_max]")
    w = 1 << 20 if window is None else int(window)
    if w <= 0 or w & (w - 1):
        raise ValueError("window must be a power of two")
    return _ritt_transform(mu, m, sched, w, eta)


def geometric_schedule(n_lo: int, n_hi: int, per_octave: int = 8) -> np.ndarray:
    """Integers ``round(n_lo * 2**(j/per_octave))`` up to ``n_hi``, deduplicated."""
    if n_lo < 1 or n_hi < n_lo:
        raise ValueError("need 1 <= n_lo <= n_hi")
    j = np.arange(int(math.ceil(per_octave * math.log2(n_hi / n_lo))) + 1)
    ns = np.unique(np.round(n_lo * 2.0 ** (j / per_octave)).astype(np.int64))
    return np.unique(np.clip(np.append(ns, n_hi), n_lo, n_hi))


class Moments(NamedTuple):
    mass: float
    mean: float | None
    second_moment: float | None
    truncated: bool


def moments(mu: LatticeMeasure, order: int = 2) -> Moments:
    """Mass, first and second moments over the stored window.

    ``truncated`` is set when ``tail_bound > 0``: the moments of the missing
    mass are unknown.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    k = mu.indices.astype(np.float64)
    c = mu.coeffs
    mass = math.fsum(c)
    mean = math.fsum(k * c) if order >= 1 else None
    second = math.fsum(k * k * c) if order >= 2 else None
    return Moments(mass, mean, second, mu.tail_bound > 0)


def is_strictly_aperiodic(mu: LatticeMeasure) -> bool:
    """True iff the support is in no coset of a proper subgroup of Z."""
    if mu.is_zero():
        raise ValueError("zero measure")
    support = mu.indices[np.abs(mu.coeffs) >= SUPPORT_FLOOR]
    if support.size < 2:
        return False
    return math.gcd(*(int(d) for d in support[1:] - support[0])) == 1


def reverse(mu: LatticeMeasure) -> LatticeMeasure:
    """The reflected measure ``k -> mu(-k)``."""
    return LatticeMeasure(-mu.hi, mu.coeffs[::-1], mu.tail_bound)


def mixture(alpha: float, mu: LatticeMeasure, sigma: LatticeMeasure) -> LatticeMeasure:
    """``alpha * mu + (1 - alpha) * sigma``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    lo, hi = min(mu.lo, sigma.lo), max(mu.hi, sigma.hi)
    c = alpha * mu.dense(lo, hi) + (1.0 - alpha) * sigma.dense(lo, hi)
    tail = alpha * mu.tail_bound + (1.0 - alpha) * sigma.tail_bound
    off, c = _strip(lo, c)
    return LatticeMeasure(off, c, tail)


def growth_exponent_fit(
    series: Sequence[float],
    n_lo: int,
    n_hi: int,
    ns: Sequence[int] | None = None,
) -> float:
    """Least-squares slope of ``log(series)`` against ``log(n)`` on a window.

    ``series[i]`` is the value at ``ns[i]`` (default ``ns = 1, 2, ...``).
    Only points with ``n_lo <= n <= n_hi`` enter the fit.
    """
    if n_lo < 1 or n_hi < 2 * n_lo:
        raise ValueError("window must satisfy n_hi >= 2 * n_lo >= 2")
    v = np.asarray(series, dtype=np.float64)
    n = np.arange(1, v.size + 1) if ns is None else np.asarray(ns, dtype=np.float64)
    sel = (n >= n_lo) & (n <= n_hi)
    v, n = v[sel], n[sel]
    if v.size < 2:
        raise ValueError("need at least two points in the window")
    if np.any(~(v > 0)):
        raise ValueError("series must be positive on the window")
    return loglog_slope(n, v)


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Slope of the least-squares line through ``(log x, log y)``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def is_bounded(slope: float) -> bool:
    return slope <= BOUNDED_SLOPE
