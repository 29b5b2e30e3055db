"""Measure families built from representative measures or CM functions.

A representative measure ``nu`` is a finite list of atoms ``(t_i, w_i)`` on
``[0, 1)``.  From it we build

* CM measures on N: ``mu(n) = sum_i w_i t_i**n``, normalized so that
  ``sum_i w_i / (1 - t_i) = 1``;
* CCM measures on {-1} u N: the same moments for ``n >= 0`` plus the
  centering atom ``mu(-1) = sum_i w_i t_i / (1 - t_i)**2``, normalized so
  that ``sum_i w_i / (1 - t_i)**2 = 1``;
* SCM measures on Z: ``mu(0) = 2 sum_i w_i`` and ``mu(+-n)`` equal to the
  moments, normalized so that ``sum_i w_i / (1 - t_i) = 1/2``.

Also provided: the coefficients of ``1 - (1 - x)**gamma``, sequences
``c f(n + 1)`` for ``f(x) = 1 / (x**a L_1(x)**a_1 ... L_k(x)**a_k)`` with
iterated logarithms ``L_1(x) = log(1 + x)``, ``L_{j+1} = L_1(L_j)``, and a
quadrature helper that turns a density into atoms refined toward ``t = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .lattice import LatticeMeasure, delta, mixture

FAMILIES = ("cm", "ccm", "scm")


class TailTargetError(ValueError):
    """The requested tail bound cannot be met with the given window."""

    def __init__(self, message: str, required_n_max: int | None = None):
        super().__init__(message)
        self.required_n_max = required_n_max


@dataclass(frozen=True, eq=False)
class RepresentativeMeasure:
    """Atoms ``(t_i, w_i)`` with distinct sorted ``t_i`` in ``[0, 1)``.

    ``s = 1 - t`` is kept alongside ``t``; for ``t >= 1/2`` it is exact, which
    matters for atoms very close to 1.
    """

    t: np.ndarray
    w: np.ndarray
    family: str
    s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        t = np.array(self.t, dtype=np.float64).reshape(-1)
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        s = 1.0 - t
        for a in (t, w, s):
            a.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "s", s)

    @property
    def size(self) -> int:
        return int(self.t.size)

    def normalization(self) -> float:
        return family_normalization(self.t, self.w, self.family)

    def rescaled(self, family: str) -> RepresentativeMeasure:
        """Same atoms, weights renormalized for another family."""
        return normalize_nu(np.column_stack([self.t, self.w]), family)


def family_normalization(t: np.ndarray, w: np.ndarray, family: str) -> float:
    """The normalization functional: CM and SCM use ``sum w/s``, CCM ``sum w/s**2``."""
    s = 1.0 - np.asarray(t, float)
    w = np.asarray(w, float)
    if family == "ccm":
        return math.fsum(w / (s * s))
    if family in ("cm", "scm"):
        return math.fsum(w / s)
    raise ValueError(f"unknown family {family!r}")


def _target(family: str) -> float:
    return 0.5 if family == "scm" else 1.0


def normalize_nu(nodes: Sequence[Sequence[float]] | np.ndarray, family: str) -> RepresentativeMeasure:
    """Sort and merge raw ``(t, w)`` atoms and rescale the weights.

    The rescaling enforces ``sum w/(1-t) = 1`` (CM), ``sum w/(1-t)**2 = 1``
    (CCM) or ``sum w/(1-t) = 1/2`` (SCM).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    a = np.asarray(nodes, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 2 or a.shape[0] == 0:
        raise ValueError("nodes must be a nonempty list of (t, w) pairs")
    t, w = a[:, 0], a[:, 1]
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
        raise ValueError("nodes must be finite")
    if np.any(t >= 1.0):
        raise ValueError("atom at 1")
    if np.any(t < 0.0):
        raise ValueError("atoms must lie in [0, 1)")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    keep = w > 0
    if not np.any(keep):
        raise ValueError("zero total weight")
    t, w = t[keep], w[keep]
    ut, inv = np.unique(t, return_inverse=True)
    uw = np.zeros(ut.size)
    np.add.at(uw, inv, w)
    scale = _target(family) / family_normalization(ut, uw, family)
    return RepresentativeMeasure(ut, uw * scale, family)


def moments_from_nu(nu: RepresentativeMeasure, n_max: int) -> np.ndarray:
    """``m[n] = sum_i w_i t_i**n`` for ``n = 0..n_max`` by per-atom recursion."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    m = np.zeros(n_max + 1)
    ratio = np.empty(n_max + 1)
    for ti, wi in zip(nu.t, nu.w):
        ratio[0] = wi
        ratio[1:] = ti
        m += np.cumprod(ratio)
    return m


def node_tails(nu: RepresentativeMeasure, n_max: int) -> np.ndarray:
    """Per-atom ``sum_{n > n_max} w t**n = w t**(n_max+1) / (1 - t)``."""
    with np.errstate(divide="ignore"):
        logt = np.where(nu.t > 0, np.log(np.where(nu.t > 0, nu.t, 1.0)), -np.inf)
    return nu.w * np.exp((n_max + 1) * logt) / nu.s


def required_n_max(nu: RepresentativeMeasure, trim: float, power: int = 0) -> int:
    """Smallest ``N`` with ``sum_{n > N} n**power mu(n) <= trim`` (one-sided moments).

    Found by doubling and bisection on the closed-form per-atom tails.
    """
    if trim <= 0:
        raise ValueError("trim must be positive")

    def tail(N: int) -> float:
        return float(weighted_tail(nu, N + 1, power).sum())

    hi = 1
    while tail(hi) > trim:
        hi *= 2
        if hi > 1 << 40:
            raise TailTargetError("tail target unreachable", None)
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if tail(mid) > trim:
            lo = mid
        else:
            hi = mid
    return hi


def weighted_tail(nu: RepresentativeMeasure, n: int | np.ndarray, power: int) -> np.ndarray:
    """Per-atom ``sum_{k >= n} k**power w t**k`` for ``power`` in 0..2.

    Returns an array of shape ``(len(n), atoms)`` (or ``(atoms,)`` for scalar n).
    """
    n_arr = np.asarray(n, dtype=np.float64)
    scalar = n_arr.ndim == 0
    n_arr = np.atleast_1d(n_arr)[:, None]
    t, s, w = nu.t[None, :], nu.s[None, :], nu.w[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)), -np.inf)
        tn = np.where(n_arr == 0, 1.0, np.exp(n_arr * logt))
    if power == 0:
        poly = 1.0 / s
    elif power == 1:
        poly = n_arr / s + t / s**2
    elif power == 2:
        poly = n_arr**2 / s + (2 * n_arr + 1) * t / s**2 + 2 * t**2 / s**3
    else:
        raise ValueError("power must be 0, 1 or 2")
    out = w * tn * poly
    return out[0] if scalar else out


def _check_family(nu: RepresentativeMeasure, family: str) -> None:
    if nu.family != family:
        raise ValueError(f"expected a {family} representative measure, got {nu.family}")


def _check_tail(nu: RepresentativeMeasure, n_max: int, tail: float, trim: float | None, factor: float) -> None:
    if trim is None or tail <= trim:
        return
    need = required_n_max(nu, trim / factor)
    raise TailTargetError(
        f"tail {tail:.3g} exceeds target {trim:.3g} at n_max={n_max}; need n_max >= {need}",
        need,
    )


def build_cm(nu: RepresentativeMeasure, n_max: int, trim: float | None = None) -> LatticeMeasure:
    """CM measure ``mu(n) = m[n]`` on ``0..n_max``; the tail bound is the exact remainder."""
    _check_family(nu, "cm")
    tail = math.fsum(node_tails(nu, n_max))
    _check_tail(nu, n_max, tail, trim, 1.0)
    return LatticeMeasure(0, moments_from_nu(nu, n_max), tail, {"family": "cm", "nu_available": True})


def build_ccm(nu: RepresentativeMeasure, n_max: int, trim: float | None = None) -> LatticeMeasure:
    """CCM measure with the centering atom at -1."""
    _check_family(nu, "ccm")
    tail = math.fsum(node_tails(nu, n_max))
    _check_tail(nu, n_max, tail, trim, 1.0)
    left = math.fsum(nu.w * nu.t / (nu.s * nu.s))
    c = np.concatenate([[left], moments_from_nu(nu, n_max)])
    return LatticeMeasure(-1, c, tail, {"family": "ccm", "nu_available": True})


def build_scm(nu: RepresentativeMeasure, n_max: int, trim: float | None = None) -> LatticeMeasure:
    """Symmetric measure ``mu(0) = 2 m[0]``, ``mu(+-n) = m[n]``."""
    _check_family(nu, "scm")
    tail = 2.0 * math.fsum(node_tails(nu, n_max))
    _check_tail(nu, n_max, tail, trim, 2.0)
    m = moments_from_nu(nu, n_max)
    c = np.concatenate([m[:0:-1], [2.0 * m[0]], m[1:]])
    return LatticeMeasure(-n_max, c, tail, {"family": "scm", "nu_available": True})


def build_from_nu(nu: RepresentativeMeasure, n_max: int, trim: float | None = None) -> LatticeMeasure:
    builder = {"cm": build_cm, "ccm": build_ccm, "scm": build_scm}[nu.family]
    return builder(nu, n_max, trim)


def scm_one_sided(nu: RepresentativeMeasure, n_max: int) -> LatticeMeasure:
    """The one-sided measure with doubled weights whose symmetrization is the SCM measure."""
    _check_family(nu, "scm")
    m = moments_from_nu(nu, n_max)
    return LatticeMeasure(0, np.concatenate([[2.0 * m[0]], 2.0 * m[1:]]), 2.0 * math.fsum(node_tails(nu, n_max)))


# ---------------------------------------------------------------------------
# the 1 - (1 - x)**gamma family


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")


def gamma_coeffs(gamma: float, n_max: int) -> np.ndarray:
    """Coefficients ``a[n]`` of ``1 - (1 - x)**gamma = sum a_n x**n`` for ``n <= n_max``.

    ``a[0] = 0``, ``a[1] = gamma`` and ``a[n+1] = a[n] (n - gamma)/(n + 1)``.
    """
    _check_gamma(gamma)
    a = np.zeros(n_max + 1)
    if n_max >= 1:
        n = np.arange(1, n_max, dtype=np.float64)
        ratio = np.concatenate([[gamma], (n - gamma) / (n + 1)])
        a[1:] = np.cumprod(ratio)
    return a


def gamma_tail(gamma: float, n: int) -> float:
    """``1 - sum_{k<=n} a_k = prod_{k<=n} (1 - gamma/k)``."""
    _check_gamma(gamma)
    k = np.arange(1, n + 1, dtype=np.float64)
    return float(np.exp(np.sum(np.log1p(-gamma / k))))


def build_gamma(gamma: float, n_max: int) -> LatticeMeasure:
    """The CM probability ``mu(n) = a_{n+1}`` for ``n = 0..n_max``, exact tail bound."""
    a = gamma_coeffs(gamma, n_max + 1)
    return LatticeMeasure(0, a[1:], gamma_tail(gamma, n_max + 1), {"family": "gamma", "gamma": gamma, "nu_available": True})


def gamma_density(gamma: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Density of the representative measure of ``mu(n) = a_{n+1}``.

    ``sin(pi gamma)/pi * t**(-gamma) * (1 - t)**gamma``, written in ``(t, s)``.
    """
    _check_gamma(gamma)
    c = math.sin(math.pi * gamma) / math.pi
    return lambda t, s: c * t ** (-gamma) * s**gamma


def gamma_fourier(gamma: float, theta: np.ndarray) -> np.ndarray:
    """Closed form ``(1 - (1 - e^{i theta})**gamma) e^{-i theta}`` of the transform."""
    z = np.exp(1j * np.asarray(theta))
    return (1.0 - (1.0 - z) ** gamma) / z


def power_density(beta: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """``(1 - t)**beta``."""
    return lambda t, s: s**beta


# ---------------------------------------------------------------------------
# density discretization


def discretize_density(
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    family: str,
    j_max: int = 48,
    j_zero: int = 30,
    order: int = 8,
) -> RepresentativeMeasure:
    """Gauss-Legendre atoms for a density on ``(0, 1)``.

    Panels are dyadic toward both ends: ``[1 - 2**-j, 1 - 2**-(j+1)]`` for
    ``j = 1..j_max`` and ``[2**-(i+1), 2**-i]`` for ``i = 1..j_zero`` plus
    ``[0, 2**-(j_zero+1)]``.  Mass closer to 1 than ``2**-(j_max+1)`` is
    dropped; the weights are then normalized for ``family``.
    """
    x, gw = np.polynomial.legendre.leggauss(order)
    x, gw = (x + 1) / 2, gw / 2
    ts, ss, ws = [], [], []
    # panels in s = 1 - t toward t = 1
    for j in range(1, j_max + 1):
        a, b = 2.0**-(j + 1), 2.0**-j
        s = a + (b - a) * x
        t = 1.0 - s
        ts.append(t)
        ss.append(1.0 - t)
        ws.append(gw * (b - a))
    for i in range(1, j_zero + 1):
        a, b = 2.0**-(i + 1), 2.0**-i
        t = a + (b - a) * x
        ts.append(t)
        ss.append(1.0 - t)
        ws.append(gw * (b - a))
    b = 2.0 ** -(j_zero + 1)
    t = b * x
    ts.append(t)
    ss.append(1.0 - t)
    ws.append(gw * b)
    t, s, w = np.concatenate(ts), np.concatenate(ss), np.concatenate(ws)
    w = w * density(t, s)
    return normalize_nu(np.column_stack([t, w]), family)


# ---------------------------------------------------------------------------
# iterated-log CM functions


@dataclass(frozen=True)
class CMFunctionSpec:
    """Exponents of ``f(x) = 1 / (x**alpha * L_1(x)**alphas[0] * ...)``."""

    alpha: float
    alphas: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.alpha < 0 or any(a < 0 for a in self.alphas):
            raise ValueError("exponents must be nonnegative")

    @property
    def summable(self) -> bool:
        """Whether ``sum_n f(n)`` converges (first exponent different from 1 must exceed 1)."""
        for e in (self.alpha, *self.alphas):
            if e != 1.0:
                return e > 1.0
        return False


def iterated_logs(x: np.ndarray | float, k: int) -> list[np.ndarray]:
    """``[L_1(x), ..., L_k(x)]`` with ``L_1 = log1p``."""
    out = []
    v = np.asarray(x, dtype=np.float64)
    for _ in range(k):
        v = np.log1p(v)
        out.append(v)
    return out


def iterlog_f(spec: CMFunctionSpec, x: np.ndarray | float) -> np.ndarray | float:
    """``1 / (x**alpha * prod_j L_j(x)**alpha_j)`` for ``x > 0``."""
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa <= 0):
        raise ValueError("x must be positive")
    logf = -spec.alpha * np.log(xa)
    for a, L in zip(spec.alphas, iterated_logs(xa, len(spec.alphas))):
        logf = logf - a * np.log(L)
    out = np.exp(logf)
    return float(out) if np.ndim(x) == 0 else out


def iterlog_tail_integral(spec: CMFunctionSpec, x0: float) -> float:
    """``int_{x0}^inf f(x) dx`` computed in the variable ``u = log x``."""

    def g(u: float) -> float:
        # x f(x) at x = e**u, kept in logs so that large u neither overflows nor underflows early
        logg = (1.0 - spec.alpha) * u
        L = float(np.logaddexp(0.0, u))
        for a in spec.alphas:
            logg -= a * math.log(L)
            L = math.log1p(L)
        return math.exp(logg)

    val, _ = integrate.quad(g, math.log(x0), math.inf, limit=400, epsabs=0.0, epsrel=1e-12)
    return float(val)


def build_from_cm_function(spec: CMFunctionSpec, n_max: int, trim: float | None = None) -> LatticeMeasure:
    """``mu(n) = c f(n + 1)`` on ``0..n_max``.

    ``f`` is decreasing, so ``int_{N+2}^inf f <= sum_{n > N} f(n + 1) <=
    int_{N+1}^inf f``.  The normalizing constant uses the midpoint estimate
    ``int_{N+3/2}^inf f`` for the missing part; the tail bound covers both the
    missing mass and the uncertainty in the constant.
    """
    if not spec.summable:
        raise ValueError("not normalizable")
    f = iterlog_f(spec, np.arange(1, n_max + 2, dtype=np.float64))
    head = math.fsum(f)
    upper = iterlog_tail_integral(spec, n_max + 1.0)
    lower = iterlog_tail_integral(spec, n_max + 2.0)
    mid = iterlog_tail_integral(spec, n_max + 1.5)
    c = 1.0 / (head + mid)
    c_lo, c_hi = 1.0 / (head + upper), 1.0 / (head + lower)
    tail = (c_hi - c_lo) * head + c_hi * upper
    if trim is not None and tail > trim:
        raise TailTargetError(f"tail {tail:.3g} exceeds target {trim:.3g} at n_max={n_max}", _iterlog_required(spec, trim))
    meta = {"family": "cm_function", "alpha": spec.alpha, "alphas": list(spec.alphas), "nu_available": False, "c": c}
    return LatticeMeasure(0, c * f, tail, meta)


def _iterlog_required(spec: CMFunctionSpec, trim: float) -> int | None:
    n = 16
    while n < 1 << 50:
        if iterlog_tail_integral(spec, n + 1.0) <= trim:
            return n
        n *= 2
    return None


def build_centered_cm_function(spec: CMFunctionSpec, n_max: int, atom_at: int = -1, trim: float | None = None) -> LatticeMeasure:
    """Centered measure with a CM-function tail on N and one atom at ``atom_at < 0``.

    Recipe: ``(1 - p) mu_f + p delta_{atom_at}`` with ``mu_f`` from
    :func:`build_from_cm_function` and ``p`` chosen so that the mean vanishes.
    Requires a finite first moment (``alpha > 2`` or equivalent).
    """
    if atom_at >= 0:
        raise ValueError("the centering atom must sit at a negative integer")
    base = build_from_cm_function(spec, n_max, trim)
    k = np.arange(base.size, dtype=np.float64)
    mean = math.fsum(k * base.coeffs)
    p = mean / (mean - atom_at)
    mu = mixture(1.0 - p, base, delta(atom_at))
    mu.meta.update({"family": "centered_cm_function", "nu_available": False, "atom_at": atom_at, "p": p})
    return mu
