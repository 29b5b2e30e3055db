"""Complete monotonicity and the coefficient/integral forms of the BAR criteria.

Discrete profiles (coefficient side), for ``n`` on the schedule
``ceil(2**(j/2))``:

* ``cns1``: ``sum_{k=1}^n k mu(k)`` against ``n sum_{k>=n} mu(k)``;
* ``cns2``: ``n sum_{k>=n} k mu(k)`` against ``sum_{k=1}^n k**2 mu(k)``;
* ``scm2``: ``n**2 sum_{k>=n} mu(k)`` against ``sum_{k=1}^n k**2 mu(k)``.

Integral profiles (representative-measure side), for ``x = 1 - 2**-j``,
with closed intervals of integration:

* ``condBAR``: ``int_0^x t/(1-t)**2`` against ``int_x^1 t/(1-t)`` / ``(1-x)``;
* ``condBARbis``: ``int_x^1 t/(1-t)**2`` / ``(1-x)`` against ``int_0^x t/(1-t)**3``;
* ``condBARter``: ``int_x^1 t/(1-t)`` against ``(1-x)**2 int_0^x t/(1-t)**3``.

Each profile records the per-point best constant LHS/RHS and classifies it
by the log-log slope of the constants against ``n`` (or ``1/(1-x)``) over
the upper half of the scanned scales: slope <= 0.1 means bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .families import (
    RepresentativeMeasure,
    build_from_nu,
    discretize_density,
    moments_from_nu,
    normalize_nu,
    power_density,
)
from .lattice import BOUNDED_SLOPE, LatticeMeasure

DISCRETE_KINDS = ("cns1", "cns2", "scm2")
INTEGRAL_KINDS = ("condBAR", "condBARbis", "condBARter")
MATCHING = {"cm": ("condBAR", "cns1"), "ccm": ("condBARbis", "cns2"), "scm": ("condBARter", "scm2")}


def finite_difference_table(seq: Sequence[float], m_max: int) -> list[np.ndarray]:
    """``[D^0 seq, D^1 seq, ..., D^m_max seq]`` with ``(D a)_n = a_n - a_{n+1}``."""
    a = np.asarray(seq, dtype=np.float64)
    if m_max < 0 or a.size <= m_max:
        raise ValueError("need m_max >= 0 and len(seq) > m_max")
    out = [a]
    for _ in range(m_max):
        a = a[:-1] - a[1:]
        out.append(a)
    return out


class CMCheck(NamedTuple):
    passed: bool
    violation: tuple[int, int, float] | None  # (n, m, value)


def cm_check(seq: Sequence[float], m_max: int, tol: float = 0.0) -> CMCheck:
    """All iterated differences up to order ``m_max`` are ``>= -tol``.

    The first violation is reported scanning ``m`` upward, then ``n``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    for m, row in enumerate(finite_difference_table(seq, m_max)):
        bad = np.flatnonzero(row < -tol)
        if bad.size:
            n = int(bad[0])
            return CMCheck(False, (n, m, float(row[n])))
    return CMCheck(True, None)


@dataclass(frozen=True)
class InequalityProfile:
    """Best constants along a scale.

    ``scale`` holds ``n`` for discrete profiles and ``1/(1-x)`` for integral
    ones (``x`` itself is in ``points``).  Constants are also kept as logs so
    that underflowing tails do not lose information.
    """

    which: str
    points: np.ndarray
    scale: np.ndarray
    log_constants: np.ndarray = field(repr=False)
    growth_exponent: float
    constants_lo: np.ndarray | None = field(default=None, repr=False)
    constants_hi: np.ndarray | None = field(default=None, repr=False)

    @property
    def constants(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_constants)

    @property
    def sup(self) -> float:
        return float(np.max(self.constants))

    @property
    def running_sup(self) -> np.ndarray:
        return np.maximum.accumulate(self.constants)

    @property
    def verdict(self) -> str:
        return "bounded" if self.growth_exponent <= BOUNDED_SLOPE else "growing"


def profile_slope(scale: np.ndarray, log_c: np.ndarray, lo: float | None = None) -> float:
    """Slope of ``log C`` against ``log scale`` over ``scale >= lo`` (default: sqrt of the top).

    Infinite constants count as growth; vanishing ones are dropped.
    """
    scale = np.asarray(scale, float)
    lo = math.sqrt(scale[-1]) if lo is None else lo
    sel = scale >= lo
    y = log_c[sel]
    if np.any(y == np.inf):
        return math.inf
    keep = np.isfinite(y)
    if keep.sum() < 2:
        return -math.inf
    x = np.log(scale[sel][keep])
    return float(np.polyfit(x, y[keep], 1)[0])


def discrete_schedule(n_max: int) -> np.ndarray:
    """``ceil(2**(j/2))`` for ``j >= 0`` up to ``n_max``, plus ``n_max`` itself."""
    j = np.arange(int(math.floor(2 * math.log2(n_max))) + 1)
    ns = np.ceil(2.0 ** (j / 2) - 1e-9).astype(np.int64)
    return np.unique(np.append(ns[ns <= n_max], n_max))


def _log_node_tail(nu: RepresentativeMeasure, ns: np.ndarray, power: int) -> np.ndarray:
    """``log sum_i sum_{k>=n} k**power w_i t_i**k`` for each ``n``."""
    pos = nu.t > 0
    t, s, w = nu.t[pos][None, :], nu.s[pos][None, :], nu.w[pos][None, :]
    n = ns.astype(np.float64)[:, None]
    if t.size == 0:
        return np.full(ns.size, -np.inf)
    if power == 0:
        poly = 1.0 / s + 0 * n
    elif power == 1:
        poly = n / s + t / s**2
    else:
        raise ValueError("power must be 0 or 1")
    logs = np.log(w) + n * np.log1p(-s) + np.log(poly)
    # log1p(-s) equals log(t) but keeps full accuracy for t close to 1
    logs = np.where(s >= 0.5, np.log(w) + n * np.log(t) + np.log(poly), logs)
    return logsumexp(logs, axis=1)


def _safe_log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def discrete_inequality_check(
    mu: LatticeMeasure | None,
    which: str,
    n_max: int,
    nu: RepresentativeMeasure | None = None,
) -> InequalityProfile:
    """Coefficient-side profile of ``which`` up to ``n_max``.

    With ``nu`` the coefficients for ``1 <= k <= n_max`` come from the
    moments and the tails in closed form; otherwise from the window of
    ``mu``, with tails ``sum_{k>=n}`` taken as the window sum plus
    ``[0, tail_bound]`` (the point estimate uses the full tail bound).
    """
    if which not in DISCRETE_KINDS:
        raise ValueError(f"unknown inequality {which!r}")
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    ns = discrete_schedule(n_max)
    k = np.arange(1, n_max + 1, dtype=np.float64)
    if nu is not None:
        coef = moments_from_nu(nu, n_max)[1:]
    else:
        if mu is None:
            raise ValueError("need a measure or a representative measure")
        coef = mu.dense(1, n_max)
    P1 = np.cumsum(k * coef)[ns - 1]
    P2 = np.cumsum(k * k * coef)[ns - 1]
    lo_c = hi_c = None
    if nu is not None:
        logT0 = _log_node_tail(nu, ns, 0)
        logT1 = _log_node_tail(nu, ns, 1)
    else:
        assert mu is not None
        far = mu.dense(1, max(mu.hi, n_max))
        kk = np.arange(1, far.size + 1, dtype=np.float64)
        suf0 = np.cumsum(far[::-1])[::-1][ns - 1]
        suf1 = np.cumsum((kk * far)[::-1])[::-1][ns - 1]
        tb = mu.tail_bound
        logT0 = _safe_log(suf0 + tb)
        logT1 = _safe_log(suf1)
        lo_c, hi_c = suf0, suf0 + tb
    logn = np.log(ns.astype(np.float64))
    if which == "cns1":
        log_l, log_r = _safe_log(P1), logn + logT0
    elif which == "cns2":
        log_l, log_r = logn + logT1, _safe_log(P2)
    else:
        log_l, log_r = 2 * logn + logT0, _safe_log(P2)
    if np.any(log_r == -np.inf):
        raise ValueError("degenerate measure: right-hand side vanishes")
    log_c = log_l - log_r
    c_lo = c_hi = None
    if lo_c is not None and which in ("cns1", "scm2"):
        with np.errstate(divide="ignore"):
            if which == "cns1":
                c_lo, c_hi = P1 / (ns * hi_c), P1 / (ns * lo_c)
            else:
                c_lo, c_hi = ns**2.0 * lo_c / P2, ns**2.0 * hi_c / P2
    slope = profile_slope(ns.astype(np.float64), log_c)
    return InequalityProfile(which, ns.astype(np.float64), ns.astype(np.float64), log_c, slope, c_lo, c_hi)


def integral_inequality_check(
    nu: RepresentativeMeasure,
    which: str,
    j_max: int = 16,
    xs: Sequence[float] | None = None,
) -> InequalityProfile:
    """Representative-measure profile of ``which`` on ``x = 1 - 2**-j``, ``j = 1..j_max``.

    Points below the smallest positive atom are skipped (both sides vanish
    or the right side does).
    """
    if which not in INTEGRAL_KINDS:
        raise ValueError(f"unknown condition {which!r}")
    if xs is None:
        sx = 2.0 ** -np.arange(1, j_max + 1, dtype=np.float64)
        x = 1.0 - sx
    else:
        x = np.asarray(xs, dtype=np.float64)
        if np.any(x < 0) or np.any(x >= 1):
            raise ValueError("x must lie in [0, 1)")
        sx = 1.0 - x
    pos = nu.t > 0
    t, s, w = nu.t[pos], nu.s[pos], nu.w[pos]
    if t.size == 0:
        raise ValueError("degenerate measure: no atom in (0, 1)")
    keep = x >= t.min()
    x, sx = x[keep], sx[keep]
    below = t[None, :] <= x[:, None]
    above = t[None, :] >= x[:, None]
    g1 = w * t / s
    g2 = g1 / s
    g3 = g2 / s
    with np.errstate(divide="ignore", invalid="ignore"):
        if which == "condBAR":
            lhs = (below * g2).sum(axis=1) * sx
            rhs = (above * g1).sum(axis=1)
        elif which == "condBARbis":
            lhs = (above * g2).sum(axis=1) / sx
            rhs = (below * g3).sum(axis=1)
        else:
            lhs = (above * g1).sum(axis=1)
            rhs = sx**2 * (below * g3).sum(axis=1)
        log_c = np.where(rhs > 0, _safe_log(lhs) - _safe_log(rhs), np.where(lhs > 0, np.inf, -np.inf))
    scale = 1.0 / sx
    slope = profile_slope(scale, log_c, math.sqrt(2.0**j_max) if xs is None else None)
    return InequalityProfile(which, x, scale, log_c, slope)


# ---------------------------------------------------------------------------
# equivalence batteries


@dataclass(frozen=True)
class BatteryCase:
    label: str
    nu: RepresentativeMeasure = field(repr=False)
    integral: InequalityProfile = field(repr=False)
    discrete: InequalityProfile = field(repr=False)

    @property
    def agree(self) -> bool:
        return self.integral.verdict == self.discrete.verdict


def compare_verdicts(nu: RepresentativeMeasure, j_max: int = 14) -> tuple[InequalityProfile, InequalityProfile]:
    """Integral profile of ``nu`` and discrete profile of the built measure on matching scales."""
    cond, disc = MATCHING[nu.family]
    n_max = 2**j_max
    prof_i = integral_inequality_check(nu, cond, j_max)
    mu = build_from_nu(nu, n_max)
    prof_d = discrete_inequality_check(mu, disc, n_max, nu=nu)
    return prof_i, prof_d


def _random_atoms(rng: np.random.Generator, family: str, j_max: int) -> RepresentativeMeasure:
    """One to four atoms with ``1 - t`` in ``[2**-(j_max/2), 2**-0.2]``."""
    k = int(rng.integers(1, 5))
    t = 1.0 - 2.0 ** -rng.uniform(0.2, j_max / 2, k)
    return normalize_nu(np.column_stack([t, rng.uniform(0.2, 1.0, k)]), family)


def _with_far_atom(nu: RepresentativeMeasure, share: float, s_far: float) -> RepresentativeMeasure:
    """Add an atom at ``1 - s_far`` carrying ``share`` of the normalization."""
    e = 2 if nu.family == "ccm" else 1
    w_far = share / (1.0 - share) * nu.normalization() * s_far**e
    t = np.append(nu.t, 1.0 - s_far)
    w = np.append(nu.w, w_far)
    return normalize_nu(np.column_stack([t, w]), nu.family)


def battery_measures(family: str, j_max: int = 14, seed: int = 0) -> list[tuple[str, RepresentativeMeasure]]:
    """A deterministic family of representative measures with both verdicts represented.

    * power-law densities ``(1-t)**beta`` resolved well beyond the scanned scales;
    * a few atoms inside the scanned range;
    * a few atoms plus one atom at ``1 - 2**-50``, far beyond the scanned
      range, which acts like mass at 1 on the scanned scales.
    """
    rng = np.random.default_rng(seed)
    deep = j_max + 12
    betas = {
        "cm": (0.15, 0.3, 0.5, 0.7, 1.6, 2.0, 2.5, 3.0),
        "ccm": (1.2, 1.5, 1.8, 2.5, 3.5),
        "scm": (0.3, 0.7, 1.2, 2.0, 3.0),
    }[family]
    out: list[tuple[str, RepresentativeMeasure]] = []
    for b in betas:
        out.append((f"power beta={b}", discretize_density(power_density(b), family, j_max=deep, j_zero=4)))
    e = 2 if family == "ccm" else 1
    s_far = 2.0**-50
    for i in range(6):
        out.append((f"atoms#{i}", _random_atoms(rng, family, j_max)))
    for i in range(6):
        base = _random_atoms(rng, family, j_max)
        out.append((f"atoms#{i}+far", _with_far_atom(base, float(rng.uniform(0.05, 0.5)), s_far)))
    if family != "cm":
        for b in (0.5, 1.5, 2.5):
            base = discretize_density(power_density(b + e - 1), family, j_max=deep, j_zero=4)
            out.append((f"power beta={b + e - 1}+far", _with_far_atom(base, 0.25, s_far)))
    return out


def equivalence_battery(family: str, j_max: int = 14, seed: int = 0) -> list[BatteryCase]:
    cases = []
    for label, nu in battery_measures(family, j_max, seed):
        pi, pd = compare_verdicts(nu, j_max)
        cases.append(BatteryCase(label, nu, pi, pd))
    return cases
