"""Fourier-side evaluation and checks.

Convention: ``mu_hat(theta) = sum_k mu(k) exp(i k theta)``.  Besides ``f``,
``f1``, ``f2`` (the transform and its first two derivatives) every sample
set carries ``defect = 1 - f`` computed without cancellation, since all
interesting behavior happens where ``f`` is within rounding of 1.
``1 - cos(theta)`` is always evaluated as ``2 sin(theta/2)**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .families import RepresentativeMeasure
from .lattice import BOUNDED_SLOPE, LatticeMeasure, loglog_slope

TREND_POINTS = 10


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class ThetaGrid:
    """Increasing points in ``(0, pi]``, always containing ``pi``."""

    points: np.ndarray
    spec: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("grid must be a nonempty 1-d array")
        if p[0] <= 0 or p[-1] != math.pi or np.any(np.diff(p) <= 0):
            raise ValueError("grid must increase strictly within (0, pi] and end at pi")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return int(self.points.size)


def default_grid(
    theta_min: float = 1e-8,
    theta_split: float = 0.1,
    ratio: float = 2.0 ** 0.125,
    uniform: int = 2048,
) -> ThetaGrid:
    """Geometric points on ``[theta_min, theta_split)`` plus a uniform block up to ``pi``."""
    if not 0 < theta_min < theta_split < math.pi or ratio <= 1 or uniform < 2:
        raise ValueError("invalid grid parameters")
    count = int(math.floor(math.log(theta_split / theta_min) / math.log(ratio) + 1e-9))
    geo = theta_min * ratio ** np.arange(count + 1)
    geo = geo[geo < theta_split]
    uni = np.linspace(theta_split, math.pi, uniform)
    uni[-1] = math.pi
    spec = {"theta_min": theta_min, "theta_split": theta_split, "ratio": ratio, "uniform": uniform}
    return ThetaGrid(np.concatenate([geo, uni]), spec)


def _theta(grid: ThetaGrid | np.ndarray | Sequence[float]) -> np.ndarray:
    if isinstance(grid, ThetaGrid):
        return grid.points
    th = np.asarray(grid, dtype=np.float64).reshape(-1)
    if np.any(th <= 0) or np.any(th >= 2 * math.pi):
        raise ValueError("theta values must lie in (0, 2 pi)")
    return th


def _one_minus_cos(th: np.ndarray) -> np.ndarray:
    return 2.0 * np.sin(th / 2) ** 2


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True, eq=False)
class SpectralSamples:
    """Transform samples on a grid.

    Attributes:
        theta: grid points.
        f, f1, f2: ``mu_hat`` and its first two derivatives.
        defect: ``1 - mu_hat``, accurate where ``f`` is close to 1.
        path: ``coeffs``, ``nu_cm``, ``nu_ccm``, ``nu_scm`` or ``combined``.
        error_bound: bounds for ``(f, f1, f2)`` coming from truncation.
    """

    theta: np.ndarray
    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    defect: np.ndarray
    path: str
    error_bound: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __len__(self) -> int:
        return int(self.theta.size)

    @property
    def one_minus_abs(self) -> np.ndarray:
        """``1 - |f|`` from ``(2 Re D - |D|**2) / (1 + |f|)``, ``D = 1 - f``."""
        d = self.defect
        return (2.0 * d.real - (d.real**2 + d.imag**2)) / (1.0 + np.abs(self.f))

    def conj(self) -> SpectralSamples:
        """Samples of the reflected measure: ``f(-theta)`` and its derivatives are conjugates."""
        return SpectralSamples(
            self.theta, self.f.conj(), self.f1.conj(), self.f2.conj(), self.defect.conj(), self.path, self.error_bound
        )


def fourier_from_coeffs(
    mu: LatticeMeasure,
    grid: ThetaGrid | np.ndarray,
    deriv_order: int = 2,
    *,
    chunk: int = 1 << 22,
) -> SpectralSamples:
    """Direct sums over the stored window.

    ``defect`` is ``sum_k mu(k) (1 - exp(i k theta))``, i.e. the defect of
    the untruncated probability measure up to ``2 * tail_bound``.  The
    reported error bounds are ``tail_bound * edge**j`` with ``edge`` the
    largest ``|k|`` in the window (exact if the discarded mass sits at the
    window edge).
    """
    if deriv_order not in (0, 1, 2):
        raise ValueError("deriv_order must be 0, 1 or 2")
    th = _theta(grid)
    # pair k with -k so that the odd part of a symmetric measure is exactly 0
    span = max(-mu.lo, mu.hi, 0)
    pos, neg = np.zeros(span + 1), np.zeros(span + 1)
    idx = mu.indices
    pos[idx[idx >= 0]] = mu.coeffs[idx >= 0]
    neg[-idx[idx < 0]] = mu.coeffs[idx < 0]
    even, odd = pos + neg, pos - neg
    odd[0] = 0.0
    j = np.arange(span + 1, dtype=np.float64)
    nz = (even != 0) | (odd != 0)
    j, even, odd = j[nz], even[nz], odd[nz]
    n_th = th.size
    f = np.zeros(n_th, complex)
    f1 = np.zeros(n_th, complex)
    f2 = np.zeros(n_th, complex)
    d = np.zeros(n_th, complex)
    step = max(1, chunk // max(j.size, 1))
    je, jo, j2e, j2o = j * even, j * odd, j * j * even, j * j * odd
    for a in range(0, n_th, step):
        sl = slice(a, min(n_th, a + step))
        kt = np.outer(th[sl], j)
        cs, sn = np.cos(kt), np.sin(kt)
        omc = 2.0 * np.sin(kt / 2) ** 2
        im = sn @ odd
        f[sl] = cs @ even + 1j * im
        d[sl] = omc @ even - 1j * im
        if deriv_order >= 1:
            f1[sl] = -(sn @ je) + 1j * (cs @ jo)
        if deriv_order >= 2:
            f2[sl] = -(cs @ j2e) - 1j * (sn @ j2o)
    edge = float(max(abs(mu.lo), abs(mu.hi), 1))
    tb = mu.tail_bound
    return SpectralSamples(th, f, f1, f2, d, "coeffs", (tb, tb * edge, tb * edge**2))


def _atoms(nu: RepresentativeMeasure) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return nu.t[None, :], nu.s[None, :], nu.w[None, :]


def _cm_parts(t, s, w, th):
    """Sums shared by the CM and SCM formulas; returns (D_re, Im f, f1, f2)."""
    q = _one_minus_cos(th)[:, None]
    sn, cs = np.sin(th)[:, None], np.cos(th)[:, None]
    Q = s * s + 2.0 * t * q
    tp = t * (1.0 + t)
    d_re = np.sum(w * tp * q / (s * Q), axis=1)
    a1 = np.sum(w * t / Q, axis=1)
    a2 = np.sum(w * tp * s / Q**2, axis=1)
    b2 = np.sum(w * t * t / Q**2, axis=1)
    b3 = np.sum(w * tp * t * s / Q**3, axis=1)
    c3 = np.sum(w * t**3 / Q**3, axis=1)
    sn, cs = sn[:, 0], cs[:, 0]
    im_f = sn * a1
    f1 = -sn * a2 + 1j * (cs * a1 - 2.0 * sn**2 * b2)
    f2 = (-cs * a2 + 4.0 * sn**2 * b3) + 1j * (-sn * a1 - 6.0 * sn * cs * b2 + 8.0 * sn**3 * c3)
    return d_re, im_f, f1, f2


def _require(nu: RepresentativeMeasure, family: str) -> None:
    if nu.family != family:
        raise ValueError(f"expected a {family} representative measure, got {nu.family}")


def fourier_cm_from_nu(nu: RepresentativeMeasure, grid: ThetaGrid | np.ndarray) -> SpectralSamples:
    """Closed-form atom sums for a CM measure.

    With ``s = 1 - t``, ``q = 1 - cos(theta)`` and ``Q = s**2 + 2 t q``:
    ``1 - Re f = sum w t (1 + t) q / (s Q)`` and ``Im f = sin(theta) sum w t / Q``;
    the derivative sums follow by differentiating these.
    """
    _require(nu, "cm")
    th = _theta(grid)
    d_re, im_f, f1, f2 = _cm_parts(*_atoms(nu), th)
    d = d_re - 1j * im_f
    return SpectralSamples(th, 1.0 - d, f1, f2, d, "nu_cm")


def fourier_scm_from_nu(nu: RepresentativeMeasure, grid: ThetaGrid | np.ndarray) -> SpectralSamples:
    """SCM transform: the real part of the CM transform with doubled weights."""
    _require(nu, "scm")
    th = _theta(grid)
    t, s, w = _atoms(nu)
    d_re, _, f1, f2 = _cm_parts(t, s, 2.0 * w, th)
    d = d_re + 0j
    return SpectralSamples(th, 1.0 - d, f1.real + 0j, f2.real + 0j, d, "nu_scm")


def fourier_ccm_from_nu(nu: RepresentativeMeasure, grid: ThetaGrid | np.ndarray) -> SpectralSamples:
    """Closed-form atom sums for a CCM measure.

    ``1 - f = sum w 2 t q (s + t q + i t sin(theta)) / (s**2 Q)``.
    """
    _require(nu, "ccm")
    th = _theta(grid)
    t, s, w = _atoms(nu)
    x = th[:, None]
    q = _one_minus_cos(x)
    sn, cs = np.sin(th), np.cos(th)
    Q = s * s + 2.0 * t * q
    g = 2.0 * t * q / (s * s * Q)
    d_re = np.sum(w * g * (s + t * q), axis=1)
    e1 = np.sum(w * g * t, axis=1)  # sum 2 w t^2 q / (s^2 Q)
    d = d_re + 1j * sn * e1
    a0 = np.sum(w * t / (s * s), axis=1)
    a2 = np.sum(w * t * s * (1.0 + t) / Q**2, axis=1)
    a3 = np.sum(w * t * t * s * (1.0 + t) / Q**3, axis=1)
    b2 = np.sum(w * t * t / Q**2, axis=1)
    c3 = np.sum(w * t**3 / Q**3, axis=1)
    f1 = (-sn * a0 - sn * a2) + 1j * (-cs * e1 - 2.0 * sn**2 * b2)
    f2 = (-cs * a0 - cs * a2 + 4.0 * sn**2 * a3) + 1j * (sn * e1 - 6.0 * sn * cs * b2 + 8.0 * sn**3 * c3)
    return SpectralSamples(th, 1.0 - d, f1, f2, d, "nu_ccm")


def fourier_from_nu(nu: RepresentativeMeasure, grid: ThetaGrid | np.ndarray) -> SpectralSamples:
    fn = {"cm": fourier_cm_from_nu, "ccm": fourier_ccm_from_nu, "scm": fourier_scm_from_nu}[nu.family]
    return fn(nu, grid)


def fourier_gamma(gamma: float, grid: ThetaGrid | np.ndarray) -> SpectralSamples:
    """Closed-form samples of ``mu(n) = a_{n+1}`` with ``sum a_k z**k = 1 - (1 - z)**gamma``.

    With ``z = exp(i theta)`` and ``w = 1 - z``: ``f = (1 - w**gamma)/z``,
    ``1 - f = (w**gamma - w)/z``; theta-derivatives follow from
    ``d/dtheta = i z d/dz``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    th = _theta(grid)
    z = np.exp(1j * th)
    w = -2j * np.sin(th / 2) * np.exp(0.5j * th)
    wg = w**gamma
    f = (1.0 - wg) / z
    d = (wg - w) / z
    dz = -1.0 / z**2 + gamma * wg / (w * z) + wg / z**2
    dzz = 2.0 * (1.0 - wg) / z**3 - 2.0 * gamma * wg / (w * z**2) - gamma * (gamma - 1.0) * wg / (w * w * z)
    f1 = 1j * z * dz
    f2 = -z * dz - z * z * dzz
    return SpectralSamples(th, f, f1, f2, d, "closed_gamma")


def _same_grid(a: SpectralSamples, b: SpectralSamples) -> None:
    if a.theta.shape != b.theta.shape or not np.array_equal(a.theta, b.theta):
        raise ValueError("samples live on different grids")


def mixture_samples(alpha: float, a: SpectralSamples, b: SpectralSamples) -> SpectralSamples:
    """Samples of ``alpha mu + (1 - alpha) sigma``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    _same_grid(a, b)
    mix = lambda x, y: alpha * x + (1.0 - alpha) * y  # noqa: E731
    err = tuple(mix(x, y) for x, y in zip(a.error_bound, b.error_bound))
    return SpectralSamples(a.theta, mix(a.f, b.f), mix(a.f1, b.f1), mix(a.f2, b.f2), mix(a.defect, b.defect), "combined", err)


def product_samples(a: SpectralSamples, b: SpectralSamples) -> SpectralSamples:
    """Samples of ``mu * sigma``; ``1 - fg = D_a + D_b - D_a D_b``."""
    _same_grid(a, b)
    f = a.f * b.f
    f1 = a.f1 * b.f + a.f * b.f1
    f2 = a.f2 * b.f + 2.0 * a.f1 * b.f1 + a.f * b.f2
    d = a.defect + b.defect - a.defect * b.defect
    ea, eb = a.error_bound, b.error_bound
    err = (ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2])
    return SpectralSamples(a.theta, f, f1, f2, d, "combined", err)


# ---------------------------------------------------------------------------
# ratios and trends


def small_theta_trend(theta: np.ndarray, values: np.ndarray, count: int = TREND_POINTS) -> float:
    """Log-log slope of ``values`` against ``1/theta`` over the smallest grid points.

    Positive slopes mean growth as ``theta -> 0``.  Returns ``inf`` when a
    value is infinite and 0 when all values vanish.
    """
    order = np.argsort(theta)[:count]
    x, y = 1.0 / theta[order], values[order]
    if np.any(~np.isfinite(y)):
        return math.inf
    if np.all(y == 0):
        return 0.0
    if np.any(y <= 0):
        y = np.maximum(y, np.max(y) * 1e-300)
    return loglog_slope(x, y)


@dataclass(frozen=True)
class RatioReport:
    bar_sup: float
    bar_argmax: float
    sector_sup: float
    sector_argmax: float
    bar_trend: float
    sector_trend: float
    bar: np.ndarray = field(repr=False)
    sector: np.ndarray = field(repr=False)

    @property
    def bar_diverges(self) -> bool:
        return self.bar_trend > BOUNDED_SLOPE

    @property
    def sector_diverges(self) -> bool:
        return self.sector_trend > BOUNDED_SLOPE


def bar_and_sector_ratios(samples: SpectralSamples) -> RatioReport:
    """``|1 - f| / (1 - |f|)`` and ``|Im f| / (1 - Re f)`` over the grid."""
    gap = samples.one_minus_abs
    if np.any(~(gap > 0)):
        raise ValueError("not strictly aperiodic on grid")
    d = samples.defect
    bar = np.abs(d) / gap
    sector = np.abs(d.imag) / d.real
    th = samples.theta
    ib, is_ = int(np.argmax(bar)), int(np.argmax(sector))
    return RatioReport(
        float(bar[ib]), float(th[ib]), float(sector[is_]), float(th[is_]),
        small_theta_trend(th, bar), small_theta_trend(th, sector), bar, sector,
    )


# ---------------------------------------------------------------------------
# gauge functions


@dataclass(frozen=True, eq=False)
class PsiSamples:
    theta: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    kind: str


def psi_eval(kind: str, nu: RepresentativeMeasure | None, grid: ThetaGrid | np.ndarray) -> PsiSamples:
    """Gauge functions ``psi`` and ``psi'`` for the hypothesis check.

    * ``cm``: ``sum w t theta / (s (s + t theta))`` and ``sum w t / (s + t theta)**2``;
    * ``ccm``: ``theta**2 sum w t / (s (s**2 + theta**2))`` and ``2 theta sum w t s / (s**2 + theta**2)**2``;
    * ``scm``: ``theta**2 sum w t / (s (s + theta)**2)`` and ``2 theta sum w t / (s + theta)**3``;
    * ``quadratic``: ``theta**2`` and ``2 theta``.
    """
    th = _theta(grid)
    if kind == "quadratic":
        return PsiSamples(th, th**2, 2.0 * th, kind)
    if nu is None:
        raise ValueError(f"psi of kind {kind!r} needs a representative measure")
    t, s, w = _atoms(nu)
    x = th[:, None]
    if kind == "cm":
        psi = np.sum(w * t * x / (s * (s + t * x)), axis=1)
        dpsi = np.sum(w * t / (s + t * x) ** 2, axis=1)
    elif kind == "ccm":
        r = s * s + x * x
        psi = th**2 * np.sum(w * t / (s * r), axis=1)
        dpsi = 2.0 * th * np.sum(w * t * s / r**2, axis=1)
    elif kind == "scm":
        psi = th**2 * np.sum(w * t / (s * (s + x) ** 2), axis=1)
        dpsi = 2.0 * th * np.sum(w * t / (s + x) ** 3, axis=1)
    else:
        raise ValueError(f"unknown psi kind {kind!r}")
    return PsiSamples(th, psi, dpsi, kind)


def psi_combine(weights: Sequence[float], parts: Sequence[PsiSamples]) -> PsiSamples:
    """Positive combination ``sum_j a_j psi_j`` (used for mixtures and convolutions)."""
    if not parts or len(weights) != len(parts) or any(a < 0 for a in weights):
        raise ValueError("need matching nonnegative weights")
    th = parts[0].theta
    for p in parts[1:]:
        if not np.array_equal(p.theta, th):
            raise ValueError("gauge samples live on different grids")
    psi = sum(a * p.psi for a, p in zip(weights, parts))
    dpsi = sum(a * p.dpsi for a, p in zip(weights, parts))
    return PsiSamples(th, psi, dpsi, "+".join(p.kind for p in parts))


# ---------------------------------------------------------------------------
# hypothesis (H)

ITEMS = ("i", "ii", "iii", "iv")


@dataclass(frozen=True)
class HReport:
    """Grid-restricted verdict for the four domination items and the doubling item.

    ``margins[item]`` holds the local constants per grid point: for item
    ``i`` the admissible ``c(theta) = (1 - |f|)/psi``; for ``ii``..``iv``
    the required ``C(theta)``.  ``trends`` are small-theta log slopes of
    ``C(theta)`` (of ``1/c(theta)`` for item ``i``).
    """

    c_est: float
    C_est: float
    D_est: float
    margins: dict[str, np.ndarray] = field(repr=False)
    trends: dict[str, float]
    verdict: dict[str, bool]
    D_pass: bool

    @property
    def passed(self) -> bool:
        return all(self.verdict[k] for k in ITEMS)


def hypothesis_H_check(samples: SpectralSamples, psi: PsiSamples) -> HReport:
    th = samples.theta
    if not np.array_equal(th, psi.theta):
        raise ValueError("spectral and gauge samples must share the grid")
    if np.any(~(psi.psi > 0)):
        raise ValueError("psi vanishes off 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        loc = {
            "i": samples.one_minus_abs / psi.psi,
            "ii": np.abs(th * samples.f1) / psi.psi,
            "iii": np.abs(samples.f1) / psi.dpsi,
            "iv": np.abs(th * samples.f2) / psi.dpsi,
        }
        doubling = psi.psi / (th * psi.dpsi)
    trends: dict[str, float] = {}
    verdict: dict[str, bool] = {}
    ci = loc["i"]
    ok_i = bool(np.all(np.isfinite(ci)) and np.all(ci > 0))
    trends["i"] = small_theta_trend(th, 1.0 / ci) if ok_i else math.inf
    verdict["i"] = ok_i and trends["i"] <= BOUNDED_SLOPE
    for k in ITEMS[1:]:
        v = loc[k]
        finite = bool(np.all(np.isfinite(v)))
        trends[k] = small_theta_trend(th, v) if finite else math.inf
        verdict[k] = finite and trends[k] <= BOUNDED_SLOPE
    c_est = float(np.min(ci)) if ok_i else 0.0
    C_est = float(max(np.max(loc[k]) for k in ITEMS[1:]))
    d_ok = bool(np.all(np.isfinite(doubling)))
    trend_d = small_theta_trend(th, doubling) if d_ok else math.inf
    trends["doubling"] = trend_d
    return HReport(c_est, C_est, float(np.max(doubling)), loc, trends, verdict, d_ok and trend_d <= BOUNDED_SLOPE)


# ---------------------------------------------------------------------------
# chi sector


def chi_eval(nu: RepresentativeMeasure, z: np.ndarray) -> np.ndarray:
    """``chi(z) = 1 - sum w / (1 - t + t z)``, evaluated as ``sum w t z / (s (s + t z))``."""
    _require(nu, "cm")
    zz = np.asarray(z, dtype=np.complex128)
    t, s, w = nu.t, nu.s, nu.w
    return np.sum(w * t * zz[..., None] / (s * (s + t * zz[..., None])), axis=-1)


def halfplane_grid(r_min: float = 1e-8, r_max: float = 1e2, per_decade: int = 4, angles: int = 17) -> np.ndarray:
    """Points ``r exp(i phi)`` with ``r`` geometric and ``phi`` in ``[-pi/2, pi/2]``."""
    r = np.logspace(math.log10(r_min), math.log10(r_max), int(round(per_decade * math.log10(r_max / r_min))) + 1)
    phi = np.linspace(-math.pi / 2, math.pi / 2, angles)
    return (r[:, None] * np.exp(1j * phi[None, :])).reshape(-1)


@dataclass(frozen=True)
class ChiReport:
    sup: float
    argmax: complex
    axis_y: np.ndarray = field(repr=False)
    axis_ratio: np.ndarray = field(repr=False)
    axis_trend: float
    violations: int

    @property
    def stabilizes(self) -> bool:
        return self.axis_trend <= BOUNDED_SLOPE and self.violations == 0


def chi_sector_check(
    nu: RepresentativeMeasure,
    zs: np.ndarray | None = None,
    axis_y: np.ndarray | None = None,
) -> ChiReport:
    """Sector ratio ``|Im chi| / Re chi`` on the closed right half-plane.

    The trend is taken along the positive imaginary axis as ``y -> 0``.
    """
    zs = halfplane_grid() if zs is None else np.asarray(zs, dtype=np.complex128)
    if np.any(zs == 0) or np.any(zs.real < 0):
        raise ValueError("grid must avoid 0 and stay in Re z >= 0")
    y = np.logspace(-8, 2, 41) if axis_y is None else np.asarray(axis_y, dtype=np.float64)
    chi = chi_eval(nu, zs)
    bad = chi.real <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bad, np.inf, np.abs(chi.imag) / chi.real)
    i = int(np.argmax(ratio))
    ca = chi_eval(nu, 1j * y)
    axis_ratio = np.abs(ca.imag) / ca.real
    order = np.argsort(y)[:TREND_POINTS]
    trend = loglog_slope(1.0 / y[order], axis_ratio[order])
    return ChiReport(float(ratio[i]), complex(zs[i]), y, axis_ratio, trend, int(bad.sum()))


# ---------------------------------------------------------------------------
# diagnostics from the proofs


def _pw(x: np.ndarray, k: int) -> np.ndarray:
    return x**k if k >= 0 else np.zeros_like(x)


def power_kernel_derivatives(s: SpectralSamples, n: int, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``h = f**n (1 - f)**m`` and its first two derivatives by the product rule."""
    f, f1, f2, D = s.f, s.f1, s.f2, s.defect
    u = f**n
    u1 = n * _pw(f, n - 1) * f1
    u2 = (n * (n - 1) * _pw(f, n - 2) * f1**2 if n >= 2 else 0) + n * _pw(f, n - 1) * f2
    v = D**m
    v1 = -m * _pw(D, m - 1) * f1
    v2 = (m * (m - 1) * _pw(D, m - 2) * f1**2 if m >= 2 else 0) - m * _pw(D, m - 1) * f2
    return u * v, u1 * v + u * v1, u2 * v + 2 * u1 * v1 + u * v2


@dataclass(frozen=True)
class DiagnosticsTable:
    ns: np.ndarray
    columns: dict[str, np.ndarray]
    m: int

    def running_sup(self, name: str) -> np.ndarray:
        return np.maximum.accumulate(self.columns[name])

    def growth(self, name: str) -> float:
        """Log slope of the running supremum over the top half of ``ns``."""
        v = self.running_sup(name)
        sel = self.ns >= self.ns[-1] / 2
        if np.all(v[sel] == 0):
            return 0.0
        return loglog_slope(self.ns[sel], v[sel])


def proof_condition_diagnostics(samples: SpectralSamples, ns: Sequence[int], m: int = 1) -> DiagnosticsTable:
    """Integral monitors for ``sigma_n = n (mu^n - mu^{n+1})``.

    Columns (integrals over ``[-pi, pi]``, by symmetry twice the trapezoid
    rule on the grid):

    * ``int_abs_over_theta``: ``int |sigma_n^| / |theta|``
    * ``int_abs_d1``: ``int |sigma_n^'|``
    * ``int_theta_d2``: ``int |theta| |sigma_n^''|``
    * ``n_int_abs``: ``n int |sigma_n^|``
    * ``int_d1_sq``: ``int |sigma_n^'|**2 / (n + 1)``
    * ``bc_m``: ``n**m int |theta| |(mu_hat**n (1 - mu_hat)**m)''|``
    """
    th = samples.theta
    trap = lambda y: 2.0 * float(np.trapezoid(y, th))  # noqa: E731
    ns = np.asarray(ns, dtype=np.int64)
    names = ("int_abs_over_theta", "int_abs_d1", "int_theta_d2", "n_int_abs", "int_d1_sq", "bc_m")
    cols = {k: np.empty(ns.size) for k in names}
    for i, n in enumerate(ns):
        n = int(n)
        h, h1, h2 = power_kernel_derivatives(samples, n, 1)
        sig, sig1, sig2 = n * h, n * h1, n * h2
        a = np.abs(sig)
        cols["int_abs_over_theta"][i] = trap(a / th)
        cols["int_abs_d1"][i] = trap(np.abs(sig1))
        cols["int_theta_d2"][i] = trap(th * np.abs(sig2))
        cols["n_int_abs"][i] = n * trap(a)
        cols["int_d1_sq"][i] = trap(np.abs(sig1) ** 2) / (n + 1)
        if m == 1:
            cols["bc_m"][i] = cols["int_theta_d2"][i]
        else:
            _, _, g2 = power_kernel_derivatives(samples, n, m)
            cols["bc_m"][i] = float(n) ** m * trap(th * np.abs(g2))
    return DiagnosticsTable(ns, cols, m)
