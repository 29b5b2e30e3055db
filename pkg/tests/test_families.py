from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rittlab.families import (
    CMFunctionSpec,
    TailTargetError,
    build_ccm,
    build_centered_cm_function,
    build_cm,
    build_from_cm_function,
    build_from_nu,
    build_gamma,
    build_scm,
    discretize_density,
    gamma_coeffs,
    gamma_density,
    gamma_fourier,
    gamma_tail,
    iterated_logs,
    iterlog_f,
    iterlog_tail_integral,
    moments_from_nu,
    normalize_nu,
    power_density,
    required_n_max,
    scm_one_sided,
    weighted_tail,
)
from rittlab.lattice import convolve, delta, mixture, reverse
from rittlab.monotone_char import cm_check

from oracles import transform

atoms = st.lists(
    st.tuples(st.floats(0.0, 0.97), st.floats(0.01, 1.0)), min_size=1, max_size=5
)


# ---------------------------------------------------------------------------
# representative measures


@pytest.mark.parametrize("family, t, w", [("cm", 0.5, 0.5), ("ccm", 0.5, 0.25), ("scm", 0.0, 0.5)])
def test_single_atom_normalization(family, t, w):
    nu = normalize_nu([[t, 7.0]], family)
    assert nu.w.tolist() == [pytest.approx(w, rel=1e-15)]


@given(atoms, st.sampled_from(["cm", "ccm", "scm"]))
def test_normalization_functional(nodes, family):
    nu = normalize_nu(nodes, family)
    target = 0.5 if family == "scm" else 1.0
    assert nu.normalization() == pytest.approx(target, rel=1e-14)
    assert np.all(np.diff(nu.t) > 0) and np.all(nu.w > 0)


@given(atoms, st.floats(0.1, 100.0))
def test_normalization_ignores_scale(nodes, c):
    a = normalize_nu(nodes, "cm")
    b = normalize_nu([(t, c * w) for t, w in nodes], "cm")
    assert np.allclose(a.w, b.w, rtol=1e-13)


def test_duplicate_atoms_merge():
    nu = normalize_nu([[0.5, 1.0], [0.25, 0.0], [0.5, 1.0]], "cm")
    assert nu.t.tolist() == [0.5] and nu.w.tolist() == [0.5]


@pytest.mark.parametrize(
    "nodes, msg",
    [([[1.0, 1.0]], "atom at 1"), ([[0.5, -1.0]], "nonnegative"), ([[0.5, 0.0]], "zero total"), ([], "nonempty")],
)
def test_normalization_errors(nodes, msg):
    with pytest.raises(ValueError, match=msg):
        normalize_nu(nodes, "cm")


def test_moments_single_atoms():
    nu = normalize_nu([[0.5, 1.0]], "cm")
    assert moments_from_nu(nu, 30).tolist() == [2.0 ** -(n + 1) for n in range(31)]
    nu0 = normalize_nu([[0.0, 1.0]], "cm")
    m = moments_from_nu(nu0, 5)
    assert m[0] == 1.0 and np.all(m[1:] == 0.0)


@given(atoms)
def test_moment_differences_are_nonnegative(nodes):
    nu = normalize_nu(nodes, "cm")
    assert cm_check(moments_from_nu(nu, 60), 8, tol=1e-15).passed


@given(atoms, st.integers(0, 40), st.integers(0, 2))
def test_weighted_tail_against_summation(nodes, n, power):
    nu = normalize_nu(nodes, "cm")
    k = np.arange(n, n + 6000, dtype=np.float64)
    direct = np.array([math.fsum(k**power * w * t**k) for t, w in zip(nu.t, nu.w)])
    assert np.allclose(weighted_tail(nu, n, power), direct, rtol=1e-10, atol=1e-300)


def test_required_n_max_is_minimal():
    nu = normalize_nu([[0.9, 1.0], [0.3, 1.0]], "cm")
    n = required_n_max(nu, 1e-10)
    assert weighted_tail(nu, n + 1, 0).sum() <= 1e-10 < weighted_tail(nu, n, 0).sum()


# ---------------------------------------------------------------------------
# builders


def test_build_cm_geometric():
    mu = build_cm(normalize_nu([[0.5, 1.0]], "cm"), 60)
    assert mu.lo == 0 and mu.coeffs.tolist() == [2.0 ** -(n + 1) for n in range(61)]
    assert mu.tail_bound == 2.0**-61


def test_build_ccm_single_atom():
    nu = normalize_nu([[0.5, 1.0]], "ccm")
    mu = build_ccm(nu, 80)
    assert mu.lo == -1 and mu.at(-1) == 0.5
    assert [mu.at(n) for n in range(5)] == [0.25 * 2.0**-n for n in range(5)]
    k = mu.indices.astype(float)
    missing_first_moment = weighted_tail(nu, 81, 1).sum()
    assert abs(math.fsum(k * mu.coeffs) + missing_first_moment) <= 1e-12


@given(atoms)
def test_ccm_is_centered(nodes):
    nu = normalize_nu(nodes, "ccm")
    mu = build_ccm(nu, 400)
    k = mu.indices.astype(float)
    mean = math.fsum(k * mu.coeffs) + weighted_tail(nu, 401, 1).sum()
    assert abs(mean) <= 1e-12
    assert abs(mu.mass + mu.tail_bound - 1.0) <= 1e-12


def test_build_scm_single_atom():
    mu = build_scm(normalize_nu([[0.5, 1.0]], "scm"), 60)
    assert mu.at(0) == 0.5
    assert all(mu.at(n) == mu.at(-n) == 2.0 ** -(n + 2) for n in range(1, 61))
    assert mu.mass + mu.tail_bound == pytest.approx(1.0, abs=1e-15)


@given(atoms)
def test_scm_is_symmetrized_one_sided(nodes):
    nu = normalize_nu(nodes, "scm")
    mu = build_scm(nu, 200)
    one = scm_one_sided(nu, 200)
    sym = mixture(0.5, one, reverse(one))
    lo, hi = mu.lo, mu.hi
    assert np.max(np.abs(mu.dense(lo, hi) - sym.dense(lo, hi))) <= 1e-15


@given(atoms, st.sampled_from(["cm", "ccm", "scm"]))
def test_builders_reproduce_moments(nodes, family):
    nu = normalize_nu(nodes, family)
    mu = build_from_nu(nu, 100)
    m = moments_from_nu(nu, 100)
    assert np.array_equal(np.array([mu.at(n) for n in range(1, 101)]), m[1:])
    assert abs(mu.mass + mu.tail_bound - 1.0) <= 1e-12


def test_family_mismatch():
    with pytest.raises(ValueError, match="cm"):
        build_cm(normalize_nu([[0.5, 1.0]], "ccm"), 10)


def test_tail_target_error_estimates_n_max():
    nu = normalize_nu([[0.5, 1.0]], "cm")
    with pytest.raises(TailTargetError) as err:
        build_cm(nu, 10, trim=1e-12)
    need = err.value.required_n_max
    assert need == 39
    build_cm(nu, need, trim=1e-12)


# ---------------------------------------------------------------------------
# the gamma family


def _gamma_oracle(gamma: Fraction, n: int) -> list[Fraction]:
    a = [Fraction(0), gamma]
    for k in range(1, n):
        a.append(a[-1] * (k - gamma) / (k + 1))
    return a


def test_gamma_half_exact_values():
    a = gamma_coeffs(0.5, 4)
    assert a[1:5].tolist() == [0.5, 0.125, 0.0625, 5 / 128]
    assert [float(x) for x in _gamma_oracle(Fraction(1, 2), 4)[1:]] == a[1:5].tolist()


@pytest.mark.parametrize("gamma", [0.1, 0.5, 0.9])
def test_gamma_against_rational_recurrence(gamma):
    a = gamma_coeffs(gamma, 300)
    exact = _gamma_oracle(Fraction(gamma), 300)
    assert np.allclose(a, [float(x) for x in exact], rtol=1e-13, atol=0)


def test_gamma_partial_sum():
    a = gamma_coeffs(0.5, 10**6)
    assert abs(math.fsum(a) - 1.0) <= 2e-3
    assert gamma_tail(0.5, 10**6) == pytest.approx(1.0 - math.fsum(a), rel=1e-8)


def test_gamma_is_cm():
    mu = build_gamma(0.5, 300)
    assert cm_check(mu.coeffs[:201], 6, tol=1e-14).passed


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.5, 1.5])
def test_gamma_range(gamma):
    with pytest.raises(ValueError):
        gamma_coeffs(gamma, 10)


def test_gamma_generating_function():
    # delta_1 * mu has generating function 1 - (1 - x)**gamma
    mu = build_gamma(0.5, 1 << 16)
    tau = convolve(delta(1), mu)
    theta = np.linspace(0.5, math.pi, 64)
    series = transform(tau.lo, tau.coeffs, theta)
    closed = 1.0 - (1.0 - np.exp(1j * theta)) ** 0.5
    assert np.max(np.abs(series - closed)) <= tau.tail_bound + 1e-10
    assert np.allclose(gamma_fourier(0.5, theta), transform(mu.lo, mu.coeffs, theta), atol=mu.tail_bound + 1e-12)


@pytest.mark.parametrize("j_zero, rtol", [(30, 1e-6), (45, 5e-8)])
def test_gamma_density_reproduces_coefficients(j_zero, rtol):
    # the t**-gamma singularity limits the panel nearest 0; mass beyond 1 - 2**-49 is dropped
    nu = discretize_density(gamma_density(0.5), "cm", j_zero=j_zero)
    m = moments_from_nu(nu, 50)
    a = gamma_coeffs(0.5, 51)
    assert np.allclose(m, a[1:], rtol=rtol, atol=0)


# ---------------------------------------------------------------------------
# densities


@pytest.mark.parametrize("beta", [0.3, 1.0, 2.5])
def test_power_density_moments(beta):
    # int_0^1 t**n (1-t)**beta dt = B(n+1, beta+1); the CM normalization is int (1-t)**(beta-1) = 1/beta
    nu = discretize_density(power_density(beta), "cm")
    m = moments_from_nu(nu, 10)
    raw = np.array([math.exp(math.lgamma(n + 1) + math.lgamma(beta + 1) - math.lgamma(n + beta + 2)) for n in range(11)])
    # dropping mass within 2**-49 of 1 costs a fraction 2**(-49 beta) of the normalization
    assert np.allclose(m, raw * beta, rtol=2.0 ** (1 - 49 * beta) + 1e-10, atol=0)


# ---------------------------------------------------------------------------
# iterated logs


def test_first_iterated_log():
    assert iterated_logs(math.e - 1, 1)[0] == pytest.approx(1.0, rel=1e-15)


def test_iterlog_f():
    spec = CMFunctionSpec(1.0, (2.0,))
    x = 10.0
    assert iterlog_f(spec, x) == pytest.approx(1.0 / (x * math.log1p(x) ** 2), rel=1e-15)


@pytest.mark.parametrize(
    "alpha, alphas, summable",
    [(1.5, (), True), (1.0, (), False), (1.0, (1.5,), True), (1.0, (1.0, 2.0), True), (1.0, (1.0, 1.0), False), (0.5, (5.0,), False)],
)
def test_summability(alpha, alphas, summable):
    assert CMFunctionSpec(alpha, alphas).summable is summable


def test_not_normalizable():
    with pytest.raises(ValueError, match="not normalizable"):
        build_from_cm_function(CMFunctionSpec(1.0, ()), 100)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_tail_integral_power(alpha):
    x0 = 1234.5
    assert iterlog_tail_integral(CMFunctionSpec(alpha, ()), x0) == pytest.approx(x0 ** (1 - alpha) / (alpha - 1), rel=1e-10)


def test_tail_integral_survives_large_arguments():
    assert iterlog_tail_integral(CMFunctionSpec(2.0, (1.0,)), 1e300) > 0


@pytest.mark.parametrize("alpha, alphas", [(1.5, ()), (2.0, ()), (1.0, (2.0,))])
def test_cm_function_builder(alpha, alphas):
    spec = CMFunctionSpec(alpha, alphas)
    mu = build_from_cm_function(spec, 5000)
    assert mu.meta["nu_available"] is False
    assert abs(mu.mass - 1.0) <= mu.tail_bound
    ratio = mu.coeffs[1:50] / mu.coeffs[:49]
    f = iterlog_f(spec, np.arange(1, 51, dtype=float))
    assert np.allclose(ratio, f[1:] / f[:-1], rtol=1e-14)
    assert cm_check(mu.coeffs[:200], 6, tol=1e-15).passed


def test_cm_function_tail_target():
    with pytest.raises(TailTargetError) as err:
        build_from_cm_function(CMFunctionSpec(2.0, ()), 1000, trim=1e-6)
    assert err.value.required_n_max is not None and err.value.required_n_max > 1000


def test_centered_cm_function():
    mu = build_centered_cm_function(CMFunctionSpec(3.5, ()), 20000, atom_at=-2)
    k = mu.indices.astype(float)
    assert abs(math.fsum(k * mu.coeffs)) <= 1e-12
    assert mu.lo == -2 and mu.at(-1) == 0.0
    with pytest.raises(ValueError):
        build_centered_cm_function(CMFunctionSpec(3.5, ()), 100, atom_at=0)
