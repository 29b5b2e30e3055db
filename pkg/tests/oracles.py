"""Independent reference computations used by the tests.

Nothing here imports the package: convolution powers by plain loops or
exact rationals, transforms by direct summation.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def binomial_ritt(n: int) -> Fraction:
    """``n ||(delta_0 - mu) * mu^n||_1`` for ``mu = (delta_0 + delta_1)/2``, exactly.

    ``mu^n - mu^{n+1}`` has coefficients ``(2 C(n, k) - C(n+1, k)) / 2**(n+1)``.
    """
    total = sum(abs(2 * math.comb(n, k) - math.comb(n + 1, k)) for k in range(n + 2))
    return Fraction(n * total, 2 ** (n + 1))


def dense_power(coeffs: list[float], n: int) -> np.ndarray:
    out = np.array([1.0])
    for _ in range(n):
        out = np.convolve(out, coeffs)
    return out


def kernel_norm(coeffs: list[float], offset: int, m: int, n: int) -> float:
    """``n**m ||(delta_0 - mu)^{*m} * mu^{*n}||_1`` by plain dense convolution."""
    lo = min(0, offset)
    hi = max(0, offset + len(coeffs) - 1)
    diff = np.zeros(hi - lo + 1)
    diff[-lo] += 1.0
    diff[offset - lo : offset - lo + len(coeffs)] -= coeffs
    k = dense_power(coeffs, n)
    for _ in range(m):
        k = np.convolve(k, diff)
    return float(n**m * np.abs(k).sum())


def transform(offset: int, coeffs, theta) -> np.ndarray:
    k = offset + np.arange(len(coeffs))
    return np.exp(1j * np.outer(np.asarray(theta), k)) @ np.asarray(coeffs, dtype=complex)


def richardson_derivative(fn, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Central difference with one Richardson step (error O(h**4))."""
    d1 = (fn(x + h) - fn(x - h)) / (2 * h)
    d2 = (fn(x + h / 2) - fn(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def relative_error(approx: np.ndarray, exact: np.ndarray, floor: float = 1e-9) -> float:
    """Max of ``|approx - exact| / (|exact| + floor * max|exact|)``."""
    scale = np.abs(exact) + floor * np.max(np.abs(exact))
    return float(np.max(np.abs(approx - exact) / scale))
