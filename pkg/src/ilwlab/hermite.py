"""Hermite polynomials with variance parameter and the Wick variance constants.

H_k(x; sigma) is generated by exp(t x - sigma t^2 / 2) and satisfies
H_k = x H_{k-1} - (k-1) sigma H_{k-2}.  The variance constants are the
pointwise variances of the truncated Gaussian fields under the convention
f(x) = (1/2pi) sum_n f^(n) e^{inx} with Var g_n = 2pi, e.g.

    sigma_{delta,N} = (1/pi) sum_{n=1}^{N} 1/K_delta(n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .dispersion import Depth, Finite, Infinite, FamilyError, k_delta, l_delta

MAX_DEGREE = 64


class DegreeError(ValueError):
    pass


def hermite(k: int, x, sigma: float):
    """H_k(x; sigma); scalar in, scalar out, array in, array out."""
    if k < 0 or k > MAX_DEGREE:
        raise DegreeError(f"Hermite degree must be in [0, {MAX_DEGREE}], got {k}")
    if np.ndim(x) == 0:
        return float(_backend.kernels.hermite(int(k), np.array([float(x)]), float(sigma))[0])
    return _backend.kernels.hermite(int(k), np.asarray(x, dtype=float), float(sigma))


def hermite_shift_check(k: int, x: float, y: float, sigma: float):
    """Both sides of H_k(x + y) = sum_l C(k, l) x^{k-l} H_l(y)."""
    lhs = hermite(k, x + y, sigma)
    rhs = math.fsum(math.comb(k, l) * x ** (k - l) * hermite(l, y, sigma) for l in range(k + 1))
    return lhs, rhs


def generating_coefficients(kmax: int, x: float, sigma: float) -> np.ndarray:
    """k! [t^k] exp(t x - sigma t^2 / 2) for k = 0..kmax, by Cauchy product of the two series.

    Independent of the recursion; used as its oracle.
    """
    a = [x**j / math.factorial(j) for j in range(kmax + 1)]
    b = [0.0] * (kmax + 1)
    for j in range(kmax // 2 + 1):
        b[2 * j] = (-sigma / 2.0) ** j / math.factorial(j)
    out = np.empty(kmax + 1)
    for k in range(kmax + 1):
        out[k] = math.factorial(k) * math.fsum(a[i] * b[k - i] for i in range(k + 1))
    return out


def hermite_floor(k: int, grid: Optional[np.ndarray] = None) -> float:
    """a_k = -min_x H_k(x; 1) for even k, found on a dense grid then polished.

    H_k(x; sigma) >= -a_k sigma^{k/2} for every x.
    """
    if k % 2:
        raise ValueError("the floor only exists for even degree")
    if grid is None:
        grid = np.linspace(-2.0 * math.sqrt(k) - 2, 2.0 * math.sqrt(k) + 2, 20001)
    vals = hermite(k, grid, 1.0)
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    # golden-section on the bracketing cell
    phi = (math.sqrt(5) - 1) / 2
    for _ in range(100):
        a = hi - phi * (hi - lo)
        b = lo + phi * (hi - lo)
        if hermite(k, a, 1.0) < hermite(k, b, 1.0):
            hi = b
        else:
            lo = a
    return -min(float(vals[i]), hermite(k, 0.5 * (lo + hi), 1.0))


@dataclass(frozen=True)
class WickVariance:
    """A Wick variance constant and where it came from.

    ``provenance`` is one of "deep", "shallow", "kdv", "kdv-limit"; ``depth``
    and ``N`` are None where they do not apply.
    """

    sigma: float
    provenance: str
    depth: Optional[Depth] = None
    N: Optional[int] = None

    def __float__(self):
        return self.sigma


def _inverse_sum(values):
    # smallest terms first
    return math.fsum(sorted(1.0 / np.asarray(values, dtype=float)))


def sigma_deep(depth: Depth, N: int) -> WickVariance:
    """Pointwise variance of P_N X_delta, (1/pi) sum_{n<=N} 1/K_delta(n)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not isinstance(depth, (Finite, Infinite)):
        raise FamilyError("sigma_deep needs a finite or infinite depth")
    n = np.arange(1, N + 1)
    return WickVariance(_inverse_sum(k_delta(depth, n)) / math.pi, "deep", depth, N)


def sigma_shallow(depth: Depth, N: int) -> WickVariance:
    """Pointwise variance of the scaled field, (1/pi) sum_{n<=N} 1/L_delta(n) = (delta/3) sigma_deep."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not isinstance(depth, Finite):
        raise FamilyError("sigma_shallow needs a finite depth")
    n = np.arange(1, N + 1)
    return WickVariance(_inverse_sum(l_delta(depth, n)) / math.pi, "shallow", depth, N)


def sigma_kdv(N: int) -> WickVariance:
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(1, N + 1, dtype=float)
    return WickVariance(_inverse_sum(n * n) / math.pi, "kdv", None, N)


def sigma_kdv_limit() -> WickVariance:
    # (1/pi) * zeta(2)
    return WickVariance(math.pi / 6.0, "kdv-limit")
