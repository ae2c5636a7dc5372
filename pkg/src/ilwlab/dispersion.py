"""Dispersion symbols of the intermediate long wave family.

All symbols are evaluated through the auxiliary functions

    g(x)  = (x coth x - 1) / x**2          (g(0) = 1/3)
    h(x)  = 1 - x coth x + |x|             (the "frak h" of the depth lemma)

so that, with x = delta*|n|,

    K_delta(n) = delta * n**2 * g(x) = |n| - h(x) / delta
    L_delta(n) = 3 * n**2 * g(x)
    q_delta(n) = h(x) / delta

Near x = 0 both ``x coth x - 1`` and ``1 - 2x/(e^{2x}-1)`` lose all their
digits to cancellation, so a Taylor series (Bernoulli numbers) is used for
|x| <= 1.5.  For |x| > 20 the exponential is folded into e^{-2x} so nothing
overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from . import _backend

__all__ = [
    "Depth",
    "Finite",
    "Infinite",
    "Shallow",
    "INFINITE",
    "SHALLOW",
    "FamilyError",
    "depth_from_value",
    "h_frak",
    "g_coth",
    "k_delta",
    "l_delta",
    "q_delta",
    "h_shallow",
    "h_shallow_series",
    "mittag_leffler_l",
    "mittag_leffler_tail_bound",
    "symbol",
]

SERIES_CUTOFF = 1.5
SATURATION_CUTOFF = 20.0


class FamilyError(ValueError):
    """Operation called with a depth that does not belong to its family."""


@dataclass(frozen=True)
class Finite:
    delta: float

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"finite depth must be a positive real, got {self.delta!r}")

    def __str__(self):
        return f"{self.delta:g}"


@dataclass(frozen=True)
class Infinite:
    """Deep-water (Benjamin-Ono) limit."""

    def __str__(self):
        return "inf"


@dataclass(frozen=True)
class Shallow:
    """Shallow-water (KdV) limit; only meaningful for scaled symbols."""

    def __str__(self):
        return "0"


Depth = Union[Finite, Infinite, Shallow]
INFINITE = Infinite()
SHALLOW = Shallow()


def depth_from_value(value) -> Depth:
    """Parse ``2``, ``"inf"``, ``0`` ... into a depth variant."""
    if isinstance(value, (Finite, Infinite, Shallow)):
        return value
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("inf", "infinity", "bo", "deep"):
            return INFINITE
        if v in ("0", "shallow", "kdv"):
            return SHALLOW
        value = float(v)
    value = float(value)
    if math.isinf(value):
        return INFINITE
    if value == 0:
        return SHALLOW
    return Finite(value)


def _bernoulli_even(count):
    # exact B_0..B_{2*count} via the standard recurrence
    m_max = 2 * count
    B = [Fraction(0)] * (m_max + 1)
    B[0] = Fraction(1)
    for m in range(1, m_max + 1):
        acc = Fraction(0)
        for j in range(m):
            acc += math.comb(m + 1, j) * B[j]
        B[m] = -acc / (m + 1)
    return B


def _g_series_coefficients(count=40):
    B = _bernoulli_even(count)
    # x coth x = sum_j 2^{2j} B_{2j} x^{2j} / (2j)!
    return np.array(
        [float(Fraction(2 ** (2 * j)) * B[2 * j] / math.factorial(2 * j)) for j in range(1, count)]
    )


# _G_COEF[j] multiplies x^{2j} in g(x)
_G_COEF = _g_series_coefficients()


def _poly_even(coef, x):
    x2 = x * x
    out = np.zeros_like(x)
    for c in coef[::-1]:
        out = out * x2 + c
    return out


def g_coth(x):
    """(x coth x - 1)/x**2, even, with g(0) = 1/3."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF
    out[small] = _poly_even(_G_COEF, x[small])
    big = ~small
    xb = x[big]
    # coth x = 1 + 2 e^{-2x} / (1 - e^{-2x})
    e = np.exp(-2.0 * xb)
    coth = 1.0 + 2.0 * e / -np.expm1(-2.0 * xb)
    out[big] = (xb * coth - 1.0) / (xb * xb)
    return out[()] if out.ndim == 0 else out


def h_frak(x):
    """The auxiliary function 1 - x coth(x) + |x|.

    Even, vanishes at 0, and satisfies 0 < h(x) < min(1, |x|) elsewhere.
    Accepts scalars or arrays.
    """
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF
    xs = x[small]
    out[small] = xs - xs * xs * _poly_even(_G_COEF, xs)
    mid = (~small) & (x <= SATURATION_CUTOFF)
    xm = x[mid]
    out[mid] = 1.0 - 2.0 * xm / np.expm1(2.0 * xm)
    sat = x > SATURATION_CUTOFF
    xl = x[sat]
    with np.errstate(under="ignore"):
        e = np.exp(-2.0 * xl)
    out[sat] = 1.0 - 2.0 * xl * e / (1.0 - e)
    return out[()] if out.ndim == 0 else out


def _freq(n):
    return np.abs(np.asarray(n, dtype=float))


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def k_delta(depth: Depth, n):
    """Deep-water symbol K_delta(n) = n coth(delta n) - 1/delta; |n| at infinite depth."""
    m = _freq(n)
    if isinstance(depth, Infinite):
        return _scalar(m.copy())
    if not isinstance(depth, Finite):
        raise FamilyError("k_delta is defined for finite or infinite depth only")
    d = depth.delta
    x = d * m
    # |n| - h(x)/delta cancels badly for small x; below saturation use g instead
    out = np.where(
        x <= SATURATION_CUTOFF,
        d * m * m * g_coth(np.minimum(x, SATURATION_CUTOFF)),
        m - h_frak(x) / d,
    )
    return _scalar(out)


def l_delta(depth: Depth, n):
    """Scaled symbol L_delta(n) = 3 K_delta(n)/delta; n**2 in the shallow limit."""
    m = _freq(n)
    if isinstance(depth, Shallow):
        return _scalar(m * m)
    if not isinstance(depth, Finite):
        raise FamilyError("l_delta is defined for finite depth or the shallow limit only")
    return _scalar(3.0 * m * m * g_coth(depth.delta * m))


def q_delta(depth: Depth, n):
    """|n| - K_delta(n), bounded by 1/delta."""
    if not isinstance(depth, Finite):
        raise FamilyError("q_delta needs a finite depth")
    return _scalar(h_frak(depth.delta * _freq(n)) / depth.delta)


def h_shallow(depth: Depth, n):
    """h(n, delta) = 1 - L_delta(n)/n**2, in (0, 1) for n != 0."""
    if not isinstance(depth, Finite):
        raise FamilyError("h_shallow needs a finite depth")
    m = _freq(n)
    if np.any(m == 0):
        raise ValueError("h(n, delta) is undefined at n = 0")
    x = depth.delta * m
    # 1 - 3 g(x); the leading 1/3 cancels exactly in the series branch
    small = -3.0 * x * x * _poly_even(_G_COEF[1:], np.minimum(x, SERIES_CUTOFF))
    out = np.where(x <= SERIES_CUTOFF, small, 1.0 - 3.0 * g_coth(x))
    return _scalar(out)


def h_shallow_series(delta: float, n: int, terms: int = 100_000) -> float:
    """Direct partial sum 6 delta^2 sum_k n^2 / (k^2 pi^2 (k^2 pi^2 + delta^2 n^2)).

    Oracle only; converges like 1/terms**3.
    """
    k = np.arange(terms, 0, -1, dtype=float)
    kp2 = (k * math.pi) ** 2
    return float(6.0 * delta**2 * np.sum(n * n / (kp2 * (kp2 + (delta * n) ** 2))))


def mittag_leffler_l(delta: float, n: int, terms: int) -> float:
    """Partial sum 6 n^2 sum_{k<=terms} 1/(k^2 pi^2 + delta^2 n^2) of the series for L_delta(n)."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if n == 0:
        return 0.0
    return _backend.kernels.mittag_leffler_sum(float(delta), float(n), int(terms))


def mittag_leffler_tail_bound(n: int, terms: int) -> float:
    """Upper bound 6 n^2 / (pi^2 terms) on L_delta(n) minus the partial sum."""
    return 6.0 * n * n / (math.pi**2 * terms)


def symbol(kind: str, depth: Depth, n):
    """Per-mode precision symbol: ``"deep"`` -> K_delta, ``"scaled"`` -> L_delta."""
    if kind == "deep":
        return k_delta(depth, n)
    if kind == "scaled":
        return l_delta(depth, n)
    raise ValueError(f"unknown symbol kind {kind!r}")
