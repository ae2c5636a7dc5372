"""Distances between the Gaussian and Gibbs measures.

Closed forms for diagonal (product) Gaussians: Hellinger affinity, KL via
phi(t) = t - 1 - log t, Kakutani sums.  Monte-Carlo estimators for Gibbs
reweightings of a shared base sample: Scheffe total variation, Ky-Fan for
coupled pairs, and an energy distance on finite Fourier marginals as the
weak-convergence surrogate.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .dispersion import Depth, Finite, k_delta
from .fields import FieldKind, sobolev_norm_sq


@dataclass(frozen=True)
class ProductGaussianSpec:
    """Per-mode variances a_n, n = 1..M, of a diagonal mean-zero Gaussian.

    Each a_n is the variance of Re u^(n) (equivalently of Im u^(n)); the
    negative modes are determined by reality.
    """

    variances: np.ndarray
    tag: str = ""

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float)
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("variances must be positive and finite")
        object.__setattr__(self, "variances", v)

    @classmethod
    def from_kind(cls, kind: FieldKind, M: int):
        # Var Re u^(n) = pi / S(n)
        return cls(math.pi / kind.symbols(M), kind.label)

    def __len__(self):
        return self.variances.shape[0]


def _pair(a: ProductGaussianSpec, b: ProductGaussianSpec, M: Optional[int] = None):
    if M is None:
        if len(a) != len(b):
            raise ValueError("mode counts differ")
        M = len(a)
    if M > len(a) or M > len(b):
        raise ValueError("not enough modes")
    return a.variances[:M], b.variances[:M]


def hellinger_mode_factor(a, b):
    """Bhattacharyya coefficient of N(0, a) and N(0, b) on the line."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return math.sqrt(2.0) * (a * b) ** 0.25 / np.sqrt(a + b)


def _log_affinity(va, vb):
    # a complex mode contributes the real factor squared, 2 sqrt(ab)/(a+b) = 1/cosh(r)
    # with r = log(a/b)/2; log cosh r = log1p(2 sinh(r/2)^2) is >= 0 and exact near r = 0
    r = 0.5 * np.log(va / vb)
    return -math.fsum(np.log1p(2.0 * np.sinh(0.5 * r) ** 2))


def hellinger_product(a: ProductGaussianSpec, b: ProductGaussianSpec, M: Optional[int] = None) -> float:
    """Hellinger affinity H(mu, nu) in [0, 1].

    Each complex mode contributes its real factor squared (Re and Im parts).
    Underflows to 0 for wildly mismatched specs.
    """
    va, vb = _pair(a, b, M)
    return float(math.exp(_log_affinity(va, vb)))


def hellinger_distance(a: ProductGaussianSpec, b: ProductGaussianSpec, M: Optional[int] = None) -> float:
    """(1 - H)^{1/2}."""
    va, vb = _pair(a, b, M)
    # 1 - e^x without cancellation
    return math.sqrt(-math.expm1(_log_affinity(va, vb)))


def phi(t):
    """t - 1 - log t, >= 0 with phi(1) = 0; accurate near t = 1."""
    t = np.asarray(t, dtype=float)
    out = (t - 1.0) - np.log1p(t - 1.0)
    return float(out) if out.ndim == 0 else out


def kl_product(a: ProductGaussianSpec, b: ProductGaussianSpec, M: Optional[int] = None) -> float:
    """KL(mu_a || mu_b) for product Gaussians with complex modes: sum_n phi(a_n / b_n)."""
    va, vb = _pair(a, b, M)
    return math.fsum(phi(va / vb))


@dataclass(frozen=True)
class KLResult:
    value: float
    tail_bound: float
    delta: float
    M: int


def kl_deep(delta: float, M: int, tail_terms: int = 1_000_000) -> KLResult:
    """KL(mu_delta || mu_infinity) from the first M modes, sum_n phi(n / K_delta(n)).

    The sum already covers both n and -n (each term integrates over the
    complex coefficient), so no doubling.  ``tail_bound`` bounds the
    neglected modes via phi(t) <= (t-1)^2 and n - K_delta(n) <= 1/delta,
    summed numerically up to ``tail_terms`` modes plus an integral remainder.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    depth = Finite(float(delta))
    n = np.arange(1, M + 1, dtype=float)
    t = n / k_delta(depth, n)
    value = math.fsum(np.sort(phi(t)))
    hi = max(M + 1, tail_terms)
    m = np.arange(M + 1, hi + 1, dtype=float)
    kk = k_delta(depth, m)
    tail = math.fsum(np.sort((1.0 / delta) ** 2 / kk**2))
    # beyond hi: K >= m - 1/delta, sum_{m>hi} 1/(m - 1/delta)^2 <= 1/(hi - 1/delta)
    tail += (1.0 / delta) ** 2 / max(hi - 1.0 / delta, 1.0)
    return KLResult(value, tail, float(delta), M)


@dataclass(frozen=True)
class PinskerReport:
    hellinger: float
    pinsker_bound: float
    ordered: bool


def pinsker_check(delta, M: int) -> PinskerReport:
    """d_H(mu_delta, mu_inf) <= sqrt(KL / 2) on the first M modes."""
    from .fields import bo_gauss, deep_gauss

    if delta == math.inf:
        return PinskerReport(0.0, 0.0, True)
    a = ProductGaussianSpec.from_kind(deep_gauss(Finite(float(delta))), M)
    b = ProductGaussianSpec.from_kind(bo_gauss(), M)
    dh = hellinger_distance(a, b)
    bound = math.sqrt(kl_product(a, b) / 2.0)
    return PinskerReport(dh, bound, dh <= bound)


def kakutani_sum(a: ProductGaussianSpec, b: ProductGaussianSpec, M: Optional[int] = None):
    """Partial sums S_m = sum_{n<=m} (a_n/b_n - 1)^2 for m = 1..M (array)."""
    va, vb = _pair(a, b, M)
    return np.cumsum((va / vb - 1.0) ** 2)


# -- Monte-Carlo distances ----------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def __iter__(self):
        return iter((self.value, self.stderr))


def scheffe_tv(log_f, log_g) -> Estimate:
    """Total variation between two reweightings of one base sample.

    d_TV(rho_f, rho_g) = (1/2) E_mu |f/Z_f - g/Z_g| with Z_f, Z_g estimated
    from the same draws.  The error is the delta-method SE of the ratio
    estimator.  Symmetric in (f, g) by construction.
    """
    lf = np.asarray(log_f, dtype=float)
    lg = np.asarray(log_g, dtype=float)
    if lf.shape != lg.shape:
        raise ValueError("densities must be evaluated on the same samples")
    if not (np.any(np.isfinite(lf)) and np.any(np.isfinite(lg))):
        raise ValueError("degenerate normalizer")
    f = np.exp(lf - np.max(lf[np.isfinite(lf)]))
    g = np.exp(lg - np.max(lg[np.isfinite(lg)]))
    n = f.size
    zf, zg = f.mean(), g.mean()
    if zf <= 0 or zg <= 0:
        raise ValueError("degenerate normalizer")
    d = np.abs(f / zf - g / zg)
    tv = 0.5 * d.mean()
    # linearize tv around (E|..|, Z_f, Z_g); sign of (f/Zf - g/Zg)
    s = np.sign(f / zf - g / zg)
    df = -np.mean(s * f) / zf  # d tv / d log Zf  times 2
    dg = np.mean(s * g) / zg
    infl = 0.5 * (d - d.mean()) + 0.5 * (df * (f / zf - 1.0) + dg * (g / zg - 1.0))
    se = float(np.std(infl, ddof=1) / math.sqrt(n))
    return Estimate(float(tv), se)


def log_rn_derivative(coeffs, kind_a: FieldKind, kind_b: FieldKind) -> np.ndarray:
    """log d mu_a / d mu_b on the modes present in ``coeffs`` (finite-dimensional, exact).

    Per mode: log(S_a/S_b) + (S_b - S_a) |x|^2 / (2 pi).
    """
    c = np.atleast_2d(coeffs)
    N = c.shape[-1]
    sa, sb = kind_a.symbols(N), kind_b.symbols(N)
    return np.sum(np.log(sa / sb)) + (np.abs(c) ** 2 @ (sb - sa)) / (2.0 * math.pi)


def ky_fan(x, y, s: float) -> Estimate:
    """E[1 ^ ||X - Y||_{H^s}] over coupled draws (rows of x and y)."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError("Ky-Fan needs paired samples")
    N = max(x.shape[1], y.shape[1])
    x = np.pad(x, ((0, 0), (0, N - x.shape[1])))
    y = np.pad(y, ((0, 0), (0, N - y.shape[1])))
    v = np.minimum(1.0, np.sqrt(sobolev_norm_sq(x - y, s)))
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return Estimate(float(v.mean()), se)


def marginal_features(coeffs, modes: Sequence[int]) -> np.ndarray:
    """Real feature vectors (Re, Im of the listed modes)."""
    c = np.atleast_2d(coeffs)
    cols = []
    for m in modes:
        cols.append(c[:, m - 1].real)
        cols.append(c[:, m - 1].imag)
    return np.stack(cols, axis=1)


def energy_distance(xa, wa, xb, wb) -> float:
    """Squared energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| between weighted point clouds (V-statistic, >= 0)."""
    wa = np.asarray(wa, dtype=float) / np.sum(wa)
    wb = np.asarray(wb, dtype=float) / np.sum(wb)
    k = _backend.kernels.energy_cross
    return float(2.0 * k(xa, wa, xb, wb) - k(xa, wa, xa, wa) - k(xb, wb, xb, wb))


def weak_marginal_distance(ens_a, ens_b, modes: Sequence[int]) -> float:
    """Energy distance between the joint laws of the chosen Fourier modes under two weighted ensembles."""
    if len(modes) > 4:
        raise ValueError("use at most 4 modes")
    xa = marginal_features(ens_a.coeffs, modes)
    xb = marginal_features(ens_b.coeffs, modes)
    return max(0.0, energy_distance(xa, ens_a.weights, xb, ens_b.weights))


def distance_report(pair: str, metric: str, value: float, stderr, params: dict, seed) -> str:
    """JSON line in the distance-report format."""
    return json.dumps(
        {"pair": pair, "metric": metric, "value": value, "stderr": stderr, "params": params, "seed": seed},
        sort_keys=True,
    )
