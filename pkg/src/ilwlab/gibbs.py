"""Wick powers, renormalized potentials, Gibbs densities and samplers.

A truncated Gibbs measure is a reweighting of the base Gaussian measure of a
``FieldKind``; every sampler here works on batches of coefficient arrays of
shape (count, N) and returns a ``WeightedEnsemble``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Union

import numpy as np

from . import _backend
from .fields import (
    AliasingError,
    FieldKind,
    SeededRng,
    SpectralField,
    sample_coefficients,
    to_physical,
    from_physical,
)
from .hermite import WickVariance, hermite

_CHUNK = 8192


class DegenerateEnsembleError(RuntimeError):
    """Every sample received zero weight."""


@dataclass(frozen=True)
class WickContext:
    """Renormalization data: degree k, cutoff N, Wick variance and the base field kind."""

    k: int
    N: int
    sigma: WickVariance
    kind: FieldKind

    @classmethod
    def for_kind(cls, kind: FieldKind, N: int, k: int, sigma: Optional[WickVariance] = None):
        if sigma is None:
            sigma = kind.wick_variance(N)
        return cls(k, N, sigma, kind)

    @property
    def s(self) -> float:
        return self.sigma.sigma


def dealias_size(degree: int, N: int) -> int:
    """Smallest power of two >= degree*N + 1 (exact products of degree ``degree``)."""
    m = degree * N + 1
    return 1 << (m - 1).bit_length()


def _coeffs(f):
    return f.coeffs if isinstance(f, SpectralField) else np.asarray(f)


def _low(c, N):
    c = c[..., :N]
    if c.shape[-1] < N:
        pad = [(0, 0)] * (c.ndim - 1) + [(0, N - c.shape[-1])]
        c = np.pad(c, pad)
    return c


def wick_power(f, ctx: WickContext, grid_size: Optional[int] = None):
    """P_N H_k(P_N u; sigma) as Fourier coefficients (modes 1..N)."""
    c = _low(_coeffs(f), ctx.N)
    M = grid_size or dealias_size(ctx.k + 1, ctx.N)
    if M < (ctx.k + 1) * ctx.N + 1:
        raise AliasingError(f"grid {M} too small for degree {ctx.k} at N={ctx.N}")
    u = to_physical(c, M)
    w = hermite(ctx.k, u, ctx.s)
    out = from_physical(w, ctx.N, as_field=False)
    if isinstance(f, SpectralField):
        return SpectralField(out)
    return out


def _grid_integral(c, degree, sigma, N):
    """int_T H_degree(u_N; sigma) dx for a batch, by exact trapezoidal quadrature."""
    c = np.atleast_2d(c)
    M = dealias_size(degree, N)
    out = np.empty(c.shape[0])
    for start in range(0, c.shape[0], _CHUNK):
        u = to_physical(c[start:start + _CHUNK], M)
        out[start:start + _CHUNK] = _backend.kernels.hermite_row_mean(degree, u, sigma)
    return 2.0 * math.pi * out


def potential_r(f, ctx: WickContext):
    """(1/(k+1)) int_T W(u_N^{k+1}) dx."""
    c = _low(_coeffs(f), ctx.N)
    out = _grid_integral(c, ctx.k + 1, ctx.s, ctx.N) / (ctx.k + 1)
    return float(out[0]) if c.ndim == 1 else out


def wick_mass(f, ctx: WickContext):
    """int_T W(u_N^2) dx = int u_N^2 dx - 2pi sigma (Parseval, exact)."""
    c = _low(_coeffs(f), ctx.N)
    out = np.sum(np.abs(c) ** 2, axis=-1) / math.pi - 2.0 * math.pi * ctx.s
    return float(out) if np.ndim(out) == 0 else out


def cubic_integral(f, N: int):
    """int_T u_N^3 dx (no renormalization needed for mean-zero fields)."""
    c = _low(_coeffs(f), N)
    out = _grid_integral(c, 3, 0.0, N)
    return float(out[0]) if c.ndim == 1 else out


# -- densities -----------------------------------------------------------------


@dataclass(frozen=True)
class Defocusing:
    """exp(-(1/(k+1)) int W(u_N^{k+1})), k odd."""

    k: int

    def __post_init__(self):
        if self.k % 2 != 1:
            raise ValueError("defocusing density needs odd k")


@dataclass(frozen=True)
class CutoffCubic:
    """chi_K(int W(u_N^2)) exp(-(1/3) int u_N^3)."""

    K: float


@dataclass(frozen=True)
class TamedCubic:
    """exp(-(1/3) int u_N^3 - A |int W(u_N^2)|^2), the dominating density for the cutoff one."""

    A: float


@dataclass(frozen=True)
class Flat:
    """Density identically 1 (the base Gaussian itself)."""


DensitySpec = Union[Defocusing, CutoffCubic, TamedCubic, Flat]


def chi_cutoff(x, K: float):
    """1 on |x| <= K, linear down to 0 at |x| = 2K, 0 beyond."""
    a = np.abs(np.asarray(x, dtype=float))
    out = np.clip(2.0 - a / K, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def tamed_constant(A: float, K: float) -> float:
    """C_{A,K} = exp(A (2K)^2), so that chi_K(x) <= C_{A,K} exp(-A x^2)."""
    return math.exp(A * (2.0 * K) ** 2)


def log_density(f, ctx: WickContext, spec: DensitySpec):
    """log of the unnormalized density; -inf where the cutoff vanishes."""
    c = _low(_coeffs(f), ctx.N)
    single = c.ndim == 1
    c2 = np.atleast_2d(c)
    if isinstance(spec, Flat):
        out = np.zeros(c2.shape[0])
    elif isinstance(spec, Defocusing):
        if spec.k != ctx.k:
            raise ValueError("density degree does not match the Wick context")
        out = -potential_r(c2, ctx)
    elif isinstance(spec, CutoffCubic):
        chi = chi_cutoff(wick_mass(c2, ctx), spec.K)
        with np.errstate(divide="ignore"):
            out = np.log(chi) - cubic_integral(c2, ctx.N) / 3.0
    elif isinstance(spec, TamedCubic):
        out = -cubic_integral(c2, ctx.N) / 3.0 - spec.A * wick_mass(c2, ctx) ** 2
    else:
        raise TypeError(f"unknown density spec {spec!r}")
    return float(out[0]) if single else out


def density(f, ctx: WickContext, spec: DensitySpec):
    out = np.exp(log_density(f, ctx, spec))
    return float(out) if np.ndim(out) == 0 else out


# -- ensembles -------------------------------------------------------------------


def _batch_means_se(values, chains):
    """Standard error of a multi-chain mean; values shaped (steps, chains).

    Each independent chain's mean is one batch, so autocorrelation within a
    chain is absorbed however long it is.
    """
    means = values.mean(axis=0)
    return float(np.std(means, ddof=1) / math.sqrt(chains))


@dataclass
class WeightedEnsemble:
    """Sample fields with self-normalized weights.

    ``log_weights`` are the unnormalized log-densities (kept for partition
    function estimates); ``weights`` sum to one.  MH ensembles carry unit
    weights and their chain layout for autocorrelation-aware errors.
    """

    coeffs: np.ndarray
    log_weights: np.ndarray
    ctx: Optional[WickContext] = None
    spec: Optional[DensitySpec] = None
    chains: int = 0
    acceptance_rate: Optional[float] = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=float)
        if not np.any(np.isfinite(lw)):
            raise DegenerateEnsembleError("all samples have zero weight")
        self._shift = float(np.max(lw[np.isfinite(lw)]))
        raw = np.exp(lw - self._shift)
        self.weights = raw / raw.sum()
        self.log_weights = lw

    def __len__(self):
        return self.coeffs.shape[0]

    @property
    def ess(self) -> float:
        return float(1.0 / np.sum(self.weights**2))

    def partition_function(self):
        """(Z estimate, SE): mean unnormalized density over the base draws."""
        raw = np.exp(self.log_weights - self._shift)
        n = raw.size
        scale = math.exp(self._shift)
        return float(raw.mean() * scale), float(raw.std(ddof=1) / math.sqrt(n) * scale)

    def expectation(self, values):
        """(weighted mean, SE) of per-sample observable values."""
        values = np.asarray(values, dtype=float)
        mean = float(np.dot(self.weights, values))
        if self.chains:
            v = values.reshape(-1, self.chains)
            return mean, _batch_means_se(v, self.chains)
        se = math.sqrt(float(np.sum(self.weights**2 * (values - mean) ** 2)))
        return mean, se

    def expect(self, observable: Callable):
        return self.expectation(observable(self.coeffs))


def snis_sample(
    ctx: WickContext,
    spec: DensitySpec,
    count: int,
    rng: SeededRng,
    base_N: Optional[int] = None,
) -> WeightedEnsemble:
    """Draw ``count`` base-Gaussian fields and weight them by the density.

    ``base_N`` (>= ctx.N) keeps extra high modes in the stored samples; the
    density only sees P_N u.
    """
    if count < 10:
        raise ValueError("need at least 10 samples")
    base_N = base_N or ctx.N
    c = sample_coefficients(ctx.kind, base_N, count, rng)
    lw = log_density(c, ctx, spec)
    ens = WeightedEnsemble(c, lw, ctx, spec)
    if ens.ess < 0.01 * count:
        warnings.warn(f"importance weights degenerate: ESS {ens.ess:.1f} of {count}", RuntimeWarning)
    return ens


def mh_sample(
    ctx: WickContext,
    spec: DensitySpec,
    count: int,
    step: float,
    rng: SeededRng,
    chains: int = 32,
    burn_in: int = 1000,
    thin: int = 1,
) -> WeightedEnsemble:
    """Preconditioned Crank-Nicolson Metropolis chains targeting the Gibbs measure.

    The proposal u' = sqrt(1 - step^2) u + step xi with xi drawn from the base
    Gaussian leaves the base measure invariant, so the acceptance ratio is the
    density ratio alone.  ``count`` samples are split over parallel chains.
    """
    if not 0 < step <= 1:
        raise ValueError("step must lie in (0, 1]")
    steps = -(-count // chains)
    sqrt_s = np.sqrt(ctx.kind.symbols(ctx.N))
    u = rng.gaussians(ctx.N, chains) / sqrt_s
    lu = log_density(u, ctx, spec)
    # restart any chain that begins outside the support
    for _ in range(1000):
        bad = ~np.isfinite(lu)
        if not bad.any():
            break
        u[bad] = rng.gaussians(ctx.N, int(bad.sum())) / sqrt_s
        lu[bad] = log_density(u[bad], ctx, spec)
    else:
        raise DegenerateEnsembleError("could not find a starting point with positive density")
    keep = np.empty((steps, chains, ctx.N), dtype=complex)
    rho = math.sqrt(1.0 - step * step)
    accepted = 0
    proposed = 0
    total = burn_in + steps * thin
    j = 0
    for it in range(total):
        prop = rho * u + step * rng.gaussians(ctx.N, chains) / sqrt_s
        lp = log_density(prop, ctx, spec)
        with np.errstate(invalid="ignore"):
            accept = np.log(rng.aux.random(chains)) < (lp - lu)
        u[accept] = prop[accept]
        lu[accept] = lp[accept]
        if it >= burn_in:
            accepted += int(accept.sum())
            proposed += chains
            if (it - burn_in) % thin == thin - 1:
                keep[j] = u
                j += 1
    coeffs = keep.reshape(steps * chains, ctx.N)
    return WeightedEnsemble(
        coeffs,
        np.zeros(coeffs.shape[0]),
        ctx,
        spec,
        chains=chains,
        acceptance_rate=accepted / proposed,
    )


# -- chaos second moments --------------------------------------------------------


def chaos_prefactor(k: int) -> float:
    """E|F(W(X_N^k))(n)|^2 = k! (2pi)^{2-k} * convolution sum; see ``calibrate_chaos_prefactor``."""
    return math.factorial(k) * (2.0 * math.pi) ** (2 - k)


def chaos_convolution(ctx: WickContext, n: int) -> float:
    """sum over 0<|n_j|<=N, n_1+...+n_k = n of prod 1/S(n_j), by brute force."""
    if ctx.k > 3 or ctx.N > 32:
        raise ValueError("brute-force convolution limited to k <= 3, N <= 32")
    inv = np.concatenate([[0.0], 1.0 / ctx.kind.symbols(ctx.N)])
    return float(_backend.kernels.chaos_convolution(inv, int(ctx.k), int(n)))


def chaos_second_moment(ctx: WickContext, n: int) -> float:
    """E |Fourier coefficient n of H_k(X_N; sigma_N)|^2 (oracle)."""
    return chaos_prefactor(ctx.k) * chaos_convolution(ctx, n)


def chaos_mc_moment(ctx: WickContext, n: int, samples: int, rng: SeededRng, grid_size=None):
    """Monte-Carlo E|F(W(X_N^k))(n)|^2 with standard error (no projection to N)."""
    M = grid_size or dealias_size(ctx.k + 1, ctx.N)
    vals = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        cnt = min(_CHUNK, samples - start)
        c = sample_coefficients(ctx.kind, ctx.N, cnt, rng)
        w = hermite(ctx.k, to_physical(c, M), ctx.s)
        vals[start:start + cnt] = np.abs(np.fft.rfft(w, axis=-1)[:, abs(n)] * (2 * math.pi / M)) ** 2
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def calibrate_chaos_prefactor(samples=100_000, seed=0, N=4, n=1, kind=None):
    """Ratio of the MC second moment to the convolution sum at k = 2 (with SE)."""
    from .fields import bo_gauss

    kind = kind or bo_gauss()
    ctx = WickContext.for_kind(kind, N, 2)
    m, se = chaos_mc_moment(ctx, n, samples, SeededRng(seed))
    conv = chaos_convolution(ctx, n)
    return m / conv, se / conv


# -- Monte-Carlo identities and moment checks ------------------------------------------


def wick_orthogonality(kind, N: int, k: int, m: int, x: float, y: float, samples: int, rng: SeededRng):
    """MC E[H_k(X(x); sigma) H_m(X(y); sigma)] with SE, and the exact 1_{k=m} k! gamma_N(x-y)^k."""
    from .fields import covariance, evaluate_at

    sigma = kind.wick_variance(N).sigma
    c = sample_coefficients(kind, N, samples, rng)
    v = evaluate_at(c, [x, y])  # (samples, 2)
    prod = hermite(k, v[:, 0], sigma) * hermite(m, v[:, 1], sigma)
    exact = math.factorial(k) * covariance(kind, N, x - y) ** k if k == m else 0.0
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(samples)), exact


def density_moment(ctx: WickContext, spec: DensitySpec, p: float, samples: int, rng: SeededRng):
    """MC E_mu[G^p] with SE, G the unnormalized density (base Gaussian draws)."""
    vals = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        cnt = min(_CHUNK, samples - start)
        c = sample_coefficients(ctx.kind, ctx.N, cnt, rng)
        vals[start:start + cnt] = np.exp(p * log_density(c, ctx, spec))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def cutoff_domination(coeffs, ctx: WickContext, K: float, A: float):
    """max over samples of G^K / (C_{A,K} G_tamed); <= 1 when the bound holds."""
    lg = log_density(coeffs, ctx, CutoffCubic(K))
    lt = log_density(coeffs, ctx, TamedCubic(A))
    with np.errstate(invalid="ignore"):
        diff = lg - lt - math.log(tamed_constant(A, K))
    diff = np.where(np.isfinite(lg), diff, -np.inf)
    return float(np.exp(np.max(diff)))
