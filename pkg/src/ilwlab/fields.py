"""Mean-zero real periodic fields stored by their positive Fourier modes.

Convention: f(x) = (1/2pi) sum_{n != 0} f^(n) e^{inx} with
f^(n) = int_T f(x) e^{-inx} dx.  Only f^(n) for n = 1..N is stored; the
negative modes are the complex conjugates and f^(0) = 0, so every stored
field is real and mean-zero by construction.

Batches of fields are plain complex arrays of shape (count, N); the
``SpectralField`` wrapper is for single fields and I/O.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .dispersion import (
    Depth,
    FamilyError,
    Finite,
    Infinite,
    Shallow,
    depth_from_value,
    k_delta,
    l_delta,
)
from .hermite import WickVariance, sigma_deep, sigma_kdv, sigma_shallow


class AliasingError(ValueError):
    """Physical grid too coarse for the requested spectral operation."""


# -- field kinds -----------------------------------------------------------


@dataclass(frozen=True)
class FieldKind:
    """Which Gaussian field: per-mode variance 2pi/S(n) for the family's symbol S.

    family "deep": S = K_delta (delta finite or infinite; infinite is the BO field)
    family "scaled": S = L_delta (delta finite)
    family "kdv": S = n^2
    """

    family: str
    depth: Optional[Depth] = None

    def __post_init__(self):
        if self.family == "deep":
            if not isinstance(self.depth, (Finite, Infinite)):
                raise FamilyError("deep Gaussian needs a finite or infinite depth")
        elif self.family == "scaled":
            if not isinstance(self.depth, Finite):
                raise FamilyError("scaled Gaussian needs a finite depth")
        elif self.family == "kdv":
            if self.depth not in (None, Shallow()):
                raise FamilyError("KdV Gaussian takes no depth")
        else:
            raise FamilyError(f"unknown field family {self.family!r}")

    def symbol(self, n):
        if self.family == "deep":
            return k_delta(self.depth, n)
        if self.family == "scaled":
            return l_delta(self.depth, n)
        return np.abs(np.asarray(n, dtype=float)) ** 2

    def symbols(self, N):
        return np.asarray(self.symbol(np.arange(1, N + 1)), dtype=float)

    def wick_variance(self, N) -> WickVariance:
        if self.family == "deep":
            return sigma_deep(self.depth, N)
        if self.family == "scaled":
            return sigma_shallow(self.depth, N)
        return sigma_kdv(N)

    @property
    def label(self):
        if self.family == "kdv":
            return "kdv"
        return f"{self.family}:{self.depth}"

    @classmethod
    def parse(cls, label):
        family, _, depth = label.partition(":")
        if family == "kdv":
            return kdv_gauss()
        return cls(family, depth_from_value(depth))


def deep_gauss(depth: Depth) -> FieldKind:
    return FieldKind("deep", depth)


def bo_gauss() -> FieldKind:
    return FieldKind("deep", Infinite())


def scaled_gauss(depth: Depth) -> FieldKind:
    return FieldKind("scaled", depth)


def kdv_gauss() -> FieldKind:
    return FieldKind("kdv")


# -- random numbers ---------------------------------------------------------


class SeededRng:
    """Independent generator per Fourier mode, keyed by (seed, n).

    Mode n always draws from the same stream, so fields of different kinds
    or cutoffs built from one seed share their g_n (the coupling used by all
    limit studies).  Not thread-safe: one consumer per instance.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams = {}
        self._aux = None

    def _stream(self, n):
        gen = self._streams.get(n)
        if gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(int(n),))
            gen = self._streams[n] = np.random.Generator(np.random.PCG64(ss))
        return gen

    def gaussians(self, N: int, count: int) -> np.ndarray:
        """(count, N) complex array of g_n, n = 1..N: Re, Im iid N(0, pi), so E|g_n|^2 = 2pi."""
        out = np.empty((count, N), dtype=complex)
        scale = math.sqrt(math.pi)
        for n in range(1, N + 1):
            z = self._stream(n).standard_normal((count, 2))
            out[:, n - 1] = scale * (z[:, 0] + 1j * z[:, 1])
        return out

    @property
    def aux(self) -> np.random.Generator:
        """Generator for everything that is not a mode coefficient (MH coins, etc.)."""
        if self._aux is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(0,))
            self._aux = np.random.Generator(np.random.PCG64(ss))
        return self._aux


class ZeroRng(SeededRng):
    """Degenerate generator with g_n = 0; handy for checking zero-field paths."""

    def __init__(self):
        super().__init__(0)

    def gaussians(self, N, count):
        return np.zeros((count, N), dtype=complex)


# -- fields ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real mean-zero field with modes 1..N; ``coeffs[n-1]`` is f^(n)."""

    coeffs: np.ndarray
    kind: Optional[FieldKind] = None
    seed: Optional[int] = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError("field coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    def full_coefficients(self) -> np.ndarray:
        """f^(n) for n = -N..N (index n + N); zero at n = 0."""
        c = self.coeffs
        return np.concatenate([np.conj(c[::-1]), [0.0], c])

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        m = max(len(a), len(b))
        return np.array_equal(np.pad(a, (0, m - len(a))), np.pad(b, (0, m - len(b))))

    def __add__(self, other):
        return SpectralField(_pad_sum(self.coeffs, other.coeffs, 1.0))

    def __sub__(self, other):
        return SpectralField(_pad_sum(self.coeffs, other.coeffs, -1.0))

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * float(scalar), self.kind, self.seed)

    __rmul__ = __mul__


def _pad_sum(a, b, sign):
    m = max(len(a), len(b))
    return np.pad(a, (0, m - len(a))) + sign * np.pad(b, (0, m - len(b)))


def sample_coefficients(kind: FieldKind, N: int, count: int, rng: SeededRng) -> np.ndarray:
    """(count, N) coefficients g_n / sqrt(S(n)) of ``count`` independent draws."""
    if N < 1:
        raise ValueError("N must be >= 1")
    g = rng.gaussians(N, count)
    return g / np.sqrt(kind.symbols(N))


def sample_field(kind: FieldKind, N: int, rng: SeededRng) -> SpectralField:
    """One draw of P_N X for the given kind."""
    c = sample_coefficients(kind, N, 1, rng)[0]
    return SpectralField(c, kind, rng.seed)


def _coeffs(f):
    return f.coeffs if isinstance(f, SpectralField) else np.asarray(f)


def sobolev_weights(N: int, s: float) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=float)
    return (1.0 + n * n) ** s


def sobolev_norm_sq(f, s: float):
    """||f||_{H^s}^2 = (1/2pi) sum_{n != 0} <n>^{2s} |f^(n)|^2; works on batches."""
    c = _coeffs(f)
    w = sobolev_weights(c.shape[-1], s)
    return np.sum(w * np.abs(c) ** 2, axis=-1) / math.pi


def sobolev_norm(f, s: float):
    out = np.sqrt(sobolev_norm_sq(f, s))
    return float(out) if np.ndim(out) == 0 else out


def project(f, M: int):
    """Dirichlet projection P_M: zero every mode above M."""
    if isinstance(f, SpectralField):
        c = f.coeffs.copy()
        c[M:] = 0
        return SpectralField(c, f.kind, f.seed)
    c = np.array(f, dtype=complex, copy=True)
    c[..., M:] = 0
    return c


def to_physical(f, M: int) -> np.ndarray:
    """Values at x_j = 2pi j / M.  Needs M >= 2N + 1."""
    c = _coeffs(f)
    N = c.shape[-1]
    if M < 2 * N + 1:
        raise AliasingError(f"grid of {M} points cannot hold modes up to {N}")
    spec = np.zeros(c.shape[:-1] + (M // 2 + 1,), dtype=complex)
    spec[..., 1:N + 1] = c
    return np.fft.irfft(spec, n=M, axis=-1) * (M / (2.0 * math.pi))


def from_physical(grid, N: int, as_field: bool = True):
    """Fourier modes 1..N of grid samples; the mean and modes above N are dropped."""
    grid = np.asarray(grid, dtype=float)
    M = grid.shape[-1]
    if M < 2 * N + 1:
        raise AliasingError(f"grid of {M} points cannot resolve modes up to {N}")
    c = np.fft.rfft(grid, axis=-1)[..., 1:N + 1] * (2.0 * math.pi / M)
    if as_field and c.ndim == 1:
        return SpectralField(c)
    return c


def evaluate_at(f, x) -> np.ndarray:
    """Field values at arbitrary points x (direct sum, no FFT)."""
    c = _coeffs(f)
    n = np.arange(1, c.shape[-1] + 1)
    phase = np.exp(1j * np.outer(np.atleast_1d(x), n))  # (len(x), N)
    return np.real(c @ phase.T) / math.pi


def covariance(kind: FieldKind, N: int, z):
    """gamma_N(z) = E[X_N(x) X_N(x + z)] = (1/pi) sum_{n=1}^N cos(n z) / S(n)."""
    n = np.arange(1, N + 1, dtype=float)
    z = np.asarray(z, dtype=float)
    out = np.cos(np.multiply.outer(z, n)) @ (1.0 / kind.symbols(N)) / math.pi
    return float(out) if out.ndim == 0 else out


def translate(f, shift: float):
    """f(x - shift); multiplies mode n by e^{-in shift}."""
    c = _coeffs(f)
    n = np.arange(1, c.shape[-1] + 1)
    out = c * np.exp(-1j * n * shift)
    return SpectralField(out) if isinstance(f, SpectralField) else out


def deep_limit_gap(delta: float, N: int, samples: int, eps: float = 0.25, seed: int = 0):
    """MC estimate of (E ||X_{delta,N} - X_{BO,N}||^2_{H^-eps})^{1/2} from coupled draws.

    Returns (estimate, standard error).
    """
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    depth = depth_from_value(delta)
    rng_a, rng_b = SeededRng(seed), SeededRng(seed)
    xa = sample_coefficients(deep_gauss(depth), N, samples, rng_a)
    xb = sample_coefficients(bo_gauss(), N, samples, rng_b)
    sq = sobolev_norm_sq(xa - xb, -eps)
    mean = float(np.mean(sq))
    se_mean = float(np.std(sq, ddof=1) / math.sqrt(samples))
    est = math.sqrt(mean)
    se = se_mean / (2 * est) if est > 0 else 0.0
    return est, se


# -- snapshot files ----------------------------------------------------------


def write_field_csv(f: SpectralField, path_or_buf, delta=None):
    """One row per mode (n, Re, Im); '#' header lines carry N, kind, delta, seed."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        kind = f.kind.label if f.kind is not None else ""
        if delta is None and f.kind is not None and f.kind.depth is not None:
            delta = str(f.kind.depth)
        fh.write(f"# N={f.N}\n# kind={kind}\n# delta={'' if delta is None else delta}\n")
        fh.write(f"# seed={'' if f.seed is None else f.seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "re", "im"])
        for n, z in enumerate(f.coeffs, start=1):
            w.writerow([n, repr(float(z.real)), repr(float(z.imag))])
    finally:
        if own:
            fh.close()


def read_field_csv(path_or_buf) -> SpectralField:
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, newline="") if own else path_or_buf
    try:
        text = fh.read()
    finally:
        if own:
            fh.close()
    header = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            header[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    N = int(header.get("N", len(rows)))
    c = np.zeros(N, dtype=complex)
    for r in rows:
        c[int(r["n"]) - 1] = complex(float(r["re"]), float(r["im"]))
    kind = FieldKind.parse(header["kind"]) if header.get("kind") else None
    seed = int(header["seed"]) if header.get("seed") else None
    return SpectralField(c, kind, seed)
