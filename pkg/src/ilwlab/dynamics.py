"""Frequency-truncated gILW / gBO / scaled gILW / gKdV dynamics.

In Fourier variables (u^(n), n >= 1) the truncated flow reads

    d/dt u^(n) = i w(n) u^(n) + i n F[P_N H_k(P_N u; sigma)](n)    for n <= N
    d/dt u^(n) = i w(n) u^(n)                                      for n >  N

with w(n) = n S(n) and S the family's symbol (K_delta, |n|, L_delta, n^2).
The low modes are integrated with Lawson's integrating-factor RK4 (exact
linear phase, explicit nonlinearity); the high modes are rotated exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _backend, _kernels_py
from .dispersion import Depth, Finite, Infinite, Shallow, FamilyError, k_delta, l_delta
from .fields import FieldKind, SpectralField, from_physical, to_physical
from .gibbs import WickContext, dealias_size, potential_r
from .hermite import WickVariance, hermite, sigma_kdv, sigma_kdv_limit


class StepRejectedError(RuntimeError):
    """Hamiltonian drift stayed above tolerance after all step halvings."""


@dataclass(frozen=True)
class EvolutionSpec:
    """One truncated Hamiltonian system.

    ``family`` is "deep" (symbol K_delta; infinite depth gives gBO) or
    "scaled" (symbol L_delta; the shallow limit gives gKdV).  ``sigma`` is
    frozen for the whole run; ``renormalized=False`` (allowed for k = 2
    only) uses the plain power.
    """

    family: str
    depth: Depth
    k: int
    N: int
    sigma: WickVariance
    renormalized: bool = True

    def __post_init__(self):
        if self.family == "deep" and not isinstance(self.depth, (Finite, Infinite)):
            raise FamilyError("deep family needs finite or infinite depth")
        if self.family == "scaled" and not isinstance(self.depth, (Finite, Shallow)):
            raise FamilyError("scaled family needs finite depth or the shallow limit")
        if self.family not in ("deep", "scaled"):
            raise FamilyError(f"unknown family {self.family!r}")
        if not self.renormalized and self.k != 2:
            raise ValueError("only k = 2 may run without renormalization")
        if self.k < 2:
            raise ValueError("k must be >= 2")

    @property
    def kind(self) -> FieldKind:
        if self.family == "deep":
            return FieldKind("deep", self.depth)
        if isinstance(self.depth, Shallow):
            return FieldKind("kdv")
        return FieldKind("scaled", self.depth)

    @property
    def wick_sigma(self) -> float:
        return self.sigma.sigma if self.renormalized else 0.0

    @property
    def ctx(self) -> WickContext:
        sig = self.sigma if self.renormalized else WickVariance(0.0, "none")
        return WickContext(self.k, self.N, sig, self.kind)

    def symbol(self, n):
        if self.family == "deep":
            return k_delta(self.depth, n)
        return l_delta(self.depth, n)

    def label(self):
        name = {"deep": "gILW", "scaled": "scaled-gILW"}[self.family]
        if isinstance(self.depth, Infinite):
            name = "gBO"
        elif isinstance(self.depth, Shallow):
            name = "gKdV"
        return f"{name}(delta={self.depth}, k={self.k}, N={self.N})"


def deep_gilw(depth: Depth, k: int, N: int, renormalized: bool = True) -> EvolutionSpec:
    kind = FieldKind("deep", depth)
    return EvolutionSpec("deep", depth, k, N, kind.wick_variance(N), renormalized)


def gbo(k: int, N: int) -> EvolutionSpec:
    return deep_gilw(Infinite(), k, N)


def scaled_gilw(depth: Depth, k: int, N: int, renormalized: bool = True) -> EvolutionSpec:
    kind = FieldKind("scaled", depth)
    return EvolutionSpec("scaled", depth, k, N, kind.wick_variance(N), renormalized)


def gkdv(k: int, N: int, limit_sigma: bool = False) -> EvolutionSpec:
    """gKdV with sigma_{KdV,N} (default) or the limiting pi/6."""
    sig = sigma_kdv_limit() if limit_sigma else sigma_kdv(N)
    return EvolutionSpec("scaled", Shallow(), k, N, sig)


def linear_frequency(spec: EvolutionSpec, n):
    """w(n) = n S(n): the linear part multiplies u^(n) by e^{i w(n) t}."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr == 0):
        raise ValueError("the zero mode is not part of the phase space")
    out = n_arr * np.asarray(spec.symbol(n_arr), dtype=float)
    return float(out) if out.ndim == 0 else out


def _coeffs(f):
    return f.coeffs if isinstance(f, SpectralField) else np.asarray(f, dtype=complex)


def nonlinearity(f, spec: EvolutionSpec, grid_size: Optional[int] = None):
    """F_N(u) = d/dx P_N H_k(P_N u; sigma) on modes 1..N."""
    c = _coeffs(f)[..., : spec.N]
    N = c.shape[-1]
    M = grid_size or dealias_size(spec.k + 1, spec.N)
    u = to_physical(c, M)
    w = hermite(spec.k, u, spec.wick_sigma)
    wh = from_physical(w, N, as_field=False)
    out = 1j * np.arange(1, N + 1) * wh
    if isinstance(f, SpectralField):
        return SpectralField(out)
    return out


def kinetic_energy(f, spec: EvolutionSpec):
    """(1/2) (1/2pi) sum_{0<|n|<=N} S(n) |u^(n)|^2."""
    c = _coeffs(f)[..., : spec.N]
    s = np.asarray(spec.symbol(np.arange(1, c.shape[-1] + 1)), dtype=float)
    out = np.sum(s * np.abs(c) ** 2, axis=-1) / (2.0 * math.pi)
    return float(out) if np.ndim(out) == 0 else out


def hamiltonian(f, spec: EvolutionSpec):
    """Kinetic part plus (1/(k+1)) int W(u_N^{k+1}) dx."""
    c = _coeffs(f)
    return kinetic_energy(c, spec) + potential_r(c[..., : spec.N], spec.ctx)


def low_mass(f, N: int):
    """int_T (P_N u)^2 dx."""
    c = _coeffs(f)[..., :N]
    out = np.sum(np.abs(c) ** 2, axis=-1) / math.pi
    return float(out) if np.ndim(out) == 0 else out


class Integrator:
    """Lawson IF-RK4 for one EvolutionSpec at a fixed total cutoff.

    ``nonlinear=False`` switches the nonlinearity off (test hook).
    """

    def __init__(self, spec: EvolutionSpec, n_total: int, nonlinear: bool = True):
        self.spec = spec
        self.n_total = max(n_total, spec.N)
        n = np.arange(1, self.n_total + 1, dtype=float)
        self.omega = n * np.asarray(spec.symbol(n), dtype=float)
        self.nonlinear = nonlinear
        self.grid = dealias_size(spec.k + 1, spec.N)
        self._n_low = np.arange(1, spec.N + 1)

    def _nl(self, low):
        if not self.nonlinear:
            return np.zeros_like(low)
        u = to_physical(low, self.grid)
        w = hermite(self.spec.k, u, self.spec.wick_sigma)
        return 1j * self._n_low * from_physical(w, self.spec.N, as_field=False)

    def advance_low(self, low, dt, nsteps):
        """``nsteps`` IF-RK4 steps of size dt on the low modes (..., N)."""
        if nsteps <= 0:
            return np.array(low, dtype=complex)
        w = self.omega[: self.spec.N]
        if not self.nonlinear:
            return low * np.exp(1j * w * (dt * nsteps))
        args = (w, self.spec.k, self.spec.wick_sigma, dt, int(nsteps), self.grid)
        if low.ndim == 1:
            return _backend.kernels.ifrk4_advance(low, *args)
        # batches go through the vectorized FFT path
        return _kernels_py.ifrk4_advance(low, *args)

    def step(self, c, dt):
        """Advance coefficients (..., n_total) by dt (negative dt runs backwards)."""
        N = self.spec.N
        out = np.empty_like(c)
        out[..., N:] = c[..., N:] * np.exp(1j * self.omega[N:] * dt)
        out[..., :N] = self.advance_low(c[..., :N], dt, 1)
        return out


# conservation to 1e-8 holds at the default cfl; time reversal to 1e-8 needs about half of it
REVERSIBILITY_CFL = 0.015


def default_dt(c, spec: EvolutionSpec, cfl: float = 0.03) -> float:
    """Step from the size of the nonlinear term: cfl / (k N max|u_N|^{k-1} (+1))."""
    low = np.atleast_2d(_coeffs(c))[..., : spec.N]
    u = to_physical(low, dealias_size(2, spec.N) if spec.N > 0 else 4)
    amp = float(np.max(np.abs(u))) if u.size else 0.0
    amp = max(amp, math.sqrt(max(spec.wick_sigma, 0.0)))
    return cfl / (spec.k * spec.N * (amp ** (spec.k - 1) + 1.0))


def step(f, spec: EvolutionSpec, dt: float):
    """One IF-RK4 step of the truncated system."""
    c = _coeffs(f)
    out = Integrator(spec, c.shape[-1]).step(c, dt)
    if isinstance(f, SpectralField):
        return SpectralField(out, f.kind, f.seed)
    return out


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    snapshots: np.ndarray  # (len(times), ..., n_total)
    spec: EvolutionSpec
    diagnostics: dict = dc_field(default_factory=dict)
    steps_taken: int = 0
    rejections: int = 0

    def field(self, i) -> SpectralField:
        return SpectralField(self.snapshots[i])

    def recompute_diagnostics(self, s: float = -0.5):
        from .fields import sobolev_norm_sq

        snaps = self.snapshots
        self.diagnostics = {
            # the zero mode is not stored, so the mean is identically 0
            "mean": np.zeros(snaps.shape[:-1]),
            "low_mass": low_mass(snaps, self.spec.N),
            "hamiltonian": hamiltonian(snaps, self.spec),
            f"hs_norm_sq[{s:g}]": sobolev_norm_sq(snaps, s),
        }
        return self.diagnostics


def evolve(
    f,
    spec: EvolutionSpec,
    T: float,
    dt: Optional[float] = None,
    save_every: Optional[float] = None,
    drift_tol: Optional[float] = None,
    max_halvings: int = 6,
    nonlinear: bool = True,
    diagnostics: bool = True,
    s: float = -0.5,
    check_every: int = 250,
) -> TrajectoryRecord:
    """Integrate from t=0 to t=T (T may be negative).

    With ``drift_tol`` set, a step whose relative Hamiltonian change exceeds
    ``drift_tol * |dt| / |T|`` is retried with half the step (up to
    ``max_halvings`` times) before raising ``StepRejectedError``.  The
    check runs every ``check_every`` steps; a failed check redoes the
    whole block.
    ``save_every`` controls snapshot spacing (default: start and end only).
    Works on single fields or on batches (rows evolve independently).
    """
    c0 = np.array(_coeffs(f), dtype=complex)
    if c0.shape[-1] < spec.N:
        c0 = np.pad(c0, [(0, 0)] * (c0.ndim - 1) + [(0, spec.N - c0.shape[-1])])
    integ = Integrator(spec, c0.shape[-1], nonlinear=nonlinear)
    if dt is None:
        dt = default_dt(c0, spec)
    direction = 1.0 if T >= 0 else -1.0
    total = abs(T)
    if total == 0:
        rec = TrajectoryRecord(np.array([0.0]), c0[None].copy(), spec)
        if diagnostics:
            rec.recompute_diagnostics(s)
        return rec
    # snapshots fall on an even grid: a whole number of steps per save interval
    n_save = 1 if save_every is None else max(1, int(round(total / save_every)))
    save_stride = max(1, int(math.ceil(total / n_save / dt - 1e-9)))
    n_steps = n_save * save_stride
    h = total / n_steps
    times = [0.0]
    snaps = [c0.copy()]
    c = c0
    H_prev = hamiltonian(c, spec) if drift_tol is not None else None
    rejections = 0
    substeps = 0
    n_low = spec.N
    hi0 = c0[..., n_low:]
    # advance in chunks between saves (and between drift checks)
    chunk = save_stride if drift_tol is None else min(save_stride, check_every)
    i = 0
    while i < n_steps:
        m = min(chunk, n_steps - i, save_stride - (i % save_stride))
        low = c[..., :n_low]
        if drift_tol is None:
            low = integ.advance_low(low, direction * h, m)
        else:
            sub = 1
            while True:
                trial = integ.advance_low(low, direction * h / sub, m * sub)
                H_new = hamiltonian(trial, spec)
                scale = np.maximum(np.abs(H_prev), 1e-300)
                if np.all(np.abs(H_new - H_prev) / scale <= drift_tol * m * h / total):
                    break
                sub *= 2
                rejections += 1
                if sub > 2**max_halvings:
                    raise StepRejectedError(f"Hamiltonian drift above tolerance at t={(i + m) * h:g}")
            low, H_prev = trial, H_new
            substeps += m * (sub - 1)
        i += m
        c = np.concatenate([low, hi0 * np.exp(1j * integ.omega[n_low:] * (direction * i * h))], axis=-1)
        if i % save_stride == 0 or i == n_steps:
            times.append(direction * i * h)
            snaps.append(c.copy())
    rec = TrajectoryRecord(np.array(times), np.stack(snaps), spec, steps_taken=n_steps + substeps, rejections=rejections)
    if diagnostics:
        rec.recompute_diagnostics(s)
    return rec


def row_dt(c, spec: EvolutionSpec, cfl: float = 0.03) -> np.ndarray:
    """Per-row version of ``default_dt`` for a batch of fields."""
    low = np.atleast_2d(_coeffs(c))[..., : spec.N]
    u = to_physical(low, dealias_size(2, spec.N))
    amp = np.maximum(np.max(np.abs(u), axis=-1), math.sqrt(max(spec.wick_sigma, 0.0)))
    return cfl / (spec.k * spec.N * (amp ** (spec.k - 1) + 1.0))


def evolve_ensemble(coeffs, spec: EvolutionSpec, T: float, cfl: float = 0.03):
    """Evolve every row to time T, each with its own step from ``row_dt``.

    Rows are independent, so the result does not depend on batch layout.
    Returns (coeffs at T, steps per row).
    """
    c = np.atleast_2d(np.array(coeffs, dtype=complex))
    if c.shape[-1] < spec.N:
        c = np.pad(c, ((0, 0), (0, spec.N - c.shape[-1])))
    n = np.arange(1, c.shape[-1] + 1, dtype=float)
    omega = n * np.asarray(spec.symbol(n), dtype=float)
    if T == 0:
        return c.copy(), np.zeros(c.shape[0], dtype=np.int64)
    low, steps = _backend.kernels.ifrk4_advance_rows(
        c[:, : spec.N], omega, spec.k, spec.wick_sigma, float(T), row_dt(c, spec, cfl),
        dealias_size(spec.k + 1, spec.N),
    )
    out = c.copy()
    out[:, : spec.N] = low
    out[:, spec.N:] = c[:, spec.N:] * np.exp(1j * omega[spec.N:] * T)
    return out, steps


# -- Gibbs invariance -------------------------------------------------------------


def observable_suite(ctx: WickContext):
    """Default observables: int W(u^2), ||u||^2_{H^{-1/2}}, |u^(1)|^2."""
    from .fields import sobolev_norm_sq
    from .gibbs import wick_mass

    return {
        "wick_mass": lambda c: wick_mass(c, ctx),
        "hs_norm_sq[-0.5]": lambda c: sobolev_norm_sq(c, -0.5),
        "abs_mode1_sq": lambda c: np.abs(np.atleast_2d(c)[:, 0]) ** 2,
    }


@dataclass
class ObservableCheck:
    name: str
    before: float
    after: float
    se_before: float
    se_after: float
    se_paired: float

    @property
    def delta(self) -> float:
        return self.after - self.before

    @property
    def combined_se(self) -> float:
        return math.hypot(self.se_before, self.se_after)

    def passed(self, z: float = 3.0) -> bool:
        return abs(self.delta) <= z * self.combined_se


@dataclass
class InvarianceReport:
    spec: EvolutionSpec
    T: float
    size: int
    ess: float
    checks: list
    max_mass_drift: float
    steps: int

    @property
    def passed(self) -> bool:
        return all(ch.passed() for ch in self.checks)

    def as_dict(self):
        return {
            "spec": self.spec.label(),
            "T": self.T,
            "size": self.size,
            "ess": self.ess,
            "max_mass_drift": self.max_mass_drift,
            "steps": self.steps,
            "passed": self.passed,
            "observables": [
                {
                    "name": ch.name, "before": ch.before, "after": ch.after, "delta": ch.delta,
                    "se_before": ch.se_before, "se_after": ch.se_after,
                    "combined_se": ch.combined_se, "se_paired": ch.se_paired, "passed": ch.passed(),
                }
                for ch in self.checks
            ],
        }


def invariance_test(
    spec: EvolutionSpec,
    density_spec,
    T: float,
    size: int,
    rng,
    observables: Optional[dict] = None,
    method: str = "snis",
    cfl: float = 0.03,
    mh_step: float = 0.5,
) -> InvarianceReport:
    """Weighted observable means before vs after the truncated flow.

    Passes when every |after - before| is within 3 combined standard errors
    (root-sum-square of the two SEs).  The paired SE of the difference is
    reported too.  ``max_mass_drift`` is the worst per-trajectory relative
    change of the low-mode L^2 norm, which the flow conserves pathwise.
    """
    from .gibbs import mh_sample, snis_sample

    if size < 1000:
        raise ValueError("ensemble size must be >= 1000")
    ctx = spec.ctx
    if method == "snis":
        ens = snis_sample(ctx, density_spec, size, rng)
    elif method == "mh":
        ens = mh_sample(ctx, density_spec, size, mh_step, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    obs = observables if observables is not None else observable_suite(ctx)
    c0 = ens.coeffs
    cT, steps = evolve_ensemble(c0, spec, T, cfl)
    checks = []
    for name, fn in obs.items():
        v0 = np.asarray(fn(c0), dtype=float)
        vT = np.asarray(fn(cT), dtype=float)
        m0, s0 = ens.expectation(v0)
        mT, sT = ens.expectation(vT)
        _, sd = ens.expectation(vT - v0)
        checks.append(ObservableCheck(name, m0, mT, s0, sT, sd))
    l0 = low_mass(c0, spec.N)
    lT = low_mass(cT, spec.N)
    drift = float(np.max(np.abs(lT - l0) / np.maximum(l0, 1e-300)))
    return InvarianceReport(spec, T, len(ens), ens.ess, checks, drift, int(np.sum(steps)))


# -- deep / shallow trajectory limits ------------------------------------------------


def _path(c0, spec: EvolutionSpec, times, cfl: float):
    """States at the given increasing times, each segment run with the default step."""
    out = [np.array(c0, dtype=complex)]
    c = out[0]
    for t0, t1 in zip(times[:-1], times[1:]):
        dt = default_dt(c, spec, cfl)
        c = evolve(c, spec, t1 - t0, dt=dt, diagnostics=False).snapshots[-1]
        out.append(c)
    return np.stack(out)


@dataclass(frozen=True)
class LimitRow:
    delta: float
    gap: float  # sup over sampled times of ||u_delta(t) - u_limit(t)||_{H^s}
    initial_gap: float


def limit_study(
    limit: str,
    deltas: Sequence[float],
    N: int,
    k: int,
    seed: int,
    T: float = 1.0,
    s: float = -0.5,
    samples: int = 21,
    cfl: float = 0.03,
):
    """Sup-in-time H^s gaps between the delta-family and its limit from coupled data.

    ``limit="deep"``: gILW(delta) vs gBO, initial data drawn from mu_delta
    and mu_infinity with the same seed (same normals per mode).
    ``limit="shallow"``: scaled gILW(delta) vs gKdV, data from the scaled
    Gaussian and the KdV Gaussian with the same seed.  A delta equal to the
    limit point (inf for deep, 0 for shallow) gives gap 0.
    """
    from .fields import SeededRng, bo_gauss, kdv_gauss, sample_coefficients, sobolev_norm

    times = np.linspace(0.0, T, samples)
    if limit == "deep":
        lim_spec = gbo(k, N)
        lim_kind = bo_gauss()
    elif limit == "shallow":
        lim_spec = gkdv(k, N)
        lim_kind = kdv_gauss()
    else:
        raise ValueError("limit must be 'deep' or 'shallow'")
    c_lim = sample_coefficients(lim_kind, N, 1, SeededRng(seed))[0]
    ref = _path(c_lim, lim_spec, times, cfl)
    rows = []
    for d in deltas:
        d = float(d)
        if (limit == "deep" and d == math.inf) or (limit == "shallow" and d == 0.0):
            rows.append(LimitRow(d, 0.0, 0.0))
            continue
        sp = deep_gilw(Finite(d), k, N) if limit == "deep" else scaled_gilw(Finite(d), k, N)
        c0 = sample_coefficients(sp.kind, N, 1, SeededRng(seed))[0]
        path = _path(c0, sp, times, cfl)
        gaps = sobolev_norm(path - ref, s)
        rows.append(LimitRow(d, float(np.max(gaps)), float(gaps[0])))
    return rows


# -- trajectory files ---------------------------------------------------------------


def write_trajectory(rec: TrajectoryRecord, csv_path, manifest_path=None, extra: Optional[dict] = None):
    """Long-format CSV (t, quantity, value) of the diagnostics plus a JSON manifest."""
    import csv
    import json

    diag = rec.diagnostics or rec.recompute_diagnostics()
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "quantity", "value"])
        for i, t in enumerate(rec.times):
            for name in sorted(diag):
                v = np.asarray(diag[name])[i]
                w.writerow([repr(float(t)), name, repr(float(np.ravel(v)[0]) if np.ndim(v) else float(v))])
    if manifest_path is not None:
        sp = rec.spec
        manifest = {
            "spec": {
                "family": sp.family,
                "depth": str(sp.depth),
                "k": sp.k,
                "N": sp.N,
                "sigma": sp.sigma.sigma,
                "sigma_provenance": sp.sigma.provenance,
                "renormalized": sp.renormalized,
                "label": sp.label(),
            },
            "n_total": int(rec.snapshots.shape[-1]),
            "snapshots": int(rec.snapshots.shape[0]),
            "steps_taken": rec.steps_taken,
            "rejections": rec.rejections,
            "t_final": float(rec.times[-1]),
        }
        if extra:
            manifest.update(extra)
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
