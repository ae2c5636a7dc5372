"""Seeded studies and the acceptance criteria.

Each ``criterion_*`` function runs one check at its stated tolerance and
returns a CriterionResult; ``quick=True`` shrinks sample sizes (the CLI's
``acceptance --quick``), never the tolerances.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dispersion import INFINITE, Finite, k_delta, l_delta, mittag_leffler_l
from .dynamics import (
    REVERSIBILITY_CFL,
    deep_gilw,
    default_dt,
    evolve,
    hamiltonian,
    invariance_test,
    limit_study,
    low_mass,
)
from .fields import (
    SeededRng,
    bo_gauss,
    deep_gauss,
    kdv_gauss,
    sample_coefficients,
    scaled_gauss,
    sobolev_norm,
)
from .gibbs import (
    CutoffCubic,
    Defocusing,
    WickContext,
    cutoff_domination,
    density_moment,
    log_density,
    mh_sample,
    snis_sample,
    wick_mass,
    wick_orthogonality,
)
from .hermite import generating_coefficients, hermite, hermite_shift_check, sigma_deep, sigma_kdv, sigma_shallow
from .metrics import (
    Estimate,
    ProductGaussianSpec,
    energy_distance,
    kakutani_sum,
    kl_deep,
    ky_fan,
    log_rn_derivative,
    marginal_features,
    pinsker_check,
    scheffe_tv,
)


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    elapsed: float
    budget: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.id:2d} {self.name} ({self.elapsed:.1f} s / budget {self.budget:g} s)"

    def as_dict(self):
        return {
            "id": self.id,
            "name": self.name,
            "passed": self.passed,
            "elapsed": self.elapsed,
            "budget": self.budget,
            "details": _jsonable(self.details),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def decreasing_within_bands(values, errors, z: float = 3.0) -> bool:
    """No step up by more than z combined SE, and a net decrease first -> last."""
    for i in range(len(values) - 1):
        band = z * math.hypot(errors[i], errors[i + 1])
        if values[i + 1] > values[i] + band:
            return False
    return values[-1] < values[0]


# -- studies (shared with the CLI) --------------------------------------------------


def gibbs_tv_in_N(delta: float, k: int, Ns: Sequence[int], samples: int, seed: int):
    """Scheffe TV(rho_{delta,N}, rho_{delta,2N}) on one shared base sample with 2 max(N) modes."""
    kind = deep_gauss(Finite(delta))
    top = 2 * max(Ns)
    c = sample_coefficients(kind, top, samples, SeededRng(seed))
    logs = {}
    for N in sorted(set(Ns) | {2 * n for n in Ns}):
        logs[N] = log_density(c, WickContext.for_kind(kind, N, k), Defocusing(k))
    return [scheffe_tv(logs[N], logs[2 * N]) for N in Ns]


def gibbs_tv_deep(deltas: Sequence[float], N: int, k: int, samples: int, seed: int):
    """Scheffe TV(rho_{delta,N}, rho_{inf,N}) with base mu_inf and the exact RN derivative."""
    base = bo_gauss()
    c = sample_coefficients(base, N, samples, SeededRng(seed))
    lg = log_density(c, WickContext.for_kind(base, N, k), Defocusing(k))
    out = []
    for d in deltas:
        kind = deep_gauss(Finite(float(d)) if d != math.inf else INFINITE)
        lf = log_rn_derivative(c, kind, base) + log_density(c, WickContext.for_kind(kind, N, k), Defocusing(k))
        out.append(scheffe_tv(lf, lg))
    return out


def shallow_ky_fan(deltas: Sequence[float], N: int, samples: int, seed: int, s: float = -0.5):
    """Ky-Fan(X~_delta, X_KdV) with both fields built from the same normals."""
    y = sample_coefficients(kdv_gauss(), N, samples, SeededRng(seed))
    out = []
    for d in deltas:
        x = sample_coefficients(scaled_gauss(Finite(float(d))), N, samples, SeededRng(seed))
        out.append(ky_fan(x, y, s))
    return out


def shallow_energy(deltas: Sequence[float], N: int, k: int, samples: int, seed: int, modes=(1, 2)):
    """Energy distance between the (modes) marginals of rho~_delta and rho_KdV (SNIS, common seed)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ref = snis_sample(WickContext.for_kind(kdv_gauss(), N, k), Defocusing(k), samples, SeededRng(seed))
        xr = marginal_features(ref.coeffs, modes)
        out = []
        for d in deltas:
            ens = snis_sample(
                WickContext.for_kind(scaled_gauss(Finite(float(d))), N, k), Defocusing(k), samples, SeededRng(seed)
            )
            out.append(max(0.0, energy_distance(marginal_features(ens.coeffs, modes), ens.weights, xr, ref.weights)))
    return out


def uniform_moment_table(deltas, Ns, k: int, samples: int, seed: int, p: float = 2.0):
    """{(delta, N): (E[G^p], SE)} for the defocusing density."""
    table = {}
    for d in deltas:
        depth = INFINITE if d == math.inf else Finite(float(d))
        for N in Ns:
            ctx = WickContext.for_kind(deep_gauss(depth), N, k)
            table[(d, N)] = density_moment(ctx, Defocusing(k), p, samples, SeededRng(seed))
    return table


# -- criteria -------------------------------------------------------------------------


def _timed(cid: int, name: str, budget: float, fn: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, details = fn()
    elapsed = time.perf_counter() - t0
    details["within_budget"] = elapsed <= budget
    return CriterionResult(cid, name, bool(ok) and elapsed <= budget, elapsed, budget, details)


def criterion_1(quick: bool = False) -> CriterionResult:
    def run():
        worst = 0.0
        n = np.arange(-1000, 1001, dtype=float)
        for d in (0.1, 1.0, 2.0, 10.0, 1e3):
            kv = k_delta(Finite(d), n)
            lo = np.maximum(0.0, np.abs(n) - 1.0 / d)
            worst = max(worst, float(np.max(lo - kv)), float(np.max(kv - np.abs(n))))
        grid = np.geomspace(1.0, 1e3, 200)
        m = np.arange(1, 33, dtype=float)
        tab = np.array([k_delta(Finite(float(d)), m) for d in grid])
        monotone = bool(np.all(np.diff(tab, axis=0) > 0))
        return worst <= 1e-12 and monotone, {"max_violation": worst, "monotone_in_delta": monotone}

    return _timed(1, "symbol sandwich and monotonicity", 1.0, run)


def criterion_2(quick: bool = False) -> CriterionResult:
    terms = 10**7

    def run():
        worst = -math.inf
        for d in (0.1, 1.0, 5.0):
            for n in range(1, 9):
                err = abs(l_delta(Finite(d), n) - mittag_leffler_l(d, n, terms))
                worst = max(worst, err / (6 * n * n / (math.pi**2 * terms)))
        return worst <= 1.0, {"max_error_over_bound": worst}

    return _timed(2, "Mittag-Leffler agreement", 5.0, run)


def criterion_3(quick: bool = False) -> CriterionResult:
    def run():
        kdv = {N: abs(sigma_kdv(N).sigma - math.pi / 6) * math.pi * N for N in (10, 100, 1000)}
        ratio = 0.0
        for d in (0.1, 1.0, 5.0):
            for N in (10, 100, 1000):
                a = sigma_shallow(Finite(d), N).sigma
                b = d / 3.0 * sigma_deep(Finite(d), N).sigma
                ratio = max(ratio, abs(a - b))
        ok = all(v <= 1.0 for v in kdv.values()) and ratio <= 1e-14
        return ok, {"kdv_error_times_piN": kdv, "shallow_vs_scaled_deep": ratio}

    return _timed(3, "Wick constants", 1.0, run)


def criterion_4(quick: bool = False) -> CriterionResult:
    def run():
        gen = 0.0
        for s in (0.5, 1.0, 2.0):
            for x in (-2.0, 0.0, 1.0, 3.0):
                ref = generating_coefficients(10, x, s)
                gen = max(gen, max(abs(hermite(k, x, s) - ref[k]) for k in range(11)))
        rng = np.random.default_rng(4)
        scale = 0.0
        shift = 0.0
        for _ in range(300):
            k = int(rng.integers(0, 11))
            x = float(rng.uniform(-4, 4))
            s = float(rng.uniform(0.1, 4))
            a = hermite(k, x, s)
            b = s ** (k / 2) * hermite(k, x / math.sqrt(s), 1.0)
            scale = max(scale, abs(a - b) / max(abs(a), 1e-300) if a != 0 else abs(b))
            k8 = int(rng.integers(0, 9))
            y = float(rng.uniform(-3, 3))
            lhs, rhs = hermite_shift_check(k8, x / 2, y, s)
            shift = max(shift, abs(lhs - rhs) / (1 + abs(lhs)))
        ok = gen <= 1e-8 and scale <= 1e-12 and shift <= 1e-9
        return ok, {"generating": gen, "scaling_rel": scale, "shift_rel": shift}

    return _timed(4, "Hermite identities", 1.0, run)


def criterion_5(quick: bool = False, samples: Optional[int] = None) -> CriterionResult:
    samples = samples or (20_000 if quick else 100_000)

    def run():
        kind = deep_gauss(Finite(2.0))
        worst = 0.0
        table = {}
        for k in (1, 2, 3):
            for m in (1, 2, 3):
                mc, se, exact = wick_orthogonality(kind, 8, k, m, 0.0, 0.7, samples, SeededRng(100 + 10 * k + m))
                z = abs(mc - exact) / se
                table[f"{k},{m}"] = {"mc": mc, "se": se, "exact": exact, "z": z}
                worst = max(worst, z)
        return worst <= 5.0, {"max_z": worst, "samples": samples, "table": table}

    return _timed(5, "chaos orthogonality", 30.0, run)


def criterion_6(quick: bool = False) -> CriterionResult:
    def run():
        deltas = [2.0**j for j in range(1, 11)]
        kl = [kl_deep(d, 100_000) for d in deltas]
        vals = [r.value for r in kl]
        strict = all(b < a for a, b in zip(vals, vals[1:]))
        ratio = vals[-1] / vals[0]
        pins = [pinsker_check(d, 10_000) for d in deltas]
        ordered = all(p.ordered for p in pins)
        details = {
            "kl": dict(zip(deltas, vals)),
            "tail_bounds": [r.tail_bound for r in kl],
            "ratio_last_first": ratio,
            "pinsker_ordered": ordered,
        }
        return strict and ratio <= 1e-4 and ordered, details

    return _timed(6, "deep-water measure convergence", 5.0, run)


def criterion_7(quick: bool = False, samples: Optional[int] = None, seed: int = 0) -> CriterionResult:
    samples = samples or (20_000 if quick else 100_000)

    def run():
        Ns = [8, 16, 32]
        est = gibbs_tv_in_N(2.0, 3, Ns, samples, seed)
        vals = [e.value for e in est]
        errs = [e.stderr for e in est]
        return decreasing_within_bands(vals, errs), {"N": Ns, "tv": vals, "se": errs, "samples": samples}

    return _timed(7, "Gibbs TV convergence in N", 120.0, run)


def criterion_8(quick: bool = False, samples: Optional[int] = None, seed: int = 0) -> CriterionResult:
    samples = samples or (20_000 if quick else 100_000)

    def run():
        deltas = [2.0, 8.0, 32.0]
        est = gibbs_tv_deep(deltas, 16, 3, samples, seed)
        vals = [e.value for e in est]
        errs = [e.stderr for e in est]
        return decreasing_within_bands(vals, errs), {"delta": deltas, "tv": vals, "se": errs, "samples": samples}

    return _timed(8, "deep-water Gibbs convergence in delta", 120.0, run)


def criterion_9(quick: bool = False, seed: int = 0) -> CriterionResult:
    def run():
        a = ProductGaussianSpec.from_kind(scaled_gauss(Finite(1.0)), 2000)
        b = ProductGaussianSpec.from_kind(kdv_gauss(), 2000)
        S = kakutani_sum(a, b)
        growth = {M: float(S[2 * M - 1] / S[M - 1]) for M in (100, 1000)}
        diverges = all(g >= 1.5 for g in growth.values())
        deltas = [1.0, 0.3, 0.1, 0.03]
        kf = shallow_ky_fan(deltas, 64, 5_000 if quick else 20_000, seed)
        kf_vals = [e.value for e in kf]
        ed = shallow_energy(deltas, 16, 3, 2_000 if quick else 5_000, seed)
        kf_dec = all(y < x for x, y in zip(kf_vals, kf_vals[1:]))
        ed_dec = all(y < x for x, y in zip(ed, ed[1:]))
        details = {
            "kakutani_growth": growth,
            "ky_fan": kf_vals,
            "ky_fan_se": [e.stderr for e in kf],
            "energy_distance": ed,
            "delta": deltas,
        }
        return diverges and kf_dec and ed_dec, details

    return _timed(9, "shallow-water dichotomy", 180.0, run)


def criterion_10(quick: bool = False, seed: int = 0) -> CriterionResult:
    def run():
        spec = deep_gilw(Finite(2.0), 3, 32)
        c0 = sample_coefficients(deep_gauss(Finite(2.0)), 64, 1, SeededRng(seed))[0]
        rec = evolve(c0, spec, 10.0, drift_tol=1e-8, diagnostics=False)
        cT = rec.snapshots[-1]
        H0, H1 = hamiltonian(c0, spec), hamiltonian(cT, spec)
        m0, m1 = low_mass(c0, 32), low_mass(cT, 32)
        hi = float(np.max(np.abs(np.abs(cT[32:]) - np.abs(c0[32:]))))
        # reversibility is a pure truncation-error check; it needs about half the default step
        fwd = evolve(c0, spec, 1.0, dt=default_dt(c0, spec, REVERSIBILITY_CFL), diagnostics=False).snapshots[-1]
        back = evolve(fwd, spec, -1.0, dt=default_dt(fwd, spec, REVERSIBILITY_CFL), diagnostics=False).snapshots[-1]
        rev = sobolev_norm(back - c0, 0.0)
        d = {
            # the zero mode is not part of the state, so the mean is 0 by construction
            "mean": 0.0,
            "mass_drift": abs(m1 - m0) / m0,
            "hamiltonian_drift": abs(H1 - H0) / abs(H0),
            "high_mode_amplitude_drift": hi,
            "reversibility_h0": rev,
            "steps": rec.steps_taken,
            "rejections": rec.rejections,
        }
        ok = d["mass_drift"] <= 1e-8 and d["hamiltonian_drift"] <= 1e-8 and hi <= 1e-14 and rev <= 1e-8
        return ok, d

    return _timed(10, "conservation", 60.0, run)


def criterion_11(quick: bool = False, samples: Optional[int] = None, seed: int = 0) -> CriterionResult:
    samples = samples or (20_000 if quick else 100_000)

    def run():
        spec = deep_gilw(Finite(2.0), 3, 8)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = invariance_test(spec, Defocusing(3), 1.0, samples, SeededRng(seed), cfl=1.0)
        return rep.passed, rep.as_dict()

    return _timed(11, "statistical invariance", 300.0, run)


def criterion_12(quick: bool = False, seed: int = 7) -> CriterionResult:
    def run():
        deep = limit_study("deep", [2.0, 8.0, 32.0, 128.0], 16, 3, seed, T=1.0, s=-0.5)
        g = [r.gap for r in deep]
        deep_ok = all(b < a for a, b in zip(g, g[1:])) and g[-1] <= 0.1 * g[0]
        shallow = limit_study("shallow", [0.3, 0.1, 0.03, 0.01], 16, 3, seed, T=1.0, s=-0.5)
        h = [r.gap for r in shallow]
        shallow_ok = all(b < a for a, b in zip(h, h[1:]))
        return deep_ok and shallow_ok, {"deep_gaps": g, "shallow_gaps": h, "deep_ok": deep_ok, "shallow_ok": shallow_ok}

    return _timed(12, "trajectory limits", 360.0, run)


def criterion_13(quick: bool = False, seed: int = 0) -> CriterionResult:
    def run():
        K, A, N = 1.0, 1.0, 16
        kind = deep_gauss(Finite(2.0))
        ctx = WickContext.for_kind(kind, N, 2)
        base = sample_coefficients(kind, N, 10_000, SeededRng(seed))
        dom = cutoff_domination(base, ctx, K, A)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sn = snis_sample(ctx, CutoffCubic(K), 20_000 if quick else 100_000, SeededRng(seed + 1))
        live = sn.weights > 0
        wm = wick_mass(sn.coeffs[live], ctx)
        l2 = low_mass(sn.coeffs[live], N)
        support_ok = bool(np.all(np.abs(wm) < 2 * K) and np.all(l2 <= 2 * math.pi * ctx.s + 2 * K))
        m_s, se_s = sn.expectation(wick_mass(sn.coeffs, ctx))
        mh = mh_sample(ctx, CutoffCubic(K), 10_000 if quick else 50_000, 0.5, SeededRng(seed + 2))
        m_m, se_m = mh.expectation(wick_mass(mh.coeffs, ctx))
        agree = abs(m_s - m_m) <= 3 * math.hypot(se_s, se_m)
        d = {
            "max_domination_ratio": dom,
            "support_ok": support_ok,
            "snis": [m_s, se_s],
            "snis_ess": sn.ess,
            "mh": [m_m, se_m],
            "mh_acceptance": mh.acceptance_rate,
        }
        return dom <= 1.0 and support_ok and agree, d

    return _timed(13, "cutoff-measure suite (k=2)", 180.0, run)


def criterion_14(quick: bool = False, samples: Optional[int] = None, seed: int = 0) -> CriterionResult:
    samples = samples or (20_000 if quick else 100_000)

    def run():
        table = uniform_moment_table([2.0, 8.0, 32.0, math.inf], [8, 32, 128], 3, samples, seed)
        vals = [v[0] for v in table.values()]
        spread = max(vals) / min(vals)
        rows = {f"{d:g},{N}": list(v) for (d, N), v in table.items()}
        return spread < 3.0, {"table": rows, "max_over_min": spread, "samples": samples}

    return _timed(14, "uniform-moment shadow", 180.0, run)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
    13: criterion_13,
    14: criterion_14,
}


def run_acceptance(quick: bool = False, only: Optional[Sequence[int]] = None, echo: Optional[Callable] = None):
    """Run the selected criteria in order; ``echo`` receives each result as it finishes."""
    results = []
    for cid in only or sorted(CRITERIA):
        r = CRITERIA[cid](quick=quick)
        results.append(r)
        if echo is not None:
            echo(r)
    return results
