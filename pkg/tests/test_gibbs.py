import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ilwlab.dispersion import INFINITE, Finite
from ilwlab.fields import (
    AliasingError,
    SeededRng,
    SpectralField,
    ZeroRng,
    bo_gauss,
    deep_gauss,
    project,
    sample_coefficients,
    translate,
)
from ilwlab.gibbs import (
    CutoffCubic,
    Defocusing,
    DegenerateEnsembleError,
    Flat,
    TamedCubic,
    WickContext,
    WeightedEnsemble,
    calibrate_chaos_prefactor,
    chaos_convolution,
    chaos_mc_moment,
    chaos_second_moment,
    chi_cutoff,
    cubic_integral,
    cutoff_domination,
    dealias_size,
    density,
    density_moment,
    log_density,
    mh_sample,
    potential_r,
    snis_sample,
    tamed_constant,
    wick_mass,
    wick_orthogonality,
    wick_power,
)
from ilwlab.hermite import hermite_floor

KIND = deep_gauss(Finite(2))
seeds = st.integers(0, 2**32 - 1)


def ctx(k=3, N=8, kind=KIND):
    return WickContext.for_kind(kind, N, k)


def test_dealias_size():
    assert dealias_size(4, 8) == 64
    assert dealias_size(3, 16) == 64
    assert dealias_size(2, 16) == 64
    assert dealias_size(4, 32) == 256


class TestWickPower:
    def test_degree_one_is_projection(self, backend):
        c = sample_coefficients(KIND, 12, 1, SeededRng(0))[0]
        out = wick_power(SpectralField(c), ctx(k=1, N=8))
        assert np.allclose(out.coeffs, project(c, 8)[:8], atol=1e-13)

    def test_zero_field_k2(self, backend):
        cx = ctx(k=2)
        assert np.all(np.abs(wick_power(np.zeros(8, complex), cx)) < 1e-15)
        assert wick_mass(np.zeros(8), cx) == pytest.approx(-2 * math.pi * cx.s, rel=1e-15)

    @given(seeds)
    def test_cubic_needs_no_renormalization(self, seed):
        c = sample_coefficients(KIND, 8, 1, SeededRng(seed))[0]
        cx = ctx(k=2)
        # (1/3) int W(u^3) = (1/3) int u^3 for mean-zero u
        assert potential_r(c, cx) == pytest.approx(cubic_integral(c, 8) / 3, rel=1e-10, abs=1e-10)

    def test_aliasing_guard(self):
        with pytest.raises(AliasingError):
            wick_power(np.zeros(8, complex), ctx(k=3), grid_size=16)

    def test_matches_direct_convolution(self, backend):
        # k=2: F(u^2)(n) = (1/2pi) sum_{m} u^(m) u^(n-m), projected to 1..N
        c = np.array([1.0 + 0.5j, -0.3j, 0.2])
        N = 3
        cx = WickContext.for_kind(bo_gauss(), N, 2)
        full = {m: c[m - 1] for m in range(1, 4)}
        full.update({-m: np.conj(c[m - 1]) for m in range(1, 4)})
        want = [sum(full[m] * full.get(n - m, 0) for m in full) / (2 * math.pi) for n in range(1, N + 1)]
        assert np.allclose(wick_power(c, cx), want, atol=1e-14)


class TestPotential:
    def test_zero_field_k3(self, backend):
        cx = ctx(k=3)
        assert potential_r(np.zeros(8), cx) == pytest.approx(math.pi / 2 * 3 * cx.s**2, rel=1e-13)

    @given(seeds, st.floats(-7, 7))
    def test_translation_invariant(self, seed, shift):
        c = sample_coefficients(KIND, 8, 1, SeededRng(seed))[0]
        cx = ctx()
        assert potential_r(translate(c, shift), cx) == pytest.approx(potential_r(c, cx), rel=1e-10, abs=1e-10)

    def test_batch_matches_single(self, backend):
        c = sample_coefficients(KIND, 8, 5, SeededRng(1))
        cx = ctx()
        batch = potential_r(c, cx)
        assert np.allclose(batch, [potential_r(row, cx) for row in c], rtol=1e-13)

    @pytest.mark.slow
    def test_zero_mean(self):
        c = sample_coefficients(KIND, 8, 100_000, SeededRng(2))
        r = potential_r(c, ctx())
        assert abs(r.mean()) <= 5 * r.std(ddof=1) / math.sqrt(r.size)


class TestDensities:
    def test_chi(self):
        assert chi_cutoff(0.5, 1) == 1
        assert chi_cutoff(-1.0, 1) == 1
        assert chi_cutoff(1.5, 1) == pytest.approx(0.5)
        assert chi_cutoff(2.0, 1) == 0
        assert chi_cutoff(-3, 1) == 0

    def test_zero_field_cutoff(self):
        cx = ctx(k=2, N=16)
        z = np.zeros(16)
        K = 2 * math.pi * cx.s
        assert density(z, cx, CutoffCubic(K)) == 1.0
        assert density(z, cx, CutoffCubic(0.75 * K)) == pytest.approx(chi_cutoff(-K, 0.75 * K))
        assert density(z, cx, CutoffCubic(0.4 * K)) == 0.0

    def test_flat(self):
        c = sample_coefficients(KIND, 8, 4, SeededRng(0))
        assert np.all(density(c, ctx(), Flat()) == 1)

    def test_defocusing_degree_checked(self):
        with pytest.raises(ValueError):
            Defocusing(2)
        with pytest.raises(ValueError):
            log_density(np.zeros(8), ctx(k=3), Defocusing(5))

    @pytest.mark.parametrize("N", [8, 32])
    def test_defocusing_ceiling(self, N):
        # -R >= -(2pi/(k+1)) a_{k+1} sigma^{(k+1)/2}, so G is bounded by its exponential
        k = 3
        cx = ctx(k=k, N=N)
        ceiling = 2 * math.pi / (k + 1) * hermite_floor(k + 1) * cx.s ** ((k + 1) / 2)
        c = sample_coefficients(KIND, N, 10_000, SeededRng(5))
        assert np.max(log_density(c, cx, Defocusing(k))) <= ceiling
        # the bound grows like (log N)^{(k+1)/2}
        assert ceiling <= 2 * math.pi / 4 * 6 * (0.45 * math.log(N + 1) + 0.6) ** 2

    def test_cutoff_dominated_by_tamed(self):
        cx = ctx(k=2, N=16)
        c = sample_coefficients(KIND, 16, 10_000, SeededRng(6))
        for A in (0.5, 1.0, 3.0):
            assert cutoff_domination(c, cx, 1.0, A) <= 1.0
        assert tamed_constant(1, 1) == pytest.approx(math.exp(4))

    def test_cutoff_support_bound(self):
        cx = ctx(k=2, N=16)
        ens = snis_sample(cx, CutoffCubic(1.0), 10_000, SeededRng(7))
        live = ens.weights > 0
        mass = np.sum(np.abs(ens.coeffs[live]) ** 2, axis=1) / math.pi
        assert np.all(np.abs(wick_mass(ens.coeffs[live], cx)) < 2.0)
        assert np.all(mass <= 2 * math.pi * cx.s + 2.0)


class TestSamplers:
    def test_flat_snis(self):
        ens = snis_sample(ctx(), Flat(), 500, SeededRng(0))
        assert np.allclose(ens.weights, 1 / 500)
        assert ens.ess == pytest.approx(500)
        z, se = ens.partition_function()
        assert z == 1 and se == 0

    def test_small_count(self):
        with pytest.raises(ValueError):
            snis_sample(ctx(), Flat(), 5, SeededRng(0))

    def test_degenerate(self):
        cx = ctx(k=2)
        with pytest.raises(DegenerateEnsembleError):
            snis_sample(cx, CutoffCubic(0.1 * math.pi * cx.s), 20, ZeroRng())

    def test_ess_range(self):
        ens = snis_sample(ctx(), Defocusing(3), 2000, SeededRng(1))
        assert 1 <= ens.ess <= len(ens)
        assert ens.weights.sum() == pytest.approx(1)

    def test_expectation_se(self):
        lw = np.zeros(4)
        ens = WeightedEnsemble(np.zeros((4, 1)), lw)
        m, se = ens.expectation([1.0, 2.0, 3.0, 4.0])
        assert m == 2.5
        assert se == pytest.approx(math.sqrt(np.sum((np.arange(1, 5) - 2.5) ** 2)) / 4)

    def test_partition_function_exact_single_mode(self):
        # N = 1: u = A cos(x + theta) with |c|^2 exponential, so Z is a 1-d integral
        cx = ctx(N=1)
        s = cx.s
        lam = KIND.symbols(1)[0] / (2 * math.pi)
        r = np.linspace(0, 400, 400_001)
        a2 = r / math.pi**2
        R = (2 * math.pi / 4) * (3 * a2**2 / 8 - 3 * s * a2 + 3 * s * s)
        exact = np.trapezoid(lam * np.exp(-lam * r - R), r)
        z, se = snis_sample(cx, Defocusing(3), 100_000, SeededRng(1)).partition_function()
        assert abs(z - exact) <= 5 * se

    @pytest.mark.xfail(strict=True, reason="Z_N still grows over N = 8..64 (heavy-tailed weights); see notes")
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_partition_function_stable_in_N(self):
        vals = []
        for N in (8, 16, 32, 64):
            ens = snis_sample(ctx(N=N), Defocusing(3), 20_000, SeededRng(3))
            vals.append(ens.partition_function())
        for za, sa in vals:
            for zb, sb in vals:
                assert abs(za - zb) <= 3 * math.hypot(sa, sb)

    def test_mh_flat(self):
        ens = mh_sample(ctx(N=4), Flat(), 20_000, 0.5, SeededRng(4), burn_in=100)
        assert ens.acceptance_rate == 1.0
        c = ens.coeffs
        for n in range(1, 5):
            v = np.abs(c[:, n - 1]) ** 2
            m, se = ens.expectation(v)
            assert abs(m - 2 * math.pi / KIND.symbols(4)[n - 1]) <= 5 * se

    def test_mh_step_checked(self):
        with pytest.raises(ValueError):
            mh_sample(ctx(), Flat(), 100, 0.0, SeededRng(0))

    def test_mh_acceptance_reported(self):
        ens = mh_sample(ctx(N=16), Defocusing(3), 3200, 0.5, SeededRng(5), burn_in=200)
        assert 0 < ens.acceptance_rate < 1

    def test_snis_mh_agree_defocusing(self):
        cx = ctx(N=8)
        a = snis_sample(cx, Defocusing(3), 40_000, SeededRng(8))
        b = mh_sample(cx, Defocusing(3), 40_000, 0.5, SeededRng(9))
        ma, sa = a.expect(lambda c: wick_mass(c, cx))
        mb, sb = b.expect(lambda c: wick_mass(c, cx))
        assert abs(ma - mb) <= 3 * math.hypot(sa, sb)


class TestChaos:
    def test_outside_support(self):
        cx = ctx(k=2, N=4, kind=bo_gauss())
        assert chaos_second_moment(cx, 9) == 0

    def test_degree_one_is_mode_variance(self):
        cx = ctx(k=1, N=6)
        for n in range(1, 7):
            assert chaos_second_moment(cx, n) == pytest.approx(2 * math.pi / KIND.symbols(6)[n - 1])

    def test_size_limit(self):
        with pytest.raises(ValueError):
            chaos_convolution(ctx(k=4, N=4), 1)

    def test_convolution_backends(self, backend):
        cx = ctx(k=3, N=8)
        brute = 0.0
        S = {n: KIND.symbol(n) for n in range(-8, 9) if n}
        for a in S:
            for b in S:
                c = 2 - a - b
                if c in S:
                    brute += 1 / (S[a] * S[b] * S[c])
        assert chaos_convolution(cx, 2) == pytest.approx(brute, rel=1e-13)

    @pytest.mark.slow
    def test_mc_matches_convolution(self):
        cx = ctx(k=2, N=8, kind=bo_gauss())
        m, se = chaos_mc_moment(cx, 1, 100_000, SeededRng(12))
        assert abs(m - chaos_second_moment(cx, 1)) <= 5 * se

    @pytest.mark.slow
    def test_prefactor_calibration_stable(self):
        ratio, se = calibrate_chaos_prefactor(samples=100_000, seed=0)
        assert abs(ratio - 2.0) <= 3 * se


def test_wick_orthogonality_small():
    for k, m in [(1, 1), (2, 2), (1, 2), (2, 3)]:
        mc, se, exact = wick_orthogonality(KIND, 8, k, m, 0.3, 1.4, 20_000, SeededRng(k * 10 + m))
        assert abs(mc - exact) <= 5 * se


def test_hypercontractivity_ratio():
    for k in (2, 3):
        cx = ctx(k=k, N=8)
        c = sample_coefficients(KIND, 8, 50_000, SeededRng(k))
        from ilwlab.gibbs import _grid_integral

        v = _grid_integral(c, k, cx.s, 8)
        ratio = np.mean(v**4) ** 0.25 / np.mean(v**2) ** 0.5
        assert ratio <= 3 ** (k / 2) * 1.2


def test_density_moment_flat():
    m, se = density_moment(ctx(), Flat(), 2, 100, SeededRng(0))
    assert m == 1 and se == 0
