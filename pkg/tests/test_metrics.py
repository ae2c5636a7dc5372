import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ilwlab.dispersion import Finite
from ilwlab.fields import (
    SeededRng,
    bo_gauss,
    deep_gauss,
    kdv_gauss,
    sample_coefficients,
    scaled_gauss,
)
from ilwlab.gibbs import Defocusing, Flat, WeightedEnsemble, WickContext, log_density, snis_sample
from ilwlab.metrics import (
    Estimate,
    ProductGaussianSpec,
    distance_report,
    energy_distance,
    hellinger_distance,
    hellinger_mode_factor,
    hellinger_product,
    kakutani_sum,
    kl_deep,
    kl_product,
    ky_fan,
    log_rn_derivative,
    marginal_features,
    phi,
    pinsker_check,
    scheffe_tv,
    weak_marginal_distance,
)

variances = st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=1, max_size=20)


def spec(kind, M):
    return ProductGaussianSpec.from_kind(kind, M)


class TestHellinger:
    def test_identical(self):
        a = spec(bo_gauss(), 50)
        assert hellinger_product(a, a) == 1.0
        assert hellinger_distance(a, a) == 0

    def test_single_mode_factor(self):
        f = hellinger_mode_factor(1.0, 2.0)
        assert f == pytest.approx(math.sqrt(2) * 2**0.25 / math.sqrt(3), rel=1e-15)
        assert f == pytest.approx(0.97098, abs=1e-5)
        # numerical integral of sqrt(phi_1 phi_2)
        x = np.linspace(-40, 40, 400_001)
        g = lambda v: np.exp(-x**2 / (2 * v)) / np.sqrt(2 * math.pi * v)
        assert np.trapezoid(np.sqrt(g(1.0) * g(2.0)), x) == pytest.approx(f, rel=1e-10)

    def test_complex_mode_squares(self):
        a = ProductGaussianSpec([1.0])
        b = ProductGaussianSpec([2.0])
        assert hellinger_product(a, b) == pytest.approx(hellinger_mode_factor(1.0, 2.0) ** 2)

    @given(variances, variances)
    def test_range(self, va, vb):
        m = min(len(va), len(vb))
        h = hellinger_product(ProductGaussianSpec(va[:m]), ProductGaussianSpec(vb[:m]))
        assert 0 <= h <= 1

    def test_equivalent_measures_stay_apart_from_zero(self):
        vals = [hellinger_product(spec(deep_gauss(Finite(2)), M), spec(bo_gauss(), M)) for M in (10, 100, 1000, 10_000)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] > 0.5 and vals[-1] > 0.99 * vals[-2]

    def test_bad_variance(self):
        with pytest.raises(ValueError):
            ProductGaussianSpec([1.0, 0.0])
        with pytest.raises(ValueError):
            hellinger_product(ProductGaussianSpec([1.0]), ProductGaussianSpec([1.0, 2.0]))


class TestKL:
    def test_phi(self):
        assert phi(1.0) == 0
        assert phi(1 + 1e-9) == pytest.approx(5e-19, rel=1e-6)

    @given(st.floats(min_value=1e-3, max_value=1e3))
    def test_phi_nonneg(self, t):
        assert phi(t) >= 0

    def test_deep_limit(self):
        assert kl_deep(1e6, 100).value <= 1e-9

    def test_monotone_in_delta(self):
        vals = [kl_deep(2.0**j, 10_000, tail_terms=10_000).value for j in range(1, 11)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_monotone_in_M(self):
        vals = [kl_deep(2.0, M, tail_terms=1000).value for M in (1, 10, 100, 1000)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_tail_bound_covers_tail(self):
        short = kl_deep(2.0, 100, tail_terms=100_000)
        long = kl_deep(2.0, 100_000, tail_terms=100_000)
        assert 0 <= long.value - short.value <= short.tail_bound

    def test_matches_product_formula(self):
        M = 200
        r = kl_deep(3.0, M)
        a = spec(deep_gauss(Finite(3.0)), M)
        b = spec(bo_gauss(), M)
        assert r.value == pytest.approx(kl_product(a, b), rel=1e-12)

    def test_matches_mc(self):
        # KL = E_mu_delta[log d mu_delta / d mu_inf] on 4 modes
        kd, kb = deep_gauss(Finite(2.0)), bo_gauss()
        c = sample_coefficients(kd, 4, 200_000, SeededRng(0))
        lr = log_rn_derivative(c, kd, kb)
        se = lr.std(ddof=1) / math.sqrt(lr.size)
        assert abs(lr.mean() - kl_deep(2.0, 4).value) <= 5 * se


class TestPinsker:
    @pytest.mark.parametrize("d", [2, 8, 100])
    def test_ordering(self, d):
        r = pinsker_check(d, 1000)
        assert r.ordered and r.hellinger < r.pinsker_bound
        if d == 100:
            assert r.pinsker_bound < 1e-2

    def test_identical(self):
        r = pinsker_check(math.inf, 10)
        assert r.hellinger == 0 and r.pinsker_bound == 0 and r.ordered


class TestKakutani:
    def test_deep_converges(self):
        s = kakutani_sum(spec(deep_gauss(Finite(2)), 100_000), spec(bo_gauss(), 100_000))
        s4, s5 = s[10_000 - 1], s[-1]
        assert s5 - s4 <= 1e-3 * s4 + 1e-6

    def test_shallow_diverges(self):
        s = kakutani_sum(spec(scaled_gauss(Finite(1)), 2000), spec(kdv_gauss(), 2000))
        for M in (100, 1000):
            assert s[2 * M - 1] >= 1.5 * s[M - 1]

    def test_identical(self):
        a = spec(bo_gauss(), 30)
        assert np.all(kakutani_sum(a, a) == 0)


class TestScheffe:
    def test_identical(self):
        lf = np.random.default_rng(0).normal(size=100)
        assert scheffe_tv(lf, lf).value == 0

    @given(st.integers(0, 1000))
    def test_symmetric(self, seed):
        r = np.random.default_rng(seed)
        lf, lg = r.normal(size=50), r.normal(size=50)
        assert scheffe_tv(lf, lg).value == scheffe_tv(lg, lf).value

    def test_range_and_shape(self):
        r = np.random.default_rng(1)
        e = scheffe_tv(r.normal(size=100), r.normal(size=100))
        assert 0 <= e.value <= 1 and e.stderr > 0
        with pytest.raises(ValueError):
            scheffe_tv(np.zeros(3), np.zeros(4))
        with pytest.raises(ValueError):
            scheffe_tv(np.full(3, -np.inf), np.zeros(3))

    def test_exact_gaussians(self):
        # two 1-d Gaussians reweighted from a common base: TV known in closed form
        r = np.random.default_rng(2)
        x = r.normal(size=400_000)
        lf = -0.5 * (x - 0.5) ** 2 + 0.5 * x**2
        lg = np.zeros_like(x)
        e = scheffe_tv(lf, lg)
        exact = math.erf(0.25 / math.sqrt(2))
        assert abs(e.value - exact) <= 5 * e.stderr

    def test_le_cam_ordering(self):
        # mu_delta vs mu_inf on 4 modes: d_H^2 <= TV <= sqrt(2) d_H
        kd, kb = deep_gauss(Finite(1.0)), bo_gauss()
        c = sample_coefficients(kb, 4, 200_000, SeededRng(3))
        lr = log_rn_derivative(c, kd, kb)
        tv = scheffe_tv(lr, np.zeros_like(lr))
        dh = hellinger_distance(spec(kd, 4), spec(kb, 4))
        assert dh**2 <= tv.value + 3 * tv.stderr
        assert tv.value - 3 * tv.stderr <= math.sqrt(2) * dh

    def test_rn_derivative_normalized(self):
        kd, kb = deep_gauss(Finite(2.0)), bo_gauss()
        c = sample_coefficients(kb, 6, 200_000, SeededRng(4))
        w = np.exp(log_rn_derivative(c, kd, kb))
        assert abs(w.mean() - 1) <= 5 * w.std(ddof=1) / math.sqrt(w.size)


class TestKyFan:
    def test_identical(self):
        x = sample_coefficients(bo_gauss(), 8, 10, SeededRng(0))
        assert ky_fan(x, x, -0.5).value == 0

    @given(st.integers(0, 1000))
    def test_bounded(self, seed):
        r = np.random.default_rng(seed)
        x = 100 * (r.normal(size=(5, 4)) + 1j * r.normal(size=(5, 4)))
        assert 0 <= ky_fan(x, -x, 0.0).value <= 1

    def test_unpaired(self):
        with pytest.raises(ValueError):
            ky_fan(np.zeros((3, 2)), np.zeros((4, 2)), 0.0)

    def test_deep_coupling_decreasing(self):
        y = sample_coefficients(bo_gauss(), 64, 2000, SeededRng(5))
        vals = [ky_fan(sample_coefficients(deep_gauss(Finite(d)), 64, 2000, SeededRng(5)), y, -0.5).value for d in (2, 8, 32, 128)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestEnergy:
    def test_identical(self, backend):
        ens = snis_sample(WickContext.for_kind(bo_gauss(), 4, 3), Defocusing(3), 300, SeededRng(0))
        assert weak_marginal_distance(ens, ens, [1, 2]) == pytest.approx(0, abs=1e-12)

    def test_brute_force(self, backend):
        r = np.random.default_rng(0)
        xa, xb = r.normal(size=(30, 3)), r.normal(size=(20, 3)) + 0.5
        wa, wb = r.random(30), r.random(20)
        wa, wb = wa / wa.sum(), wb / wb.sum()
        d = lambda x, y: np.linalg.norm(x[:, None] - y[None], axis=-1)
        want = 2 * wa @ d(xa, xb) @ wb - wa @ d(xa, xa) @ wa - wb @ d(xb, xb) @ wb
        assert energy_distance(xa, wa, xb, wb) == pytest.approx(want, rel=1e-12)
        assert want > 0

    def test_features(self):
        c = np.array([[1 + 2j, 3 - 1j]])
        assert np.array_equal(marginal_features(c, [2, 1]), [[3, -1, 1, 2]])

    def test_mode_limit(self):
        e = WeightedEnsemble(np.zeros((10, 5)), np.zeros(10))
        with pytest.raises(ValueError):
            weak_marginal_distance(e, e, [1, 2, 3, 4, 5])


def test_distance_report():
    rec = json.loads(distance_report("a|b", "kl", 0.5, None, {"M": 3}, 7))
    assert rec == {"pair": "a|b", "metric": "kl", "value": 0.5, "stderr": None, "params": {"M": 3}, "seed": 7}


def test_estimate_unpacks():
    v, se = Estimate(1.0, 0.1)
    assert (v, se) == (1.0, 0.1)
