import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ilwlab.dispersion import (
    INFINITE,
    SATURATION_CUTOFF,
    SERIES_CUTOFF,
    SHALLOW,
    FamilyError,
    Finite,
    depth_from_value,
    h_frak,
    h_shallow,
    h_shallow_series,
    k_delta,
    l_delta,
    mittag_leffler_l,
    mittag_leffler_tail_bound,
    q_delta,
    symbol,
)

deltas = st.floats(min_value=1e-3, max_value=1e4)
freqs = st.integers(min_value=-2000, max_value=2000)


def coth_minus_one_hp(x):
    # extended precision oracle for coth(x) - 1/x
    getcontext().prec = 50
    x = Decimal(x)
    e = (2 * x).exp()
    return (e + 1) / (e - 1) - 1 / x


class TestKDelta:
    def test_infinite_depth(self):
        assert k_delta(INFINITE, 5) == 5
        assert k_delta(INFINITE, -5) == 5

    def test_zero_mode(self):
        assert k_delta(Finite(1), 0) == 0

    def test_unit(self):
        assert k_delta(Finite(1), 1) == pytest.approx(0.3130352854993313, abs=1e-15)

    @pytest.mark.parametrize("d", [1e-3, 0.1, 1.0, 7.0, 50.0])
    @pytest.mark.parametrize("n", [1, 3, 40])
    def test_high_precision(self, d, n):
        exact = float(Decimal(n) * coth_minus_one_hp(d * n))
        assert k_delta(Finite(d), n) == pytest.approx(exact, rel=1e-13)

    def test_shallow_rejected(self):
        with pytest.raises(FamilyError):
            k_delta(SHALLOW, 1)

    def test_sandwich_grid(self):
        n = np.arange(-1000, 1001)
        n = n[n != 0]
        for d in [0.1, 1, 2, 10, 1000]:
            k = k_delta(Finite(d), n)
            m = np.abs(n)
            assert np.all(k <= m + 1e-12)
            assert np.all(k >= np.maximum(0, m - 1 / d) - 1e-12)
            assert np.all(k > 0)

    @given(deltas, freqs)
    def test_sandwich_property(self, d, n):
        k = k_delta(Finite(d), n)
        assert max(0.0, abs(n) - 1 / d) - 1e-12 <= k <= abs(n) + 1e-12

    @given(deltas, freqs)
    def test_even(self, d, n):
        assert k_delta(Finite(d), n) == k_delta(Finite(d), -n)
        assert q_delta(Finite(d), n) == q_delta(Finite(d), -n)

    def test_monotone_in_depth(self):
        grid = [2.0**j for j in range(11)]
        for n in range(1, 33):
            vals = [k_delta(Finite(d), n) for d in grid]
            assert all(b > a for a, b in zip(vals, vals[1:]))
            assert vals[-1] <= n


class TestLDelta:
    def test_shallow(self):
        assert l_delta(SHALLOW, 3) == 9

    def test_infinite_rejected(self):
        with pytest.raises(FamilyError):
            l_delta(INFINITE, 3)

    def test_increases_to_n_squared(self):
        for n in range(1, 9):
            vals = [l_delta(Finite(d), n) for d in (1, 0.1, 0.01, 0.001)]
            assert all(b > a for a, b in zip(vals, vals[1:]))
            assert vals[-1] < n * n

    @given(deltas, freqs.filter(lambda n: n != 0))
    def test_consistency_with_k(self, d, n):
        assert l_delta(Finite(d), n) == pytest.approx(3 * k_delta(Finite(d), n) / d, rel=1e-12)
        assert 0 < l_delta(Finite(d), n) < n * n

    def test_series_oracle(self):
        # the raw partial sum is short by about its own tail 6n^2/(pi^2 terms) = 2.4e-7
        terms = 10**7
        partial = mittag_leffler_l(1, 2, terms)
        gap = l_delta(Finite(1), 2) - partial
        assert 0 < gap <= mittag_leffler_tail_bound(2, terms)
        # with the leading tail term restored the two agree to 1e-8
        tail = 6 * 4 / (math.pi**2 * (terms + 0.5))
        assert abs(gap - tail) <= 1e-8

    def test_uniform_shallow_lower_bound(self):
        n = np.arange(1, 1001)
        c = min(np.min(l_delta(Finite(d), n) / n) for d in (1e-3, 1e-2, 0.1, 0.5, 1.0))
        assert c > 0.5


class TestQDelta:
    def test_remark_bound(self):
        n = np.arange(-10**4, 10**4 + 1)
        assert np.all(q_delta(Finite(2), n) <= 0.5)

    def test_values(self):
        assert q_delta(Finite(1), 0) == 0
        assert q_delta(Finite(1), 1) == pytest.approx(0.6869647145006687, abs=1e-15)

    def test_needs_finite(self):
        with pytest.raises(FamilyError):
            q_delta(INFINITE, 1)


class TestHFrak:
    def test_zero(self):
        assert h_frak(0) == 0

    def test_saturated(self):
        v = h_frak(100)
        assert abs(v - 1) <= 1e-15
        assert math.isfinite(h_frak(1e6))

    @pytest.mark.parametrize("x", [0.1, 1, 10])
    def test_even(self, x):
        assert h_frak(x) == h_frak(-x)

    @given(st.floats(min_value=1e-6, max_value=1e3))
    def test_bounds(self, x):
        v = h_frak(x)
        assert 0 < v < x
        # past the cutoff 1 - 2x e^{-2x} rounds to 1.0 in doubles
        assert v < 1.0 if x <= 15 else v <= 1.0

    @pytest.mark.parametrize("edge", [SERIES_CUTOFF, SATURATION_CUTOFF])
    def test_branches_agree(self, edge):
        x = np.linspace(edge - 1e-3, edge + 1e-3, 21)
        exact = [float(1 - Decimal(t) * (coth_minus_one_hp(t) + 1 / Decimal(t)) + Decimal(t)) for t in x]
        assert np.max(np.abs(h_frak(x) - exact)) < 1e-15


class TestHShallow:
    def test_to_zero(self):
        for n in range(1, 9):
            vals = [h_shallow(Finite(d), n) for d in (1, 0.1, 0.01, 0.001)]
            assert all(b < a for a, b in zip(vals, vals[1:]))
            assert vals[-1] < 1e-4

    def test_large_n(self):
        assert abs(h_shallow(Finite(1), 10**4) - 1) <= 5e-4

    @pytest.mark.parametrize("d,n", [(0.01, 1), (0.3, 4), (1.0, 2), (5.0, 7)])
    def test_series(self, d, n):
        assert h_shallow(Finite(d), n) == pytest.approx(h_shallow_series(d, n), abs=1e-10)

    def test_divergent_square_sum(self):
        n = np.arange(1, 4001)
        h2 = h_shallow(Finite(1), n) ** 2
        for M in (100, 1000, 2000):
            assert 2 * h2[: 2 * M].sum() >= 1.5 * 2 * h2[:M].sum()

    def test_zero_mode(self):
        with pytest.raises(ValueError):
            h_shallow(Finite(1), 0)


class TestMittagLeffler:
    def test_zero_mode(self, backend):
        assert mittag_leffler_l(1, 0, 5) == 0

    def test_monotone_in_terms(self, backend):
        vals = [mittag_leffler_l(1, 3, t) for t in (10**2, 10**4, 10**6)]
        assert vals[0] < vals[1] < vals[2]

    @pytest.mark.parametrize("d", [0.1, 1, 5])
    def test_tail_bound(self, backend, d):
        for n in range(1, 9):
            err = l_delta(Finite(d), n) - mittag_leffler_l(d, n, 10**5)
            assert 0 <= err <= mittag_leffler_tail_bound(n, 10**5)


def test_depth_parsing():
    assert depth_from_value("inf") is INFINITE
    assert depth_from_value(0) is SHALLOW
    assert depth_from_value("2") == Finite(2.0)
    with pytest.raises(ValueError):
        Finite(-1)


def test_symbol_dispatch():
    assert symbol("deep", Finite(2), 3) == k_delta(Finite(2), 3)
    assert symbol("scaled", Finite(2), 3) == l_delta(Finite(2), 3)
    with pytest.raises(ValueError):
        symbol("other", Finite(2), 3)
