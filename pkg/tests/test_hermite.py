import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ilwlab.dispersion import INFINITE, SHALLOW, FamilyError, Finite
from ilwlab.hermite import (
    MAX_DEGREE,
    DegreeError,
    generating_coefficients,
    hermite,
    hermite_floor,
    hermite_shift_check,
    sigma_deep,
    sigma_kdv,
    sigma_kdv_limit,
    sigma_shallow,
)

sigmas = st.floats(min_value=0.01, max_value=4.0)
xs = st.floats(min_value=-5.0, max_value=5.0)


def explicit(k, x, s):
    # the low-degree list, written out
    return [
        1.0,
        x,
        x**2 - s,
        x**3 - 3 * s * x,
        x**4 - 6 * s * x**2 + 3 * s**2,
    ][k]


def test_examples(backend):
    assert hermite(2, 2, 1) == 3
    assert hermite(0, 1.7, 0.3) == 1
    assert hermite(4, 0, 2.5) == pytest.approx(3 * 2.5**2, rel=1e-15)


def test_degree_cap():
    hermite(MAX_DEGREE, 0.1, 1.0)
    with pytest.raises(DegreeError):
        hermite(MAX_DEGREE + 1, 0.1, 1.0)
    with pytest.raises(DegreeError):
        hermite(-1, 0.1, 1.0)


def test_array_in_array_out(backend):
    x = np.linspace(-2, 2, 7)
    out = hermite(3, x, 0.5)
    assert out.shape == x.shape
    assert np.allclose(out, x**3 - 1.5 * x, rtol=1e-14, atol=1e-14)


@given(st.integers(0, 4), xs, sigmas)
def test_explicit_list(k, x, s):
    assert hermite(k, x, s) == pytest.approx(explicit(k, x, s), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("x", [-2.0, 0.0, 1.0, 3.0])
def test_generating_function(s, x):
    gen = generating_coefficients(10, x, s)
    rec = [hermite(k, x, s) for k in range(11)]
    assert np.max(np.abs(gen - rec)) <= 1e-8


@given(st.integers(0, 12), xs, sigmas)
def test_scaling(k, x, s):
    lhs = hermite(k, x, s)
    rhs = s ** (k / 2) * hermite(k, x / math.sqrt(s), 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12 * (1 + abs(rhs)))


def test_shift_example():
    lhs, rhs = hermite_shift_check(3, 1, 1, 1)
    assert lhs == 2 and rhs == pytest.approx(2, abs=1e-15)


@given(st.integers(0, 8), xs, xs, st.floats(min_value=0.01, max_value=4.0))
def test_shift_identity(k, x, y, s):
    lhs, rhs = hermite_shift_check(k, x, y, s)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


@given(st.integers(0, 8), xs, sigmas)
def test_shift_by_zero(k, y, s):
    lhs, rhs = hermite_shift_check(k, 0.0, y, s)
    assert lhs == pytest.approx(rhs, rel=1e-14, abs=1e-14)


@given(st.integers(1, 10), st.floats(-3, 3), sigmas)
def test_derivative(k, x, s):
    eps = 1e-5
    fd = (hermite(k, x + eps, s) - hermite(k, x - eps, s)) / (2 * eps)
    scale = 1 + abs(k * hermite(k - 1, x, s)) + (abs(x) + 3) ** k
    assert fd == pytest.approx(k * hermite(k - 1, x, s), abs=1e-6 * scale)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_defocusing_floor(k):
    a = hermite_floor(k)
    assert a > 0
    grid = np.linspace(-12, 12, 40001)
    for s in (0.3, 1.0, 2.5):
        assert np.min(hermite(k, grid, s)) >= -a * s ** (k / 2) - 1e-12
    if k == 2:
        assert a == pytest.approx(1.0)
    if k == 4:
        # min of x^4 - 6x^2 + 3 sits at x^2 = 3
        assert a == pytest.approx(6.0, rel=1e-12)


def test_floor_odd_degree():
    with pytest.raises(ValueError):
        hermite_floor(3)


class TestVariances:
    def test_bo_example(self):
        assert sigma_deep(INFINITE, 2).sigma == pytest.approx(3 / (2 * math.pi), rel=1e-15)

    def test_log_growth(self):
        for N in (10**2, 10**3, 10**4, 10**5):
            r = sigma_deep(INFINITE, N).sigma / math.log(N + 1)
            assert 0.25 <= r <= 0.45

    def test_deep_limit_monotone(self):
        vals = [sigma_deep(Finite(d), 8).sigma for d in (1, 4, 16, 64, 256, 1024)]
        target = sigma_deep(INFINITE, 8).sigma
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] > target
        assert vals[-1] - target < 1e-2

    def test_kdv(self):
        assert sigma_kdv_limit().sigma == pytest.approx(math.pi / 6, rel=1e-15)
        assert sigma_kdv(1).sigma == pytest.approx(1 / math.pi, rel=1e-15)
        for N in (10, 100, 1000):
            assert abs(sigma_kdv(N).sigma - math.pi / 6) <= 1 / (math.pi * N)

    @given(st.floats(min_value=1e-3, max_value=1e3), st.integers(1, 200))
    def test_shallow_scaling(self, d, N):
        lhs = sigma_shallow(Finite(d), N).sigma
        rhs = d / 3 * sigma_deep(Finite(d), N).sigma
        assert abs(lhs - rhs) <= 1e-14 * max(1.0, abs(rhs))

    def test_provenance(self):
        assert sigma_deep(Finite(2), 4).provenance == "deep"
        assert sigma_shallow(Finite(2), 4).provenance == "shallow"
        assert sigma_kdv(4).provenance == "kdv"
        assert sigma_kdv_limit().provenance == "kdv-limit"

    def test_family_errors(self):
        with pytest.raises(FamilyError):
            sigma_deep(SHALLOW, 4)
        with pytest.raises(FamilyError):
            sigma_shallow(INFINITE, 4)
        with pytest.raises(ValueError):
            sigma_deep(INFINITE, 0)
