import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import PchipInterpolator

from liftns.interp import Pchip, hermite_increment, pchip_slopes


def monotone_data(rng, n):
    x = np.cumsum(rng.uniform(0.05, 2.0, n))
    y = np.cumsum(rng.uniform(0.0, 3.0, n))
    return x, y


class TestAgainstScipy:
    @pytest.mark.parametrize("n", [2, 3, 4, 10, 57])
    def test_values_and_derivatives(self, rng, n):
        x, y = monotone_data(rng, n)
        ours, ref = Pchip(x, y), PchipInterpolator(x, y)
        xq = np.linspace(x[0], x[-1], 1001)
        scale = max(1.0, np.max(np.abs(y)))
        assert np.max(np.abs(ours(xq) - ref(xq))) <= 1e-13 * scale
        assert np.max(np.abs(ours(xq, derivative=True) - ref(xq, 1))) <= 1e-12 * scale

    def test_non_monotone_data(self, rng):
        x = np.sort(rng.uniform(0, 10, 20))
        y = np.sin(x)
        assert np.allclose(pchip_slopes(x, y), PchipInterpolator(x, y).derivative()(x), atol=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 40))
    def test_slopes_property(self, seed, n):
        x, y = monotone_data(np.random.default_rng(seed), n)
        np.testing.assert_allclose(
            pchip_slopes(x, y), PchipInterpolator(x, y).derivative()(x), rtol=1e-12, atol=1e-14
        )


class TestShape:
    def test_exact_at_knots(self, rng):
        x, y = monotone_data(rng, 30)
        assert np.array_equal(Pchip(x, y)(x), y)

    def test_strictly_increasing_data_stays_increasing(self, rng):
        x, y = monotone_data(rng, 25)
        y = y + np.arange(y.size)  # strictly increasing
        v = Pchip(x, y)(np.linspace(x[0], x[-1], 5000))
        assert np.all(np.diff(v) >= 0)

    def test_linear_data_reproduced(self):
        x = np.array([0.0, 0.3, 1.1, 1.2, 4.0])
        p = Pchip(x, 3.0 * x - 1.0)
        xq = np.linspace(0, 4, 333)
        assert np.max(np.abs(p(xq) - (3.0 * xq - 1.0))) <= 1e-13

    def test_increment_is_exact_at_right_end(self):
        assert hermite_increment(0.7, 0.123456789, 1.3, 0.2, 1.0) == 0.123456789

    def test_rejects_non_increasing_knots(self):
        with pytest.raises(ValueError):
            pchip_slopes(np.array([0.0, 1.0, 1.0]), np.array([0.0, 1.0, 2.0]))
