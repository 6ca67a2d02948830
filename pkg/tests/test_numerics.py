import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scheda import Rng, matmul, relu, sigmoid
from scheda.errors import ShapeError


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.5, -2.0], [0.25, 7.0]])
        assert np.array_equal(matmul(np.eye(2), a), a)

    def test_zero(self):
        a = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(matmul(np.zeros((2, 2)), a), np.zeros((2, 3)))

    def test_hand_product(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[5.0, 6.0], [7.0, 8.0]])
        assert np.array_equal(matmul(a, b), np.array([[19.0, 22.0], [43.0, 50.0]]))

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_associativity(self):
        rng = Rng(7)
        for _ in range(5):
            a = rng.uniform(-1, 1, 12).reshape(3, 4)
            b = rng.uniform(-1, 1, 20).reshape(4, 5)
            c = rng.uniform(-1, 1, 10).reshape(5, 2)
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            assert np.allclose(left, right, rtol=1e-9)


class TestSigmoid:
    def test_center(self):
        assert sigmoid(np.zeros((1, 1)))[0, 0] == 0.5

    def test_known_value(self):
        # arbitrary-precision oracle for 1/(1+e^-1)
        import mpmath

        oracle = float(1 / (1 + mpmath.e**-1))
        got = sigmoid(np.array([[1.0]]))[0, 0]
        assert abs(got - oracle) < 1e-12
        assert round(got, 10) == 0.7310585786

    def test_symmetry(self):
        v = np.linspace(-30, 30, 101).reshape(1, -1)
        assert np.allclose(sigmoid(-v), 1.0 - sigmoid(v), atol=1e-14)

    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    def test_open_interval(self, v):
        s = sigmoid(np.array([[v]]))[0, 0]
        assert 0.0 < s < 1.0

    def test_saturation_stays_inside(self):
        s = sigmoid(np.array([[-1e4, 1e4]]))
        assert 0.0 < s[0, 0] < s[0, 1] < 1.0


class TestRelu:
    @pytest.mark.parametrize("v,expected", [(-3.0, 0.0), (0.0, 0.0), (2.5, 2.5)])
    def test_pointwise(self, v, expected):
        assert relu(np.array([[v]]))[0, 0] == expected

    @given(st.lists(st.floats(-1e9, 1e9), min_size=1, max_size=20))
    def test_never_negative(self, values):
        out = relu(np.array([values]))
        assert (out >= 0).all()
        assert np.array_equal(out, np.maximum(np.array([values]), 0.0))


class TestRng:
    def test_same_seed_same_sequence(self):
        a, b = Rng(991), Rng(991)
        assert np.array_equal(a.raw(100_000), b.raw(100_000))

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).raw(64), Rng(2).raw(64))

    def test_degenerate_interval(self):
        draws = Rng(5).uniform(0.25, 0.25, 1000)
        assert (draws == 0.25).all()

    def test_reversed_bounds(self):
        with pytest.raises(ValueError, match="reversed"):
            Rng(5).uniform(1.0, 0.0, 3)

    def test_unit_interval_mean(self):
        draws = Rng(123).uniform(n=1_000_000)
        assert (draws >= 0).all() and (draws < 1).all()
        assert abs(draws.mean() - 0.5) < 0.005

    def test_sequential_consumption(self):
        whole = Rng(17).raw(50)
        r = Rng(17)
        parts = np.concatenate([r.raw(20), r.raw(30)])
        assert np.array_equal(whole, parts)

    def test_derive_independent_streams(self):
        r = Rng(3)
        child_a, child_b = r.derive(1), r.derive(2)
        assert not np.array_equal(child_a.raw(64), child_b.raw(64))
        # derivation is a pure function of (key, label), not of position
        r.raw(10)
        assert np.array_equal(r.derive(1).raw(64), Rng(3).derive(1).raw(64))

    def test_permutation_is_a_permutation(self):
        perm = Rng(9).permutation(1000)
        assert np.array_equal(np.sort(perm), np.arange(1000))

    def test_permutation_deterministic(self):
        assert np.array_equal(Rng(9).permutation(500), Rng(9).permutation(500))
