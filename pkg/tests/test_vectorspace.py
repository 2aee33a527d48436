"""Weighted sequence space geometry.

The dual-norm oracle below is independent of the closed form under test:
it lower-bounds the supremum by sampling random unit vectors and checks
the claimed maximizer against it.
"""

import numpy as np
import pytest

from dictdescent.errors import InvalidVectorError, ParameterError, SpaceMismatchError
from dictdescent.vectorspace import SpaceVector, make_space_vector


def sampled_pairing_sup(f: SpaceVector, trials: int, seed: int) -> float:
    """Brute-force lower bound on sup |pair(f, u)| over unit u."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        u = f.with_coeffs(rng.standard_normal(f.n))
        u = u * (1.0 / u.norm())
        best = max(best, abs(f.pair(u)))
    return best


def random_vector(rng, n, weights, q, scale=1.0) -> SpaceVector:
    return make_space_vector(scale * rng.standard_normal(n), weights, q)


class TestConstruction:
    def test_basic_fields(self):
        v = make_space_vector([1.0, -2.0], [1.0, 3.0], 2.0)
        assert v.n == 2
        assert v.q == 2.0
        assert v.dual_exponent == 2.0

    def test_dual_exponent_conjugate(self):
        v = make_space_vector([1.0], [1.0], 1.5)
        # 1/q + 1/q' = 1
        assert v.dual_exponent == pytest.approx(3.0)

    def test_coeffs_are_readonly(self):
        v = make_space_vector([1.0, 2.0], [1.0, 1.0], 2.0)
        with pytest.raises(ValueError):
            v.coeffs[0] = 5.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(SpaceMismatchError):
            make_space_vector([1.0, 2.0], [1.0], 2.0)

    def test_nonfinite_coeffs_rejected(self):
        with pytest.raises(InvalidVectorError):
            make_space_vector([np.nan, 0.0], [1.0, 1.0], 2.0)

    def test_bad_weights_rejected(self):
        with pytest.raises(InvalidVectorError):
            make_space_vector([1.0], [0.0], 2.0)
        with pytest.raises(InvalidVectorError):
            make_space_vector([1.0], [-2.0], 2.0)

    def test_q_range(self):
        with pytest.raises(ParameterError):
            make_space_vector([1.0], [1.0], 1.0)
        with pytest.raises(ParameterError):
            make_space_vector([1.0], [1.0], np.inf)

    def test_2d_coeffs_rejected(self):
        with pytest.raises(InvalidVectorError):
            make_space_vector(np.ones((2, 2)), np.ones(2), 2.0)

    def test_with_coeffs_validates(self):
        v = make_space_vector([1.0, 2.0], [1.0, 1.0], 2.0)
        with pytest.raises(SpaceMismatchError):
            v.with_coeffs([1.0])
        with pytest.raises(InvalidVectorError):
            v.with_coeffs([np.inf, 0.0])


class TestArithmetic:
    def test_combinations(self):
        a = make_space_vector([1.0, 2.0], [1.0, 1.0], 2.0)
        b = make_space_vector([3.0, -1.0], [1.0, 1.0], 2.0)
        assert np.allclose((a + b).coeffs, [4.0, 1.0])
        assert np.allclose((a - b).coeffs, [-2.0, 3.0])
        assert np.allclose((2.0 * a).coeffs, [2.0, 4.0])
        assert np.allclose((a * 2.0).coeffs, [2.0, 4.0])
        assert np.allclose((-a).coeffs, [-1.0, -2.0])

    def test_zero_like(self):
        a = make_space_vector([1.0, 2.0], [1.0, 4.0], 3.0)
        z = a.zero_like()
        assert z.norm() == 0.0
        assert z.q == a.q

    def test_mixed_weights_rejected(self):
        a = make_space_vector([1.0, 2.0], [1.0, 1.0], 2.0)
        b = make_space_vector([1.0, 2.0], [1.0, 2.0], 2.0)
        with pytest.raises(SpaceMismatchError):
            a + b

    def test_mixed_exponent_rejected(self):
        a = make_space_vector([1.0, 2.0], [1.0, 1.0], 2.0)
        b = make_space_vector([1.0, 2.0], [1.0, 1.0], 3.0)
        with pytest.raises(SpaceMismatchError):
            a.pair(b)


class TestNormAndPairing:
    def test_euclidean_example(self):
        v = make_space_vector([3.0, 4.0], [1.0, 1.0], 2.0)
        assert v.norm() == pytest.approx(5.0)

    def test_weighted_example(self):
        # 2*1^2 + 0.5*4^2 = 10
        v = make_space_vector([1.0, 4.0], [2.0, 0.5], 2.0)
        assert v.norm() == pytest.approx(np.sqrt(10.0))

    def test_q_three_example(self):
        v = make_space_vector([1.0, -2.0], [1.0, 1.0], 3.0)
        assert v.norm() == pytest.approx(9.0 ** (1.0 / 3.0))

    def test_pairing_weighted(self):
        f = make_space_vector([1.0, 2.0], [2.0, 3.0], 2.0)
        v = f.with_coeffs([4.0, -1.0])
        assert f.pair(v) == pytest.approx(2.0 * 4.0 - 3.0 * 2.0)

    def test_pairing_symmetric(self):
        rng = np.random.default_rng(7)
        w = rng.uniform(0.5, 2.0, size=6)
        f = random_vector(rng, 6, w, 2.5)
        v = random_vector(rng, 6, w, 2.5)
        assert f.pair(v) == pytest.approx(v.pair(f))

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(8)
        v = random_vector(rng, 5, np.ones(5), 1.7)
        assert (3.0 * v).norm() == pytest.approx(3.0 * v.norm())
        assert (-v).norm() == pytest.approx(v.norm())


class TestDualNorm:
    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_sampled_sup_never_exceeds_dual_norm(self, q):
        rng = np.random.default_rng(11)
        w = rng.uniform(0.5, 2.0, size=5)
        for k in range(5):
            f = random_vector(rng, 5, w, q)
            dn = f.dual_norm()
            sup = sampled_pairing_sup(f, trials=2000, seed=100 + k)
            assert sup <= dn * (1.0 + 1e-12)
            # random sampling should get reasonably close in n = 5
            assert sup >= 0.8 * dn

    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_maximizer_attains_dual_norm(self, q):
        rng = np.random.default_rng(12)
        w = rng.uniform(0.5, 2.0, size=7)
        for _ in range(10):
            f = random_vector(rng, 7, w, q)
            u = f.dual_maximizer()
            assert u.norm() == pytest.approx(1.0, abs=1e-12)
            assert f.pair(u) == pytest.approx(f.dual_norm(), rel=1e-12)

    def test_hoelder_inequality(self):
        rng = np.random.default_rng(13)
        w = rng.uniform(0.5, 2.0, size=8)
        for _ in range(50):
            f = random_vector(rng, 8, w, 2.5)
            v = random_vector(rng, 8, w, 2.5)
            assert abs(f.pair(v)) <= f.dual_norm() * v.norm() * (1.0 + 1e-12)

    def test_dual_norm_q2_selfdual(self):
        # q = 2 with unit weights: dual norm equals the norm
        v = make_space_vector([3.0, 4.0], [1.0, 1.0], 2.0)
        assert v.dual_norm() == pytest.approx(v.norm())

    def test_dual_norm_hand_value(self):
        # q = 3, q' = 1.5, unit weights: (1 + 2^1.5)^(2/3)
        f = make_space_vector([1.0, 2.0], [1.0, 1.0], 3.0)
        expect = (1.0 + 2.0**1.5) ** (2.0 / 3.0)
        assert f.dual_norm() == pytest.approx(expect)

    def test_zero_functional_has_no_maximizer(self):
        z = make_space_vector([0.0, 0.0], [1.0, 1.0], 2.0)
        with pytest.raises(ParameterError):
            z.dual_maximizer()
