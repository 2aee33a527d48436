"""Energy models: gradients against finite differences, declared constants,
reference minimizers, and the sampling estimators on cases with known
regularity.

The finite-difference oracle here is written against the raw evaluator
only, so it stays independent of both the analytic gradients and the
library's own check_gradient helper.
"""

import numpy as np
import pytest

from dictdescent.energy import (
    EnergyModel,
    SmoothnessParams,
    check_gradient,
    default_region_radius,
    estimate_ellipticity,
    estimate_smoothness,
    plaplacian_energy,
    power_energy,
    quadratic_energy,
    solve_reference,
)
from dictdescent.errors import ParameterError
from dictdescent.vectorspace import make_space_vector


def fd_gradient(energy, x, h=1e-6):
    """Central differences on the evaluator; returns dual coefficients.

    The directional derivative along e_i equals w_i * g_i under the
    weighted pairing, so the quotient is divided by the weight.
    """
    base = x.coeffs.copy()
    out = np.empty(x.n)
    for i in range(x.n):
        up = base.copy()
        up[i] += h
        down = base.copy()
        down[i] -= h
        diff = energy.evaluate(x.with_coeffs(up)) - energy.evaluate(x.with_coeffs(down))
        out[i] = diff / (2.0 * h * x.weights[i])
    return out


def make_quadratic(n=5, seed=3):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    a = m.T @ m + n * np.eye(n)
    b = make_space_vector(rng.standard_normal(n), np.ones(n), 2.0)
    return quadratic_energy(a, b), a


class TestPowerEnergy:
    def test_value_by_hand(self):
        t = make_space_vector([1.0, 0.0], [1.0, 1.0], 1.5)
        e = power_energy(t, 0.5)
        f = t.with_coeffs([0.0, 1.0])
        # two unit deviations: 2 * (1/1.5) * 1^1.5
        assert e.evaluate(f) == pytest.approx(2.0 / 1.5)

    def test_gradient_formula(self):
        t = make_space_vector([0.0, 0.0], [1.0, 1.0], 1.5)
        e = power_energy(t, 0.5)
        g = e.gradient(t.with_coeffs([4.0, -9.0]))
        assert np.allclose(g.coeffs, [2.0, -3.0])

    def test_gradient_zero_at_kink(self):
        t = make_space_vector([1.0, 2.0], [1.0, 1.0], 1.5)
        e = power_energy(t, 0.5)
        g = e.gradient(t)
        assert np.all(g.coeffs == 0.0)

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(5)
        t = make_space_vector(rng.standard_normal(6), np.ones(6), 1.5)
        e = power_energy(t, 0.5)
        for _ in range(5):
            x = t.with_coeffs(t.coeffs + rng.uniform(0.5, 2.0, 6) * rng.choice([-1.0, 1.0], 6))
            fd = fd_gradient(e, x)
            g = e.gradient(x).coeffs
            assert np.max(np.abs(fd - g)) < 1e-6

    def test_minimizer_is_target(self):
        t = make_space_vector([1.0, -2.0], [1.0, 1.0], 2.0)
        e = power_energy(t, 1.0)
        assert e.reference_minimizer is t
        assert e.evaluate(t) == 0.0
        assert e.evaluate(t.with_coeffs([1.0, 0.0])) > 0.0

    def test_declared_constants(self):
        t = make_space_vector([0.0], [1.0], 1.5)
        e = power_energy(t, 0.5)
        assert e.params.mode == "global"
        assert e.params.s == pytest.approx(1.5)
        assert e.params.lip == pytest.approx((1.0 + 2.0**2.0) ** (0.5 / 1.5))
        assert e.params.alpha is None

    def test_space_exponent_gate(self):
        t = make_space_vector([0.0], [1.0], 2.0)
        with pytest.raises(ParameterError):
            power_energy(t, 0.5)
        with pytest.raises(ParameterError):
            power_energy(make_space_vector([0.0], [1.0], 2.5), 2.0)


class TestQuadraticEnergy:
    def test_value_and_gradient_by_hand(self):
        b = make_space_vector([3.0, 4.0], [1.0, 1.0], 2.0)
        e = quadratic_energy(np.eye(2), b)
        u = b.with_coeffs([1.0, 1.0])
        assert e.evaluate(u) == pytest.approx(0.5 * 2.0 - 7.0)
        assert np.allclose(e.gradient(u).coeffs, [-2.0, -3.0])

    def test_reference_solves_system(self):
        e, a = make_quadratic()
        ref = e.reference_minimizer
        b = e.quadratic_parts[1]
        assert np.allclose(a @ ref.coeffs, b.coeffs, atol=1e-10)
        assert e.gradient(ref).dual_norm() < 1e-9

    def test_reference_is_minimum(self):
        e, _ = make_quadratic(seed=9)
        ref = e.reference_minimizer
        rng = np.random.default_rng(1)
        for _ in range(20):
            pert = ref.with_coeffs(ref.coeffs + 0.1 * rng.standard_normal(ref.n))
            assert e.evaluate(pert) >= e.evaluate(ref)

    def test_gradient_matches_fd(self):
        e, _ = make_quadratic(seed=12)
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = e.zero.with_coeffs(rng.standard_normal(e.zero.n))
            assert np.max(np.abs(fd_gradient(e, x) - e.gradient(x).coeffs)) < 1e-5

    def test_constants_are_extreme_eigenvalues(self):
        e, a = make_quadratic(seed=4)
        eig = np.linalg.eigvalsh(a)  # unit weights: similarity equals a
        assert e.params.lip == pytest.approx(eig[-1])
        assert e.params.alpha == pytest.approx(eig[0])
        assert e.params.lip_source == "formula"
        assert e.params.alpha_source == "formula"

    def test_identity_constants(self):
        b = make_space_vector([1.0, 2.0], [1.0, 1.0], 2.0)
        e = quadratic_energy(np.eye(2), b)
        assert e.params.lip == pytest.approx(1.0)
        assert e.params.alpha == pytest.approx(1.0)

    def test_weighted_pairing_symmetry_gate(self):
        # symmetry is judged against the weighted pairing, not the array:
        # an entrywise-symmetric matrix can fail and vice versa
        w = np.array([1.0, 4.0])
        b = make_space_vector([1.0, 1.0], w, 2.0)
        with pytest.raises(ParameterError):
            quadratic_energy(np.array([[2.0, 1.0], [1.0, 3.0]]), b)
        ok = quadratic_energy(np.array([[2.0, 4.0], [1.0, 3.0]]), b)
        assert ok.params.lip > 0.0

    def test_indefinite_rejected(self):
        b = make_space_vector([1.0, 1.0], [1.0, 1.0], 2.0)
        with pytest.raises(ParameterError):
            quadratic_energy(np.diag([1.0, -1.0]), b)

    def test_shape_and_exponent_gates(self):
        b = make_space_vector([1.0, 1.0], [1.0, 1.0], 2.0)
        with pytest.raises(ParameterError):
            quadratic_energy(np.eye(3), b)
        b3 = make_space_vector([1.0, 1.0], [1.0, 1.0], 3.0)
        with pytest.raises(ParameterError):
            quadratic_energy(np.eye(2), b3)


class TestPLaplacianEnergy:
    def test_zero_function_energy(self):
        e = plaplacian_energy(7, 3.0, np.ones(7))
        assert e.evaluate(e.zero) == 0.0

    def test_space_signature(self):
        e = plaplacian_energy(7, 3.0, np.ones(7))
        assert e.zero.q == 3.0
        assert np.allclose(e.zero.weights, 1.0 / 8.0)

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(3)
        e = plaplacian_energy(6, 3.0, rng.standard_normal(6))
        for _ in range(5):
            x = e.zero.with_coeffs(rng.standard_normal(6))
            assert np.max(np.abs(fd_gradient(e, x) - e.gradient(x).coeffs)) < 1e-5

    def test_quadratic_case_matches_linear_solve(self):
        n = 9
        rng = np.random.default_rng(4)
        f = rng.standard_normal(n)
        e = plaplacian_energy(n, 2.0, f)
        h = 1.0 / (n + 1)
        lap = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
        assert np.allclose(e.reference_minimizer.coeffs, np.linalg.solve(lap, f), atol=1e-10)

    def test_reference_residual_below_tol(self):
        rng = np.random.default_rng(6)
        e = plaplacian_energy(16, 3.0, rng.standard_normal(16), reference_tol=1e-10)
        assert e.gradient(e.reference_minimizer).dual_norm() <= 1e-10

    def test_reference_beats_zero(self):
        rng = np.random.default_rng(7)
        e = plaplacian_energy(16, 3.0, rng.standard_normal(16))
        assert e.evaluate(e.reference_minimizer) < e.evaluate(e.zero)

    def test_declared_orders(self):
        e = plaplacian_energy(4, 3.0, np.ones(4))
        assert e.params.p == 1.0
        assert e.params.s == 3.0
        assert e.params.mode == "bounded"
        assert e.params.lip is None and e.params.alpha is None

    def test_parameter_gates(self):
        with pytest.raises(ParameterError):
            plaplacian_energy(0, 3.0, np.ones(1))
        with pytest.raises(ParameterError):
            plaplacian_energy(4, 1.5, np.ones(4))
        with pytest.raises(ParameterError):
            plaplacian_energy(4, 3.0, np.ones(5))


class TestCheckGradient:
    """check_gradient is itself library code; the independent fd oracle
    above keeps it honest before other tests rely on it."""

    def test_agrees_with_oracle_on_quadratic(self):
        e, _ = make_quadratic(seed=15)
        rng = np.random.default_rng(8)
        x = e.zero.with_coeffs(rng.standard_normal(e.zero.n))
        direct = np.max(
            np.abs(fd_gradient(e, x) - e.gradient(x).coeffs)
            / np.maximum(1.0, np.abs(e.gradient(x).coeffs))
        )
        assert check_gradient(e, x) == pytest.approx(direct, abs=1e-10)

    def test_flags_a_wrong_gradient(self):
        e, _ = make_quadratic(seed=16)

        broken = EnergyModel(
            evaluate=e.evaluate,
            gradient=lambda u: e.gradient(u) * 1.5,
            params=e.params,
            zero=e.zero,
        )
        x = e.zero.with_coeffs(np.ones(e.zero.n))
        assert check_gradient(broken, x) > 1e-2


class TestSmoothnessParams:
    def test_validation(self):
        with pytest.raises(ParameterError):
            SmoothnessParams(p=0.0, s=1.0, mode="global")
        with pytest.raises(ParameterError):
            SmoothnessParams(p=1.5, s=2.5, mode="global")
        with pytest.raises(ParameterError):
            SmoothnessParams(p=1.0, s=2.0, mode="sometimes")
        # global forces s = p + 1
        with pytest.raises(ParameterError):
            SmoothnessParams(p=1.0, s=3.0, mode="global")
        with pytest.raises(ParameterError):
            SmoothnessParams(p=1.0, s=1.5, mode="bounded")
        with pytest.raises(ParameterError):
            SmoothnessParams(p=1.0, s=2.0, mode="global", lip=-1.0)

    def test_filled_keeps_declared(self):
        p = SmoothnessParams(p=1.0, s=2.0, mode="global", lip=4.0, lip_source="formula")
        filled = p.filled(lip_hat=99.0, alpha_hat=0.5)
        assert filled.lip == 4.0
        assert filled.lip_source == "formula"
        assert filled.alpha == 0.5
        assert filled.alpha_source == "estimated"


class TestEstimators:
    """The identity quadratic has exactly known regularity: gradient
    increments equal the point increments, so p = 1, lip = 1, s = 2,
    alpha = 1 at every pair regardless of region."""

    def setup_method(self):
        b = make_space_vector(np.array([1.0, -1.0, 2.0, 0.5]), np.ones(4), 2.0)
        self.energy = quadratic_energy(np.eye(4), b)

    def test_smoothness_recovery(self):
        p_hat, lip_hat = estimate_smoothness(self.energy, region_radius=5.0, samples=200, seed=0)
        assert abs(p_hat - 1.0) < 1e-6
        assert lip_hat == pytest.approx(1.0, rel=1e-9)

    def test_ellipticity_recovery(self):
        s_hat, alpha_hat = estimate_ellipticity(self.energy, region_radius=5.0, samples=200, seed=0)
        assert abs(s_hat - 2.0) < 1e-6
        assert alpha_hat == pytest.approx(1.0, rel=1e-6)

    def test_estimates_are_one_sided(self):
        # every sampled pair must sit below lip_hat and above alpha_hat
        # at the fitted orders; re-check on fresh pairs
        p_hat, lip_hat = estimate_smoothness(self.energy, region_radius=5.0, samples=200, seed=1)
        rng = np.random.default_rng(99)
        e = self.energy
        for _ in range(100):
            x = e.zero.with_coeffs(rng.uniform(-2, 2, 4))
            y = e.zero.with_coeffs(rng.uniform(-2, 2, 4))
            dx = (x - y).norm()
            if dx < 1e-12:
                continue
            dy = (e.gradient(x) - e.gradient(y)).dual_norm()
            assert dy <= lip_hat * dx**p_hat * (1.0 + 1e-9)

    def test_power_orders(self):
        rng = np.random.default_rng(21)
        t = make_space_vector(rng.standard_normal(16), np.ones(16), 1.5)
        e = power_energy(t, 0.5)
        p_hat, _ = estimate_smoothness(e, region_radius=2.0 * t.norm() + 1.0, samples=400, seed=0)
        s_hat, alpha_hat = estimate_ellipticity(e, region_radius=2.0 * t.norm() + 1.0, samples=400, seed=0)
        assert abs(p_hat - 0.5) < 0.1
        assert abs(s_hat - 1.5) < 0.1
        assert alpha_hat > 0.0

    def test_region_default(self):
        assert default_region_radius(self.energy) == pytest.approx(
            2.0 * self.energy.reference_minimizer.norm() + 1.0
        )


class TestSolveReference:
    def test_returns_stored_reference(self):
        e, _ = make_quadratic(seed=20)
        assert solve_reference(e) is e.reference_minimizer

    def test_descent_path_reaches_minimum(self):
        # strip the stored reference and the quadratic shortcut to force
        # the Barzilai-Borwein descent branch
        target = make_space_vector([2.0, -1.0, 0.5], np.ones(3), 2.0)

        def evaluate(u):
            d = u.coeffs - target.coeffs
            return float(0.5 * np.sum(d * d))

        def gradient(u):
            return u.with_coeffs(u.coeffs - target.coeffs)

        e = EnergyModel(
            evaluate=evaluate,
            gradient=gradient,
            params=SmoothnessParams(p=1.0, s=2.0, mode="global", lip=1.0, alpha=1.0),
            zero=target.zero_like(),
        )
        u = solve_reference(e, tol=1e-10)
        assert np.allclose(u.coeffs, target.coeffs, atol=1e-9)
