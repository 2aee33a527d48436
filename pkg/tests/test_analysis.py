"""Rate constants, the decay lemma simulation, and empirical rate fits.

The decay-lemma oracle reimplements the extremal recursion inline, so
the shipped simulation is checked term by term against an independent
copy of the arithmetic, not against itself.
"""

import numpy as np
import pytest

from dictdescent.analysis import (
    RatePrediction,
    beta_global,
    beta_local,
    exponential_factor,
    fit_rate,
    gap_sigma_constant,
    predicted_rate,
    sequence_bound,
)
from dictdescent.errors import ParameterError


class TestStepConstants:
    def test_beta_global_hand_values(self):
        assert beta_global(1.0, 2.0) == pytest.approx(0.25)
        assert beta_global(1.0, 1.0) == pytest.approx(0.5)
        # p = 0.5: (1/3) / lip^2
        assert beta_global(0.5, 2.0) == pytest.approx((1.0 / 3.0) / 4.0)

    def test_beta_global_gates(self):
        with pytest.raises(ParameterError):
            beta_global(0.0, 1.0)
        with pytest.raises(ParameterError):
            beta_global(1.2, 1.0)
        with pytest.raises(ParameterError):
            beta_global(1.0, 0.0)

    def test_beta_local_min_branches(self):
        # radius branch: r/m smaller than 1/lip
        assert beta_local(1.0, r=0.1, m_r=1.0, lip_2r=1.0) == pytest.approx(0.05)
        # lipschitz branch
        assert beta_local(1.0, r=10.0, m_r=1.0, lip_2r=4.0) == pytest.approx(0.125)

    def test_beta_local_gates(self):
        with pytest.raises(ParameterError):
            beta_local(1.0, r=0.0, m_r=1.0, lip_2r=1.0)

    def test_gap_sigma_critical(self):
        c, e = gap_sigma_constant(p=1.0, s=2.0, lip=1.0, alpha=1.0, c_dict=1.0)
        assert e == pytest.approx(2.0)
        assert c == pytest.approx(0.5)

    def test_gap_sigma_supercritical(self):
        # s = 3 weakens the exponent to (p+1)/(s-1) = 1
        c, e = gap_sigma_constant(p=1.0, s=3.0, lip=2.0, alpha=4.0, c_dict=2.0)
        assert e == pytest.approx(1.0)
        assert c == pytest.approx(2.0 * (2.0 / 4.0) / 2.0)

    def test_gap_sigma_gates(self):
        with pytest.raises(ParameterError):
            gap_sigma_constant(p=1.0, s=1.5, lip=1.0, alpha=1.0, c_dict=1.0)
        with pytest.raises(ParameterError):
            gap_sigma_constant(p=1.0, s=2.0, lip=1.0, alpha=0.0, c_dict=1.0)

    def test_exponential_factor_values(self):
        assert exponential_factor(1.0, lip=4.0, c_gap=1.0) == pytest.approx(0.125)
        # large mu clamps to 1
        assert exponential_factor(1.0, lip=0.01, c_gap=0.01) == 1.0


class TestPredictedRate:
    def test_critical_case(self):
        pred = predicted_rate(1.0, 2.0)
        assert pred == RatePrediction(kind="exponential", exponent=None, factor=None)
        # within the exponent tolerance still counts as critical
        assert predicted_rate(1.0, 2.0 + 1e-12).kind == "exponential"

    def test_algebraic_case(self):
        pred = predicted_rate(1.0, 3.0)
        assert pred.kind == "algebraic"
        assert pred.exponent == pytest.approx(1.0)
        assert predicted_rate(0.5, 2.5).exponent == pytest.approx(0.5)

    def test_gates(self):
        with pytest.raises(ParameterError):
            predicted_rate(1.5, 2.5)
        with pytest.raises(ParameterError):
            predicted_rate(1.0, 1.9)


class TestSequenceBound:
    @staticmethod
    def recursion_oracle(a1, c1, t, m_count):
        # independent copy of the extremal recursion
        vals = [a1]
        a = a1
        for _ in range(m_count - 1):
            a = max(a - c1 * a**t, 0.0)
            vals.append(a)
        return np.array(vals)

    def test_terms_match_oracle_exactly(self):
        res = sequence_bound(1.0, 0.5, 2.0, 50)
        assert np.array_equal(res["terms"], self.recursion_oracle(1.0, 0.5, 2.0, 50))

    def test_first_four_terms_closed_form(self):
        res = sequence_bound(1.0, 0.5, 2.0, 4)
        assert res["terms"].tolist() == [1.0, 0.5, 0.375, 0.3046875]

    def test_c2_formula(self):
        # c2 = max(a1, ((t-1) c1)^(-1/(t-1)))
        res = sequence_bound(1.0, 0.5, 2.0, 10)
        assert res["c2"] == pytest.approx(2.0)
        res = sequence_bound(5.0, 1.0, 2.0, 10)
        assert res["c2"] == pytest.approx(5.0)

    def test_bound_holds_small_grid(self):
        for t in (1.5, 2.0, 3.0):
            for c1 in (0.1, 0.5):
                for a1 in (0.1, 1.0):
                    res = sequence_bound(a1, c1, t, 2000)
                    assert res["passed"], (t, c1, a1)
                    assert res["violations"] == 0

    def test_terms_are_monotone(self):
        res = sequence_bound(1.0, 0.1, 1.5, 100)
        assert np.all(np.diff(res["terms"]) <= 0.0)

    def test_gates(self):
        with pytest.raises(ParameterError):
            sequence_bound(0.0, 0.5, 2.0, 10)
        with pytest.raises(ParameterError):
            sequence_bound(1.0, -0.5, 2.0, 10)
        with pytest.raises(ParameterError):
            sequence_bound(1.0, 0.5, 1.0, 10)
        with pytest.raises(ParameterError):
            sequence_bound(1.0, 0.5, 2.0, 0)


class TestFitRate:
    def test_exponential_recovery(self):
        gaps = 10.0 * 0.8 ** np.arange(80)
        rep = fit_rate(gaps)
        assert rep.kind == "exponential"
        assert rep.value == pytest.approx(0.8, rel=1e-9)
        assert rep.r_squared > 0.999999
        assert rep.window_start == 5

    def test_algebraic_recovery(self):
        ms = np.arange(1, 200, dtype=float)
        gaps = np.concatenate([[50.0], 5.0 * ms**-2.0])
        rep = fit_rate(gaps)
        assert rep.kind == "algebraic"
        assert rep.value == pytest.approx(2.0, rel=1e-9)
        assert rep.competing_r_squared < rep.r_squared

    def test_short_window_undetermined(self):
        rep = fit_rate(10.0 * 0.5 ** np.arange(12))
        assert rep.kind == "undetermined"
        assert np.isnan(rep.value)

    def test_floor_truncates_window(self):
        gaps = 10.0 * 0.5 ** np.arange(100)
        rep = fit_rate(gaps, floor=10.0 * 0.5**40)
        assert rep.window_stop == 40
        assert rep.kind == "exponential"

    def test_flat_sequence_undetermined(self):
        # gap 1.0 everywhere puts every log at exactly 0, so both models
        # see zero variance and neither can lead by the margin
        rep = fit_rate(np.full(50, 1.0))
        assert rep.kind == "undetermined"
        assert rep.r_squared == 0.0

    def test_zeros_excluded_from_window(self):
        gaps = np.concatenate([10.0 * 0.5 ** np.arange(30), np.zeros(5)])
        rep = fit_rate(gaps)
        assert rep.kind == "exponential"
        assert rep.value == pytest.approx(0.5, rel=1e-6)

    def test_burn_in_respected(self):
        gaps = np.concatenate([[1000.0, 900.0], 10.0 * 0.8 ** np.arange(60)])
        rep = fit_rate(gaps, burn_in=10)
        assert rep.window_start == 10
        assert rep.value == pytest.approx(0.8, rel=1e-9)
