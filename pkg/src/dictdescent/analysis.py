"""Convergence-rate constants, predictions, and empirical rate fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_EXPONENT_TOL = 1e-9


def beta_global(p: float, lip: float) -> float:
    """One-step decrease coefficient when smoothness holds everywhere."""
    if not 0.0 < p <= 1.0:
        raise ParameterError("p must lie in (0, 1]")
    if not lip > 0.0:
        raise ParameterError("lip must be positive")
    return p / ((p + 1.0) * lip ** (1.0 / p))


def beta_local(p: float, r: float, m_r: float, lip_2r: float) -> float:
    """One-step coefficient when smoothness holds only on the ball of radius 2r.

    m_r bounds 1 + the dual norm of the gradient on the radius-r ball, so
    steps shorter than r never leave the region where the estimate holds.
    """
    if not 0.0 < p <= 1.0:
        raise ParameterError("p must lie in (0, 1]")
    if not (r > 0.0 and m_r > 0.0 and lip_2r > 0.0):
        raise ParameterError("r, m_r, lip_2r must be positive")
    return (p / (p + 1.0)) * min(r / m_r ** (1.0 / p), 1.0 / lip_2r ** (1.0 / p))


def gap_sigma_constant(
    p: float,
    s: float,
    lip: float,
    alpha: float,
    c_dict: float,
) -> tuple[float, float]:
    """Constants (c, e) with gap(x) <= c * sigma(x)^e.

    s = p + 1 gives e = 1 + 1/p; larger s weakens the exponent to
    (p + 1)/(s - 1).
    """
    if not 0.0 < p <= 1.0:
        raise ParameterError("p must lie in (0, 1]")
    if s < p + 1.0 - _EXPONENT_TOL:
        raise ParameterError("s must be at least p + 1")
    if not (lip > 0.0 and alpha > 0.0 and c_dict > 0.0):
        raise ParameterError("lip, alpha, c_dict must be positive")
    if abs(s - (p + 1.0)) <= _EXPONENT_TOL:
        e = 1.0 + 1.0 / p
    else:
        e = (p + 1.0) / (s - 1.0)
    c = lip * (c_dict / alpha) ** e / (p + 1.0)
    return c, e


def exponential_factor(p: float, lip: float, c_gap: float) -> float:
    """Per-step gap contraction factor mu, clamped into (0, 1]."""
    if not 0.0 < p <= 1.0:
        raise ParameterError("p must lie in (0, 1]")
    if not (lip > 0.0 and c_gap > 0.0):
        raise ParameterError("lip and c_gap must be positive")
    mu = p / (c_gap * (p + 1.0) * lip ** (1.0 / p))
    return min(mu, 1.0)


@dataclass(frozen=True)
class RatePrediction:
    kind: str
    exponent: float | None
    factor: float | None


def predicted_rate(p: float, s: float) -> RatePrediction:
    """Exponential when s = p + 1, else algebraic with exponent p/(s-1-p)."""
    if not 0.0 < p <= 1.0:
        raise ParameterError("p must lie in (0, 1]")
    if s < p + 1.0 - _EXPONENT_TOL:
        raise ParameterError("s must be at least p + 1")
    if abs(s - (p + 1.0)) <= _EXPONENT_TOL:
        return RatePrediction(kind="exponential", exponent=None, factor=None)
    return RatePrediction(kind="algebraic", exponent=p / (s - 1.0 - p), factor=None)


def sequence_bound(a1: float, c1: float, t: float, m_count: int) -> dict:
    """Decay lemma for a_{m+1} <= a_m - c1 * a_m^t with t > 1.

    Simulates the extremal recursion (equality) and checks it against
    C2 * m^(-1/(t-1)) with C2 = max(a1, ((t-1) c1)^(-1/(t-1))).
    """
    if not (a1 > 0.0 and c1 > 0.0):
        raise ParameterError("a1 and c1 must be positive")
    if not t > 1.0:
        raise ParameterError("t must exceed 1")
    if m_count < 1:
        raise ParameterError("m_count must be at least 1")
    c2 = max(a1, ((t - 1.0) * c1) ** (-1.0 / (t - 1.0)))
    terms = np.empty(m_count)
    terms[0] = a1
    a = a1
    for m in range(1, m_count):
        a = a - c1 * a**t
        if a < 0.0:
            a = 0.0
        terms[m] = a
    ms = np.arange(1, m_count + 1, dtype=float)
    bounds = c2 * ms ** (-1.0 / (t - 1.0))
    excess = terms - bounds
    violations = int(np.sum(excess > 1e-12 * (1.0 + bounds)))
    return {
        "terms": terms,
        "bounds": bounds,
        "c2": float(c2),
        "violations": violations,
        "passed": violations == 0,
    }


@dataclass(frozen=True)
class RateReport:
    kind: str
    value: float
    r_squared: float
    intercept: float
    window_start: int
    window_stop: int
    competing_r_squared: float | None


def fit_rate(
    gaps: np.ndarray,
    burn_in: int = 5,
    floor: float = 0.0,
) -> RateReport:
    """Fit the gap sequence to exponential or algebraic decay.

    The window runs from max(burn_in, 1) to the first index at or below
    floor.  Both models are least-squares fits in log space on the same
    window; the better r-squared wins if it leads by at least 0.02,
    otherwise the result is 'undetermined'.  Exponential value is the
    per-step factor exp(slope); algebraic value is the decay exponent
    -slope against log m.
    """
    gaps = np.asarray(gaps, dtype=float)
    start = max(int(burn_in), 1)
    stop = len(gaps)
    for i in range(len(gaps)):
        if gaps[i] <= floor:
            stop = i
            break
    window = np.arange(start, stop)
    window = window[gaps[window] > 0.0] if len(window) > 0 else window
    if len(window) < 10:
        return RateReport(
            kind="undetermined",
            value=float("nan"),
            r_squared=float("nan"),
            intercept=float("nan"),
            window_start=start,
            window_stop=stop,
            competing_r_squared=None,
        )
    y = np.log(gaps[window])

    def lsq(x: np.ndarray) -> tuple[float, float, float]:
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_res = float(resid @ resid)
        centered = y - y.mean()
        ss_tot = float(centered @ centered)
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
        return slope, intercept, r2

    slope_e, int_e, r2_e = lsq(window.astype(float))
    slope_a, int_a, r2_a = lsq(np.log(window.astype(float)))

    if r2_e >= r2_a + 0.02:
        return RateReport(
            kind="exponential",
            value=float(np.exp(slope_e)),
            r_squared=r2_e,
            intercept=float(int_e),
            window_start=int(window[0]),
            window_stop=int(stop),
            competing_r_squared=r2_a,
        )
    if r2_a >= r2_e + 0.02:
        return RateReport(
            kind="algebraic",
            value=float(-slope_a),
            r_squared=r2_a,
            intercept=float(int_a),
            window_start=int(window[0]),
            window_stop=int(stop),
            competing_r_squared=r2_e,
        )
    return RateReport(
        kind="undetermined",
        value=float("nan"),
        r_squared=max(r2_e, r2_a),
        intercept=float("nan"),
        window_start=int(window[0]),
        window_stop=int(stop),
        competing_r_squared=min(r2_e, r2_a),
    )
