"""The dictionary-restricted greedy descent loop.

Start at zero; at each step pick the dictionary direction with the
largest pairing against the current gradient and minimize the energy
along it (sigma-line mode), or solve the restricted minimization on
every atom line / subspace and keep the best (exact-union mode).  The
energy never increases by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dictionary import DictionaryModel
from .energy import EnergyModel
from .errors import ConvergenceError, ParameterError, UnboundedLineError
from .vectorspace import SpaceVector

_MAX_BRACKET = 2.0**60


@dataclass(frozen=True)
class GreedyConfig:
    mode: str = "sigma-line"
    max_iter: int = 1000
    sigma_stop: float = 1e-10
    line_tol: float = 1e-12
    bracket_growth: float = 2.0
    ball_radius_r: float | None = None

    def __post_init__(self):
        if self.mode not in ("sigma-line", "exact-union"):
            raise ParameterError(f"unknown greedy mode {self.mode!r}")
        if self.max_iter < 0:
            raise ParameterError("max_iter must be nonnegative")
        if self.sigma_stop < 0.0:
            raise ParameterError("sigma_stop must be nonnegative")
        if not self.line_tol > 0.0:
            raise ParameterError("line_tol must be positive")
        if not self.bracket_growth > 1.0:
            raise ParameterError("bracket_growth must exceed 1")


@dataclass(frozen=True)
class TraceRow:
    """State after m steps; step fields describe the arriving step."""

    m: int
    energy: float
    gap: float
    sigma: float
    step_norm: float
    orth_residual: float
    cum_step_s: float
    grad_dual_norm: float
    iterate_norm: float
    ref_error: float


@dataclass(eq=False)
class GreedyTrace:
    rows: list[TraceRow]
    reason: str
    final: SpaceVector
    s_exponent: float

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.rows])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([r.sigma for r in self.rows])


# ---------------------------------------------------------------------------
# line minimization


def line_minimize(
    energy: EnergyModel,
    u: SpaceVector,
    w: SpaceVector,
    tol: float = 1e-12,
    growth: float = 2.0,
) -> tuple[float, float]:
    """Minimize t -> E(u + t w) over the real line.

    Quadratic energies use the closed form.  Otherwise the directional
    derivative is monotone by convexity: bracket its sign change by
    growing steps from +-1, then find the root by regula falsi with the
    Illinois modification until the derivative is negligible against the
    gradient scale.  tol bounds the relative bracket width at which the
    search gives up on that derivative target; it is floored at float
    resolution, since a root at a gradient kink (power energies) only
    yields a small derivative within ulps of the kink.  Expansion beyond
    2^60 means the energy is not coercive along the line and raises
    UnboundedLineError.
    """
    e0 = energy.evaluate(u)
    g0 = energy.gradient(u)
    d0 = g0.pair(w)
    if abs(d0) <= 1e-15 * (1.0 + g0.dual_norm()):
        return 0.0, e0

    if energy.quadratic_parts is not None:
        a, _ = energy.quadratic_parts
        aw = a @ w.coeffs
        curv = float(np.sum(u.weights * aw * w.coeffs))
        if curv <= 0.0:
            raise UnboundedLineError("quadratic form is not positive along the line")
        t = -d0 / curv
        return t, energy.evaluate(u + t * w)

    def deriv(t: float) -> tuple[float, float]:
        g = energy.gradient(u + t * w)
        return g.pair(w), g.dual_norm()

    # orient so the derivative at 0 is negative, then grow until it flips
    sign = 1.0 if d0 < 0.0 else -1.0
    lo, f_lo = 0.0, d0 * sign
    t_cur = 1.0
    while True:
        f_cur, _ = deriv(sign * t_cur)
        f_cur *= sign
        if f_cur >= 0.0:
            hi, f_hi = t_cur, f_cur
            break
        lo, f_lo = t_cur, f_cur
        t_cur *= growth
        if t_cur > _MAX_BRACKET:
            raise UnboundedLineError(
                "line search expanded past 2^60; energy not coercive along the line"
            )
    if f_hi == 0.0:
        t = sign * hi
        return t, energy.evaluate(u + t * w)

    best_t, best_f = lo, abs(f_lo)
    side = 0
    hit_target = False
    # grind until the derivative is negligible or the bracket collapses to
    # adjacent floats; a root at a gradient kink only yields a small
    # derivative within ulps of the kink, so no early width cutoff
    for _ in range(500):
        t_new = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
            if not lo < t_new < hi:
                break
        f_new, gn = deriv(sign * t_new)
        f_new *= sign
        if abs(f_new) < best_f:
            best_t, best_f = t_new, abs(f_new)
        if abs(f_new) <= 1e-9 * (1.0 + gn):
            best_t, best_f = t_new, abs(f_new)
            hit_target = True
            break
        if f_new > 0.0:
            if side == 1:
                f_lo *= 0.5
            hi, f_hi, side = t_new, f_new, 1
        else:
            if side == -1:
                f_hi *= 0.5
            lo, f_lo, side = t_new, f_new, -1
    if not hit_target:
        # sweep the float neighbors of the best point; crossing the kink
        # by one ulp can shrink the directional derivative further
        t_probe = best_t
        for _ in range(3):
            t_probe = float(np.nextafter(t_probe, np.inf))
            f_probe, _ = deriv(sign * t_probe)
            if abs(f_probe) < best_f:
                best_t, best_f = t_probe, abs(f_probe)
        t_probe = best_t
        for _ in range(3):
            t_probe = float(np.nextafter(t_probe, -np.inf))
            if t_probe <= 0.0:
                break
            f_probe, _ = deriv(sign * t_probe)
            if abs(f_probe) < best_f:
                best_t, best_f = t_probe, abs(f_probe)
    t = sign * best_t
    e_best = energy.evaluate(u + t * w)
    if e_best > e0:
        return 0.0, e0
    return t, e_best


def _minimize_in_subspace(energy, u, basis, tol: float):
    """Exact restricted minimization of E(u + V c); returns (z, value)."""
    w = u.weights
    if energy.quadratic_parts is not None:
        a, _ = energy.quadratic_parts
        g = energy.gradient(u)
        m = basis.T @ (w[:, None] * (a @ basis))
        rhs = -(basis.T @ (w * g.coeffs))
        c = np.linalg.solve(m, rhs)
        z = u.with_coeffs(basis @ c)
        return z, energy.evaluate(u + z)
    c = np.zeros(basis.shape[1])
    cur = u
    e_val = energy.evaluate(cur)
    grad_c = basis.T @ (w * energy.gradient(cur).coeffs)
    scale = 1.0 + float(np.linalg.norm(grad_c))
    step = 1.0
    prev_c = None
    prev_g = None
    for _ in range(20_000):
        if float(np.linalg.norm(grad_c)) <= tol * scale:
            break
        if prev_c is not None:
            dc = c - prev_c
            dg = grad_c - prev_g
            denom = float(dc @ dg)
            if denom > 0.0:
                step = max(float(dc @ dc) / denom, 1e-18)
        gsq = float(grad_c @ grad_c)
        t = step
        ok = False
        for _ in range(80):
            cand = c - t * grad_c
            cand_vec = u + u.with_coeffs(basis @ cand)
            cand_val = energy.evaluate(cand_vec)
            if cand_val <= e_val - 1e-4 * t * gsq:
                ok = True
                break
            t *= 0.5
        if not ok:
            break
        prev_c, prev_g = c, grad_c
        c, cur, e_val = cand, cand_vec, cand_val
        grad_c = basis.T @ (w * energy.gradient(cur).coeffs)
    z = u.with_coeffs(basis @ c)
    return z, e_val


# ---------------------------------------------------------------------------
# stepping


@dataclass(frozen=True)
class StepResult:
    sigma: float
    witness: SpaceVector
    z: SpaceVector
    value_before: float
    value_after: float
    moved: bool


def greedy_step(
    energy: EnergyModel,
    dictionary: DictionaryModel,
    u: SpaceVector,
    config: GreedyConfig,
) -> StepResult:
    """One greedy step from u.  moved=False means sigma <= sigma_stop."""
    g = energy.gradient(u)
    sigma, witness = dictionary.sigma_witness(g)
    return _take_step(energy, dictionary, u, g, sigma, witness, config)


def _take_step(energy, dictionary, u, g, sigma, witness, config) -> StepResult:
    e0 = energy.evaluate(u)
    if sigma <= config.sigma_stop:
        return StepResult(sigma, witness, u.zero_like(), e0, e0, False)
    if config.mode == "sigma-line":
        t, val = line_minimize(energy, u, witness, config.line_tol, config.bracket_growth)
        return StepResult(sigma, witness, t * witness, e0, val, True)
    # exact-union
    if dictionary.kind == "finite-atoms":
        best_val = np.inf
        best_z = None
        for j in range(dictionary.data.count):
            atom = u.with_coeffs(dictionary.data.atoms[:, j])
            t, val = line_minimize(energy, u, atom, config.line_tol, config.bracket_growth)
            if val < best_val:
                best_val = val
                best_z = t * atom
        return StepResult(sigma, witness, best_z, e0, best_val, True)
    if dictionary.kind == "subspace-union":
        best_val = np.inf
        best_z = None
        for basis in dictionary.data.bases:
            z, val = _minimize_in_subspace(energy, u, basis, config.line_tol)
            if val < best_val:
                best_val = val
                best_z = z
        return StepResult(sigma, witness, best_z, e0, best_val, True)
    raise ParameterError(
        "exact-union mode applies to finite-atoms and subspace-union dictionaries"
    )


def run_greedy(
    energy: EnergyModel,
    dictionary: DictionaryModel,
    config: GreedyConfig,
) -> GreedyTrace:
    """Run the greedy loop from zero until a stopping rule fires.

    Stopping rules: sigma below config.sigma_stop, energy decrease below
    1e-15 * (1 + |E(0)|), or max_iter.  Row m records the state after m
    steps together with the arriving step's norm and its orthogonality
    residual pair(grad(u_m), z_m).
    """
    s = energy.params.s
    ref = energy.reference_minimizer
    ref_energy = energy.evaluate(ref) if ref is not None else None

    u = energy.zero
    e_val = energy.evaluate(u)
    g = energy.gradient(u)
    sigma, witness = dictionary.sigma_witness(g)
    flat_tol = 1e-15 * (1.0 + abs(e_val))

    def gap_of(e: float) -> float:
        return e - ref_energy if ref_energy is not None else float("nan")

    def err_of(x: SpaceVector) -> float:
        return (x - ref).norm() if ref is not None else float("nan")

    rows = [
        TraceRow(
            m=0,
            energy=e_val,
            gap=gap_of(e_val),
            sigma=sigma,
            step_norm=0.0,
            orth_residual=0.0,
            cum_step_s=0.0,
            grad_dual_norm=g.dual_norm(),
            iterate_norm=u.norm(),
            ref_error=err_of(u),
        )
    ]
    reason = "max_iterations"
    cum = 0.0
    for m in range(1, config.max_iter + 1):
        if sigma <= config.sigma_stop:
            reason = "sigma_tolerance"
            break
        step = _take_step(energy, dictionary, u, g, sigma, witness, config)
        decrease = e_val - step.value_after
        if decrease <= 0.0:
            reason = "flat_energy"
            break
        u = u + step.z
        e_val = step.value_after
        g = energy.gradient(u)
        sigma, witness = dictionary.sigma_witness(g)
        cum += step.z.norm() ** s
        rows.append(
            TraceRow(
                m=m,
                energy=e_val,
                gap=gap_of(e_val),
                sigma=sigma,
                step_norm=step.z.norm(),
                orth_residual=g.pair(step.z),
                cum_step_s=cum,
                grad_dual_norm=g.dual_norm(),
                iterate_norm=u.norm(),
                ref_error=err_of(u),
            )
        )
        if decrease < flat_tol:
            reason = "flat_energy"
            break
    if reason == "max_iterations" and sigma <= config.sigma_stop:
        # the budget and the tolerance ran out together; converged wins
        reason = "sigma_tolerance"
    return GreedyTrace(rows=rows, reason=reason, final=u, s_exponent=s)


# ---------------------------------------------------------------------------
# trace checks


def check_one_step_bound(trace: GreedyTrace, beta: float, p: float) -> dict:
    """E(u_{m+1}) <= E(u_m) - beta * sigma(u_m)^(1 + 1/p) per step.

    Slack 1e-10 * (1 + |E(u_0)|) absorbs float noise at tight steps.
    """
    rows = trace.rows
    slack = 1e-10 * (1.0 + abs(rows[0].energy))
    expo = 1.0 + 1.0 / p
    violations = 0
    worst = -np.inf
    for prev, cur in zip(rows, rows[1:]):
        bound = prev.energy - beta * prev.sigma**expo
        excess = cur.energy - bound
        worst = max(worst, excess)
        if excess > slack:
            violations += 1
    return {
        "violations": violations,
        "steps": len(rows) - 1,
        "worst_excess": float(worst) if len(rows) > 1 else 0.0,
        "beta": float(beta),
        "passed": violations == 0,
    }


def check_orthogonality(trace: GreedyTrace, tol: float = 1e-8) -> dict:
    """|pair(grad(u_m), z_m)| <= tol * (1 + dual_norm(grad(u_m))) * norm(z_m)."""
    violations = 0
    worst = 0.0
    steps = 0
    for row in trace.rows[1:]:
        if row.step_norm == 0.0:
            continue
        steps += 1
        allowed = tol * (1.0 + row.grad_dual_norm) * row.step_norm
        ratio = abs(row.orth_residual) / allowed if allowed > 0.0 else np.inf
        worst = max(worst, ratio)
        if abs(row.orth_residual) > allowed:
            violations += 1
    return {
        "violations": violations,
        "steps": steps,
        "worst_ratio_of_allowed": float(worst),
        "tol": float(tol),
        "passed": violations == 0,
    }


def check_telescoping(trace: GreedyTrace, alpha: float, s: float) -> dict:
    """sum_{m>l} norm(z_m)^s <= (s/alpha) * (E(u_l) - E(u_M)) for every l."""
    rows = trace.rows
    total = rows[-1].cum_step_s
    e_last = rows[-1].energy
    violations = 0
    worst_ratio = 0.0
    start_ratio = None
    for row in rows[:-1]:
        tail = total - row.cum_step_s
        budget = (s / alpha) * (row.energy - e_last)
        if budget <= 0.0:
            ok = tail <= 1e-12 * (1.0 + abs(total))
            ratio = 0.0 if ok else np.inf
        else:
            ratio = tail / budget
            ok = tail <= budget * (1.0 + 1e-9)
        if row.m == 0:
            start_ratio = ratio
        worst_ratio = max(worst_ratio, ratio)
        if not ok:
            violations += 1
    return {
        "violations": violations,
        "starts": len(rows) - 1,
        "worst_ratio": float(worst_ratio),
        "ratio_from_start": float(start_ratio) if start_ratio is not None else 0.0,
        "alpha": float(alpha),
        "s": float(s),
        "passed": violations == 0,
    }
