"""Experiment pipeline: build, estimate, run, verify, serialize.

One call to execute_config runs the full chain for a validated config:

    energy/dictionary construction
    -> regularity estimation on a ball twice the trust radius
    -> norming-constant certification and Monte-Carlo verification
    -> greedy descent
    -> invariant checks (monotonicity, one-step decrease, orthogonality,
       telescoping, iterate error, containment, gap-sigma, and the
       exponential envelope when the critical case is predicted)
    -> rate fit against the predicted decay law

Constants used by the checks are the declared ones where a closed form
exists and the sampled estimates otherwise.  The rate prediction is made
from the estimates alone: when the estimated orders satisfy
|s_hat - (p_hat + 1)| <= 0.1 the run is treated as the critical case and
an exponential law is predicted, otherwise an algebraic law with
exponent p_hat/(s_hat - 1 - p_hat).

Serialization is deterministic: floats are written with 17 significant
digits, -0.0 collapses to 0, non-finite report values become null, and
key order is fixed, so identical configs produce byte-identical trace
and report files.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .analysis import (
    RatePrediction,
    beta_global,
    exponential_factor,
    fit_rate,
    gap_sigma_constant,
    predicted_rate,
)
from .config import ExperimentConfig, build_dictionary, build_energy
from .dictionary import certify_norming_ratio, subspace_norming_constant, verify_norming
from .energy import default_region_radius, estimate_ellipticity, estimate_smoothness
from .greedy import (
    GreedyTrace,
    check_one_step_bound,
    check_orthogonality,
    check_telescoping,
    run_greedy,
)

TRACE_HEADER = "m,energy,gap,sigma,step_norm,orth_residual,cum_step_s"

# estimated orders this close to the critical relation s = p + 1 are
# snapped onto it for the rate prediction
CRITICAL_SNAP_TOL = 0.1

_NORMING_TRIALS = 10_000


@dataclass
class RunOutcome:
    trace: GreedyTrace
    report: dict
    passed: bool


# ---------------------------------------------------------------------------
# deterministic serialization


def format_float(x: float) -> str:
    """17-significant-digit decimal; -0 collapses to 0; nan/inf verbatim."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        x = 0.0
    return format(x, ".17g")


def _json_fragment(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        import json

        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        # JSON has no nan/inf; reports carry them as null
        out.append("null" if not math.isfinite(obj) else format_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            _json_fragment(str(k), out)
            out.append(":")
            _json_fragment(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _json_fragment(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(obj) -> str:
    """Deterministic JSON with fixed float formatting and key order."""
    out: list = []
    _json_fragment(obj, out)
    return "".join(out)


def trace_lines(trace: GreedyTrace):
    yield TRACE_HEADER
    for row in trace.rows:
        yield ",".join(
            (
                str(row.m),
                format_float(row.energy),
                format_float(row.gap),
                format_float(row.sigma),
                format_float(row.step_norm),
                format_float(row.orth_residual),
                format_float(row.cum_step_s),
            )
        )


def write_trace(trace: GreedyTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in trace_lines(trace):
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# checks


def _check_monotonicity(trace: GreedyTrace) -> dict:
    energies = trace.energies
    slack = 1e-12 * (1.0 + abs(float(energies[0])))
    increases = int(np.sum(np.diff(energies) > slack))
    return {
        "violations": increases,
        "steps": len(energies) - 1,
        "passed": increases == 0,
    }


def _check_iterate_error(trace: GreedyTrace, alpha: float, s: float) -> dict:
    checked = 0
    violations = 0
    worst = 0.0
    scale = (s / alpha) ** (1.0 / s)
    for row in trace.rows:
        if not math.isfinite(row.gap) or row.gap < 0.0:
            continue
        checked += 1
        bound = scale * row.gap ** (1.0 / s) * 1.01
        if row.ref_error > bound:
            violations += 1
        if bound > 0.0:
            worst = max(worst, row.ref_error / bound)
        elif row.ref_error > 0.0:
            worst = math.inf
    return {
        "checked": checked,
        "violations": violations,
        "worst_ratio": worst,
        "alpha": alpha,
        "s": s,
        "passed": violations == 0,
    }


def _check_containment(trace: GreedyTrace, region_radius: float, ref_norm: float | None) -> dict:
    max_norm = max((row.iterate_norm for row in trace.rows), default=0.0)
    covered = max_norm <= region_radius and (ref_norm is None or ref_norm <= region_radius)
    return {
        "max_iterate_norm": float(max_norm),
        "reference_norm": ref_norm,
        "region_radius": region_radius,
        "passed": bool(covered),
    }


def _check_gap_sigma(trace: GreedyTrace, c_gap: float, e_gap: float) -> dict:
    checked = 0
    violations = 0
    worst = 0.0
    for row in trace.rows:
        if not math.isfinite(row.gap):
            continue
        checked += 1
        bound = c_gap * row.sigma**e_gap
        if row.gap > bound * (1.0 + 1e-9):
            violations += 1
        if bound > 0.0:
            worst = max(worst, row.gap / bound)
        elif row.gap > 0.0:
            worst = math.inf
    return {
        "checked": checked,
        "violations": violations,
        "worst_ratio": worst,
        "c": c_gap,
        "e": e_gap,
        "passed": violations == 0,
    }


def _check_envelope(trace: GreedyTrace, mu: float) -> dict:
    gaps = trace.gaps
    violations = 0
    if math.isfinite(gaps[0]):
        base = gaps[0]
        for m in range(len(gaps)):
            if math.isfinite(gaps[m]) and gaps[m] > base * (1.0 - mu) ** m * (1.0 + 1e-9):
                violations += 1
    return {
        "applicable": True,
        "mu": mu,
        "violations": violations,
        "passed": violations == 0,
    }


def _predict(p_hat: float, s_hat: float) -> RatePrediction:
    # sampled orders drift past the admissible range by float noise
    p_c = min(max(p_hat, 1e-12), 1.0)
    if abs(s_hat - (p_c + 1.0)) <= CRITICAL_SNAP_TOL:
        return predicted_rate(p_c, p_c + 1.0)
    return predicted_rate(p_c, s_hat)


def _rate_consistency(fitted, predicted: RatePrediction):
    """Upper-bound reading: decaying faster than predicted is consistent."""
    if fitted.kind == "undetermined":
        return None
    if predicted.kind == "exponential":
        return True if fitted.kind == "exponential" else None
    if fitted.kind == "exponential":
        return True
    return bool(fitted.value >= 0.9 * predicted.exponent)


# ---------------------------------------------------------------------------
# pipeline


def execute_config(cfg: ExperimentConfig) -> RunOutcome:
    """Run the full pipeline; no files are touched."""
    energy = build_energy(cfg)
    dictionary = build_dictionary(cfg, energy)

    r_ball = cfg.greedy.ball_radius_r
    if r_ball is None:
        r_ball = default_region_radius(energy)
    region = 2.0 * r_ball

    ana = cfg.analysis
    p_hat, lip_hat = estimate_smoothness(energy, region, samples=ana.trials, seed=ana.seed)
    s_hat, alpha_hat = estimate_ellipticity(energy, region, samples=ana.trials, seed=ana.seed)
    working = energy.params.filled(lip_hat, alpha_hat)

    if dictionary.norming_constant is not None:
        c_norm = dictionary.norming_constant
        c_source = dictionary.norming_source
    elif dictionary.kind == "subspace-union":
        c_norm, c_source = subspace_norming_constant(dictionary, trials=_NORMING_TRIALS, seed=ana.seed)
    else:
        c_norm = 1.05 * certify_norming_ratio(dictionary, trials=_NORMING_TRIALS, seed=ana.seed)
        c_source = "certified"
    norming = verify_norming(dictionary, c_norm, trials=_NORMING_TRIALS, seed=ana.seed)
    norming_report = {
        "constant": c_norm,
        "source": c_source,
        "trials": norming["trials"],
        "violations": norming["violations"],
        "worst_ratio": norming["worst_ratio"],
        "brute": norming["brute"],
        "passed": norming["passed"],
    }

    trace = run_greedy(energy, dictionary, cfg.greedy)

    beta = beta_global(working.p, working.lip)
    c_gap, e_gap = gap_sigma_constant(working.p, working.s, working.lip, working.alpha, c_norm)
    ref = energy.reference_minimizer
    ref_norm = float(ref.norm()) if ref is not None else None

    checks = {
        "monotonicity": _check_monotonicity(trace),
        "one_step": check_one_step_bound(trace, beta, working.p),
        "orthogonality": check_orthogonality(trace),
        "telescoping": check_telescoping(trace, working.alpha, working.s),
        "iterate_error": (
            _check_iterate_error(trace, working.alpha, working.s)
            if ref is not None
            else {"checked": 0, "violations": 0, "worst_ratio": 0.0, "passed": True}
        ),
        "containment": _check_containment(trace, region, ref_norm),
        "gap_sigma": _check_gap_sigma(trace, c_gap, e_gap),
    }

    predicted = _predict(p_hat, s_hat)
    if predicted.kind == "exponential":
        mu = exponential_factor(working.p, working.lip, c_gap)
        checks["exponential_envelope"] = _check_envelope(trace, mu)
        predicted_payload = {"kind": "exponential", "exponent": None, "factor": mu}
    else:
        checks["exponential_envelope"] = {"applicable": False, "passed": True}
        predicted_payload = {"kind": "algebraic", "exponent": predicted.exponent, "factor": None}

    gaps = trace.gaps
    gap0 = float(gaps[0]) if len(gaps) and math.isfinite(gaps[0]) else 0.0
    fitted = fit_rate(gaps, burn_in=ana.burn_in, floor=ana.floor * gap0)
    consistent = _rate_consistency(fitted, predicted)

    all_checks = all(c["passed"] for c in checks.values())
    passed = all_checks and norming_report["passed"] and consistent is not False

    report = {
        "config": cfg.raw,
        "estimates": {
            "p_hat": p_hat,
            "s_hat": s_hat,
            "lip_hat": lip_hat,
            "alpha_hat": alpha_hat,
            "region_radius": region,
            "samples": ana.trials,
            "seed": ana.seed,
            "applied": {
                "p": working.p,
                "s": working.s,
                "lip": working.lip,
                "alpha": working.alpha,
                "lip_source": working.lip_source,
                "alpha_source": working.alpha_source,
            },
        },
        "norming": norming_report,
        "checks": checks,
        "rate": {
            "fitted": {
                "kind": fitted.kind,
                "value": fitted.value,
                "r_squared": fitted.r_squared,
                "intercept": fitted.intercept,
                "window_start": fitted.window_start,
                "window_stop": fitted.window_stop,
                "competing_r_squared": fitted.competing_r_squared,
            },
            "predicted": predicted_payload,
            "consistent": consistent,
        },
        "verdict": "pass" if passed else "fail",
    }
    return RunOutcome(trace=trace, report=report, passed=passed)


def run_config_file(path: str) -> tuple[int, dict]:
    """Load, execute, and write artifacts; the cmd_run worker.

    Returns (0, report) when the verdict is pass and (1, report) when
    any check failed (the report is still written).  Validation and IO
    errors raise and are mapped to exit 2 by the command layer.
    """
    from .config import load_config

    cfg = load_config(path)
    outcome = execute_config(cfg)

    for out_path in (cfg.output.trace_path, cfg.output.report_path, cfg.output.plot_path):
        if out_path:
            parent = os.path.dirname(out_path)
            if parent:
                os.makedirs(parent, exist_ok=True)

    write_trace(outcome.trace, cfg.output.trace_path)
    with open(cfg.output.report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_json(outcome.report) + "\n")

    if cfg.output.plot_path:
        from .plotting import render_trace_plot

        render_trace_plot(
            [(row.m, row.gap, row.sigma) for row in outcome.trace.rows],
            cfg.output.plot_path,
            burn_in=cfg.analysis.burn_in,
            floor_rel=cfg.analysis.floor,
        )
    return (0 if outcome.passed else 1), outcome.report
