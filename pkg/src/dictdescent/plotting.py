"""Static SVG rendering of descent traces.

One figure: gap and sigma against the step index on a log y-axis, plus
an overlay of the better-fitting decay law over the fit window.  Output
is deterministic for fixed input: the SVG hash salt is pinned, no
timestamp metadata is written, and all values pass through the same
fixed-precision formatting as the trace itself.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigError
from .runner import TRACE_HEADER

_HASH_SALT = "dictdescent"


def load_trace_csv(path: str) -> list:
    """Parse a trace CSV into (m, gap, sigma) tuples; strict schema."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read trace {path!r}: {exc}") from exc
    if not lines or lines[0] != TRACE_HEADER:
        raise ConfigError(f"trace {path!r} does not start with the expected header {TRACE_HEADER!r}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ConfigError(f"trace {path!r} line {i}: expected 7 columns, got {len(parts)}")
        try:
            m = int(parts[0])
            gap = float(parts[2])
            sigma = float(parts[3])
        except ValueError as exc:
            raise ConfigError(f"trace {path!r} line {i}: {exc}") from exc
        rows.append((m, gap, sigma))
    if not rows:
        raise ConfigError(f"trace {path!r} contains no data rows")
    return rows


def _clip_positive(values: np.ndarray, floor_rel: float) -> np.ndarray:
    """Clip nonpositive entries to the relative floor before log scaling."""
    finite = values[np.isfinite(values) & (values > 0.0)]
    if len(finite) == 0:
        return np.full_like(values, np.nan)
    floor = max(floor_rel * float(finite[0]), np.finfo(float).tiny)
    out = np.where(np.isfinite(values), np.maximum(values, floor), np.nan)
    return out


def _overlay(ms: np.ndarray, gaps: np.ndarray, burn_in: int, floor_rel: float):
    """Least-squares decay fit for the overlay curve.

    Returns (label, xs, ys) or None.  Picks the better raw r-squared of
    the exponential and algebraic models on the standard window; unlike
    the report fit there is no margin rule, the overlay is illustrative.
    """
    finite = gaps[np.isfinite(gaps) & (gaps > 0.0)]
    if len(finite) == 0:
        return None
    floor = floor_rel * float(finite[0])
    stop = len(gaps)
    for i in range(len(gaps)):
        if not math.isfinite(gaps[i]) or gaps[i] <= floor:
            stop = i
            break
    window = np.arange(max(burn_in, 1), stop)
    window = window[np.isfinite(gaps[window]) & (gaps[window] > 0.0)] if len(window) else window
    if len(window) < 2:
        return None
    y = np.log(gaps[window])

    def lsq(x):
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        centered = y - y.mean()
        ss_tot = float(centered @ centered)
        r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0.0 else 0.0
        return slope, intercept, r2

    slope_e, int_e, r2_e = lsq(window.astype(float))
    slope_a, int_a, r2_a = lsq(np.log(window.astype(float)))
    xs = window.astype(float)
    if r2_e >= r2_a:
        ys = np.exp(int_e + slope_e * xs)
        label = f"exponential fit, factor {math.exp(slope_e):.6g}"
    else:
        ys = np.exp(int_a + slope_a * np.log(xs))
        label = f"algebraic fit, exponent {-slope_a:.6g}"
    return label, xs, ys


def render_trace_plot(rows, out_path: str, burn_in: int = 5, floor_rel: float = 1e-13) -> list:
    """Render gap/sigma curves plus the fitted overlay; returns warnings."""
    warnings = []
    ms = np.array([r[0] for r in rows], dtype=float)
    gaps = np.array([r[1] for r in rows], dtype=float)
    sigmas = np.array([r[2] for r in rows], dtype=float)
    if len(rows) < 2:
        warnings.append("degenerate plot: trace has a single row")

    plt.rcParams["svg.hashsalt"] = _HASH_SALT
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        gap_line = ax.plot(ms, _clip_positive(gaps, floor_rel), marker="", linewidth=1.5, label="gap")[0]
        gap_line.set_gid("gap_curve")
        sigma_line = ax.plot(ms, _clip_positive(sigmas, floor_rel), marker="", linewidth=1.0, label="sigma")[0]
        sigma_line.set_gid("sigma_curve")
        fit = _overlay(ms, gaps, burn_in, floor_rel)
        if fit is not None:
            label, xs, ys = fit
            overlay_line = ax.plot(xs, ys, linestyle="--", linewidth=1.0, label=label)[0]
            overlay_line.set_gid("rate_overlay")
        else:
            warnings.append("no overlay: fewer than two usable gap values in the fit window")
        ax.set_yscale("log")
        ax.set_xlabel("step")
        ax.set_ylabel("value")
        ax.legend(loc="upper right", fontsize=8)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return warnings
