"""Declarative experiment configs.

A config is a strict JSON document; unknown keys anywhere are hard
errors, as is a missing or unsupported "version".  All randomness flows
from the seeds named here through numpy.random.default_rng (PCG64), so a
config pins its run exactly.  Relative output paths resolve against the
current working directory.

Layout (version 1):

    {
      "version": 1,
      "space": {
        "n": 64,                // dimension, positive int
        "q": 2.0,               // norm exponent, > 1
        "weights": "uniform"    // "uniform" | "grid" | [w_1, ..., w_n]
      },
      "energy": {
        "kind": "quadratic",    // "power" | "quadratic" | "plaplacian"
        "seed": 11,             // feeds random sources/targets
        ...kind parameters...,
        "declared_s": 2.0       // optional ellipticity order override
      },
      "dictionary": {
        "kind": "axes"          // "axes" | "full_space" | "cone" |
                                //   "neural" | "subspace_blocks"
        ...kind parameters...
      },
      "greedy": { ... GreedyConfig fields, all optional ... },
      "analysis": {
        "burn_in": 5,           // fit window start
        "floor": 1e-13,         // fit floor, relative to the initial gap
        "trials": 500,          // estimator sample pairs
        "seed": 0               // estimator / verification generator seed
      },
      "output": {
        "trace_path": "out/run.trace.csv",
        "report_path": "out/run.report.json",
        "plot_path": "out/run.svg"   // optional
      }
    }

Weights "grid" means the uniform mesh weight h = 1/(n+1) on every
coordinate, the natural pairing for the grid energies.

Energy parameters by kind:

    power       p (0 < p <= 1); target "gaussian" or an explicit list.
                The space must have q = p + 1.
    quadratic   matrix "identity" | "dirichlet_laplacian" | nested list;
                source "gaussian" | "sine_modes" | explicit list; modes
                (int, sine_modes only).  The space must have q = 2.
    plaplacian  q_exp (>= 2); source as for quadratic; reference_tol
                optional.  The space must have q = q_exp and "grid"
                weights.

"gaussian" draws standard normal coefficients from default_rng(seed).
"sine_modes" is sum_k c_k sin(k pi x_i) over the grid x_i = (i+1)/(n+1)
with c ~ default_rng(seed).normal(size=modes).

Dictionary parameters: cone needs c in (0, 1); neural needs count, an
optional activation ("tanh" default) and scale; subspace_blocks needs
block_size dividing n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dictionary import (
    DictionaryModel,
    build_neural_atoms,
    canonical_axis_atoms,
    cone_dictionary,
    finite_atoms_dictionary,
    full_space_dictionary,
    subspace_union_dictionary,
)
from .energy import EnergyModel, plaplacian_energy, power_energy, quadratic_energy
from .errors import ConfigError, ParameterError
from .greedy import GreedyConfig
from .vectorspace import SpaceVector, make_space_vector

SUPPORTED_VERSION = 1

_ENERGY_KINDS = ("power", "quadratic", "plaplacian")
_DICT_KINDS = ("axes", "full_space", "cone", "neural", "subspace_blocks")


@dataclass(frozen=True)
class AnalysisSettings:
    burn_in: int = 5
    floor: float = 1e-13
    trials: int = 500
    seed: int = 0


@dataclass(frozen=True)
class OutputSettings:
    trace_path: str
    report_path: str
    plot_path: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated config plus the raw dict it came from (for echoing)."""

    space_n: int
    space_q: float
    space_weights: object  # "uniform" | "grid" | tuple of floats
    energy_kind: str
    energy_params: dict
    energy_seed: int
    declared_s: float | None
    dict_kind: str
    dict_params: dict
    greedy: GreedyConfig
    analysis: AnalysisSettings
    output: OutputSettings
    raw: dict


# ---------------------------------------------------------------------------
# structural helpers


def _fail(where: str, msg: str) -> None:
    raise ConfigError(f"{where}: {msg}")


def _require_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        _fail(where, f"expected an object, got {type(obj).__name__}")
    return obj


def _check_keys(obj: dict, required: set, optional: set, where: str) -> None:
    keys = set(obj.keys())
    missing = required - keys
    if missing:
        _fail(where, f"missing required key(s): {', '.join(sorted(missing))}")
    unknown = keys - required - optional
    if unknown:
        _fail(where, f"unknown key(s): {', '.join(sorted(unknown))}")


def _as_int(v, where: str) -> int:
    # bool is an int subclass; reject it explicitly
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(where, f"expected an integer, got {v!r}")
    return v


def _as_float(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(where, f"expected a number, got {v!r}")
    return float(v)


def _as_str(v, where: str) -> str:
    if not isinstance(v, str):
        _fail(where, f"expected a string, got {v!r}")
    return v


def _as_float_list(v, where: str) -> tuple:
    if not isinstance(v, list) or not v:
        _fail(where, "expected a non-empty list of numbers")
    return tuple(_as_float(x, where) for x in v)


# ---------------------------------------------------------------------------
# section validators


def _validate_space(obj, where: str) -> tuple[int, float, object]:
    sec = _require_mapping(obj, where)
    _check_keys(sec, {"n", "q", "weights"}, set(), where)
    n = _as_int(sec["n"], f"{where}.n")
    if n < 1:
        _fail(f"{where}.n", f"dimension must be positive, got {n}")
    q = _as_float(sec["q"], f"{where}.q")
    if not q > 1.0:
        _fail(f"{where}.q", f"norm exponent must exceed 1, got {q}")
    w = sec["weights"]
    if isinstance(w, str):
        if w not in ("uniform", "grid"):
            _fail(f"{where}.weights", f"expected 'uniform', 'grid', or a list, got {w!r}")
        weights: object = w
    else:
        weights = _as_float_list(w, f"{where}.weights")
        if len(weights) != n:
            _fail(f"{where}.weights", f"expected {n} entries, got {len(weights)}")
        if any(x <= 0.0 for x in weights):
            _fail(f"{where}.weights", "weights must be positive")
    return n, q, weights


def _declared_p(kind: str, params: dict) -> float:
    # the smoothness order each energy family declares
    return params["p"] if kind == "power" else 1.0


def _validate_energy(obj, where: str, n: int, q: float, weights) -> tuple[str, dict, int, float | None]:
    sec = _require_mapping(obj, where)
    if "kind" not in sec:
        _fail(where, "missing required key(s): kind")
    kind = _as_str(sec["kind"], f"{where}.kind")
    if kind not in _ENERGY_KINDS:
        _fail(f"{where}.kind", f"expected one of {_ENERGY_KINDS}, got {kind!r}")

    if kind == "power":
        _check_keys(sec, {"kind", "p", "target"}, {"seed", "declared_s"}, where)
        p = _as_float(sec["p"], f"{where}.p")
        if not 0.0 < p <= 1.0:
            _fail(f"{where}.p", f"p must lie in (0, 1], got {p}")
        if abs(q - (p + 1.0)) > 1e-12:
            _fail(f"{where}.p", f"power energy requires space.q = p + 1 = {p + 1.0}, but space.q = {q}")
        target = sec["target"]
        if isinstance(target, str):
            if target != "gaussian":
                _fail(f"{where}.target", f"expected 'gaussian' or a list, got {target!r}")
        else:
            target = _as_float_list(target, f"{where}.target")
            if len(target) != n:
                _fail(f"{where}.target", f"expected {n} entries, got {len(target)}")
        params = {"p": p, "target": target}
    elif kind == "quadratic":
        _check_keys(sec, {"kind", "matrix", "source"}, {"seed", "modes", "declared_s"}, where)
        if abs(q - 2.0) > 1e-12:
            _fail(f"{where}.kind", f"quadratic energy requires space.q = 2, but space.q = {q}")
        matrix = sec["matrix"]
        if isinstance(matrix, str):
            if matrix not in ("identity", "dirichlet_laplacian"):
                _fail(f"{where}.matrix", f"expected 'identity', 'dirichlet_laplacian', or a nested list, got {matrix!r}")
        else:
            if not isinstance(matrix, list):
                _fail(f"{where}.matrix", "expected a matrix name or a nested list")
            matrix = tuple(_as_float_list(row, f"{where}.matrix") for row in matrix)
            if len(matrix) != n or any(len(r) != n for r in matrix):
                _fail(f"{where}.matrix", f"expected an {n} x {n} matrix")
        params = {"matrix": matrix, "source": _validate_source(sec, where, n)}
    else:
        _check_keys(sec, {"kind", "q_exp", "source"}, {"seed", "modes", "reference_tol", "declared_s"}, where)
        q_exp = _as_float(sec["q_exp"], f"{where}.q_exp")
        if q_exp < 2.0:
            _fail(f"{where}.q_exp", f"q_exp must be at least 2, got {q_exp}")
        if abs(q - q_exp) > 1e-12:
            _fail(f"{where}.q_exp", f"plaplacian energy requires space.q = q_exp = {q_exp}, but space.q = {q}")
        if weights != "grid":
            _fail(f"{where}.kind", "plaplacian energy requires space.weights = 'grid'")
        params = {"q_exp": q_exp, "source": _validate_source(sec, where, n)}
        if "reference_tol" in sec:
            tol = _as_float(sec["reference_tol"], f"{where}.reference_tol")
            if not tol > 0.0:
                _fail(f"{where}.reference_tol", "reference_tol must be positive")
            params["reference_tol"] = tol

    if kind in ("quadratic", "plaplacian") and params["source"] == "sine_modes":
        params["modes"] = _as_int(sec.get("modes", 5), f"{where}.modes")
        if params["modes"] < 1:
            _fail(f"{where}.modes", "modes must be at least 1")
    elif "modes" in sec:
        _fail(f"{where}.modes", "modes only applies to 'sine_modes' sources")

    seed = _as_int(sec.get("seed", 0), f"{where}.seed")

    declared_s = None
    if "declared_s" in sec:
        declared_s = _as_float(sec["declared_s"], f"{where}.declared_s")
        p_decl = _declared_p(kind, params)
        if declared_s < p_decl + 1.0 - 1e-9:
            _fail(
                f"{where}.declared_s",
                f"the exponent relation requires the ellipticity order s to be at "
                f"least p + 1 = {p_decl + 1.0}; got s = {declared_s}",
            )
    return kind, params, seed, declared_s


def _validate_source(sec: dict, where: str, n: int):
    source = sec["source"]
    if isinstance(source, str):
        if source not in ("gaussian", "sine_modes"):
            _fail(f"{where}.source", f"expected 'gaussian', 'sine_modes', or a list, got {source!r}")
        return source
    source = _as_float_list(source, f"{where}.source")
    if len(source) != n:
        _fail(f"{where}.source", f"expected {n} entries, got {len(source)}")
    return source


def _validate_dictionary(obj, where: str, n: int) -> tuple[str, dict]:
    sec = _require_mapping(obj, where)
    if "kind" not in sec:
        _fail(where, "missing required key(s): kind")
    kind = _as_str(sec["kind"], f"{where}.kind")
    if kind not in _DICT_KINDS:
        _fail(f"{where}.kind", f"expected one of {_DICT_KINDS}, got {kind!r}")
    if kind in ("axes", "full_space"):
        _check_keys(sec, {"kind"}, set(), where)
        return kind, {}
    if kind == "cone":
        _check_keys(sec, {"kind", "c"}, set(), where)
        c = _as_float(sec["c"], f"{where}.c")
        if not 0.0 < c < 1.0:
            _fail(f"{where}.c", f"cone parameter must lie in (0, 1), got {c}")
        return kind, {"c": c}
    if kind == "neural":
        _check_keys(sec, {"kind", "count"}, {"activation", "scale", "seed"}, where)
        count = _as_int(sec["count"], f"{where}.count")
        if not 0 < count <= n:
            _fail(f"{where}.count", f"atom count must lie in [1, {n}], got {count}")
        activation = _as_str(sec.get("activation", "tanh"), f"{where}.activation")
        scale = _as_float(sec.get("scale", 10.0), f"{where}.scale")
        if not scale > 0.0:
            _fail(f"{where}.scale", "scale must be positive")
        seed = _as_int(sec.get("seed", 0), f"{where}.seed")
        return kind, {"count": count, "activation": activation, "scale": scale, "seed": seed}
    _check_keys(sec, {"kind", "block_size"}, set(), where)
    size = _as_int(sec["block_size"], f"{where}.block_size")
    if size < 1 or n % size != 0:
        _fail(f"{where}.block_size", f"block_size must divide n = {n}, got {size}")
    return kind, {"block_size": size}


def _validate_greedy(obj, where: str) -> GreedyConfig:
    sec = _require_mapping(obj, where) if obj is not None else {}
    allowed = {"mode", "max_iter", "sigma_stop", "line_tol", "bracket_growth", "ball_radius_r"}
    _check_keys(sec, set(), allowed, where)
    kwargs = {}
    if "mode" in sec:
        kwargs["mode"] = _as_str(sec["mode"], f"{where}.mode")
    if "max_iter" in sec:
        kwargs["max_iter"] = _as_int(sec["max_iter"], f"{where}.max_iter")
    for key in ("sigma_stop", "line_tol", "bracket_growth"):
        if key in sec:
            kwargs[key] = _as_float(sec[key], f"{where}.{key}")
    if "ball_radius_r" in sec and sec["ball_radius_r"] is not None:
        kwargs["ball_radius_r"] = _as_float(sec["ball_radius_r"], f"{where}.ball_radius_r")
        if not kwargs["ball_radius_r"] > 0.0:
            _fail(f"{where}.ball_radius_r", "ball_radius_r must be positive")
    try:
        return GreedyConfig(**kwargs)
    except ParameterError as exc:
        _fail(where, str(exc))


def _validate_analysis(obj, where: str) -> AnalysisSettings:
    sec = _require_mapping(obj, where) if obj is not None else {}
    _check_keys(sec, set(), {"burn_in", "floor", "trials", "seed"}, where)
    burn_in = _as_int(sec.get("burn_in", 5), f"{where}.burn_in")
    if burn_in < 0:
        _fail(f"{where}.burn_in", "burn_in must be nonnegative")
    floor = _as_float(sec.get("floor", 1e-13), f"{where}.floor")
    if floor < 0.0:
        _fail(f"{where}.floor", "floor must be nonnegative")
    trials = _as_int(sec.get("trials", 500), f"{where}.trials")
    if trials < 1:
        _fail(f"{where}.trials", "trials must be positive")
    seed = _as_int(sec.get("seed", 0), f"{where}.seed")
    return AnalysisSettings(burn_in=burn_in, floor=floor, trials=trials, seed=seed)


def _validate_output(obj, where: str) -> OutputSettings:
    sec = _require_mapping(obj, where)
    _check_keys(sec, {"trace_path", "report_path"}, {"plot_path"}, where)
    trace = _as_str(sec["trace_path"], f"{where}.trace_path")
    report = _as_str(sec["report_path"], f"{where}.report_path")
    plot = None
    if "plot_path" in sec and sec["plot_path"] is not None:
        plot = _as_str(sec["plot_path"], f"{where}.plot_path")
    return OutputSettings(trace_path=trace, report_path=report, plot_path=plot)


# ---------------------------------------------------------------------------
# entry points


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed JSON document into an ExperimentConfig."""
    top = _require_mapping(raw, "config")
    _check_keys(
        top,
        {"version", "space", "energy", "dictionary", "output"},
        {"greedy", "analysis"},
        "config",
    )
    version = _as_int(top["version"], "config.version")
    if version != SUPPORTED_VERSION:
        _fail("config.version", f"unsupported version {version}; this build reads version {SUPPORTED_VERSION}")
    n, q, weights = _validate_space(top["space"], "config.space")
    kind, params, seed, declared_s = _validate_energy(top["energy"], "config.energy", n, q, weights)
    dkind, dparams = _validate_dictionary(top["dictionary"], "config.dictionary", n)
    greedy = _validate_greedy(top.get("greedy"), "config.greedy")
    analysis = _validate_analysis(top.get("analysis"), "config.analysis")
    output = _validate_output(top["output"], "config.output")
    return ExperimentConfig(
        space_n=n,
        space_q=q,
        space_weights=weights,
        energy_kind=kind,
        energy_params=params,
        energy_seed=seed,
        declared_s=declared_s,
        dict_kind=dkind,
        dict_params=dparams,
        greedy=greedy,
        analysis=analysis,
        output=output,
        raw=raw,
    )


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# object construction


def _space_weights(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.space_weights == "uniform":
        return np.ones(cfg.space_n)
    if cfg.space_weights == "grid":
        return np.full(cfg.space_n, 1.0 / (cfg.space_n + 1))
    return np.asarray(cfg.space_weights, dtype=float)


def _grid_points(n: int) -> np.ndarray:
    return (np.arange(n) + 1.0) / (n + 1.0)


def _build_source(spec, n: int, seed: int, modes: int | None) -> np.ndarray:
    if spec == "gaussian":
        return np.random.default_rng(seed).normal(size=n)
    if spec == "sine_modes":
        coef = np.random.default_rng(seed).normal(size=modes)
        x = _grid_points(n)
        out = np.zeros(n)
        for k in range(1, modes + 1):
            out += coef[k - 1] * np.sin(k * np.pi * x)
        return out
    return np.asarray(spec, dtype=float)


def build_energy(cfg: ExperimentConfig) -> EnergyModel:
    """Construct the configured energy model."""
    n = cfg.space_n
    weights = _space_weights(cfg)
    params = cfg.energy_params
    if cfg.energy_kind == "power":
        target = _build_source(params["target"], n, cfg.energy_seed, None)
        tvec = make_space_vector(target, weights, cfg.space_q)
        model = power_energy(target=tvec, p=params["p"])
    elif cfg.energy_kind == "quadratic":
        matrix = params["matrix"]
        if matrix == "identity":
            a = np.eye(n)
        elif matrix == "dirichlet_laplacian":
            h = 1.0 / (n + 1)
            a = (np.diag(2.0 * np.ones(n)) + np.diag(-np.ones(n - 1), 1) + np.diag(-np.ones(n - 1), -1)) / h**2
        else:
            a = np.asarray(matrix, dtype=float)
        source = _build_source(params["source"], n, cfg.energy_seed, params.get("modes"))
        svec = make_space_vector(source, weights, 2.0)
        model = quadratic_energy(a, svec)
    else:
        source = _build_source(params["source"], n, cfg.energy_seed, params.get("modes"))
        kwargs = {}
        if "reference_tol" in params:
            kwargs["reference_tol"] = params["reference_tol"]
        model = plaplacian_energy(grid_n=n, q_exp=params["q_exp"], source=source, **kwargs)
    if cfg.declared_s is not None:
        model.params = _override_order(model.params, cfg.declared_s)
    return model


def _override_order(params, s: float):
    # SmoothnessParams is frozen; rebuild with the declared ellipticity order
    from .energy import SmoothnessParams

    return SmoothnessParams(
        p=params.p,
        s=s,
        mode=params.mode,
        lip=params.lip,
        alpha=params.alpha,
        lip_source=params.lip_source,
        alpha_source=params.alpha_source,
    )


def build_dictionary(cfg: ExperimentConfig, energy: EnergyModel) -> DictionaryModel:
    """Construct the configured dictionary over the energy's space."""
    template = energy.zero
    if cfg.dict_kind == "axes":
        return canonical_axis_atoms(template)
    if cfg.dict_kind == "full_space":
        return full_space_dictionary(template)
    if cfg.dict_kind == "cone":
        return cone_dictionary(template, cfg.dict_params["c"])
    if cfg.dict_kind == "neural":
        p = cfg.dict_params
        rng = np.random.default_rng(p["seed"])
        pts = _grid_points(cfg.space_n)
        pars = np.column_stack(
            [p["scale"] * rng.standard_normal(p["count"]), rng.uniform(-p["scale"], p["scale"], size=p["count"])]
        )
        data = build_neural_atoms(pts, pars, activation=p["activation"], template=template)
        return finite_atoms_dictionary(data.atoms, template)
    size = cfg.dict_params["block_size"]
    bases = []
    eye = np.eye(cfg.space_n)
    for start in range(0, cfg.space_n, size):
        bases.append(eye[:, start : start + size])
    return subspace_union_dictionary(bases, template)
