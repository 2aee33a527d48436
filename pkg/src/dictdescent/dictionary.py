"""Dictionary families and their norming constants.

A dictionary is a radial (sign- and scale-closed) subset of the space.
The quantity driving the greedy loop is

    sigma(g) = sup { |pair(g, u)| : u in the dictionary, norm(u) = 1 },

and a dictionary is "norming" with constant C when dual_norm(g) <= C *
sigma(g) for every functional g.  Four families are implemented: finite
atom sets, coordinate-dominance cones, finite unions of subspaces, and
the full space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DictionaryDegenerateError, ParameterError
from .vectorspace import SpaceVector

MEMBERSHIP_TOL = 1e-10


@dataclass(frozen=True)
class FiniteAtomData:
    """Unit-norm atoms stored as columns; sign closure is implicit.

    sigma_min is the smallest singular value of the weighted atom matrix
    W^(1/2) K (meaningful for q = 2 spaces; None otherwise).
    """

    atoms: np.ndarray
    sigma_min: float | None

    @property
    def count(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class ConeData:
    """Coordinate-dominance cone {x : |x_1| >= c * norm(x)} in plain l^q."""

    c: float
    q: float


@dataclass(frozen=True)
class SubspaceUnionData:
    """Union of subspaces, each basis orthonormal w.r.t. the weighted pairing."""

    bases: tuple
    direct_sum: bool


@dataclass(eq=False)
class DictionaryModel:
    """A dictionary plus its certified norming data.

    norming_source is "formula" when the constant has a closed form,
    "certified" when it was produced by Monte-Carlo certification, and
    "unknown" when no constant is attached yet.
    """

    kind: str
    template: SpaceVector
    data: FiniteAtomData | ConeData | SubspaceUnionData | None
    norming_constant: float | None
    norming_source: str

    # -- membership --------------------------------------------------------

    def membership(self, x: SpaceVector, tol: float = MEMBERSHIP_TOL) -> bool:
        """Whether x belongs to the dictionary (radial set, so 0 is in)."""
        nx = x.norm()
        if nx <= tol:
            return True
        if self.kind == "full-space":
            return True
        if self.kind == "coordinate-cone":
            return abs(x.coeffs[0]) >= self.data.c * nx - tol * max(1.0, nx)
        if self.kind == "finite-atoms":
            unit = x * (1.0 / nx)
            for j in range(self.data.count):
                k = x.with_coeffs(self.data.atoms[:, j])
                if min((unit - k).norm(), (unit + k).norm()) <= tol:
                    return True
            return False
        if self.kind == "subspace-union":
            w = x.weights
            for v in self.data.bases:
                proj = v @ (v.T @ (w * x.coeffs))
                if x.with_coeffs(x.coeffs - proj).norm() <= tol * max(1.0, nx):
                    return True
            return False
        raise ParameterError(f"unknown dictionary kind {self.kind!r}")

    # -- sigma -------------------------------------------------------------

    def sigma_witness(self, g: SpaceVector) -> tuple[float, SpaceVector]:
        """sup of |pair(g, .)| over the unit slice, and a unit witness.

        The witness w satisfies membership, norm(w) = 1, and
        pair(g, w) = sigma (nonnegative sign convention).  For g = 0 the
        sigma is 0 and the witness is an arbitrary valid member.
        """
        if not np.abs(g.coeffs).any():
            return 0.0, self._default_witness()
        if self.kind == "full-space":
            return g.dual_norm(), g.dual_maximizer()
        if self.kind == "finite-atoms":
            vals = (self.template.weights * g.coeffs) @ self.data.atoms
            j = int(np.argmax(np.abs(vals)))
            atom = g.with_coeffs(self.data.atoms[:, j])
            return float(abs(vals[j])), atom if vals[j] >= 0.0 else -atom
        if self.kind == "coordinate-cone":
            return self._sigma_cone(g)
        if self.kind == "subspace-union":
            return self._sigma_subspaces(g)
        raise ParameterError(f"unknown dictionary kind {self.kind!r}")

    def _default_witness(self) -> SpaceVector:
        if self.kind == "finite-atoms":
            return self.template.with_coeffs(self.data.atoms[:, 0])
        if self.kind == "subspace-union":
            return self.template.with_coeffs(self.data.bases[0][:, 0])
        e1 = np.zeros(self.template.n)
        e1[0] = 1.0
        v = self.template.with_coeffs(e1)
        return v * (1.0 / v.norm())

    def _sigma_cone(self, g: SpaceVector) -> tuple[float, SpaceVector]:
        # Slice parametrized by the first-coordinate share a = |u_1|:
        # value(a) = a|g_1| + (1 - a^q)^(1/q) dual_norm(g_tail), concave,
        # so the unconstrained optimum (the plain dual maximizer) clamps
        # to a = c when its share falls below c.
        c = self.data.c
        q = g.q
        full = g.dual_norm()
        share = (abs(g.coeffs[0]) / full) ** (g.dual_exponent - 1.0)
        if share >= c:
            return full, g.dual_maximizer()
        sgn = 1.0 if g.coeffs[0] >= 0.0 else -1.0
        tail = g.coeffs[1:]
        qp = g.dual_exponent
        tail_dn = float(np.sum(np.abs(tail) ** qp) ** (1.0 / qp))
        tail_mass = (1.0 - c**q) ** (1.0 / q)
        sigma = c * abs(g.coeffs[0]) + tail_mass * tail_dn
        wit = np.zeros(g.n)
        wit[0] = sgn * c
        # tail filled with the dual maximizer of the tail functional
        tail_dir = np.sign(tail) * np.abs(tail) ** (qp - 1.0)
        tail_norm = float(np.sum(np.abs(tail_dir) ** q) ** (1.0 / q))
        wit[1:] = tail_mass * tail_dir / tail_norm
        return sigma, g.with_coeffs(wit)

    def _sigma_subspaces(self, g: SpaceVector) -> tuple[float, SpaceVector]:
        wg = self.template.weights * g.coeffs
        best = -1.0
        best_coords = None
        best_basis = None
        for v in self.data.bases:
            coords = v.T @ wg
            val = float(np.linalg.norm(coords))
            if val > best:  # strict: ties keep the lowest block index
                best = val
                best_coords = coords
                best_basis = v
        if best <= 0.0:
            return 0.0, self._default_witness()
        return best, g.with_coeffs(best_basis @ (best_coords / best))


# ---------------------------------------------------------------------------
# constructors


def full_space_dictionary(template: SpaceVector) -> DictionaryModel:
    """The whole space; trivially norming with C = 1."""
    return DictionaryModel(
        kind="full-space",
        template=template.zero_like(),
        data=None,
        norming_constant=1.0,
        norming_source="formula",
    )


def cone_dictionary(template: SpaceVector, c: float) -> DictionaryModel:
    """Coordinate-dominance cone in plain l^q (unit weights required).

    Norming constant C(c, q) = 1 / min(c, (1 - c^q)^(1/q)).
    """
    if not (0.0 < c < 1.0):
        raise ParameterError(f"cone parameter c must lie in (0, 1), got {c}")
    if not np.all(template.weights == 1.0):
        raise ParameterError("coordinate cones are defined over unit-weight spaces")
    if template.n < 2:
        raise ParameterError("coordinate cone needs dimension >= 2")
    q = template.q
    constant = 1.0 / min(c, (1.0 - c**q) ** (1.0 / q))
    return DictionaryModel(
        kind="coordinate-cone",
        template=template.zero_like(),
        data=ConeData(c=c, q=q),
        norming_constant=constant,
        norming_source="formula",
    )


def finite_atoms_dictionary(atoms, template: SpaceVector) -> DictionaryModel:
    """Wrap a column family of atoms; normalizes and attaches sigma_min.

    For q = 2 the norming constant sqrt(m)/sigma_min is attached when the
    atoms span (m = n); otherwise the constant is left for certification.
    """
    k = np.asarray(atoms, dtype=float)
    if k.ndim != 2 or k.shape[0] != template.n:
        raise ParameterError(f"atom matrix must be {template.n} x m, got {k.shape}")
    m = k.shape[1]
    if m == 0:
        raise ParameterError("empty atom family")
    cols = []
    for j in range(m):
        col = template.with_coeffs(k[:, j])
        nc = col.norm()
        if nc <= 1e-14:
            raise DictionaryDegenerateError(f"atom {j} is numerically zero")
        cols.append(k[:, j] / nc)
    k = np.column_stack(cols)
    sigma_min = None
    constant = None
    source = "unknown"
    if abs(template.q - 2.0) <= 1e-12:
        weighted = np.sqrt(template.weights)[:, None] * k
        sigma_min = float(np.linalg.svd(weighted, compute_uv=False)[-1])
        if m == template.n and sigma_min > 0.0:
            constant = float(np.sqrt(m) / sigma_min)
            source = "formula"
    data = FiniteAtomData(atoms=k, sigma_min=sigma_min)
    return DictionaryModel(
        kind="finite-atoms",
        template=template.zero_like(),
        data=data,
        norming_constant=constant,
        norming_source=source,
    )


def canonical_axis_atoms(template: SpaceVector) -> DictionaryModel:
    """Normalized coordinate axes.

    For these atoms the norming constant has the closed form m^(1 - 1/q)
    in any weighted q-space: the dual norm is an l^q' sum of exactly the
    m slice pairings, each bounded by their maximum.
    """
    k = np.diag(template.weights ** (-1.0 / template.q))
    model = finite_atoms_dictionary(k, template)
    m = template.n
    model.norming_constant = float(m ** (1.0 - 1.0 / template.q))
    model.norming_source = "formula"
    return model


def build_neural_atoms(
    points,
    params,
    activation: str = "tanh",
    template: SpaceVector | None = None,
) -> FiniteAtomData:
    """Evaluate feature ridges over a point set and package them as atoms.

    Each parameter row (w, b) produces the atom (act(<w, x_i> + b))_i over
    the n points.  Near-duplicate features (|cosine| > 1 - 1e-8) are
    dropped, survivors are normalized, and a smallest singular value below
    1e-10 is rejected naming the offending atoms.  Requires m <= n and a
    q = 2 space.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    par = np.atleast_2d(np.asarray(params, dtype=float))
    n, d = pts.shape
    if par.shape[1] != d + 1:
        raise ParameterError(
            f"parameter rows must hold {d} weights plus a bias, got {par.shape[1]} entries"
        )
    m = par.shape[0]
    if m > n:
        raise ParameterError(f"atom count {m} exceeds point count {n}")
    if template is None:
        raise ParameterError("a space template is required to normalize atoms")
    if abs(template.q - 2.0) > 1e-12 or template.n != n:
        raise ParameterError("neural atoms need a q = 2 space over the point set")
    if activation == "tanh":
        act = np.tanh
    elif activation == "sigmoid":
        act = lambda z: 1.0 / (1.0 + np.exp(-z))
    else:
        raise ParameterError(f"unknown activation {activation!r}")

    feats = act(pts @ par[:, :d].T + par[:, d][None, :])
    w = template.weights
    cols = []
    kept = []
    for j in range(m):
        col = feats[:, j]
        nc = float(np.sqrt(np.sum(w * col * col)))
        if nc <= 1e-14:
            raise DictionaryDegenerateError(f"atom {j} evaluates to the zero feature")
        unit = col / nc
        duplicate = False
        for kcol in cols:
            if abs(float(np.sum(w * unit * kcol))) > 1.0 - 1e-8:
                duplicate = True
                break
        if not duplicate:
            cols.append(unit)
            kept.append(j)
    k = np.column_stack(cols)
    weighted = np.sqrt(w)[:, None] * k
    svals = np.linalg.svd(weighted, compute_uv=False)
    sigma_min = float(svals[-1])
    if sigma_min < 1e-10:
        _, _, vt = np.linalg.svd(weighted)
        null = np.abs(vt[-1])
        offenders = [kept[i] for i in np.nonzero(null > 0.5 * null.max())[0]]
        raise DictionaryDegenerateError(
            f"atom family is rank deficient (sigma_min = {sigma_min:.3e}); "
            f"offending atoms: {offenders}"
        )
    return FiniteAtomData(atoms=k, sigma_min=sigma_min)


def subspace_union_dictionary(bases, template: SpaceVector) -> DictionaryModel:
    """Union of subspaces given by basis matrices (columns span each block).

    Bases are orthonormalized w.r.t. the weighted inner product (q = 2
    only).  When the blocks form a direct sum of the whole space the
    norming constant equals the number of blocks; otherwise the constant
    is left to Monte-Carlo certification.
    """
    if abs(template.q - 2.0) > 1e-12:
        raise ParameterError("subspace unions are supported for q = 2 spaces")
    w = template.weights
    rw = np.sqrt(w)
    ortho = []
    total_dim = 0
    stacked = []
    for i, b in enumerate(bases):
        arr = np.asarray(b, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != template.n:
            raise ParameterError(f"basis {i} must be {template.n} x d, got {arr.shape}")
        qmat, rmat = np.linalg.qr(rw[:, None] * arr)
        rank = int(np.sum(np.abs(np.diag(rmat)) > 1e-12 * max(1.0, np.abs(rmat).max())))
        if rank < arr.shape[1]:
            raise ParameterError(f"basis {i} has dependent columns")
        v = qmat / rw[:, None]
        ortho.append(v)
        total_dim += v.shape[1]
        stacked.append(rw[:, None] * v)
    concat = np.column_stack(stacked)
    rank_all = int(np.linalg.matrix_rank(concat, tol=1e-10))
    direct_sum = total_dim == template.n and rank_all == template.n
    data = SubspaceUnionData(bases=tuple(ortho), direct_sum=direct_sum)
    return DictionaryModel(
        kind="subspace-union",
        template=template.zero_like(),
        data=data,
        norming_constant=float(len(ortho)) if direct_sum else None,
        norming_source="formula" if direct_sum else "unknown",
    )


# ---------------------------------------------------------------------------
# norming constants and verification


def norming_constant_finite(data: FiniteAtomData) -> float:
    """sqrt(m) / sigma_min for a finite atom family in a q = 2 space."""
    if data.sigma_min is None:
        raise ParameterError("sigma_min unavailable; atoms were not built in a q = 2 space")
    if data.sigma_min <= 0.0:
        raise ParameterError("degenerate atom family has no norming constant")
    return float(np.sqrt(data.count) / data.sigma_min)


def subspace_norming_constant(
    model: DictionaryModel,
    trials: int = 10_000,
    seed: int = 0,
    margin: float = 1.05,
) -> tuple[float, str]:
    """Norming constant for a subspace union.

    Direct sums use the closed form C = number of blocks.  Other unions
    are certified by Monte-Carlo: the worst sampled dual_norm/sigma ratio
    times a safety margin.  A union that does not span has sigma = 0 on a
    nonzero functional and can never be norming.
    """
    if model.kind != "subspace-union":
        raise ParameterError("subspace_norming_constant needs a subspace-union dictionary")
    data = model.data
    total = np.column_stack(
        [np.sqrt(model.template.weights)[:, None] * v for v in data.bases]
    )
    if int(np.linalg.matrix_rank(total, tol=1e-10)) < model.template.n:
        raise ParameterError("subspaces do not span the space; the union cannot be norming")
    if data.direct_sum:
        return float(len(data.bases)), "formula"
    worst = certify_norming_ratio(model, trials=trials, seed=seed)
    return float(worst * margin), "certified"


def certify_norming_ratio(model: DictionaryModel, trials: int, seed: int) -> float:
    """Worst sampled dual_norm(phi)/sigma(phi) over random functionals."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        phi = model.template.with_coeffs(rng.standard_normal(model.template.n))
        sigma, _ = model.sigma_witness(phi)
        if sigma <= 0.0:
            raise ParameterError("sampled functional with sigma = 0; dictionary not norming")
        worst = max(worst, phi.dual_norm() / sigma)
    return worst


def slice_sample_max(
    model: DictionaryModel,
    phi: SpaceVector,
    budget: int,
    rng: np.random.Generator,
) -> float:
    """Brute-force lower bound on sigma(phi): max pairing over slice samples.

    Sampling is constructive per family (atoms are enumerated exactly;
    cones draw first-coordinate shares uniformly; subspaces draw in-block
    directions; the full space draws random unit vectors), so this oracle
    is independent of the closed-form witness path.
    """
    t = model.template
    if model.kind == "finite-atoms":
        vals = (t.weights * phi.coeffs) @ model.data.atoms
        return float(np.max(np.abs(vals)))
    best = 0.0
    if model.kind == "full-space":
        for _ in range(budget):
            u = t.with_coeffs(rng.standard_normal(t.n))
            u = u * (1.0 / u.norm())
            best = max(best, abs(phi.pair(u)))
        return best
    if model.kind == "coordinate-cone":
        c, q = model.data.c, model.data.q
        for _ in range(budget):
            a = rng.uniform(c, 1.0)
            tail = rng.standard_normal(t.n - 1)
            tail_norm = float(np.sum(np.abs(tail) ** q) ** (1.0 / q))
            u = np.zeros(t.n)
            u[0] = a * (1.0 if rng.uniform() < 0.5 else -1.0)
            if tail_norm > 0.0:
                u[1:] = (1.0 - a**q) ** (1.0 / q) * tail / tail_norm
            best = max(best, abs(phi.pair(t.with_coeffs(u))))
        return best
    if model.kind == "subspace-union":
        blocks = model.data.bases
        per = max(1, budget // len(blocks))
        for v in blocks:
            d = v.shape[1]
            for _ in range(per):
                coords = rng.standard_normal(d)
                coords /= np.linalg.norm(coords)
                best = max(best, abs(phi.pair(t.with_coeffs(v @ coords))))
        return best
    raise ParameterError(f"unknown dictionary kind {model.kind!r}")


def verify_norming(
    model: DictionaryModel,
    constant: float,
    trials: int = 10_000,
    seed: int = 0,
    n_small: int = 6,
) -> dict:
    """Monte-Carlo check of dual_norm(phi) <= constant * sigma(phi).

    Reports the violation count and the worst observed ratio.  When the
    space dimension is at most n_small, a brute-force slice sampling
    cross-check additionally confirms the witness value is a true sup
    within 1% (and never exceeded by any sample).
    """
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    for _ in range(trials):
        phi = model.template.with_coeffs(rng.standard_normal(model.template.n))
        sigma, _ = model.sigma_witness(phi)
        dn = phi.dual_norm()
        if sigma <= 0.0:
            violations += 1
            worst = np.inf
            continue
        ratio = dn / sigma
        worst = max(worst, ratio)
        if ratio > constant * (1.0 + 1e-12):
            violations += 1
    report = {
        "constant": float(constant),
        "trials": int(trials),
        "violations": int(violations),
        "worst_ratio": float(worst),
        "passed": violations == 0,
        "brute": None,
    }
    if model.template.n <= n_small:
        max_gap = 0.0
        overshoot = 0.0
        probes = 20
        budget = 50_000
        for _ in range(probes):
            phi = model.template.with_coeffs(rng.standard_normal(model.template.n))
            sigma, _ = model.sigma_witness(phi)
            if sigma <= 0.0:
                continue
            smax = slice_sample_max(model, phi, budget, rng)
            max_gap = max(max_gap, (sigma - smax) / sigma)
            overshoot = max(overshoot, (smax - sigma) / sigma)
        brute_ok = max_gap <= 0.01 and overshoot <= 1e-9
        report["brute"] = {
            "probes": probes,
            "budget": budget,
            "max_rel_gap": float(max_gap),
            "max_overshoot": float(overshoot),
            "passed": bool(brute_ok),
        }
        report["passed"] = report["passed"] and brute_ok
    return report
