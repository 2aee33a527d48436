"""Weighted finite sequence spaces.

A vector lives in R^n equipped with the weighted q-norm

    norm(v) = (sum_i w_i |v_i|^q)^(1/q),    w_i > 0, 1 < q < inf,

and the weighted pairing pair(f, v) = sum_i w_i f_i v_i.  Functionals are
stored with the same (weights, q) signature as the primal space; their
dual norm is the weighted q'-norm with q' = q/(q-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidVectorError, ParameterError, SpaceMismatchError


def _as_readonly(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise InvalidVectorError(f"expected a 1-d coefficient array, got shape {arr.shape}")
    out = arr.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpaceVector:
    """Coefficients of a vector in a weighted q-space.

    coeffs, weights and q together fix the geometry; vectors are combinable
    only when all three agree.
    """

    coeffs: np.ndarray
    weights: np.ndarray
    q: float
    _skip_checks: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if self._skip_checks:
            return
        object.__setattr__(self, "coeffs", _as_readonly(self.coeffs))
        object.__setattr__(self, "weights", _as_readonly(self.weights))
        object.__setattr__(self, "q", float(self.q))
        if self.coeffs.shape != self.weights.shape:
            raise SpaceMismatchError(
                f"coefficients ({self.coeffs.shape[0]}) and weights "
                f"({self.weights.shape[0]}) differ in length"
            )
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidVectorError("non-finite coefficient encountered")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0.0):
            raise InvalidVectorError("weights must be finite and strictly positive")
        if not (1.0 < self.q < np.inf):
            raise ParameterError(f"norm exponent q must lie in (1, inf), got {self.q}")

    # -- structure ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dual_exponent(self) -> float:
        return self.q / (self.q - 1.0)

    def _require_compatible(self, other: SpaceVector) -> None:
        if self.weights is not other.weights:
            if self.weights.shape != other.weights.shape or not np.array_equal(
                self.weights, other.weights
            ):
                raise SpaceMismatchError("vectors live in different weighted spaces")
        if self.q != other.q:
            raise SpaceMismatchError(f"norm exponents differ: {self.q} vs {other.q}")

    def with_coeffs(self, coeffs) -> SpaceVector:
        """New vector in the same space; validates finiteness of coeffs."""
        arr = _as_readonly(coeffs)
        if arr.shape != self.weights.shape:
            raise SpaceMismatchError("coefficient length does not match the space")
        if not np.all(np.isfinite(arr)):
            raise InvalidVectorError("non-finite coefficient encountered")
        v = SpaceVector(arr, self.weights, self.q, _skip_checks=True)
        return v

    def zero_like(self) -> SpaceVector:
        return self.with_coeffs(np.zeros(self.n))

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: SpaceVector) -> SpaceVector:
        self._require_compatible(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: SpaceVector) -> SpaceVector:
        self._require_compatible(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, t: float) -> SpaceVector:
        return self.with_coeffs(self.coeffs * float(t))

    __rmul__ = __mul__

    def __neg__(self) -> SpaceVector:
        return self.with_coeffs(-self.coeffs)

    # -- geometry ----------------------------------------------------------

    def norm(self) -> float:
        """Weighted q-norm of the vector."""
        return float(np.sum(self.weights * np.abs(self.coeffs) ** self.q) ** (1.0 / self.q))

    def pair(self, other: SpaceVector) -> float:
        """Weighted duality pairing sum_i w_i f_i v_i."""
        self._require_compatible(other)
        return float(np.sum(self.weights * self.coeffs * other.coeffs))

    def dual_norm(self) -> float:
        """Norm of the functional represented by these coefficients.

        Equals the weighted q'-norm, q' = q/(q-1): the supremum of
        pair(self, v) over norm(v) = 1.
        """
        qp = self.dual_exponent
        return float(np.sum(self.weights * np.abs(self.coeffs) ** qp) ** (1.0 / qp))

    def dual_maximizer(self) -> SpaceVector:
        """Unit vector attaining pair(self, u) = dual_norm(self).

        Closed form u_i proportional to sign(f_i)|f_i|^(q'-1), normalized in
        the weighted q-norm.  Undefined for the zero functional.
        """
        qp = self.dual_exponent
        mag = np.abs(self.coeffs)
        if not mag.any():
            raise ParameterError("dual maximizer of the zero functional is undefined")
        u = np.sign(self.coeffs) * mag ** (qp - 1.0)
        out = self.with_coeffs(u)
        return out * (1.0 / out.norm())


def make_space_vector(coeffs, weights, q: float) -> SpaceVector:
    """Validating constructor; prefer this at API boundaries."""
    return SpaceVector(np.asarray(coeffs, dtype=float), np.asarray(weights, dtype=float), q)
