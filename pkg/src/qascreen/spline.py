"""Normalized B-spline bases on [0, 1] and per-feature min-max rescaling.

The basis is clamped with equally spaced interior knots, so the functions
form a partition of unity and every basis value lies in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import BSpline


class DomainError(ValueError):
    """Evaluation points fall outside the unit interval."""

    def __init__(self, message: str, indices: np.ndarray | None = None):
        super().__init__(message)
        self.indices = indices


@dataclass(frozen=True)
class BSplineBasis:
    """B-spline basis of a given polynomial degree on [0, 1].

    ``num_basis`` equals ``len(interior_knots) + degree + 1``; the knot
    vector is clamped at both boundaries.
    """

    degree: int
    interior_knots: tuple[float, ...]

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be nonnegative, got {self.degree}")
        ks = np.asarray(self.interior_knots, dtype=float)
        if ks.size and (np.any(np.diff(ks) <= 0) or ks[0] <= 0.0 or ks[-1] >= 1.0):
            raise ValueError("interior knots must be strictly increasing inside (0, 1)")

    @property
    def num_basis(self) -> int:
        return len(self.interior_knots) + self.degree + 1

    @cached_property
    def knots(self) -> np.ndarray:
        """Full clamped knot vector."""
        reps = self.degree + 1
        return np.concatenate([np.zeros(reps), self.interior_knots, np.ones(reps)])

    def evaluate(self, t: float) -> np.ndarray:
        """Basis vector (B_1(t), ..., B_N(t)) at a single point of [0, 1]."""
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"evaluation point {t} outside [0, 1]")
        return self.design_matrix(np.array([t]))[0]

    def design_matrix(self, xs: np.ndarray) -> np.ndarray:
        """Stack basis vectors over observations into an (n, num_basis) matrix."""
        xs = np.asarray(xs, dtype=float)
        bad = np.flatnonzero(~((xs >= 0.0) & (xs <= 1.0)))
        if bad.size:
            shown = ", ".join(str(i) for i in bad[:10])
            raise DomainError(
                f"{bad.size} value(s) outside [0, 1] at indices [{shown}]", indices=bad
            )
        mat = BSpline.design_matrix(xs, self.knots, self.degree).toarray()
        return mat


def make_basis(num_basis: int, degree: int) -> BSplineBasis:
    """Build the basis with ``num_basis - degree - 1`` equally spaced interior knots."""
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    if num_basis < 2:
        raise ValueError(f"num_basis must be at least 2, got {num_basis}")
    if num_basis < degree + 1:
        raise ValueError(
            f"num_basis={num_basis} cannot support degree {degree}; need at least {degree + 1}"
        )
    k = num_basis - degree - 1
    interior = tuple((i + 1) / (k + 1) for i in range(k))
    return BSplineBasis(degree=degree, interior_knots=interior)


def auto_basis(n: int, num_basis: int | None = None, degree: int | None = None) -> BSplineBasis:
    """Default basis for sample size n: N = floor(n^(1/5)) functions, degree min(3, N-1).

    Explicit ``num_basis``/``degree`` override the corresponding default; N is
    clamped below at max(2, degree + 1).
    """
    if num_basis is None:
        num_basis = max(2, math.floor(n ** 0.2))
    if degree is None:
        degree = min(3, num_basis - 1)
    num_basis = max(num_basis, degree + 1, 2)
    return make_basis(num_basis, degree)


@dataclass(frozen=True)
class FeatureScaler:
    """Min-max map of one feature onto [0, 1]; constant features are degenerate."""

    minimum: float
    maximum: float

    @property
    def degenerate(self) -> bool:
        return self.maximum <= self.minimum

    def transform(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.degenerate:
            return np.full(xs.shape, 0.5)
        return np.clip((xs - self.minimum) / (self.maximum - self.minimum), 0.0, 1.0)


def fit_scaler(xs: np.ndarray) -> FeatureScaler:
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("cannot fit a scaler on an empty vector")
    return FeatureScaler(minimum=float(xs.min()), maximum=float(xs.max()))


def scale_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise min-max rescaling of a matrix.

    Returns the rescaled matrix and a boolean mask of degenerate (constant)
    columns, which are mapped to the constant 0.5.
    """
    X = np.asarray(X, dtype=float)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = hi - lo
    degenerate = span <= 0
    safe = np.where(degenerate, 1.0, span)
    out = (X - lo) / safe
    out[:, degenerate] = 0.5
    return np.clip(out, 0.0, 1.0), degenerate
