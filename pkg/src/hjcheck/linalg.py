"""Pointwise linear algebra with an explicit tolerance policy.

Vectors and covectors are both plain arrays of length ``ambient_dim``; the
pairing between them is the Euclidean dot product of components. Every rank
decision goes through the SVD with a threshold relative to the largest
singular value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from hjcheck.errors import InputError

DEFAULT_TOL = 1e-10
# Two subspaces whose directions differ by less than this angle share them
# when intersecting.
INTERSECTION_ANGLE_TOL = 1e-7


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-d float array or raise InputError."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InputError(f"{name} has non-finite entries")
    return a


def _check_tol(tol: float) -> float:
    tol = float(tol)
    if not tol >= 0:
        raise InputError(f"tolerance must be nonnegative, got {tol!r}")
    return tol


def _numerical_rank(s: np.ndarray, tol: float, scale: float = 0.0) -> int:
    ref = max(s[0] if s.size else 0.0, scale)
    if ref == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * ref))


def rank(m, tol: float = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol * sigma_max``."""
    a = as_matrix(m)
    tol = _check_tol(tol)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return _numerical_rank(s, tol)


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of R^ambient_dim with an orthonormal basis (rows).

    Construction orthonormalizes the given rows and rejects dependent ones;
    use :func:`span` when the generating set may be redundant.
    """

    ambient_dim: int
    basis: np.ndarray = field(repr=False)
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        n = int(self.ambient_dim)
        if n < 0:
            raise InputError("ambient dimension must be nonnegative")
        b = np.asarray(self.basis, dtype=float).reshape(-1, n) if n else np.zeros((0, 0))
        if not np.isfinite(b).all():
            raise InputError("subspace basis has non-finite entries")
        tol = _check_tol(self.tol)
        if b.shape[0]:
            u, s, vt = np.linalg.svd(b, full_matrices=False)
            r = _numerical_rank(s, tol)
            if r < b.shape[0]:
                raise InputError(
                    f"basis vectors are dependent at tol {tol:g} (rank {r} < {b.shape[0]})"
                )
            b = vt[:r]
        b.setflags(write=False)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "tol", tol)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def project(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.basis.T @ (self.basis @ v)

    def distance(self, v) -> float:
        """Euclidean distance from ``v`` to the subspace."""
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(v - self.project(v)))

    def contains(self, v, tol: float | None = None) -> bool:
        v = np.asarray(v, dtype=float)
        tol = self.tol if tol is None else tol
        return self.distance(v) <= tol * max(1.0, float(np.linalg.norm(v)))

    @classmethod
    def zero(cls, ambient_dim: int, tol: float = DEFAULT_TOL) -> "Subspace":
        return cls(ambient_dim, np.zeros((0, ambient_dim)), tol)

    @classmethod
    def full(cls, ambient_dim: int, tol: float = DEFAULT_TOL) -> "Subspace":
        return cls(ambient_dim, np.eye(ambient_dim), tol)


def span(vectors, ambient_dim: int | None = None, tol: float = DEFAULT_TOL,
         scale: float = 0.0) -> Subspace:
    """Subspace spanned by the rows of ``vectors``, dropping dependent directions.

    ``scale`` sets a floor for the rank threshold so that a generating set made
    only of round-off noise spans the zero subspace.
    """
    tol = _check_tol(tol)
    v = np.asarray(vectors, dtype=float)
    if ambient_dim is None:
        if v.ndim != 2:
            raise InputError("ambient_dim is required for an empty generating set")
        ambient_dim = v.shape[1]
    v = v.reshape(-1, ambient_dim)
    if not np.isfinite(v).all():
        raise InputError("generating vectors have non-finite entries")
    if v.shape[0] == 0:
        return Subspace.zero(ambient_dim, tol)
    _, s, vt = np.linalg.svd(v, full_matrices=False)
    r = _numerical_rank(s, tol, scale)
    return Subspace(ambient_dim, vt[:r], tol)


def column_space(m, tol: float = DEFAULT_TOL) -> Subspace:
    a = as_matrix(m)
    return span(a.T, a.shape[0], tol)


def kernel(m, tol: float = DEFAULT_TOL) -> Subspace:
    """Orthonormal basis of the numerical null space of ``m``."""
    a = as_matrix(m)
    tol = _check_tol(tol)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return Subspace.full(cols, tol)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    r = _numerical_rank(s, tol)
    return Subspace(cols, vt[r:], tol)


def annihilator(s: Subspace) -> Subspace:
    """All covectors vanishing on ``s``."""
    if s.dim == 0:
        return Subspace.full(s.ambient_dim, s.tol)
    return kernel(s.basis, s.tol)


def subspace_sum(a: Subspace, b: Subspace, tol: float | None = None) -> Subspace:
    _check_same_ambient(a, b)
    tol = max(a.tol, b.tol) if tol is None else tol
    return span(np.vstack([a.basis, b.basis]), a.ambient_dim, tol)


def intersect(a: Subspace, b: Subspace, angle_tol: float = INTERSECTION_ANGLE_TOL) -> Subspace:
    """a ∩ b computed as the annihilator of (a° + b°).

    Directions of ``a`` and ``b`` closer than roughly ``angle_tol`` radians are
    merged, so the result is continuous at rank boundaries.
    """
    _check_same_ambient(a, b)
    tol = max(a.tol, b.tol)
    combined = subspace_sum(annihilator(a), annihilator(b), tol=max(tol, angle_tol))
    result = annihilator(combined)
    return Subspace(result.ambient_dim, result.basis, tol)


def principal_angle_defect(a: Subspace, b: Subspace) -> float:
    """Sine of the largest principal angle between ``a`` and ``b``.

    Subspaces of different dimension are maximally apart (defect 1).
    """
    _check_same_ambient(a, b)
    if a.dim != b.dim:
        return 1.0
    if a.dim == 0:
        return 0.0
    residual = a.basis - (a.basis @ b.basis.T) @ b.basis
    return float(min(1.0, np.linalg.norm(residual, 2)))


def same_subspace(a: Subspace, b: Subspace, tol: float) -> tuple[bool, float]:
    d = principal_angle_defect(a, b)
    return d <= tol, d


class AffineMembership(NamedTuple):
    coefficient: float
    residual: float

    def holds(self, tol: float) -> bool:
        return self.residual <= tol


def solve_affine_membership(target, s: Subspace, direction) -> AffineMembership:
    """Best B such that ``target + B * direction`` lies in ``s``.

    Least squares in B; when the direction is (numerically) inside ``s`` every
    B gives the same distance and the least-norm choice B = 0 is returned.
    """
    target = np.asarray(target, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if target.shape != (s.ambient_dim,) or direction.shape != (s.ambient_dim,):
        raise InputError(
            f"expected vectors of length {s.ambient_dim}, got {target.shape} and {direction.shape}"
        )
    r = target - s.project(target)
    d = direction - s.project(direction)
    dd = float(d @ d)
    if dd <= (s.tol * max(1.0, float(np.linalg.norm(direction)))) ** 2:
        return AffineMembership(0.0, float(np.linalg.norm(r)))
    b = -float(r @ d) / dd
    return AffineMembership(b, float(np.linalg.norm(r + b * d)))


def _check_same_ambient(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise InputError(f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}")
