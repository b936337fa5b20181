"""Almost-Poisson structures written in coordinates adapted to a fibration.

A point of the total space is an array ``(x^1..x^n, y^1..y^m)``: base
coordinates first, fiber coordinates after. A bivector is stored through its
full component matrix ``L[mu, nu] = Lambda(dz^mu, dz^nu)`` and the sharp map
contracts on the first index, ``(sharp alpha)^nu = alpha_mu L[mu, nu]``.

With that contraction the canonical structure on a cotangent bundle has
``Lambda(dq^i, dp_i) = -1``; this is the choice that turns ``sharp(dh)`` into
Hamilton's equations ``qdot = dh/dp, pdot = -dh/dq``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from hjcheck import linalg
from hjcheck.errors import DomainError, InputError

ANTISYMMETRY_RTOL = 1e-12
ANTISYMMETRY_ATOL = 1e-14
FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class FiberedChart:
    """Coordinate names of a chart adapted to a fibration E -> M."""

    base: tuple[str, ...]
    fiber: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "fiber", tuple(self.fiber))
        names = self.names
        if not names:
            raise InputError("a chart needs at least one coordinate")
        if len(set(names)) != len(names):
            raise InputError(f"coordinate names must be unique: {names}")

    @classmethod
    def numbered(cls, n_base: int, n_fiber: int, base_prefix: str = "x",
                 fiber_prefix: str = "y") -> "FiberedChart":
        return cls(tuple(f"{base_prefix}{i + 1}" for i in range(n_base)),
                   tuple(f"{fiber_prefix}{a + 1}" for a in range(n_fiber)))

    @property
    def n_base(self) -> int:
        return len(self.base)

    @property
    def n_fiber(self) -> int:
        return len(self.fiber)

    @property
    def dim(self) -> int:
        return self.n_base + self.n_fiber

    @property
    def names(self) -> tuple[str, ...]:
        return self.base + self.fiber

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"unknown coordinate {name!r}; chart has {self.names}") from None

    def check_point(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise InputError(f"expected a point with {self.dim} coordinates, got shape {z.shape}")
        if not np.isfinite(z).all():
            raise InputError("point has non-finite coordinates")
        return z

    def check_base_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_base,):
            raise InputError(f"expected a base point with {self.n_base} coordinates, got shape {x.shape}")
        if not np.isfinite(x).all():
            raise InputError("base point has non-finite coordinates")
        return x


def fd_step(z: np.ndarray) -> np.ndarray:
    return FD_REL_STEP * np.maximum(1.0, np.abs(z))


def fd_gradient(f: Callable[[np.ndarray], float], z) -> np.ndarray:
    """Central-difference gradient with step 1e-6 * max(1, |z_i|)."""
    z = np.asarray(z, dtype=float)
    steps = fd_step(z)
    g = np.empty_like(z)
    for i, h in enumerate(steps):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (2.0 * h)
    return g


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], x, n_out: int) -> np.ndarray:
    """Central-difference Jacobian, shape (n_out, len(x))."""
    x = np.asarray(x, dtype=float)
    steps = fd_step(x)
    jac = np.empty((n_out, x.size))
    for j, h in enumerate(steps):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (2.0 * h)
    return jac


@dataclass(frozen=True)
class ScalarField:
    """A function on the total space, with an optional analytic gradient."""

    func: Callable[[np.ndarray], float]
    grad_func: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, z) -> float:
        value = float(self.func(np.asarray(z, dtype=float)))
        if not np.isfinite(value):
            raise DomainError(f"scalar field is not finite at {np.asarray(z).tolist()}")
        return value

    def grad(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.grad_func is None:
            g = fd_gradient(self, z)
        else:
            g = np.asarray(self.grad_func(z), dtype=float)
            if g.shape != z.shape:
                raise InputError(f"gradient has shape {g.shape}, expected {z.shape}")
        if not np.isfinite(g).all():
            raise DomainError(f"gradient is not finite at {z.tolist()}")
        return g

    def fd_grad(self, z) -> np.ndarray:
        return fd_gradient(self, z)

    def shifted(self, c: float) -> "ScalarField":
        f, g = self.func, self.grad_func
        return ScalarField(lambda z: f(z) + c, g)

    @classmethod
    def constant(cls, c: float) -> "ScalarField":
        return cls(lambda z: c, lambda z: np.zeros_like(np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class FiberedBivector:
    """An almost-Poisson tensor on a fibered chart, given by its component matrix."""

    chart: FiberedChart
    components: Callable[[np.ndarray], np.ndarray]

    def matrix(self, z) -> np.ndarray:
        z = self.chart.check_point(z)
        n = self.chart.dim
        m = np.asarray(self.components(z), dtype=float)
        if m.shape != (n, n):
            raise InputError(f"component matrix has shape {m.shape}, expected {(n, n)}")
        if not np.isfinite(m).all():
            raise DomainError(f"bivector components are not finite at {z.tolist()}")
        scale = float(np.abs(m).max()) if m.size else 0.0
        asym = float(np.abs(m + m.T).max()) if m.size else 0.0
        if asym > ANTISYMMETRY_RTOL * scale + ANTISYMMETRY_ATOL:
            raise InputError(f"component matrix is not antisymmetric at {z.tolist()}")
        return m

    @classmethod
    def constant(cls, chart: FiberedChart, m) -> "FiberedBivector":
        m = np.array(m, dtype=float)
        m.setflags(write=False)
        return cls(chart, lambda z: m)

    @classmethod
    def from_upper(cls, chart: FiberedChart,
                   entries: Mapping[tuple[str, str], Callable[[np.ndarray], float]]
                   ) -> "FiberedBivector":
        """Build from strict-upper-triangle entries keyed by coordinate-name pairs.

        The lower triangle is filled by antisymmetry.
        """
        n = chart.dim
        slots = []
        for (a, b), fn in entries.items():
            i, j = chart.index(a), chart.index(b)
            if i == j:
                raise InputError(f"diagonal entry ({a}, {b}) of a bivector must vanish")
            if i > j:
                raise InputError(f"entry ({a}, {b}) is below the diagonal; give ({b}, {a}) instead")
            slots.append((i, j, fn))

        def components(z):
            m = np.zeros((n, n))
            for i, j, fn in slots:
                v = fn(z)
                m[i, j] = v
                m[j, i] = -v
            return m

        return cls(chart, components)


def sharp_apply(bivector: FiberedBivector, z, alpha) -> np.ndarray:
    """(sharp alpha)^nu = sum_mu alpha_mu Lambda^{mu nu}(z)."""
    m = bivector.matrix(z)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (bivector.chart.dim,):
        raise InputError(f"covector has shape {alpha.shape}, expected {(bivector.chart.dim,)}")
    return alpha @ m


def hamiltonian_field(bivector: FiberedBivector, h: ScalarField, z) -> np.ndarray:
    """X_h = sharp(dh) at z."""
    z = bivector.chart.check_point(z)
    return sharp_apply(bivector, z, h.grad(z))


def characteristic_subspace(bivector: FiberedBivector, z, tol: float = linalg.DEFAULT_TOL
                            ) -> linalg.Subspace:
    """C_z = sharp(T*_z E), the span of the rows of the component matrix."""
    m = bivector.matrix(z)
    return linalg.span(m, bivector.chart.dim, tol)


def sharp_kernel(bivector: FiberedBivector, z, tol: float = linalg.DEFAULT_TOL) -> linalg.Subspace:
    m = bivector.matrix(z)
    return linalg.kernel(m.T, tol)


class SubspaceCheck(NamedTuple):
    holds: bool
    defect: float


def lemma_check(bivector: FiberedBivector, z, tol: float = linalg.DEFAULT_TOL) -> SubspaceCheck:
    """Compare the annihilator of the characteristic space with ker(sharp)."""
    c = characteristic_subspace(bivector, z, tol)
    ok, defect = linalg.same_subspace(linalg.annihilator(c), sharp_kernel(bivector, z, tol), tol)
    return SubspaceCheck(ok, defect)


def sharp_image(bivector: FiberedBivector, z, covectors: linalg.Subspace) -> linalg.Subspace:
    m = bivector.matrix(z)
    scale = float(np.linalg.norm(m, 2)) if m.size else 0.0
    return linalg.span(covectors.basis @ m, bivector.chart.dim, covectors.tol, scale=scale)


def subspace_lagrangian_check(bivector: FiberedBivector, z, tangent: linalg.Subspace,
                              tol: float = 1e-6) -> SubspaceCheck:
    """Test sharp(TN°) == TN ∩ C at z, with TN given by ``tangent``.

    ``tol`` bounds the sine of the largest principal angle between the two sides.
    """
    if tangent.ambient_dim != bivector.chart.dim:
        raise InputError(
            f"tangent space lives in R^{tangent.ambient_dim}, chart has dimension {bivector.chart.dim}"
        )
    lhs = sharp_image(bivector, z, linalg.annihilator(tangent))
    rhs = linalg.intersect(tangent, characteristic_subspace(bivector, z, tangent.tol))
    ok, defect = linalg.same_subspace(lhs, rhs, tol)
    return SubspaceCheck(ok, defect)


def rank_at(bivector: FiberedBivector, z, tol: float = linalg.DEFAULT_TOL) -> int:
    return linalg.rank(bivector.matrix(z), tol)


class RankStats(NamedTuple):
    min_rank: int
    max_rank: int
    ranks: tuple[int, ...]

    @property
    def constant(self) -> bool:
        return self.min_rank == self.max_rank


def rank_scan(bivector: FiberedBivector, points: Sequence, tol: float = linalg.DEFAULT_TOL
              ) -> RankStats:
    """Pointwise ranks over a set of points; rank jumps are reported, not raised."""
    ranks = tuple(rank_at(bivector, z, tol) for z in points)
    if not ranks:
        raise InputError("rank scan needs at least one point")
    return RankStats(min(ranks), max(ranks), ranks)
