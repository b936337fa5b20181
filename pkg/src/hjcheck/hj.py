"""Sections of the fibration and the Hamilton-Jacobi conditions they can satisfy."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from hjcheck import linalg
from hjcheck.errors import DomainError, InputError
from hjcheck.geometry import (
    FiberedBivector,
    FiberedChart,
    ScalarField,
    characteristic_subspace,
    fd_jacobian,
    hamiltonian_field,
)

# Relatedness is compared against RELATEDNESS_FACTOR * defect_tol.
RELATEDNESS_FACTOR = 100.0
DEFAULT_GRID_POINTS = 11


@dataclass(frozen=True)
class Section:
    """A section x -> (x, gamma(x)) of the chart's fibration, in graph form."""

    chart: FiberedChart
    fiber_func: Callable[[np.ndarray], np.ndarray]
    jac_func: Callable[[np.ndarray], np.ndarray] | None = None

    def fiber(self, x) -> np.ndarray:
        x = self.chart.check_base_point(x)
        try:
            raw = self.fiber_func(x)
        except ZeroDivisionError:
            raise DomainError(f"section is not defined at x = {x.tolist()}") from None
        except ValueError as exc:
            # the math module signals leaving the real domain this way
            if isinstance(exc, InputError) or str(exc) != "math domain error":
                raise
            raise DomainError(f"section is not defined at x = {x.tolist()}") from None
        y = np.atleast_1d(np.asarray(raw, dtype=float))
        if y.shape != (self.chart.n_fiber,):
            raise InputError(f"section returned shape {y.shape}, expected {(self.chart.n_fiber,)}")
        if not np.isfinite(y).all():
            raise DomainError(f"section is not defined at x = {x.tolist()}")
        return y

    def point(self, x) -> np.ndarray:
        x = self.chart.check_base_point(x)
        return np.concatenate([x, self.fiber(x)])

    def jacobian(self, x) -> np.ndarray:
        """d gamma^a / d x^j as an (n_fiber, n_base) matrix."""
        x = self.chart.check_base_point(x)
        shape = (self.chart.n_fiber, self.chart.n_base)
        if self.jac_func is None:
            jac = fd_jacobian(self.fiber, x, self.chart.n_fiber)
        else:
            jac = np.asarray(self.jac_func(x), dtype=float).reshape(shape)
        if not np.isfinite(jac).all():
            raise DomainError(f"section Jacobian is not finite at x = {x.tolist()}")
        return jac

    def fd_jacobian(self, x) -> np.ndarray:
        return fd_jacobian(self.fiber, self.chart.check_base_point(x), self.chart.n_fiber)

    def push_forward(self, x, v) -> np.ndarray:
        """T gamma(v) = (v ; J v)."""
        v = np.asarray(v, dtype=float)
        return np.concatenate([v, self.jacobian(x) @ v])

    @classmethod
    def constant(cls, chart: FiberedChart, values) -> "Section":
        values = np.array(values, dtype=float).reshape(chart.n_fiber)
        zero = np.zeros((chart.n_fiber, chart.n_base))
        return cls(chart, lambda x: values, lambda x: zero)


def graph_tangent(section: Section, x, tol: float = linalg.DEFAULT_TOL) -> linalg.Subspace:
    """Span of the lifts d/dx^i + (d gamma^a/dx^i) d/dy^a at gamma(x)."""
    jac = section.jacobian(x)
    lifts = np.hstack([np.eye(section.chart.n_base), jac.T])
    return linalg.span(lifts, section.chart.dim, tol)


def lagrangian_residual(bivector: FiberedBivector, section: Section, x) -> np.ndarray:
    """Left-hand side of the local Lagrangian condition at gamma(x).

    R^{ab} = L^{ab} - L^{jb} J^a_j + L^{ja} J^b_j + L^{ij} J^a_i J^b_j,
    which vanishes for all (a, b) iff the graph is Lagrangian at gamma(x).
    """
    nb = section.chart.n_base
    m = bivector.matrix(section.point(x))
    jac = section.jacobian(x)
    lxx, lxy, lyy = m[:nb, :nb], m[:nb, nb:], m[nb:, nb:]
    mixed = jac @ lxy
    return lyy - mixed + mixed.T + jac @ lxx @ jac.T


def lagrangian_residual_norm(bivector: FiberedBivector, section: Section, x) -> float:
    r = lagrangian_residual(bivector, section, x)
    return float(np.max(np.abs(r), initial=0.0))


def projected_field(bivector: FiberedBivector, h: ScalarField, section: Section, x) -> np.ndarray:
    """X_h^gamma(x): base components of X_h at gamma(x)."""
    return hamiltonian_field(bivector, h, section.point(x))[: section.chart.n_base]


class ConditionDefect(NamedTuple):
    defect: float
    intersection_dim: int


def hj_condition_defect(bivector: FiberedBivector, h: ScalarField, section: Section, x,
                        rank_tol: float = linalg.DEFAULT_TOL) -> ConditionDefect:
    """max |<dh, v>| over an orthonormal basis v of T Im(gamma) ∩ C at gamma(x)."""
    z = section.point(x)
    tangent = graph_tangent(section, x, rank_tol)
    inter = linalg.intersect(tangent, characteristic_subspace(bivector, z, rank_tol))
    if inter.dim == 0:
        return ConditionDefect(0.0, 0)
    pairings = inter.basis @ h.grad(z)
    return ConditionDefect(float(np.max(np.abs(pairings))), inter.dim)


def relatedness_defect(bivector: FiberedBivector, h: ScalarField, section: Section, x,
                       indices: Sequence[int] | None = None) -> float:
    """|| X_h(gamma(x)) - T gamma(X_h^gamma(x)) ||, optionally on a subset of coordinates."""
    z = section.point(x)
    upstairs = hamiltonian_field(bivector, h, z)
    lifted = section.push_forward(x, upstairs[: section.chart.n_base])
    diff = upstairs - lifted
    if indices is not None:
        diff = diff[list(indices)]
    return float(np.linalg.norm(diff))


def dh_closed_on_base(h: ScalarField, section: Section, x) -> np.ndarray:
    """Differential of x -> h(gamma(x)), by the chain rule."""
    nb = section.chart.n_base
    g = h.grad(section.point(x))
    return g[:nb] + section.jacobian(x).T @ g[nb:]


@dataclass(frozen=True)
class HJVerdict:
    """Outcome of the equivalence check at one grid point."""

    point: tuple[float, ...]
    lagrangian_residual: float
    hj_defect: float
    relatedness_defect: float
    intersection_dim: int
    rank: int
    hypothesis_ok: bool
    hj_holds: bool
    related_holds: bool

    @property
    def agree(self) -> bool | None:
        """Whether the two conditions agree; None when the hypothesis fails."""
        if not self.hypothesis_ok:
            return None
        return self.hj_holds == self.related_holds

    @property
    def status(self) -> str:
        if not self.hypothesis_ok:
            return "hypothesis violated"
        if not self.agree:
            return "disagreement"
        return "both hold" if self.hj_holds else "both fail"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["point"] = list(self.point)
        d["agree"] = self.agree
        d["status"] = self.status
        return d


def hj_verdict(bivector: FiberedBivector, h: ScalarField, section: Section, x,
               residual_tol: float = 1e-8, defect_tol: float = 1e-8,
               rank_tol: float = linalg.DEFAULT_TOL,
               factor: float = RELATEDNESS_FACTOR) -> HJVerdict:
    x = section.chart.check_base_point(x)
    residual = lagrangian_residual_norm(bivector, section, x)
    defect, dim = hj_condition_defect(bivector, h, section, x, rank_tol)
    related = relatedness_defect(bivector, h, section, x)
    r = linalg.rank(bivector.matrix(section.point(x)), rank_tol)
    return HJVerdict(
        point=tuple(float(v) for v in x),
        lagrangian_residual=residual,
        hj_defect=defect,
        relatedness_defect=related,
        intersection_dim=dim,
        rank=r,
        hypothesis_ok=residual <= residual_tol,
        hj_holds=defect <= defect_tol,
        related_holds=related <= factor * defect_tol,
    )


def theorem_equivalence_report(bivector: FiberedBivector, h: ScalarField, section: Section,
                               grid: Iterable, residual_tol: float = 1e-8,
                               defect_tol: float = 1e-8, rank_tol: float = linalg.DEFAULT_TOL,
                               factor: float = RELATEDNESS_FACTOR) -> list[HJVerdict]:
    """One verdict per grid point comparing the two equivalent HJ conditions.

    The HJ condition is accepted at ``defect_tol`` and relatedness at
    ``factor * defect_tol``; points where the Lagrangian residual exceeds
    ``residual_tol`` are flagged instead of compared.
    """
    return [hj_verdict(bivector, h, section, x, residual_tol, defect_tol, rank_tol, factor)
            for x in grid]


def uniform_grid(box: Sequence[tuple[float, float]], counts: int | Sequence[int] = DEFAULT_GRID_POINTS
                 ) -> np.ndarray:
    """Tensor grid over a box, rows ordered with the last axis varying fastest."""
    if isinstance(counts, (int, np.integer)):
        counts = [int(counts)] * len(box)
    if len(counts) != len(box):
        raise InputError("need one grid count per axis")
    axes = []
    for (lo, hi), n in zip(box, counts):
        if n < 1:
            raise InputError("grid counts must be positive")
        if hi < lo:
            raise InputError(f"empty interval [{lo}, {hi}]")
        axes.append(np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)]))
    if not axes:
        return np.zeros((1, 0))
    return np.array(list(itertools.product(*axes)), dtype=float)
